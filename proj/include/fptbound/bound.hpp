#pragma once

#include "fptbound/model.hpp"
#include "fptbound/sdp.hpp"
#include "fptbound/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fpt {

struct BoundOptions {
  SolverOptions solver;
  bool scale = true;
  bool reduce = true;
  LocalizerOrder localizer_order = LocalizerOrder::Full;
  /// Seed of the SSA pilot that supplies missing species scale bounds.
  std::uint64_t seed = 1;
  std::size_t pilot_runs = 1000;
  double pilot_quantile = 0.999;
  /// Retry a failed side with reduced localizers (a weaker but valid relaxation).
  bool retry_reduced = true;
  /// Report the last order that solved when a side fails.
  bool fallback = true;
  /// Solve the two sides concurrently when more than one worker is available.
  bool parallel = true;
};

/// A bounding problem after reduction and scale-bound resolution.
struct PreparedQuery {
  Reduction reduction;
  SdpOptions sdp;
  std::vector<Diagnostic> diagnostics;
  /// Scale bounds drawn from the SSA pilot, keyed by reduced species index.
  std::map<std::size_t, double> pilot_bounds;
};

/// Validates, reduces and fills in species scale bounds. Throws
/// std::invalid_argument when validation reports errors.
PreparedQuery prepare(const Pctmc& model, const FptQuery& query, const BoundOptions& options = {});

LoweredSdp build_lowered(const PreparedQuery& prepared, Sense sense);

struct SideResult {
  Solution solution;
  /// Conservative value: min(primal, dual) for the lower side, max for the upper.
  double value = 0.0;
  bool reduced_localizers = false;
  /// Last order below the requested one that solved to optimality (0 if none).
  int fallback_order = 0;
  double fallback_value = 0.0;

  bool optimal() const { return solution.status == SolveStatus::Optimal; }
};

struct BoundResult {
  double lower = 0.0;
  double upper = 0.0;
  int order = 0;
  SideResult min_side;
  SideResult max_side;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;

  bool optimal() const { return min_side.optimal() && max_side.optimal(); }
};

BoundResult bound(const Pctmc& model, const FptQuery& query, const BoundOptions& options = {});
BoundResult bound(const PreparedQuery& prepared, const BoundOptions& options = {});

/// Bounds for orders 1..r_max (orders too small for the model are skipped).
std::vector<BoundResult> bound_table(const Pctmc& model, const FptQuery& query, int r_max,
                                     const BoundOptions& options = {});

struct CdfRow {
  double horizon = 0.0;
  BoundResult bounds;
  /// Set when this row drops below its predecessor by more than 2 gap_tol.
  bool lower_decrease = false;
  bool upper_decrease = false;
};

/// Hit probability bounds at each horizon of the grid (sorted ascending).
std::vector<CdfRow> cdf_sweep(const Pctmc& model, const FptQuery& query, std::vector<double> grid,
                              const BoundOptions& options = {});

}  // namespace fpt
