#pragma once

#include "fptbound/constraints.hpp"
#include "fptbound/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fpt {

struct MomentBasis {
  std::vector<std::string> variables;
  std::vector<MultiIndex> monomials;
};

MomentBasis make_basis(std::vector<std::string> variables, int order);

/// Affine combination of moment variables.
using AffineExpr = std::vector<std::pair<MomentVar, double>>;

struct MatrixSpec {
  MeasureId measure;
  MomentBasis basis;
  /// Localizing polynomial over the basis variables; absent for moment matrices.
  std::optional<Polynomial> localizer;
  std::string label;
  /// Row-major entries; entries[i * size + j] == entries[j * size + i].
  std::vector<AffineExpr> entries;

  std::size_t size() const { return basis.monomials.size(); }
  const AffineExpr& entry(std::size_t i, std::size_t j) const { return entries[i * size() + j]; }
};

/// Matrix M_r(u, y) with entry (a, b) = sum_g u_g * y_{g + a + b}; u = 1 gives
/// the moment matrix.
MatrixSpec moment_matrix(const MeasureId& measure, const MomentBasis& basis,
                         const std::optional<Polynomial>& localizer, std::string label);

enum class Sense { Minimize, Maximize };
enum class LocalizerOrder { Full, Reduced };

struct SdpOptions {
  bool scale = true;
  LocalizerOrder localizer_order = LocalizerOrder::Full;
  /// Magnitude bounds for population slots without a threshold; required
  /// when scaling is enabled.
  std::map<int, double> species_bounds;
  /// Box cap multiplier applied to species_bounds for localizer-only moments.
  double box_slack = 4.0;
  /// Localize threshold species to [0, H - 1] on the occupation and horizon
  /// measures instead of [0, H].
  bool integer_support = true;
};

struct ScalingVector {
  std::map<MomentVar, double> factors;
  double time_scale = 1.0;
  /// Magnitude bound per population slot.
  std::vector<double> species_scale;

  double factor(const MomentVar& v) const;
  /// Scale of a basis monomial of the given measure (time first if present).
  double basis_scale(const DerivationContext& ctx, const MeasureId& measure, const MultiIndex& e) const;
};

/// Scalar bound 0 <= var (<= upper) for a moment that only localizing
/// matrices reach.
struct VarBound {
  MomentVar var;
  std::optional<double> upper;
};

struct SdpProblem {
  std::vector<MatrixSpec> blocks;
  std::vector<VarBound> bounds;
  std::vector<LinearMomentConstraint> equalities;
  AffineExpr objective;
  Sense sense = Sense::Minimize;
  std::vector<MomentVar> vars;
  std::map<MomentVar, std::size_t> var_index;
  ScalingVector scaling;
  bool scaled = false;
  std::vector<std::string> population_names;
  std::vector<std::string> mode_names;
};

/// Moment and localizing matrices of every measure.
std::vector<MatrixSpec> build_blocks(const Pctmc& model, const FptQuery& query, const SdpOptions& options = {});

/// Per-variable scale factors T^(k+1) prod B^m (occupation), T^k prod B^mbar
/// (hit faces) and prod B^m (horizon face). With `enabled` false every factor is 1.
ScalingVector scaling_vector(const Pctmc& model, const FptQuery& query, const std::vector<MomentVar>& vars,
                             const SdpOptions& options, bool enabled = true);

SdpProblem assemble(const Pctmc& model, const FptQuery& query, Sense sense, const SdpOptions& options = {});

std::string sdp_problem_to_json(const SdpProblem& problem);

}  // namespace fpt
