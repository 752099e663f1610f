#pragma once

#include "fptbound/model.hpp"
#include "fptbound/poly.hpp"

#include <compare>
#include <string>
#include <utility>
#include <vector>

namespace fpt {

enum class MeasureKind { Occupation = 0, HitFace = 1, HorizonFace = 2 };

/// One measure of the relaxation. `face` is a position in the population
/// species list (only meaningful for HitFace); `mode` is empty for models
/// without mode species.
struct MeasureId {
  MeasureKind kind = MeasureKind::Occupation;
  int face = -1;
  std::vector<int> mode;

  bool has_time() const { return kind != MeasureKind::HorizonFace; }
  auto operator<=>(const MeasureId&) const = default;
  bool operator==(const MeasureId&) const = default;
};

/// A moment of a measure: time exponent k and exponents over the measure's
/// free population species.
struct MomentVar {
  MeasureId measure;
  int k = 0;
  std::vector<int> m;

  int degree() const;
  /// Exponent over the measure's variable list (time first when present).
  MultiIndex exponent() const;
  static MomentVar from_exponent(const MeasureId& measure, const MultiIndex& e);

  std::strong_ordering operator<=>(const MomentVar& other) const;
  bool operator==(const MomentVar& other) const = default;
};

/// Context shared by all derivations for one model: population/mode split,
/// reachable modes and the query's thresholds in population coordinates.
struct DerivationContext {
  const Pctmc* model = nullptr;
  const FptQuery* query = nullptr;
  std::vector<std::size_t> population;  // model species index per population slot
  std::vector<std::size_t> modes;       // model species index per mode slot
  std::vector<std::vector<int>> reachable;
  std::vector<int> x0;                  // population part of the initial state
  std::vector<int> mode0;               // mode part of the initial state
  std::vector<std::pair<int, int>> faces;  // (population slot, level) per threshold

  DerivationContext(const Pctmc& model, const FptQuery& query);
  bool hybrid() const { return !modes.empty(); }
  std::size_t num_population() const { return population.size(); }
  /// Names of the measure's variables, time first when present.
  std::vector<std::string> variable_names(const MeasureId& measure) const;
  /// Population slots that are free variables of the measure.
  std::vector<int> free_species(const MeasureId& measure) const;
  /// All measures of the relaxation, in canonical order.
  std::vector<MeasureId> measures() const;
};

struct LinearMomentConstraint {
  /// Sum of coefficient * moment plus `constant` equals zero.
  std::vector<std::pair<MomentVar, Rational>> terms;
  Rational constant;
  int k = 0;
  std::vector<int> m;
  std::vector<int> mode;
  std::string label;
};

std::string moment_name(const DerivationContext& ctx, const MomentVar& v);
std::string constraint_to_string(const DerivationContext& ctx, const LinearMomentConstraint& c);

/// Sum over reactions of (shift(x^m, v_j) - x^m) * alpha_j over the population
/// species. Mode species, if any, must not occur in the propensities.
Polynomial generator_polynomial(const Pctmc& model, const std::vector<int>& m);

/// Martingale constraint for weight t^k and monomial x^m (models without mode
/// species). Throws std::invalid_argument for (m, k) = (0, 0).
LinearMomentConstraint martingale_constraint(const Pctmc& model, const FptQuery& query,
                                             const std::vector<int>& m, int k);

/// Mode-conditioned martingale constraint for mode assignment y. Throws
/// std::invalid_argument for (m, k) = (0, 0) and for models without modes.
LinearMomentConstraint hybrid_constraint(const Pctmc& model, const FptQuery& query,
                                         const std::vector<int>& m, int k, const std::vector<int>& y);

/// Probability flux balance of mode y: the (m, k) = (0, 0) instance of the
/// mode-conditioned constraint, which is not trivial when modes switch.
LinearMomentConstraint mode_balance_constraint(const Pctmc& model, const FptQuery& query,
                                               const std::vector<int>& y);

/// Total exit mass equals one.
LinearMomentConstraint normalization_constraint(const Pctmc& model, const FptQuery& query);

/// Maximum propensity degree minus one (at least zero).
int propensity_degree_excess(const Pctmc& model);

/// All constraints with 1 <= k + |m| <= 2r - Delta (per reachable mode for
/// hybrid models, together with the per-mode flux balances), sorted by
/// (mode, k + |m|, graded order). Throws std::invalid_argument when the
/// order is too small for the propensity degree.
std::vector<LinearMomentConstraint> constraint_set(const Pctmc& model, const FptQuery& query);

}  // namespace fpt
