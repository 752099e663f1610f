#pragma once

#include "fptbound/poly.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fpt {

enum class SpeciesKind { Population, Mode };

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::Population;
  int initial_count = 0;

  bool operator==(const Species&) const = default;
};

struct Reaction {
  std::vector<int> consume;
  std::vector<int> produce;
  /// Mass-action rate constant a_j (as written in the model file).
  double rate_constant = 0.0;
  /// Exact value of the rate constant.
  Rational rate_exact;
  /// Name of the rate parameter, empty for inline literals.
  std::string rate_name;
  /// Explicit polynomial propensity (`@ poly(...)`); replaces mass action when set.
  std::optional<Polynomial> custom_propensity;
  /// Source text of the explicit polynomial, kept for serialization.
  std::string custom_text;

  std::vector<int> change() const;
  bool operator==(const Reaction& other) const;
};

struct Pctmc {
  std::string name = "model";
  std::vector<Species> species;
  std::vector<Reaction> reactions;
  /// Named rate parameters in declaration order.
  std::vector<std::pair<std::string, Rational>> rates;

  std::size_t num_species() const { return species.size(); }
  std::optional<std::size_t> species_index(std::string_view name) const;
  std::vector<int> initial_state() const;
  std::vector<std::size_t> population_indices() const;
  std::vector<std::size_t> mode_indices() const;
  bool has_modes() const { return !mode_indices().empty(); }
  std::vector<std::string> species_names() const;

  bool operator==(const Pctmc& other) const;
};

enum class Objective { Mfpt, HitProbability };

struct Threshold {
  std::size_t species = 0;
  int level = 0;

  bool operator==(const Threshold&) const = default;
};

struct FptQuery {
  std::vector<Threshold> thresholds;
  /// Finite horizon T, or nullopt for an infinite horizon.
  std::optional<double> horizon;
  Objective objective = Objective::Mfpt;
  int order = 2;
  std::optional<double> time_scale_hint;
  /// User-supplied magnitude bounds for species without a threshold.
  std::map<std::size_t, double> scale_bounds;

  bool operator==(const FptQuery&) const = default;
};

struct ModelFile {
  Pctmc model;
  std::optional<FptQuery> query;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses a model file (model statements plus an optional query block).
ModelFile parse_model_file(std::string_view text);

/// Parses model statements; a query block, if present, is ignored.
Pctmc parse_model(std::string_view text);

/// Parses a standalone query block against a model's species.
FptQuery parse_query(const Pctmc& model, std::string_view text);

std::string serialize_model(const Pctmc& model);
std::string serialize_query(const Pctmc& model, const FptQuery& query);

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct ValidateOptions {
  bool scaling = true;
};

std::vector<Diagnostic> validate(const Pctmc& model, const FptQuery& query,
                                 const ValidateOptions& options = {});
bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// Exact propensity of reaction j over all species variables (model order).
Polynomial propensity_polynomial(const Pctmc& model, std::size_t j);

/// Propensity over the population species only, with mode species fixed to
/// the given assignment (one entry per mode species, in model order).
Polynomial propensity_at_mode(const Pctmc& model, std::size_t j, const std::vector<int>& mode);

/// Mode assignments reachable from the initial state through reactions with
/// non-vanishing propensity, sorted lexicographically. Returns a single empty
/// assignment for models without mode species.
std::vector<std::vector<int>> reachable_modes(const Pctmc& model);

/// Change vector of reaction j restricted to the given species indices.
std::vector<int> restricted_change(const Reaction& r, const std::vector<std::size_t>& indices);

struct Reduction {
  Pctmc model;
  FptQuery query;
  /// kept[i] is the index in the original model of reduced species i.
  std::vector<std::size_t> kept;
};

/// Drops species that cannot influence the threshold species (neither
/// directly nor through propensities of reactions that change them).
Reduction reduce(const Pctmc& model, const FptQuery& query);

}  // namespace fpt
