#pragma once

#include "fptbound/bound.hpp"
#include "fptbound/ssa.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpt {

enum class Format { Text, Json, Csv };

std::optional<Format> parse_format(std::string_view name);

std::string render_bound(const BoundResult& result, Format format);
/// Inverse of render_bound(..., Format::Json).
BoundResult bound_from_json(const std::string& text);

/// Table-1 style rows with log10 interval widths.
std::string render_table(const std::vector<BoundResult>& rows, Format format);

std::string render_cdf(const std::vector<CdfRow>& rows, Format format);

struct SimulationSummary {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  /// Sample mean of the stopped time (the MFPT under the query's horizon).
  Estimate mean_tau;
  std::size_t hits = 0;
  std::size_t horizon_stops = 0;
  std::size_t diverged = 0;
  /// Wilson interval for the threshold hit probability.
  double hit_lower = 0.0;
  double hit_upper = 0.0;
};

SimulationSummary summarize(const std::vector<FptSample>& samples, std::uint64_t seed, double confidence);
std::string render_simulation(const SimulationSummary& summary, Format format);
/// One row per trajectory: tau, hit face name (or "horizon"), then integral columns.
std::string render_samples_csv(const Pctmc& model, const FptQuery& query, const std::vector<FptSample>& samples,
                               const std::vector<MomentVar>& integrals);

std::string render_diagnostics(const std::vector<Diagnostic>& diagnostics, Format format);

/// Moment equations d/dt E[x^m] for 1 <= |m| <= max_degree (models without
/// mode species) and the generated constraint set of the query.
std::string render_moments(const Pctmc& model, const FptQuery& query, int max_degree, Format format);

}  // namespace fpt
