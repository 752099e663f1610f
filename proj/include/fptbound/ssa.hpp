#pragma once

#include "fptbound/constraints.hpp"
#include "fptbound/model.hpp"

#include <cstdint>
#include <vector>

namespace fpt {

struct FptSample {
  double tau = 0.0;
  /// Position in the query's threshold list of the face that was hit, or -1
  /// when the horizon was reached first.
  int face = -1;
  /// True when no reaction could fire before a threshold was reached under an
  /// infinite horizon (tau is then +infinity).
  bool diverged = false;
  std::vector<int> final_state;
  /// Occupation integrals requested through SimulationOptions, in order.
  std::vector<double> integrals;
  /// Largest count of each species seen along the path.
  std::vector<int> max_state;
};

struct SimulationOptions {
  /// Occupation moments whose path integrals should be accumulated.
  std::vector<MomentVar> integrals;
  int threads = 0;
  /// Reaction events after which a trajectory is abandoned as diverged.
  std::uint64_t max_events = 2'000'000'000ULL;
};

/// Direct-method simulation of n first passage trajectories. Trajectory i
/// draws from its own generator seeded from (seed, i), so results do not
/// depend on the thread count.
std::vector<FptSample> simulate_fpt(const Pctmc& model, const FptQuery& query, std::size_t n, std::uint64_t seed,
                                    const SimulationOptions& options = {});

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;
  double confidence = 0.99;
  std::size_t n = 0;
  double std_error = 0.0;
};

/// Mean with a Student-t confidence interval.
Estimate mean_estimate(const std::vector<double>& values, double confidence = 0.99);

/// Mean first passage time (diverged samples are excluded and must be absent
/// for a finite answer).
Estimate mean_fpt(const std::vector<FptSample>& samples, double confidence = 0.99);

struct CdfPoint {
  double t = 0.0;
  double p = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Pr(tau < t) at each grid point with Wilson intervals. Samples stopped by
/// the horizon count as not yet hit.
std::vector<CdfPoint> empirical_cdf(const std::vector<FptSample>& samples, const std::vector<double>& grid,
                                    double confidence = 0.99);

/// Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double confidence);

/// Per-sample value of a moment variable (occupation moments must be among
/// the requested integrals). `ctx` supplies the population/mode layout.
double sample_moment(const DerivationContext& ctx, const FptSample& s, const MomentVar& v,
                     const std::vector<MomentVar>& integrals);

/// Monte Carlo estimate of the affine expression of a constraint, which has
/// expectation zero.
Estimate constraint_residual(const Pctmc& model, const FptQuery& query, const LinearMomentConstraint& c,
                             const std::vector<FptSample>& samples, const std::vector<MomentVar>& integrals,
                             double confidence = 0.99);

/// Simulates n trajectories and estimates the residual of the (m, k)
/// constraint (mode-conditioned when `mode` is non-empty; k = 0 and m = 0 with
/// a mode gives the flux balance).
Estimate martingale_residual(const Pctmc& model, const FptQuery& query, const std::vector<int>& m, int k,
                             std::size_t n, std::uint64_t seed, const std::vector<int>& mode = {},
                             double confidence = 0.99);

/// Occupation moments referenced by a set of constraints.
std::vector<MomentVar> occupation_moments(const std::vector<LinearMomentConstraint>& constraints);

/// Quantile of the per-path maximum of a species, from `runs` trajectories.
double species_max_quantile(const Pctmc& model, const FptQuery& query, std::size_t species, std::size_t runs,
                            double quantile, std::uint64_t seed, int threads = 0);

/// Worker count: FPTBOUND_THREADS if set, else the hardware concurrency.
int default_threads();

}  // namespace fpt
