#include "fptbound/ssa.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

namespace fpt {

int default_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("FPTBOUND_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return hw;
}

namespace {

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 0) threads = default_threads();
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&]() {
      try {
        while (!failed) {
          std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          body(i);
        }
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct CompiledReaction {
  std::vector<std::pair<std::size_t, int>> reactants;
  double rate = 0.0;
  const Polynomial* custom = nullptr;
  std::vector<std::pair<std::size_t, int>> delta;
};

struct IntegralSpec {
  int k;
  std::vector<std::pair<std::size_t, int>> powers;  // (species index, exponent)
  std::vector<std::pair<std::size_t, int>> mode;    // (species index, required value)
  bool closed_form;                                  // m = 0 without mode
};

double falling_binomial(int x, int c) {
  if (x < c) return 0.0;
  double v = 1.0;
  for (int i = 0; i < c; ++i) v *= static_cast<double>(x - i) / static_cast<double>(i + 1);
  return v;
}

double ipow(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

std::vector<FptSample> simulate_fpt(const Pctmc& model, const FptQuery& query, std::size_t n, std::uint64_t seed,
                                    const SimulationOptions& options) {
  if (n < 1) throw std::invalid_argument("need at least one trajectory");
  DerivationContext ctx(model, query);
  std::size_t ns = model.num_species();
  std::vector<CompiledReaction> rx;
  for (const auto& r : model.reactions) {
    CompiledReaction c;
    c.rate = r.rate_constant;
    if (r.custom_propensity) c.custom = &*r.custom_propensity;
    for (std::size_t i = 0; i < ns; ++i) {
      if (r.consume[i] > 0) c.reactants.emplace_back(i, r.consume[i]);
      int d = r.produce[i] - r.consume[i];
      if (d != 0) c.delta.emplace_back(i, d);
    }
    rx.push_back(std::move(c));
  }
  std::vector<IntegralSpec> specs;
  for (const auto& v : options.integrals) {
    if (v.measure.kind != MeasureKind::Occupation) throw std::invalid_argument("only occupation moments are path integrals");
    IntegralSpec s;
    s.k = v.k;
    for (std::size_t q = 0; q < v.m.size(); ++q)
      if (v.m[q] > 0) s.powers.emplace_back(ctx.population[q], v.m[q]);
    for (std::size_t q = 0; q < v.measure.mode.size(); ++q) s.mode.emplace_back(ctx.modes[q], v.measure.mode[q]);
    s.closed_form = s.powers.empty() && s.mode.empty();
    specs.push_back(std::move(s));
  }
  std::vector<std::pair<std::size_t, int>> thresholds;
  for (const auto& th : query.thresholds) thresholds.emplace_back(th.species, th.level);
  const bool finite = query.horizon.has_value();
  const double T = finite ? *query.horizon : std::numeric_limits<double>::infinity();
  const auto x0 = model.initial_state();

  std::vector<FptSample> out(n);
  parallel_for(n, options.threads, [&](std::size_t idx) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(static_cast<std::uint64_t>(idx) >> 32)};
    std::mt19937_64 gen(ss);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> x = x0;
    std::vector<double> xd(ns);
    std::vector<double> props(rx.size());
    FptSample s;
    s.integrals.assign(specs.size(), 0.0);
    s.max_state = x;
    double t = 0.0;
    auto accumulate = [&](double t0, double t1) {
      for (std::size_t q = 0; q < specs.size(); ++q) {
        const auto& sp = specs[q];
        if (sp.closed_form) continue;
        bool active = true;
        for (const auto& [i, val] : sp.mode)
          if (x[i] != val) active = false;
        if (!active) continue;
        double mono = 1.0;
        for (const auto& [i, e] : sp.powers) mono *= ipow(static_cast<double>(x[i]), e);
        if (mono == 0.0) continue;
        double dt = (ipow(t1, sp.k + 1) - ipow(t0, sp.k + 1)) / static_cast<double>(sp.k + 1);
        s.integrals[q] += dt * mono;
      }
    };
    std::uint64_t events = 0;
    while (true) {
      double a0 = 0.0;
      for (std::size_t j = 0; j < rx.size(); ++j) {
        double a;
        if (rx[j].custom) {
          for (std::size_t i = 0; i < ns; ++i) xd[i] = x[i];
          a = std::max(0.0, rx[j].custom->evaluate(xd));
        } else {
          a = rx[j].rate;
          for (const auto& [i, c] : rx[j].reactants) a *= falling_binomial(x[i], c);
        }
        props[j] = a;
        a0 += a;
      }
      if (!(a0 > 0.0) || ++events > options.max_events) {
        if (finite && a0 == 0.0) {
          accumulate(t, T);
          t = T;
        } else {
          s.diverged = true;
          t = std::numeric_limits<double>::infinity();
        }
        break;
      }
      double dt = -std::log1p(-unif(gen)) / a0;
      if (t + dt >= T) {
        accumulate(t, T);
        t = T;
        break;
      }
      accumulate(t, t + dt);
      t += dt;
      double target = unif(gen) * a0;
      std::size_t chosen = rx.size() - 1;
      double cum = 0.0;
      for (std::size_t j = 0; j < rx.size(); ++j) {
        cum += props[j];
        if (target < cum && props[j] > 0.0) {
          chosen = j;
          break;
        }
      }
      while (props[chosen] == 0.0 && chosen > 0) --chosen;
      for (const auto& [i, d] : rx[chosen].delta) {
        x[i] += d;
        s.max_state[i] = std::max(s.max_state[i], x[i]);
      }
      bool hit = false;
      for (std::size_t f = 0; f < thresholds.size() && !hit; ++f)
        if (x[thresholds[f].first] >= thresholds[f].second) {
          s.face = static_cast<int>(f);
          hit = true;
        }
      if (hit) break;
    }
    s.tau = t;
    s.final_state = x;
    for (std::size_t q = 0; q < specs.size(); ++q)
      if (specs[q].closed_form) s.integrals[q] = s.diverged ? std::numeric_limits<double>::infinity()
                                                            : ipow(t, specs[q].k + 1) / (specs[q].k + 1);
    out[idx] = std::move(s);
  });
  return out;
}

Estimate mean_estimate(const std::vector<double>& values, double confidence) {
  if (values.size() < 2) throw std::invalid_argument("need at least two values for an interval");
  Estimate e;
  e.n = values.size();
  e.confidence = confidence;
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  e.mean = sum / static_cast<double>(e.n);
  double ss = 0.0;
  comp = 0.0;
  for (double v : values) {
    double d = (v - e.mean) * (v - e.mean) - comp;
    double t = ss + d;
    comp = (t - ss) - d;
    ss = t;
  }
  double var = ss / static_cast<double>(e.n - 1);
  e.std_error = std::sqrt(var / static_cast<double>(e.n));
  boost::math::students_t dist(static_cast<double>(e.n - 1));
  double tq = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  e.half_width = tq * e.std_error;
  return e;
}

Estimate mean_fpt(const std::vector<FptSample>& samples, double confidence) {
  std::vector<double> taus;
  for (const auto& s : samples)
    if (!s.diverged) taus.push_back(s.tau);
  if (taus.size() != samples.size()) throw std::runtime_error("some trajectories never reached the target");
  return mean_estimate(taus, confidence);
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double confidence) {
  if (n == 0) return {0.0, 1.0};
  boost::math::normal nd;
  double z = boost::math::quantile(boost::math::complement(nd, (1.0 - confidence) / 2.0));
  double nn = static_cast<double>(n);
  double p = static_cast<double>(k) / nn;
  double denom = 1.0 + z * z / nn;
  double center = (p + z * z / (2 * nn)) / denom;
  double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<CdfPoint> empirical_cdf(const std::vector<FptSample>& samples, const std::vector<double>& grid,
                                    double confidence) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::vector<double> hits;
  for (const auto& s : samples)
    if (s.face >= 0) hits.push_back(s.tau);
  std::sort(hits.begin(), hits.end());
  std::vector<CdfPoint> out;
  for (double t : grid) {
    std::size_t k = static_cast<std::size_t>(std::lower_bound(hits.begin(), hits.end(), t) - hits.begin());
    CdfPoint p;
    p.t = t;
    p.p = static_cast<double>(k) / static_cast<double>(samples.size());
    std::tie(p.lower, p.upper) = wilson_interval(k, samples.size(), confidence);
    out.push_back(p);
  }
  return out;
}

double sample_moment(const DerivationContext& ctx, const FptSample& s, const MomentVar& v,
                     const std::vector<MomentVar>& integrals) {
  auto mode_matches = [&]() {
    for (std::size_t q = 0; q < v.measure.mode.size(); ++q)
      if (s.final_state[ctx.modes[q]] != v.measure.mode[q]) return false;
    return true;
  };
  switch (v.measure.kind) {
    case MeasureKind::Occupation: {
      auto it = std::find(integrals.begin(), integrals.end(), v);
      if (it == integrals.end()) throw std::invalid_argument("occupation moment was not accumulated");
      return s.integrals[static_cast<std::size_t>(it - integrals.begin())];
    }
    case MeasureKind::HitFace: {
      if (s.face < 0 || ctx.faces[static_cast<std::size_t>(s.face)].first != v.measure.face || !mode_matches()) return 0.0;
      double val = ipow(s.tau, v.k);
      auto free = ctx.free_species(v.measure);
      for (std::size_t q = 0; q < free.size(); ++q)
        val *= ipow(static_cast<double>(s.final_state[ctx.population[static_cast<std::size_t>(free[q])]]), v.m[q]);
      return val;
    }
    case MeasureKind::HorizonFace: {
      if (s.face >= 0 || s.diverged || !mode_matches()) return 0.0;
      double val = 1.0;
      for (std::size_t q = 0; q < v.m.size(); ++q)
        val *= ipow(static_cast<double>(s.final_state[ctx.population[q]]), v.m[q]);
      return val;
    }
  }
  return 0.0;
}

std::vector<MomentVar> occupation_moments(const std::vector<LinearMomentConstraint>& constraints) {
  std::set<MomentVar> vars;
  for (const auto& c : constraints)
    for (const auto& [v, coef] : c.terms)
      if (v.measure.kind == MeasureKind::Occupation) vars.insert(v);
  return {vars.begin(), vars.end()};
}

Estimate constraint_residual(const Pctmc& model, const FptQuery& query, const LinearMomentConstraint& c,
                             const std::vector<FptSample>& samples, const std::vector<MomentVar>& integrals,
                             double confidence) {
  DerivationContext ctx(model, query);
  std::vector<std::pair<double, std::size_t>> occ_terms;
  std::vector<std::pair<double, const MomentVar*>> exit_terms;
  for (const auto& [v, coef] : c.terms) {
    if (v.measure.kind == MeasureKind::Occupation) {
      auto it = std::find(integrals.begin(), integrals.end(), v);
      if (it == integrals.end()) throw std::invalid_argument("occupation moment was not accumulated");
      occ_terms.emplace_back(coef.get_d(), static_cast<std::size_t>(it - integrals.begin()));
    } else {
      exit_terms.emplace_back(coef.get_d(), &v);
    }
  }
  double constant = c.constant.get_d();
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) {
    double acc = constant;
    for (const auto& [coef, idx] : occ_terms) acc += coef * s.integrals[idx];
    for (const auto& [coef, v] : exit_terms) acc += coef * sample_moment(ctx, s, *v, integrals);
    values.push_back(acc);
  }
  return mean_estimate(values, confidence);
}

Estimate martingale_residual(const Pctmc& model, const FptQuery& query, const std::vector<int>& m, int k,
                             std::size_t n, std::uint64_t seed, const std::vector<int>& mode, double confidence) {
  LinearMomentConstraint c;
  bool zero = k == 0 && std::all_of(m.begin(), m.end(), [](int e) { return e == 0; });
  if (mode.empty())
    c = martingale_constraint(model, query, m, k);
  else if (zero)
    c = mode_balance_constraint(model, query, mode);
  else
    c = hybrid_constraint(model, query, m, k, mode);
  SimulationOptions opts;
  opts.integrals = occupation_moments({c});
  auto samples = simulate_fpt(model, query, n, seed, opts);
  return constraint_residual(model, query, c, samples, opts.integrals, confidence);
}

double species_max_quantile(const Pctmc& model, const FptQuery& query, std::size_t species, std::size_t runs,
                            double quantile, std::uint64_t seed, int threads) {
  SimulationOptions opts;
  opts.threads = threads;
  auto samples = simulate_fpt(model, query, runs, seed, opts);
  std::vector<int> maxima;
  for (const auto& s : samples) maxima.push_back(s.max_state.at(species));
  std::sort(maxima.begin(), maxima.end());
  auto idx = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(maxima.size())));
  idx = std::min(maxima.size() - 1, idx == 0 ? 0 : idx - 1);
  return static_cast<double>(maxima[idx]);
}

}  // namespace fpt
