#include "fptbound/bound.hpp"

#include "fptbound/constraints.hpp"
#include "fptbound/ssa.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

namespace fpt {

PreparedQuery prepare(const Pctmc& model, const FptQuery& query, const BoundOptions& options) {
  PreparedQuery out;
  out.diagnostics = validate(model, query, ValidateOptions{options.scale});
  if (has_errors(out.diagnostics)) {
    std::string msg;
    for (const auto& d : out.diagnostics)
      if (d.severity == Severity::Error) msg += (msg.empty() ? "" : "; ") + d.message;
    throw std::invalid_argument(msg);
  }
  if (options.reduce) {
    out.reduction = reduce(model, query);
  } else {
    out.reduction.model = model;
    out.reduction.query = query;
    out.reduction.kept.resize(model.num_species());
    std::iota(out.reduction.kept.begin(), out.reduction.kept.end(), std::size_t{0});
  }
  const Pctmc& m = out.reduction.model;
  FptQuery& q = out.reduction.query;
  out.sdp.scale = options.scale;
  out.sdp.localizer_order = options.localizer_order;
  DerivationContext ctx(m, q);
  std::set<std::size_t> thresholded;
  for (const auto& th : q.thresholds) thresholded.insert(th.species);
  for (std::size_t slot = 0; slot < ctx.num_population(); ++slot) {
    std::size_t sp = ctx.population[slot];
    if (thresholded.count(sp)) continue;
    double b = 0.0;
    auto it = q.scale_bounds.find(sp);
    if (it != q.scale_bounds.end()) {
      b = it->second;
    } else {
      FptQuery pilot = q;
      if (!pilot.horizon && pilot.time_scale_hint) pilot.horizon = 100.0 * *pilot.time_scale_hint;
      b = species_max_quantile(m, pilot, sp, options.pilot_runs, options.pilot_quantile, options.seed);
      b = std::max(b, 1.0);
      out.pilot_bounds[sp] = b;
    }
    out.sdp.species_bounds[static_cast<int>(slot)] = b;
  }
  return out;
}

LoweredSdp build_lowered(const PreparedQuery& prepared, Sense sense) {
  return lower_to_standard(assemble(prepared.reduction.model, prepared.reduction.query, sense, prepared.sdp));
}

namespace {

SideResult solve_side(const PreparedQuery& prepared, Sense sense, const BoundOptions& options) {
  SideResult side;
  side.solution = solve_lowered(build_lowered(prepared, sense), options.solver);
  if (!side.optimal() && options.retry_reduced && prepared.sdp.localizer_order == LocalizerOrder::Full) {
    PreparedQuery reduced = prepared;
    reduced.sdp.localizer_order = LocalizerOrder::Reduced;
    Solution alt = solve_lowered(build_lowered(reduced, sense), options.solver);
    if (alt.status == SolveStatus::Optimal) {
      side.solution = std::move(alt);
      side.reduced_localizers = true;
    }
  }
  const Solution& s = side.solution;
  bool has_dual = std::isfinite(s.dual_objective) && s.status != SolveStatus::Infeasible &&
                  s.status != SolveStatus::Unbounded;
  if (sense == Sense::Minimize)
    side.value = has_dual ? std::min(s.primal_objective, s.dual_objective) : s.primal_objective;
  else
    side.value = has_dual ? std::max(s.primal_objective, s.dual_objective) : s.primal_objective;
  return side;
}

int minimum_order(const Pctmc& model) {
  int delta = propensity_degree_excess(model);
  return std::max(1, (delta + 2) / 2);
}

}  // namespace

BoundResult bound(const PreparedQuery& prepared, const BoundOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  BoundResult out;
  out.order = prepared.reduction.query.order;
  if (options.parallel && default_threads() > 1) {
    std::exception_ptr err;
    std::thread worker([&] {
      try {
        out.max_side = solve_side(prepared, Sense::Maximize, options);
      } catch (...) {
        err = std::current_exception();
      }
    });
    try {
      out.min_side = solve_side(prepared, Sense::Minimize, options);
    } catch (...) {
      worker.join();
      throw;
    }
    worker.join();
    if (err) std::rethrow_exception(err);
  } else {
    out.min_side = solve_side(prepared, Sense::Minimize, options);
    out.max_side = solve_side(prepared, Sense::Maximize, options);
  }
  out.lower = out.min_side.value;
  out.upper = out.max_side.value;

  if (options.fallback && !out.optimal()) {
    int rmin = minimum_order(prepared.reduction.model);
    for (int r = out.order - 1; r >= rmin; --r) {
      bool need_min = !out.min_side.optimal() && out.min_side.fallback_order == 0;
      bool need_max = !out.max_side.optimal() && out.max_side.fallback_order == 0;
      if (!need_min && !need_max) break;
      PreparedQuery lower = prepared;
      lower.reduction.query.order = r;
      BoundOptions inner = options;
      inner.fallback = false;
      inner.retry_reduced = false;
      if (need_min) {
        SideResult s = solve_side(lower, Sense::Minimize, inner);
        if (s.optimal()) {
          out.min_side.fallback_order = r;
          out.min_side.fallback_value = s.value;
        }
      }
      if (need_max) {
        SideResult s = solve_side(lower, Sense::Maximize, inner);
        if (s.optimal()) {
          out.max_side.fallback_order = r;
          out.max_side.fallback_value = s.value;
        }
      }
    }
  }
  auto note = [&](const char* name, const SideResult& s) {
    if (s.optimal()) return;
    std::string w = std::string(name) + " side: " + to_string(s.solution.status);
    if (!s.solution.message.empty()) w += " (" + s.solution.message + ")";
    if (s.fallback_order > 0)
      w += "; order " + std::to_string(s.fallback_order) + " gives " + std::to_string(s.fallback_value);
    out.warnings.push_back(w);
  };
  note("lower", out.min_side);
  note("upper", out.max_side);
  if (out.min_side.optimal() && out.max_side.optimal() &&
      out.lower > out.upper + 2 * options.solver.gap_tol * (1 + std::abs(out.lower) + std::abs(out.upper)))
    out.warnings.push_back("lower bound exceeds upper bound");
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

BoundResult bound(const Pctmc& model, const FptQuery& query, const BoundOptions& options) {
  return bound(prepare(model, query, options), options);
}

std::vector<BoundResult> bound_table(const Pctmc& model, const FptQuery& query, int r_max,
                                     const BoundOptions& options) {
  PreparedQuery base = prepare(model, query, options);
  BoundOptions opt = options;
  opt.fallback = false;
  std::vector<BoundResult> out;
  for (int r = minimum_order(base.reduction.model); r <= r_max; ++r) {
    PreparedQuery p = base;
    p.reduction.query.order = r;
    out.push_back(bound(p, opt));
  }
  return out;
}

std::vector<CdfRow> cdf_sweep(const Pctmc& model, const FptQuery& query, std::vector<double> grid,
                              const BoundOptions& options) {
  std::sort(grid.begin(), grid.end());
  FptQuery q = query;
  q.objective = Objective::HitProbability;
  std::vector<CdfRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw std::invalid_argument("horizons must be positive");
    rows[i].horizon = grid[i];
  }
  // Scale bounds from a pilot at the largest horizon cover every grid point.
  FptQuery widest = q;
  if (!grid.empty()) widest.horizon = grid.back();
  PreparedQuery base = prepare(model, widest, options);
  BoundOptions inner = options;
  inner.parallel = false;
  int workers = options.parallel ? std::max(1, default_threads()) : 1;
  std::vector<std::exception_ptr> errors(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
      try {
        PreparedQuery p = base;
        p.reduction.query.horizon = grid[i];
        rows[i].bounds = bound(p, inner);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(workers, static_cast<int>(grid.size())); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double slack = 2 * options.solver.gap_tol;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    rows[i].lower_decrease = rows[i].bounds.lower < rows[i - 1].bounds.lower - slack;
    rows[i].upper_decrease = rows[i].bounds.upper < rows[i - 1].bounds.upper - slack;
  }
  return rows;
}

}  // namespace fpt
