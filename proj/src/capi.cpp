#include "fptbound/fptbound.h"

#include "fptbound/bound.hpp"
#include "fptbound/constraints.hpp"
#include "fptbound/model.hpp"
#include "fptbound/report.hpp"
#include "fptbound/solver.hpp"
#include "fptbound/ssa.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

struct fpt_model {
  fpt::Pctmc model;
  fpt::FptQuery query;
  bool has_thresholds = false;
  bool has_horizon = false;
};

namespace {

thread_local std::string last_error;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
fpt_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return FPT_OK;
  } catch (const ArgumentError& e) {
    last_error = e.what();
    return FPT_ERR_ARGUMENT;
  } catch (const IoError& e) {
    last_error = e.what();
    return FPT_ERR_IO;
  } catch (const fpt::ParseError& e) {
    last_error = e.what();
    return FPT_ERR_PARSE;
  } catch (const fpt::SdpaParseError& e) {
    last_error = e.what();
    return FPT_ERR_PARSE;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return FPT_ERR_PARSE;
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return FPT_ERR_INVALID;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FPT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return FPT_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

void need(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be null");
}

const fpt::FptQuery& query_of(const fpt_model* m) {
  need(m, "model");
  if (!m->has_thresholds) throw ArgumentError("the query has no threshold");
  if (!m->has_horizon) throw ArgumentError("the query has no horizon");
  return m->query;
}

fpt::Format format_of(fpt_format f) {
  switch (f) {
    case FPT_FORMAT_TEXT:
      return fpt::Format::Text;
    case FPT_FORMAT_JSON:
      return fpt::Format::Json;
    case FPT_FORMAT_CSV:
      return fpt::Format::Csv;
  }
  throw ArgumentError("unknown output format");
}

fpt::BoundOptions bound_options(const fpt_options* o) {
  fpt_options d;
  fpt_options_init(&d);
  if (!o) o = &d;
  fpt::BoundOptions b;
  b.solver.gap_tol = o->gap_tol;
  b.solver.feas_tol = o->feas_tol;
  b.solver.max_iter = o->max_iter;
  if (!(o->gap_tol > 0) || !(o->feas_tol > 0) || o->max_iter < 1) throw ArgumentError("solver tolerances must be positive");
  b.scale = o->scale != 0;
  b.reduce = o->reduce != 0;
  b.localizer_order = o->reduced_localizers ? fpt::LocalizerOrder::Reduced : fpt::LocalizerOrder::Full;
  b.retry_reduced = o->fallback != 0;
  b.fallback = o->fallback != 0;
  b.seed = o->seed;
  return b;
}

fpt_solve_status status_of(fpt::SolveStatus s) {
  switch (s) {
    case fpt::SolveStatus::Optimal:
      return FPT_SOLVE_OPTIMAL;
    case fpt::SolveStatus::Infeasible:
      return FPT_SOLVE_INFEASIBLE;
    case fpt::SolveStatus::Unbounded:
      return FPT_SOLVE_UNBOUNDED;
    case fpt::SolveStatus::NumericalFailure:
      return FPT_SOLVE_NUMERICAL_FAILURE;
    case fpt::SolveStatus::IterationLimit:
      return FPT_SOLVE_ITERATION_LIMIT;
  }
  return FPT_SOLVE_NUMERICAL_FAILURE;
}

void load_into(fpt_model* h, const std::string& text) {
  fpt::ModelFile f = fpt::parse_model_file(text);
  h->model = std::move(f.model);
  if (f.query) {
    h->query = *f.query;
    h->has_thresholds = h->has_horizon = true;
  }
}

}  // namespace

extern "C" {

const char* fpt_version(void) { return "0.1.0"; }

const char* fpt_last_error(void) { return last_error.c_str(); }

void fpt_string_free(char* s) { std::free(s); }

void fpt_options_init(fpt_options* o) {
  if (!o) return;
  o->gap_tol = 1e-8;
  o->feas_tol = 1e-8;
  o->max_iter = 200;
  o->scale = 1;
  o->reduce = 1;
  o->reduced_localizers = 0;
  o->fallback = 1;
  o->seed = 1;
}

fpt_status fpt_model_parse(const char* text, fpt_model** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    auto h = std::make_unique<fpt_model>();
    load_into(h.get(), text);
    *out = h.release();
  });
}

fpt_status fpt_model_load(const char* path, fpt_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto h = std::make_unique<fpt_model>();
    load_into(h.get(), ss.str());
    *out = h.release();
  });
}

void fpt_model_free(fpt_model* model) { delete model; }

fpt_status fpt_model_set_query(fpt_model* m, const char* block) {
  return guarded([&] {
    need(m, "model");
    need(block, "query");
    m->query = fpt::parse_query(m->model, block);
    m->has_thresholds = m->has_horizon = true;
  });
}

fpt_status fpt_model_set_thresholds(fpt_model* m, const char* thresholds) {
  return guarded([&] {
    need(m, "model");
    need(thresholds, "threshold list");
    std::string text = std::string("query { threshold ") + thresholds + "; horizon 1; }";
    m->query.thresholds = fpt::parse_query(m->model, text).thresholds;
    m->has_thresholds = true;
  });
}

fpt_status fpt_model_set_horizon(fpt_model* m, double horizon) {
  return guarded([&] {
    need(m, "model");
    if (std::isinf(horizon) && horizon > 0)
      m->query.horizon.reset();
    else if (horizon > 0)
      m->query.horizon = horizon;
    else
      throw ArgumentError("horizon must be positive");
    m->has_horizon = true;
  });
}

fpt_status fpt_model_set_order(fpt_model* m, int order) {
  return guarded([&] {
    need(m, "model");
    if (order < 1) throw ArgumentError("order must be at least 1");
    m->query.order = order;
  });
}

fpt_status fpt_model_set_objective(fpt_model* m, fpt_objective objective) {
  return guarded([&] {
    need(m, "model");
    if (objective == FPT_OBJECTIVE_MFPT)
      m->query.objective = fpt::Objective::Mfpt;
    else if (objective == FPT_OBJECTIVE_HITPROB)
      m->query.objective = fpt::Objective::HitProbability;
    else
      throw ArgumentError("unknown objective");
  });
}

fpt_status fpt_model_set_scale_bound(fpt_model* m, const char* species, double bound) {
  return guarded([&] {
    need(m, "model");
    need(species, "species");
    auto idx = m->model.species_index(species);
    if (!idx) throw ArgumentError(std::string("unknown species '") + species + "'");
    if (!(bound > 0)) throw ArgumentError("scale bound must be positive");
    m->query.scale_bounds[*idx] = bound;
  });
}

fpt_status fpt_model_set_time_scale(fpt_model* m, double time_scale) {
  return guarded([&] {
    need(m, "model");
    if (!(time_scale > 0)) throw ArgumentError("time scale must be positive");
    m->query.time_scale_hint = time_scale;
  });
}

fpt_status fpt_model_get_order(const fpt_model* m, int* order) {
  return guarded([&] {
    need(m, "model");
    need(order, "order");
    *order = m->query.order;
  });
}

fpt_status fpt_model_serialize(const fpt_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    std::string s = fpt::serialize_model(m->model);
    if (m->has_thresholds && m->has_horizon) s += fpt::serialize_query(m->model, m->query);
    put(out, s);
  });
}

fpt_status fpt_check(const fpt_model* m, const fpt_options* options, fpt_format format, char** report,
                     int* has_errors) {
  return guarded([&] {
    const auto& q = query_of(m);
    fpt::BoundOptions b = bound_options(options);
    auto diags = fpt::validate(m->model, q, fpt::ValidateOptions{b.scale});
    if (has_errors) *has_errors = fpt::has_errors(diags) ? 1 : 0;
    put(report, fpt::render_diagnostics(diags, format_of(format)));
  });
}

fpt_status fpt_moments(const fpt_model* m, int max_degree, fpt_format format, char** report) {
  return guarded([&] {
    const auto& q = query_of(m);
    if (max_degree < 0) throw ArgumentError("degree must be nonnegative");
    put(report, fpt::render_moments(m->model, q, max_degree, format_of(format)));
  });
}

fpt_status fpt_bound(const fpt_model* m, const fpt_options* options, fpt_bound_result* result, fpt_format format,
                     char** report) {
  return guarded([&] {
    const auto& q = query_of(m);
    fpt::BoundResult r = fpt::bound(m->model, q, bound_options(options));
    if (result) {
      result->lower = r.lower;
      result->upper = r.upper;
      result->order = r.order;
      result->lower_status = status_of(r.min_side.solution.status);
      result->upper_status = status_of(r.max_side.solution.status);
      result->lower_fallback_order = r.min_side.fallback_order;
      result->lower_fallback_value = r.min_side.fallback_value;
      result->upper_fallback_order = r.max_side.fallback_order;
      result->upper_fallback_value = r.max_side.fallback_value;
      result->wall_seconds = r.wall_seconds;
    }
    put(report, fpt::render_bound(r, format_of(format)));
  });
}

fpt_status fpt_table(const fpt_model* m, const fpt_options* options, int r_max, fpt_format format, char** report,
                     int* all_optimal) {
  return guarded([&] {
    const auto& q = query_of(m);
    if (r_max < 1) throw ArgumentError("maximum order must be at least 1");
    auto rows = fpt::bound_table(m->model, q, r_max, bound_options(options));
    if (all_optimal) {
      *all_optimal = 1;
      for (const auto& r : rows)
        if (!r.optimal()) *all_optimal = 0;
    }
    put(report, fpt::render_table(rows, format_of(format)));
  });
}

fpt_status fpt_cdf(const fpt_model* m, const fpt_options* options, const double* grid, size_t n, fpt_format format,
                   char** report, int* all_ok) {
  return guarded([&] {
    need(m, "model");
    if (!m->has_thresholds) throw ArgumentError("the query has no threshold");
    if (n == 0) throw ArgumentError("the horizon grid is empty");
    need(grid, "grid");
    auto rows = fpt::cdf_sweep(m->model, m->query, std::vector<double>(grid, grid + n), bound_options(options));
    if (all_ok) {
      *all_ok = 1;
      for (const auto& r : rows)
        if (!r.bounds.optimal() || r.lower_decrease || r.upper_decrease) *all_ok = 0;
    }
    put(report, fpt::render_cdf(rows, format_of(format)));
  });
}

fpt_status fpt_simulate(const fpt_model* m, size_t n, uint64_t seed, double confidence, fpt_format format,
                        char** report) {
  return guarded([&] {
    const auto& q = query_of(m);
    if (n < 2) throw ArgumentError("need at least two trajectories");
    if (!(confidence > 0 && confidence < 1)) throw ArgumentError("confidence must lie in (0, 1)");
    auto samples = fpt::simulate_fpt(m->model, q, n, seed);
    put(report, fpt::render_simulation(fpt::summarize(samples, seed, confidence), format_of(format)));
  });
}

fpt_status fpt_simulate_samples(const fpt_model* m, size_t n, uint64_t seed, char** csv) {
  return guarded([&] {
    const auto& q = query_of(m);
    auto samples = fpt::simulate_fpt(m->model, q, n, seed);
    put(csv, fpt::render_samples_csv(m->model, q, samples, {}));
  });
}

fpt_status fpt_export_sdpa(const fpt_model* m, const fpt_options* options, fpt_sense sense, char** sdpa) {
  return guarded([&] {
    const auto& q = query_of(m);
    need(sdpa, "out");
    fpt::BoundOptions b = bound_options(options);
    auto prepared = fpt::prepare(m->model, q, b);
    auto lowered = fpt::build_lowered(prepared, sense == FPT_MAXIMIZE ? fpt::Sense::Maximize : fpt::Sense::Minimize);
    put(sdpa, fpt::export_sdpa(lowered.sdp));
  });
}

fpt_status fpt_solve_sdpa(const char* text, const fpt_options* options, fpt_format format, char** report,
                          fpt_solve_status* status) {
  return guarded([&] {
    need(text, "text");
    fpt::BoundOptions b = bound_options(options);
    fpt::Solution s = fpt::solve(fpt::parse_sdpa(text), b.solver);
    if (status) *status = status_of(s.status);
    nlohmann::json j = {{"status", fpt::to_string(s.status)},
                        {"primal_objective", s.primal_objective},
                        {"dual_objective", s.dual_objective},
                        {"duality_gap", s.duality_gap},
                        {"iterations", s.iterations},
                        {"x", s.x}};
    std::string out;
    if (format == FPT_FORMAT_JSON) {
      out = j.dump(2) + "\n";
    } else if (format == FPT_FORMAT_CSV) {
      out = "status,primal_objective,dual_objective,duality_gap,iterations\n" + std::string(fpt::to_string(s.status)) +
            "," + nlohmann::json(s.primal_objective).dump() + "," + nlohmann::json(s.dual_objective).dump() + "," +
            nlohmann::json(s.duality_gap).dump() + "," + std::to_string(s.iterations) + "\n";
    } else {
      std::ostringstream os;
      os.precision(12);
      os << fpt::to_string(s.status) << "  primal " << s.primal_objective << "  dual " << s.dual_objective
         << "  iterations " << s.iterations << "\n";
      out = os.str();
    }
    put(report, out);
  });
}

}  // extern "C"
