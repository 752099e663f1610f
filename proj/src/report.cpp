#include "fptbound/report.hpp"

#include "fptbound/constraints.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fpt {

using nlohmann::json;

std::optional<Format> parse_format(std::string_view name) {
  if (name == "text") return Format::Text;
  if (name == "json") return Format::Json;
  if (name == "csv") return Format::Csv;
  return std::nullopt;
}

namespace {

std::string num(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

SolveStatus status_from(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded, SolveStatus::NumericalFailure,
                  SolveStatus::IterationLimit})
    if (s == to_string(st)) return st;
  throw std::invalid_argument("unknown solver status '" + s + "'");
}

json side_json(const SideResult& s) {
  const Solution& sol = s.solution;
  return {{"status", to_string(sol.status)},
          {"value", real(s.value)},
          {"primal_objective", real(sol.primal_objective)},
          {"dual_objective", real(sol.dual_objective)},
          {"duality_gap", real(sol.duality_gap)},
          {"primal_infeasibility", real(sol.primal_infeasibility)},
          {"dual_infeasibility", real(sol.dual_infeasibility)},
          {"iterations", sol.iterations},
          {"message", sol.message},
          {"reduced_localizers", s.reduced_localizers},
          {"fallback_order", s.fallback_order},
          {"fallback_value", real(s.fallback_value)}};
}

SideResult side_from(const json& j) {
  SideResult s;
  s.solution.status = status_from(j.at("status").get<std::string>());
  s.value = real_from(j.at("value"));
  s.solution.primal_objective = real_from(j.at("primal_objective"));
  s.solution.dual_objective = real_from(j.at("dual_objective"));
  s.solution.duality_gap = real_from(j.at("duality_gap"));
  s.solution.primal_infeasibility = real_from(j.at("primal_infeasibility"));
  s.solution.dual_infeasibility = real_from(j.at("dual_infeasibility"));
  s.solution.iterations = j.at("iterations").get<int>();
  s.solution.message = j.at("message").get<std::string>();
  s.reduced_localizers = j.at("reduced_localizers").get<bool>();
  s.fallback_order = j.at("fallback_order").get<int>();
  s.fallback_value = real_from(j.at("fallback_value"));
  return s;
}

json bound_json(const BoundResult& r) {
  return {{"order", r.order},
          {"lower", real(r.lower)},
          {"upper", real(r.upper)},
          {"optimal", r.optimal()},
          {"wall_seconds", r.wall_seconds},
          {"lower_side", side_json(r.min_side)},
          {"upper_side", side_json(r.max_side)},
          {"warnings", r.warnings}};
}

double log10_width(const BoundResult& r) {
  double w = r.upper - r.lower;
  return w > 0 ? std::log10(w) : -std::numeric_limits<double>::infinity();
}

std::string cell(const SideResult& s) {
  std::string v = num(s.value);
  if (!s.optimal()) v += "*";
  return v;
}

}  // namespace

std::string render_bound(const BoundResult& r, Format format) {
  switch (format) {
    case Format::Json:
      return bound_json(r).dump(2) + "\n";
    case Format::Csv: {
      std::string out = "order,lower,upper,lower_status,upper_status,wall_seconds\n";
      out += std::to_string(r.order) + "," + num(r.lower, 17) + "," + num(r.upper, 17) + "," +
             to_string(r.min_side.solution.status) + "," + to_string(r.max_side.solution.status) + "," +
             num(r.wall_seconds) + "\n";
      return out;
    }
    case Format::Text:
      break;
  }
  std::ostringstream os;
  os << "order " << r.order << ": [" << num(r.lower, 8) << ", " << num(r.upper, 8) << "]\n";
  os << "  lower: " << to_string(r.min_side.solution.status) << "  primal " << num(r.min_side.solution.primal_objective, 10)
     << "  dual " << num(r.min_side.solution.dual_objective, 10) << "  iterations " << r.min_side.solution.iterations
     << (r.min_side.reduced_localizers ? "  (reduced localizers)" : "") << "\n";
  os << "  upper: " << to_string(r.max_side.solution.status) << "  primal " << num(r.max_side.solution.primal_objective, 10)
     << "  dual " << num(r.max_side.solution.dual_objective, 10) << "  iterations " << r.max_side.solution.iterations
     << (r.max_side.reduced_localizers ? "  (reduced localizers)" : "") << "\n";
  os << "  wall time " << num(r.wall_seconds, 3) << " s\n";
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

BoundResult bound_from_json(const std::string& text) {
  json j = json::parse(text);
  BoundResult r;
  r.order = j.at("order").get<int>();
  r.lower = real_from(j.at("lower"));
  r.upper = real_from(j.at("upper"));
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.min_side = side_from(j.at("lower_side"));
  r.max_side = side_from(j.at("upper_side"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string render_table(const std::vector<BoundResult>& rows, Format format) {
  if (format == Format::Json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json e = bound_json(r);
      e["log10_width"] = real(log10_width(r));
      arr.push_back(e);
    }
    return json{{"rows", arr}}.dump(2) + "\n";
  }
  if (format == Format::Csv) {
    std::string out = "order,lower,upper,log10_width,lower_status,upper_status,wall_seconds\n";
    for (const auto& r : rows)
      out += std::to_string(r.order) + "," + num(r.lower, 17) + "," + num(r.upper, 17) + "," + num(log10_width(r)) +
             "," + to_string(r.min_side.solution.status) + "," + to_string(r.max_side.solution.status) + "," +
             num(r.wall_seconds) + "\n";
    return out;
  }
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%3s  %14s  %14s  %12s  %8s\n", "r", "lower", "upper", "log10 width", "time s");
  os << line;
  bool marked = false;
  for (const auto& r : rows) {
    marked = marked || !r.optimal();
    std::snprintf(line, sizeof line, "%3d  %14s  %14s  %12s  %8s\n", r.order, cell(r.min_side).c_str(),
                  cell(r.max_side).c_str(), num(log10_width(r), 4).c_str(), num(r.wall_seconds, 3).c_str());
    os << line;
  }
  if (marked) os << "* side did not reach Optimal (best iterate shown)\n";
  return os.str();
}

std::string render_cdf(const std::vector<CdfRow>& rows, Format format) {
  if (format == Format::Json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json e = bound_json(r.bounds);
      e["horizon"] = r.horizon;
      e["lower_decrease"] = r.lower_decrease;
      e["upper_decrease"] = r.upper_decrease;
      arr.push_back(e);
    }
    return json{{"rows", arr}}.dump(2) + "\n";
  }
  std::ostringstream os;
  if (format == Format::Csv) {
    os << "horizon,lower,upper,lower_status,upper_status,monotone\n";
    for (const auto& r : rows)
      os << num(r.horizon, 17) << "," << num(r.bounds.lower, 17) << "," << num(r.bounds.upper, 17) << ","
         << to_string(r.bounds.min_side.solution.status) << "," << to_string(r.bounds.max_side.solution.status) << ","
         << (r.lower_decrease || r.upper_decrease ? "no" : "yes") << "\n";
    return os.str();
  }
  char line[160];
  std::snprintf(line, sizeof line, "%10s  %14s  %14s\n", "T", "lower", "upper");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%10s  %14s  %14s%s\n", num(r.horizon).c_str(), cell(r.bounds.min_side).c_str(),
                  cell(r.bounds.max_side).c_str(), r.lower_decrease || r.upper_decrease ? "  not monotone" : "");
    os << line;
  }
  for (const auto& r : rows)
    if (r.lower_decrease || r.upper_decrease)
      os << "warning: bound decreases at T = " << num(r.horizon) << " beyond solver accuracy\n";
  return os.str();
}

SimulationSummary summarize(const std::vector<FptSample>& samples, std::uint64_t seed, double confidence) {
  SimulationSummary s;
  s.n = samples.size();
  s.seed = seed;
  s.confidence = confidence;
  std::vector<double> taus;
  for (const auto& x : samples) {
    if (x.diverged) {
      ++s.diverged;
      continue;
    }
    if (x.face >= 0)
      ++s.hits;
    else
      ++s.horizon_stops;
    taus.push_back(x.tau);
  }
  if (taus.size() >= 2) s.mean_tau = mean_estimate(taus, confidence);
  if (s.n > 0) std::tie(s.hit_lower, s.hit_upper) = wilson_interval(s.hits, s.n, confidence);
  return s;
}

std::string render_simulation(const SimulationSummary& s, Format format) {
  double p = s.n ? static_cast<double>(s.hits) / static_cast<double>(s.n) : 0.0;
  if (format == Format::Json) {
    json j = {{"n", s.n},
              {"seed", s.seed},
              {"confidence", s.confidence},
              {"mean_tau", real(s.mean_tau.mean)},
              {"mean_tau_half_width", real(s.mean_tau.half_width)},
              {"mean_tau_std_error", real(s.mean_tau.std_error)},
              {"hits", s.hits},
              {"horizon_stops", s.horizon_stops},
              {"diverged", s.diverged},
              {"hit_probability", p},
              {"hit_lower", s.hit_lower},
              {"hit_upper", s.hit_upper}};
    return j.dump(2) + "\n";
  }
  if (format == Format::Csv) {
    return "n,seed,mean_tau,half_width,hits,horizon_stops,diverged,hit_probability,hit_lower,hit_upper\n" +
           std::to_string(s.n) + "," + std::to_string(s.seed) + "," + num(s.mean_tau.mean, 17) + "," +
           num(s.mean_tau.half_width, 17) + "," + std::to_string(s.hits) + "," + std::to_string(s.horizon_stops) +
           "," + std::to_string(s.diverged) + "," + num(p, 17) + "," + num(s.hit_lower, 17) + "," +
           num(s.hit_upper, 17) + "\n";
  }
  std::ostringstream os;
  os << s.n << " trajectories (seed " << s.seed << ")\n";
  os << "mean first passage time: " << num(s.mean_tau.mean, 8) << " +/- " << num(s.mean_tau.half_width, 4) << " ("
     << num(100 * s.confidence, 3) << "% CI)\n";
  os << "hit probability: " << num(p, 8) << " [" << num(s.hit_lower, 6) << ", " << num(s.hit_upper, 6) << "]\n";
  os << "hits " << s.hits << ", horizon " << s.horizon_stops;
  if (s.diverged) os << ", diverged " << s.diverged;
  os << "\n";
  return os.str();
}

std::string render_samples_csv(const Pctmc& model, const FptQuery& query, const std::vector<FptSample>& samples,
                               const std::vector<MomentVar>& integrals) {
  DerivationContext ctx(model, query);
  std::ostringstream os;
  os << "tau,hit";
  for (const auto& v : integrals) os << ",\"" << moment_name(ctx, v) << "\"";
  os << "\n";
  for (const auto& s : samples) {
    os << num(s.tau, 17) << ",";
    if (s.diverged)
      os << "diverged";
    else if (s.face >= 0)
      os << model.species[query.thresholds[static_cast<std::size_t>(s.face)].species].name;
    else
      os << "horizon";
    for (double v : s.integrals) os << "," << num(v, 17);
    os << "\n";
  }
  return os.str();
}

std::string render_diagnostics(const std::vector<Diagnostic>& diagnostics, Format format) {
  if (format == Format::Json) {
    json arr = json::array();
    for (const auto& d : diagnostics)
      arr.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"}, {"message", d.message}});
    return json{{"ok", !has_errors(diagnostics)}, {"diagnostics", arr}}.dump(2) + "\n";
  }
  if (format == Format::Csv) {
    std::string out = "severity,message\n";
    for (const auto& d : diagnostics)
      out += std::string(d.severity == Severity::Error ? "error" : "warning") + ",\"" + d.message + "\"\n";
    return out;
  }
  std::string out;
  for (const auto& d : diagnostics)
    out += std::string(d.severity == Severity::Error ? "error: " : "warning: ") + d.message + "\n";
  if (diagnostics.empty()) out = "ok\n";
  return out;
}

namespace {

std::string expectation(const std::vector<std::string>& names, const MultiIndex& e) {
  std::string mono;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (e[i] == 0) continue;
    if (!mono.empty()) mono += "*";
    mono += names[i];
    if (e[i] > 1) mono += "^" + std::to_string(e[i]);
  }
  return "E[" + mono + "]";
}

std::string moment_rhs(const Polynomial& p, const std::vector<std::string>& names) {
  if (p.terms().empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    out += first ? (neg ? "-" : "") : (neg ? " - " : " + ");
    first = false;
    if (e.degree() == 0) {
      out += format_rational(mag);
    } else {
      if (mag != 1) out += format_rational(mag) + "*";
      out += expectation(names, e);
    }
  }
  return out;
}

}  // namespace

std::string render_moments(const Pctmc& model, const FptQuery& query, int max_degree, Format format) {
  DerivationContext ctx(model, query);
  std::vector<std::string> names;
  for (auto i : ctx.population) names.push_back(model.species[i].name);
  struct Ode {
    std::vector<int> m;
    std::string lhs, rhs;
  };
  std::vector<Ode> odes;
  if (!ctx.hybrid()) {
    for (int d = 1; d <= max_degree; ++d)
      for (const auto& e : monomials_of_degree(names.size(), d)) {
        std::vector<int> m(e.exponents().begin(), e.exponents().end());
        odes.push_back({m, "d" + expectation(names, e) + "/dt", moment_rhs(generator_polynomial(model, m), names)});
      }
  }
  auto constraints = constraint_set(model, query);
  if (format == Format::Json) {
    json jo = json::array();
    for (const auto& o : odes) jo.push_back({{"m", o.m}, {"equation", o.lhs + " = " + o.rhs}});
    json jc = json::array();
    for (const auto& c : constraints) {
      json terms = json::array();
      for (const auto& [v, coef] : c.terms) terms.push_back({{"var", moment_name(ctx, v)}, {"coef", coef.get_d()}, {"exact", format_rational(coef)}});
      jc.push_back({{"label", c.label},
                    {"k", c.k},
                    {"m", c.m},
                    {"mode", c.mode},
                    {"terms", terms},
                    {"constant", c.constant.get_d()},
                    {"text", constraint_to_string(ctx, c)}});
    }
    return json{{"population_species", names}, {"moment_equations", jo}, {"constraints", jc}}.dump(2) + "\n";
  }
  std::ostringstream os;
  if (format == Format::Csv) {
    os << "kind,label,equation\n";
    for (const auto& o : odes) os << "ode,,\"" << o.lhs << " = " << o.rhs << "\"\n";
    for (const auto& c : constraints) os << "constraint,\"" << c.label << "\",\"" << constraint_to_string(ctx, c) << "\"\n";
    return os.str();
  }
  if (!odes.empty()) {
    os << "moment equations:\n";
    for (const auto& o : odes) os << "  " << o.lhs << " = " << o.rhs << "\n";
  }
  os << "constraints (" << constraints.size() << "):\n";
  for (const auto& c : constraints) os << "  " << c.label << ": " << constraint_to_string(ctx, c) << "\n";
  return os.str();
}

}  // namespace fpt
