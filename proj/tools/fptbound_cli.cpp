#include "fptbound/fptbound.h"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitPartial = 3;

struct Config {
  std::string model_path;
  std::string format = "text";
  std::uint64_t seed = 1;
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  bool no_scale = false;
  bool no_reduce = false;
  bool reduced_localizers = false;
  bool no_fallback = false;
  std::string solver = "embedded";

  std::string threshold;
  std::string horizon;
  int order = 0;
  std::string objective;
  std::vector<std::string> scale;
  double timescale = 0.0;

  int degree = 2;
  int r_max = 4;
  std::string grid;
  std::vector<double> horizons;
  std::size_t n = 10000;
  double confidence = 0.99;
  std::string samples_path;
  std::string sense = "min";
  std::string out;
};

struct Failure {
  int code;
  std::string message;
};

void check(fpt_status s, const char* what) {
  if (s == FPT_OK) return;
  throw Failure{kExitInput, std::string(what) + ": " + fpt_last_error()};
}

struct Text {
  char* p = nullptr;
  ~Text() { fpt_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

fpt_format format_of(const std::string& f) {
  if (f == "json") return FPT_FORMAT_JSON;
  if (f == "csv") return FPT_FORMAT_CSV;
  return FPT_FORMAT_TEXT;
}

fpt_options options_of(const Config& c) {
  fpt_options o;
  fpt_options_init(&o);
  o.gap_tol = c.gap_tol;
  o.feas_tol = c.feas_tol;
  o.max_iter = c.max_iter;
  o.scale = c.no_scale ? 0 : 1;
  o.reduce = c.no_reduce ? 0 : 1;
  o.reduced_localizers = c.reduced_localizers ? 1 : 0;
  o.fallback = c.no_fallback ? 0 : 1;
  o.seed = c.seed;
  return o;
}

using ModelPtr = std::unique_ptr<fpt_model, decltype(&fpt_model_free)>;

ModelPtr load(const Config& c) {
  fpt_model* raw = nullptr;
  fpt_status s = fpt_model_load(c.model_path.c_str(), &raw);
  check(s, c.model_path.c_str());
  ModelPtr m(raw, &fpt_model_free);
  if (!c.threshold.empty()) check(fpt_model_set_thresholds(m.get(), c.threshold.c_str()), "--threshold");
  if (!c.horizon.empty()) {
    double h = 0;
    if (c.horizon == "inf") {
      h = std::numeric_limits<double>::infinity();
    } else {
      try {
        h = std::stod(c.horizon);
      } catch (const std::exception&) {
        throw Failure{kExitInput, "--horizon: not a number: " + c.horizon};
      }
    }
    check(fpt_model_set_horizon(m.get(), h), "--horizon");
  }
  if (c.order > 0) check(fpt_model_set_order(m.get(), c.order), "--order");
  if (c.objective == "mfpt") check(fpt_model_set_objective(m.get(), FPT_OBJECTIVE_MFPT), "--objective");
  if (c.objective == "hitprob") check(fpt_model_set_objective(m.get(), FPT_OBJECTIVE_HITPROB), "--objective");
  for (const auto& s : c.scale) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Failure{kExitInput, "--scale expects SPECIES=VALUE, got " + s};
    double v = 0;
    try {
      v = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw Failure{kExitInput, "--scale: not a number in " + s};
    }
    check(fpt_model_set_scale_bound(m.get(), s.substr(0, eq).c_str(), v), "--scale");
  }
  if (c.timescale > 0) check(fpt_model_set_time_scale(m.get(), c.timescale), "--timescale");
  return m;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kExitInput, "cannot write " + path};
}

int cmd_check(const Config& c) {
  auto m = load(c);
  fpt_options o = options_of(c);
  Text t;
  int errors = 0;
  check(fpt_check(m.get(), &o, format_of(c.format), &t.p, &errors), "check");
  std::cout << t.str();
  return errors ? kExitInput : kExitOk;
}

int cmd_moments(const Config& c) {
  auto m = load(c);
  Text t;
  check(fpt_moments(m.get(), c.degree, format_of(c.format), &t.p), "moments");
  std::cout << t.str();
  return kExitOk;
}

int export_sides(const Config& c, const fpt_model* m, const std::string& prefix) {
  fpt_options o = options_of(c);
  for (auto [sense, tag] : {std::pair{FPT_MINIMIZE, "min"}, std::pair{FPT_MAXIMIZE, "max"}}) {
    Text t;
    check(fpt_export_sdpa(m, &o, sense, &t.p), "export-sdpa");
    std::string path = prefix + "_" + tag + ".dat-s";
    write_file(path, t.str());
    std::cerr << "wrote " << path << "\n";
  }
  return kExitOk;
}

int cmd_bound(const Config& c) {
  auto m = load(c);
  if (c.solver == "export") return export_sides(c, m.get(), c.out.empty() ? "fptbound" : c.out);
  fpt_options o = options_of(c);
  fpt_bound_result r{};
  Text t;
  check(fpt_bound(m.get(), &o, &r, format_of(c.format), &t.p), "bound");
  std::cout << t.str();
  return r.lower_status == FPT_SOLVE_OPTIMAL && r.upper_status == FPT_SOLVE_OPTIMAL ? kExitOk : kExitPartial;
}

std::vector<double> grid_of(const Config& c) {
  if (!c.horizons.empty()) return c.horizons;
  if (c.grid.empty()) throw Failure{kExitInput, "cdf needs --grid A:B:N or --horizons"};
  double a = 0, b = 0;
  int n = 0;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(c.grid);
  if (!(in >> a >> sep1 >> b >> sep2 >> n) || sep1 != ':' || sep2 != ':' || n < 1 || !(a > 0) || b < a)
    throw Failure{kExitInput, "--grid expects A:B:N with 0 < A <= B and N >= 1"};
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return g;
}

int cmd_cdf(const Config& c) {
  auto m = load(c);
  fpt_options o = options_of(c);
  auto g = grid_of(c);
  Text t;
  int ok = 0;
  check(fpt_cdf(m.get(), &o, g.data(), g.size(), format_of(c.format), &t.p, &ok), "cdf");
  std::cout << t.str();
  return ok ? kExitOk : kExitPartial;
}

int cmd_table(const Config& c) {
  auto m = load(c);
  fpt_options o = options_of(c);
  Text t;
  int ok = 0;
  check(fpt_table(m.get(), &o, c.r_max, format_of(c.format), &t.p, &ok), "table");
  std::cout << t.str();
  return ok ? kExitOk : kExitPartial;
}

int cmd_simulate(const Config& c) {
  auto m = load(c);
  Text t;
  check(fpt_simulate(m.get(), c.n, c.seed, c.confidence, format_of(c.format), &t.p), "simulate");
  std::cout << t.str();
  if (!c.samples_path.empty()) {
    Text csv;
    check(fpt_simulate_samples(m.get(), c.n, c.seed, &csv.p), "simulate");
    write_file(c.samples_path, csv.str());
  }
  return kExitOk;
}

int cmd_export(const Config& c) {
  auto m = load(c);
  if (c.sense == "both") return export_sides(c, m.get(), c.out.empty() ? "fptbound" : c.out);
  fpt_options o = options_of(c);
  Text t;
  check(fpt_export_sdpa(m.get(), &o, c.sense == "max" ? FPT_MAXIMIZE : FPT_MINIMIZE, &t.p), "export-sdpa");
  if (c.out.empty())
    std::cout << t.str();
  else
    write_file(c.out, t.str());
  return kExitOk;
}

void query_flags(CLI::App* sub, Config& c) {
  sub->add_option("model", c.model_path, "Model file")->required();
  sub->add_option("--threshold", c.threshold, "Threshold list, e.g. \"D>=5, M>=3\"");
  sub->add_option("--horizon", c.horizon, "Time horizon (number or inf)");
  sub->add_option("--order", c.order, "Relaxation order r")->check(CLI::PositiveNumber);
  sub->add_option("--objective", c.objective, "mfpt or hitprob")->check(CLI::IsMember({"mfpt", "hitprob"}));
  sub->add_option("--scale", c.scale, "Magnitude bound SPECIES=VALUE for an unbounded species");
  sub->add_option("--timescale", c.timescale, "Time scale for infinite horizons")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  Config c;
  CLI::App app{"Moment-based bounds on first passage times of population CTMCs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_option("--seed", c.seed, "Random seed for simulation and pilot runs");
  app.add_option("--gap-tol", c.gap_tol, "Relative duality gap tolerance")->check(CLI::PositiveNumber);
  app.add_option("--feas-tol", c.feas_tol, "Feasibility tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", c.max_iter, "Interior point iteration limit")->check(CLI::PositiveNumber);
  app.add_flag("--no-scale", c.no_scale, "Disable moment scaling");
  app.add_flag("--no-reduce", c.no_reduce, "Keep species that cannot influence the thresholds");
  app.add_flag("--reduced-localizers", c.reduced_localizers, "Build localizing matrices at order r - 1");
  app.add_flag("--no-fallback", c.no_fallback, "Do not retry failed sides");
  app.add_option("--solver", c.solver, "embedded, or export to write SDPA files")
      ->check(CLI::IsMember({"embedded", "export"}));

  auto* check_cmd = app.add_subcommand("check", "Validate a model and its query");
  query_flags(check_cmd, c);
  auto* moments = app.add_subcommand("moments", "Print moment equations and martingale constraints");
  query_flags(moments, c);
  moments->add_option("--degree", c.degree, "Largest monomial degree of the printed equations")
      ->check(CLI::NonNegativeNumber);
  auto* bound = app.add_subcommand("bound", "Lower and upper bound on the query objective");
  query_flags(bound, c);
  bound->add_option("--out", c.out, "File prefix for --solver export");
  auto* cdf = app.add_subcommand("cdf", "Hit probability bounds over a horizon grid");
  query_flags(cdf, c);
  cdf->add_option("--grid", c.grid, "Uniform grid A:B:N");
  cdf->add_option("--horizons", c.horizons, "Explicit horizons");
  auto* table = app.add_subcommand("table", "Bounds for orders 1..r-max");
  query_flags(table, c);
  table->add_option("--r-max", c.r_max, "Largest order")->check(CLI::PositiveNumber);
  auto* simulate = app.add_subcommand("simulate", "Stochastic simulation estimate");
  query_flags(simulate, c);
  simulate->add_option("--n", c.n, "Number of trajectories")->check(CLI::Range(2, 100000000));
  simulate->add_option("--confidence", c.confidence, "Confidence level")->check(CLI::Range(0.5, 0.999999));
  simulate->add_option("--samples", c.samples_path, "Write per-trajectory CSV here");
  auto* exp = app.add_subcommand("export-sdpa", "Write the relaxation in SDPA sparse format");
  query_flags(exp, c);
  exp->add_option("--sense", c.sense, "min, max or both")->check(CLI::IsMember({"min", "max", "both"}));
  exp->add_option("-o,--out", c.out, "Output file (prefix for both)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (check_cmd->parsed()) return cmd_check(c);
    if (moments->parsed()) return cmd_moments(c);
    if (bound->parsed()) return cmd_bound(c);
    if (cdf->parsed()) return cmd_cdf(c);
    if (table->parsed()) return cmd_table(c);
    if (simulate->parsed()) return cmd_simulate(c);
    if (exp->parsed()) return cmd_export(c);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return kExitInput;
}
