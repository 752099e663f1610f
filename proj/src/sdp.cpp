#include "fptbound/sdp.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fpt {

MomentBasis make_basis(std::vector<std::string> variables, int order) {
  MomentBasis b;
  b.monomials = monomials_up_to(variables.size(), order);
  b.variables = std::move(variables);
  return b;
}

MatrixSpec moment_matrix(const MeasureId& measure, const MomentBasis& basis, const std::optional<Polynomial>& localizer,
                         std::string label) {
  MatrixSpec spec;
  spec.measure = measure;
  spec.basis = basis;
  spec.localizer = localizer;
  spec.label = std::move(label);
  std::size_t n = basis.monomials.size();
  std::size_t nv = basis.variables.size();
  Polynomial u = localizer ? *localizer : Polynomial::constant(nv, 1);
  if (u.num_vars() != nv) throw std::invalid_argument("localizer arity does not match the basis");
  spec.entries.assign(n * n, {});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      AffineExpr expr;
      MultiIndex ab = basis.monomials[a] + basis.monomials[b];
      for (const auto& [g, c] : u.terms())
        expr.emplace_back(MomentVar::from_exponent(measure, g + ab), c.get_d());
      std::sort(expr.begin(), expr.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      spec.entries[a * n + b] = expr;
      spec.entries[b * n + a] = std::move(expr);
    }
  }
  return spec;
}

namespace {

std::string measure_label(const DerivationContext& ctx, const MeasureId& m) {
  std::string out;
  switch (m.kind) {
    case MeasureKind::Occupation:
      out = "z";
      break;
    case MeasureKind::HitFace:
      out = "y1[" + ctx.model->species[ctx.population[static_cast<std::size_t>(m.face)]].name + "]";
      break;
    case MeasureKind::HorizonFace:
      out = "y2";
      break;
  }
  if (!m.mode.empty()) {
    out += "@y=";
    for (int b : m.mode) out += std::to_string(b);
  }
  return out;
}

int threshold_level(const DerivationContext& ctx, int slot) {
  for (const auto& [s, level] : ctx.faces)
    if (s == slot) return level;
  return -1;
}

}  // namespace

std::vector<MatrixSpec> build_blocks(const Pctmc& model, const FptQuery& query, const SdpOptions& options) {
  DerivationContext ctx(model, query);
  int r = query.order;
  std::vector<MatrixSpec> out;
  Rational T = query.horizon ? Rational(*query.horizon) : Rational(0);
  for (const auto& meas : ctx.measures()) {
    auto names = ctx.variable_names(meas);
    std::size_t nv = names.size();
    std::string ml = measure_label(ctx, meas);
    out.push_back(moment_matrix(meas, make_basis(names, r), std::nullopt,
                                "M_" + std::to_string(r) + "(" + ml + ")"));
    int lr = options.localizer_order == LocalizerOrder::Full ? r : r - 1;
    if (lr < 0) continue;
    auto basis = make_basis(names, lr);
    std::size_t pos = 0;
    if (meas.has_time()) {
      Polynomial t = Polynomial::variable(nv, 0);
      Polynomial u = query.horizon ? t.scaled(T) - t * t : t;
      out.push_back(moment_matrix(meas, basis, u,
                                  "M_" + std::to_string(lr) + "(u_t, " + ml + ")"));
      pos = 1;
    }
    for (int slot : ctx.free_species(meas)) {
      Polynomial x = Polynomial::variable(nv, pos);
      int level = threshold_level(ctx, slot);
      // integer counts stay strictly below their threshold until they hit it
      if (level > 0 && options.integer_support && meas.kind != MeasureKind::HitFace) level -= 1;
      Polynomial u = level > 0 ? x.scaled(level) - x * x : x;
      out.push_back(moment_matrix(meas, basis, u,
                                  "M_" + std::to_string(lr) + "(u_" + names[pos] + ", " + ml + ")"));
      ++pos;
    }
  }
  return out;
}

double ScalingVector::factor(const MomentVar& v) const {
  auto it = factors.find(v);
  if (it != factors.end()) return it->second;
  throw std::out_of_range("no scale factor for moment variable");
}

double ScalingVector::basis_scale(const DerivationContext& ctx, const MeasureId& measure, const MultiIndex& e) const {
  if (species_scale.empty()) return 1.0;
  double s = 1.0;
  std::size_t pos = 0;
  if (measure.has_time()) s *= std::pow(time_scale, e[pos++]);
  for (int slot : ctx.free_species(measure)) s *= std::pow(species_scale[static_cast<std::size_t>(slot)], e[pos++]);
  return s;
}

ScalingVector scaling_vector(const Pctmc& model, const FptQuery& query, const std::vector<MomentVar>& vars,
                             const SdpOptions& options, bool enabled) {
  ScalingVector sv;
  if (!enabled) {
    for (const auto& v : vars) sv.factors[v] = 1.0;
    return sv;
  }
  DerivationContext ctx(model, query);
  if (query.horizon)
    sv.time_scale = *query.horizon;
  else if (query.time_scale_hint)
    sv.time_scale = *query.time_scale_hint;
  else
    throw std::invalid_argument("scaling an infinite-horizon query needs a time scale hint");
  sv.species_scale.assign(ctx.num_population(), 1.0);
  for (int slot = 0; slot < static_cast<int>(ctx.num_population()); ++slot) {
    int level = threshold_level(ctx, slot);
    if (level > 0) {
      sv.species_scale[static_cast<std::size_t>(slot)] = level;
      continue;
    }
    auto it = options.species_bounds.find(slot);
    if (it == options.species_bounds.end() || !(it->second > 0))
      throw std::invalid_argument("missing scale bound for species " +
                                  model.species[ctx.population[static_cast<std::size_t>(slot)]].name);
    sv.species_scale[static_cast<std::size_t>(slot)] = it->second;
  }
  for (const auto& v : vars) {
    double d = sv.basis_scale(ctx, v.measure, v.exponent());
    if (v.measure.kind == MeasureKind::Occupation) d *= sv.time_scale;
    sv.factors[v] = d;
  }
  return sv;
}

// Box bound from thresholds, or from the species scale bounds for unbounded species.
static std::optional<double> moment_upper_bound(const DerivationContext& ctx, const FptQuery& query,
                                                const SdpOptions& options, const MomentVar& v) {
  double bound = 1.0;
  auto free = ctx.free_species(v.measure);
  for (std::size_t q = 0; q < v.m.size(); ++q) {
    if (v.m[q] == 0) continue;
    int slot = v.measure.kind == MeasureKind::HitFace ? free[q] : static_cast<int>(q);
    double level = threshold_level(ctx, slot);
    if (level <= 0) {
      auto it = options.species_bounds.find(slot);
      if (it == options.species_bounds.end() || !(it->second > 0)) return std::nullopt;
      level = it->second * options.box_slack;
    }
    bound *= std::pow(level, v.m[q]);
  }
  if (v.measure.kind == MeasureKind::Occupation) {
    if (!query.horizon) return std::nullopt;
    bound *= std::pow(*query.horizon, v.k + 1) / (v.k + 1);
  } else if (v.measure.kind == MeasureKind::HitFace && v.k > 0) {
    if (!query.horizon) return std::nullopt;
    bound *= std::pow(*query.horizon, v.k);
  }
  return bound;
}

SdpProblem assemble(const Pctmc& model, const FptQuery& query, Sense sense, const SdpOptions& options) {
  DerivationContext ctx(model, query);
  SdpProblem p;
  p.sense = sense;
  p.scaled = options.scale;
  for (auto i : ctx.population) p.population_names.push_back(model.species[i].name);
  for (auto i : ctx.modes) p.mode_names.push_back(model.species[i].name);
  p.equalities = constraint_set(model, query);
  p.equalities.push_back(normalization_constraint(model, query));
  p.blocks = build_blocks(model, query, options);
  std::set<MomentVar> in_blocks;
  for (const auto& b : p.blocks)
    for (const auto& e : b.entries)
      for (const auto& [v, c] : e) in_blocks.insert(v);
  for (const auto& y : ctx.reachable) {
    if (query.objective == Objective::Mfpt) {
      MomentVar v;
      v.measure = {MeasureKind::Occupation, -1, y};
      v.m.assign(ctx.num_population(), 0);
      p.objective.emplace_back(v, 1.0);
    } else {
      for (const auto& [slot, level] : ctx.faces) {
        MomentVar v;
        v.measure = {MeasureKind::HitFace, slot, y};
        v.m.assign(ctx.num_population() - 1, 0);
        p.objective.emplace_back(v, 1.0);
      }
    }
  }
  for (const auto& c : p.equalities)
    for (const auto& [v, coef] : c.terms)
      if (!in_blocks.count(v)) throw std::logic_error("moment " + moment_name(ctx, v) + " is not in any PSD block");
  for (const auto& [v, c] : p.objective)
    if (!in_blocks.count(v)) throw std::logic_error("objective moment is not in any PSD block");
  p.vars.assign(in_blocks.begin(), in_blocks.end());
  for (std::size_t i = 0; i < p.vars.size(); ++i) p.var_index[p.vars[i]] = i;
  std::set<MomentVar> in_moment_matrix;
  for (const auto& b : p.blocks)
    if (!b.localizer)
      for (const auto& e : b.entries)
        for (const auto& [v, c] : e) in_moment_matrix.insert(v);
  for (const auto& v : p.vars)
    if (!in_moment_matrix.count(v)) p.bounds.push_back({v, moment_upper_bound(ctx, query, options, v)});
  p.scaling = scaling_vector(model, query, p.vars, options, options.scale);
  return p;
}

std::string sdp_problem_to_json(const SdpProblem& problem) {
  using nlohmann::json;
  json j;
  j["sense"] = problem.sense == Sense::Minimize ? "minimize" : "maximize";
  j["scaled"] = problem.scaled;
  j["population_species"] = problem.population_names;
  j["mode_species"] = problem.mode_names;
  auto var_name = [&](const MomentVar& v) {
    std::string out;
    switch (v.measure.kind) {
      case MeasureKind::Occupation:
        out = "z";
        break;
      case MeasureKind::HitFace:
        out = "y1[" + problem.population_names[static_cast<std::size_t>(v.measure.face)] + "]";
        break;
      case MeasureKind::HorizonFace:
        out = "y2";
        break;
    }
    out += "[";
    auto e = v.exponent().exponents();
    for (std::size_t i = 0; i < e.size(); ++i) out += (i ? "," : "") + std::to_string(e[i]);
    out += "]";
    if (!v.measure.mode.empty()) {
      out += "@y=";
      for (int b : v.measure.mode) out += std::to_string(b);
    }
    return out;
  };
  json vars = json::array();
  for (const auto& v : problem.vars)
    vars.push_back({{"name", var_name(v)}, {"scale", problem.scaling.factor(v)}});
  j["variables"] = vars;
  json blocks = json::array();
  for (const auto& b : problem.blocks) {
    json entries = json::array();
    for (std::size_t r = 0; r < b.size(); ++r)
      for (std::size_t c = r; c < b.size(); ++c) {
        json terms = json::array();
        for (const auto& [v, coef] : b.entry(r, c)) terms.push_back({problem.var_index.at(v), coef});
        entries.push_back({{"row", r}, {"col", c}, {"terms", terms}});
      }
    blocks.push_back({{"label", b.label}, {"size", b.size()}, {"entries", entries}});
  }
  j["blocks"] = blocks;
  json bounds = json::array();
  for (const auto& vb : problem.bounds) {
    json e = {{"var", problem.var_index.at(vb.var)}, {"lower", 0.0}};
    e["upper"] = vb.upper ? json(*vb.upper) : json(nullptr);
    bounds.push_back(e);
  }
  j["bounds"] = bounds;
  json eqs = json::array();
  for (const auto& e : problem.equalities) {
    json terms = json::array();
    for (const auto& [v, coef] : e.terms) terms.push_back({problem.var_index.at(v), coef.get_d()});
    eqs.push_back({{"label", e.label}, {"terms", terms}, {"constant", e.constant.get_d()}});
  }
  j["equalities"] = eqs;
  json obj = json::array();
  for (const auto& [v, coef] : problem.objective) obj.push_back({problem.var_index.at(v), coef});
  j["objective"] = obj;
  return j.dump();
}

}  // namespace fpt
