#include "fptbound/constraints.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fpt {

int MomentVar::degree() const { return k + std::accumulate(m.begin(), m.end(), 0); }

MultiIndex MomentVar::exponent() const {
  std::vector<int> e;
  if (measure.has_time()) e.push_back(k);
  e.insert(e.end(), m.begin(), m.end());
  return MultiIndex(std::move(e));
}

MomentVar MomentVar::from_exponent(const MeasureId& measure, const MultiIndex& e) {
  MomentVar v;
  v.measure = measure;
  const auto& ex = e.exponents();
  if (measure.has_time()) {
    v.k = ex.at(0);
    v.m.assign(ex.begin() + 1, ex.end());
  } else {
    v.m = ex;
  }
  return v;
}

std::strong_ordering MomentVar::operator<=>(const MomentVar& other) const {
  if (auto c = measure.mode <=> other.measure.mode; c != 0) return c;
  if (auto c = measure.kind <=> other.measure.kind; c != 0) return c;
  if (auto c = measure.face <=> other.measure.face; c != 0) return c;
  return exponent() <=> other.exponent();
}

DerivationContext::DerivationContext(const Pctmc& mdl, const FptQuery& q) : model(&mdl), query(&q) {
  population = mdl.population_indices();
  modes = mdl.mode_indices();
  reachable = reachable_modes(mdl);
  auto init = mdl.initial_state();
  for (auto i : population) x0.push_back(init[i]);
  for (auto i : modes) mode0.push_back(init[i]);
  for (const auto& th : q.thresholds) {
    auto it = std::find(population.begin(), population.end(), th.species);
    if (it == population.end()) throw std::invalid_argument("threshold on a mode species");
    faces.emplace_back(static_cast<int>(it - population.begin()), th.level);
  }
}

std::vector<int> DerivationContext::free_species(const MeasureId& measure) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(population.size()); ++i)
    if (!(measure.kind == MeasureKind::HitFace && measure.face == i)) out.push_back(i);
  return out;
}

std::vector<std::string> DerivationContext::variable_names(const MeasureId& measure) const {
  std::vector<std::string> out;
  if (measure.has_time()) out.push_back("t");
  for (int i : free_species(measure)) out.push_back(model->species[population[i]].name);
  return out;
}

std::vector<MeasureId> DerivationContext::measures() const {
  std::vector<MeasureId> out;
  for (const auto& y : reachable) {
    out.push_back({MeasureKind::Occupation, -1, y});
    for (const auto& [slot, level] : faces) out.push_back({MeasureKind::HitFace, slot, y});
    if (query->horizon) out.push_back({MeasureKind::HorizonFace, -1, y});
  }
  std::sort(out.begin(), out.end(), [](const MeasureId& a, const MeasureId& b) {
    return std::tie(a.mode, a.kind, a.face) < std::tie(b.mode, b.kind, b.face);
  });
  return out;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string mode_suffix(const std::vector<int>& mode) {
  if (mode.empty()) return "";
  std::string bits;
  for (int b : mode) bits += std::to_string(b);
  return "@y=" + bits;
}

bool is_zero_vec(const std::vector<int>& v) {
  return std::all_of(v.begin(), v.end(), [](int e) { return e == 0; });
}

Rational int_pow(const Rational& base, int e) {
  Rational out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

class Builder {
 public:
  explicit Builder(const DerivationContext& ctx) : ctx_(ctx) {}

  void add(const MomentVar& v, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(v, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  // Adds coef * (polynomial over population species) weighted by t^k, as
  // occupation moments tagged with `mode`.
  void add_occupation(const Polynomial& p, int k, const std::vector<int>& mode, const Rational& coef) {
    MeasureId occ{MeasureKind::Occupation, -1, mode};
    for (const auto& [e, c] : p.terms()) add(MomentVar{occ, k, e.exponents()}, coef * c);
  }

  void add_exit_terms(const std::vector<int>& m, int k, const std::vector<int>& mode) {
    for (const auto& [slot, level] : ctx_.faces) {
      MomentVar v;
      v.measure = {MeasureKind::HitFace, slot, mode};
      v.k = k;
      for (int i = 0; i < static_cast<int>(m.size()); ++i)
        if (i != slot) v.m.push_back(m[i]);
      add(v, int_pow(Rational(level), m[slot]));
    }
    if (ctx_.query->horizon) {
      MomentVar v;
      v.measure = {MeasureKind::HorizonFace, -1, mode};
      v.m = m;
      add(v, int_pow(rational_from_double(*ctx_.query->horizon), k));
    }
  }

  LinearMomentConstraint finish(const std::vector<int>& m, int k, const std::vector<int>& mode,
                                const Rational& constant) {
    LinearMomentConstraint c;
    for (auto& [v, coef] : terms_) c.terms.emplace_back(v, coef);
    c.constant = constant;
    c.k = k;
    c.m = m;
    c.mode = mode;
    c.label = "k=" + std::to_string(k) + ",m=(" + join_ints(m) + ")" + mode_suffix(mode);
    return c;
  }

  static Rational rational_from_double(double v) { return Rational(v); }

 private:
  const DerivationContext& ctx_;
  std::map<MomentVar, Rational> terms_;
};

Polynomial monomial_poly(const std::vector<int>& m) { return Polynomial::monomial(MultiIndex(m)); }

void check_exponent(const DerivationContext& ctx, const std::vector<int>& m, int k) {
  if (m.size() != ctx.num_population())
    throw std::invalid_argument("monomial exponent must have one entry per population species");
  if (k < 0 || std::any_of(m.begin(), m.end(), [](int e) { return e < 0; }))
    throw std::invalid_argument("negative exponent");
}

Rational initial_constant(const DerivationContext& ctx, const std::vector<int>& m, int k) {
  if (k != 0) return 0;
  Rational v = 1;
  for (std::size_t i = 0; i < m.size(); ++i) v *= int_pow(Rational(ctx.x0[i]), m[i]);
  return -v;
}

LinearMomentConstraint hybrid_impl(const DerivationContext& ctx, const std::vector<int>& m, int k,
                                   const std::vector<int>& y) {
  const Pctmc& model = *ctx.model;
  if (y.size() != ctx.modes.size()) throw std::invalid_argument("mode assignment arity mismatch");
  Builder b(ctx);
  if (k > 0) b.add_occupation(monomial_poly(m), k - 1, y, -k);
  Polynomial xm = monomial_poly(m);
  for (std::size_t j = 0; j < model.reactions.size(); ++j) {
    const Reaction& r = model.reactions[j];
    auto vt = restricted_change(r, ctx.population);
    auto vh = restricted_change(r, ctx.modes);
    std::vector<int> src(y.size());
    bool valid = true;
    for (std::size_t q = 0; q < y.size(); ++q) {
      src[q] = y[q] - vh[q];
      if (src[q] != 0 && src[q] != 1) valid = false;
    }
    if (valid && std::find(ctx.reachable.begin(), ctx.reachable.end(), src) != ctx.reachable.end()) {
      Polynomial gain = xm.shift(vt) * propensity_at_mode(model, j, src);
      b.add_occupation(gain, k, src, -1);
    }
    Polynomial loss = xm * propensity_at_mode(model, j, y);
    b.add_occupation(loss, k, y, 1);
  }
  b.add_exit_terms(m, k, y);
  Rational constant = y == ctx.mode0 ? initial_constant(ctx, m, k) : Rational(0);
  return b.finish(m, k, y, constant);
}

}  // namespace

std::string moment_name(const DerivationContext& ctx, const MomentVar& v) {
  std::string out;
  switch (v.measure.kind) {
    case MeasureKind::Occupation:
      out = "z[" + std::to_string(v.k) + (v.m.empty() ? "" : "," + join_ints(v.m)) + "]";
      break;
    case MeasureKind::HitFace: {
      const auto& name = ctx.model->species[ctx.population[static_cast<std::size_t>(v.measure.face)]].name;
      out = "y1[" + name + "][" + std::to_string(v.k) + (v.m.empty() ? "" : "," + join_ints(v.m)) + "]";
      break;
    }
    case MeasureKind::HorizonFace:
      out = "y2[" + join_ints(v.m) + "]";
      break;
  }
  return out + mode_suffix(v.measure.mode);
}

std::string constraint_to_string(const DerivationContext& ctx, const LinearMomentConstraint& c) {
  std::string out = "0 =";
  bool first = true;
  for (const auto& [v, coef] : c.terms) {
    bool neg = coef < 0;
    Rational mag = neg ? Rational(-coef) : coef;
    out += first ? (neg ? " -" : " ") : (neg ? " - " : " + ");
    first = false;
    if (mag != 1) out += format_rational(mag) + "*";
    out += moment_name(ctx, v);
  }
  if (c.constant != 0) {
    bool neg = c.constant < 0;
    out += neg ? " - " : " + ";
    out += format_rational(neg ? Rational(-c.constant) : c.constant);
  }
  return out;
}

Polynomial generator_polynomial(const Pctmc& model, const std::vector<int>& m) {
  auto pop = model.population_indices();
  if (m.size() != pop.size()) throw std::invalid_argument("monomial exponent must have one entry per population species");
  Polynomial xm = monomial_poly(m);
  Polynomial out(pop.size());
  std::vector<int> no_mode(model.mode_indices().size(), 0);
  for (std::size_t j = 0; j < model.reactions.size(); ++j) {
    Polynomial alpha = propensity_polynomial(model, j);
    if (model.has_modes()) {
      for (const auto& [e, c] : alpha.terms())
        for (auto q : model.mode_indices())
          if (e[q] > 0) throw std::invalid_argument("propensity depends on a mode species; use hybrid constraints");
      alpha = propensity_at_mode(model, j, no_mode);
    }
    auto v = restricted_change(model.reactions[j], pop);
    out += (xm.shift(v) - xm) * alpha;
  }
  return out;
}

LinearMomentConstraint martingale_constraint(const Pctmc& model, const FptQuery& query, const std::vector<int>& m,
                                             int k) {
  if (model.has_modes()) throw std::invalid_argument("model has mode species; use hybrid constraints");
  DerivationContext ctx(model, query);
  check_exponent(ctx, m, k);
  if (k == 0 && is_zero_vec(m)) throw std::invalid_argument("(m, k) = (0, 0) gives the trivial identity 0 = 0");
  Builder b(ctx);
  if (k > 0) b.add_occupation(monomial_poly(m), k - 1, {}, -k);
  b.add_occupation(generator_polynomial(model, m), k, {}, -1);
  b.add_exit_terms(m, k, {});
  return b.finish(m, k, {}, initial_constant(ctx, m, k));
}

LinearMomentConstraint hybrid_constraint(const Pctmc& model, const FptQuery& query, const std::vector<int>& m, int k,
                                         const std::vector<int>& y) {
  if (!model.has_modes()) throw std::invalid_argument("model has no mode species");
  DerivationContext ctx(model, query);
  check_exponent(ctx, m, k);
  if (k == 0 && is_zero_vec(m))
    throw std::invalid_argument("(m, k) = (0, 0) is generated by mode_balance_constraint");
  return hybrid_impl(ctx, m, k, y);
}

LinearMomentConstraint mode_balance_constraint(const Pctmc& model, const FptQuery& query, const std::vector<int>& y) {
  if (!model.has_modes()) throw std::invalid_argument("model has no mode species");
  DerivationContext ctx(model, query);
  return hybrid_impl(ctx, std::vector<int>(ctx.num_population(), 0), 0, y);
}

LinearMomentConstraint normalization_constraint(const Pctmc& model, const FptQuery& query) {
  DerivationContext ctx(model, query);
  LinearMomentConstraint c;
  for (const auto& meas : ctx.measures()) {
    if (meas.kind == MeasureKind::Occupation) continue;
    MomentVar v;
    v.measure = meas;
    v.m.assign(ctx.free_species(meas).size(), 0);
    c.terms.emplace_back(v, Rational(1));
  }
  std::sort(c.terms.begin(), c.terms.end());
  c.constant = -1;
  c.m.assign(ctx.num_population(), 0);
  c.label = "normalization";
  return c;
}

int propensity_degree_excess(const Pctmc& model) {
  int d = 0;
  for (std::size_t j = 0; j < model.reactions.size(); ++j) d = std::max(d, propensity_polynomial(model, j).degree());
  return std::max(0, d - 1);
}

std::vector<LinearMomentConstraint> constraint_set(const Pctmc& model, const FptQuery& query) {
  DerivationContext ctx(model, query);
  int cap = 2 * query.order - propensity_degree_excess(model);
  if (cap < 1)
    throw std::invalid_argument("relaxation order " + std::to_string(query.order) +
                                " is too small for the propensity degree of this model");
  std::vector<LinearMomentConstraint> out;
  std::size_t n = ctx.num_population();
  for (const auto& y : ctx.reachable) {
    if (ctx.hybrid()) out.push_back(hybrid_impl(ctx, std::vector<int>(n, 0), 0, y));
    for (const auto& e : monomials_up_to(n + 1, cap)) {
      if (e.degree() == 0) continue;
      int k = e[0];
      std::vector<int> m(e.exponents().begin() + 1, e.exponents().end());
      auto c = ctx.hybrid() ? hybrid_impl(ctx, m, k, y) : martingale_constraint(model, query, m, k);
      if (!c.terms.empty()) out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace fpt
