#include "fptbound/model.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace fpt {

std::vector<int> Reaction::change() const {
  std::vector<int> v(consume.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = produce[i] - consume[i];
  return v;
}

bool Reaction::operator==(const Reaction& other) const {
  return consume == other.consume && produce == other.produce && rate_exact == other.rate_exact &&
         rate_name == other.rate_name && custom_propensity == other.custom_propensity;
}

std::optional<std::size_t> Pctmc::species_index(std::string_view n) const {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i].name == n) return i;
  return std::nullopt;
}

std::vector<int> Pctmc::initial_state() const {
  std::vector<int> x(species.size());
  for (std::size_t i = 0; i < species.size(); ++i) x[i] = species[i].initial_count;
  return x;
}

std::vector<std::size_t> Pctmc::population_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i].kind == SpeciesKind::Population) out.push_back(i);
  return out;
}

std::vector<std::size_t> Pctmc::mode_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i].kind == SpeciesKind::Mode) out.push_back(i);
  return out;
}

std::vector<std::string> Pctmc::species_names() const {
  std::vector<std::string> out;
  for (const auto& s : species) out.push_back(s.name);
  return out;
}

bool Pctmc::operator==(const Pctmc& other) const {
  return name == other.name && species == other.species && reactions == other.reactions &&
         rates == other.rates;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_term(const Pctmc& model, const std::vector<int>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (counts[i] != 1) out += std::to_string(counts[i]) + " ";
    out += model.species[i].name;
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string serialize_model(const Pctmc& model) {
  std::ostringstream os;
  os << "model " << model.name << "\n";
  std::vector<std::string> pop, mode;
  for (const auto& s : model.species) (s.kind == SpeciesKind::Mode ? mode : pop).push_back(s.name);
  auto line = [&](const char* head, const std::vector<std::string>& names) {
    if (names.empty()) return;
    os << head;
    for (const auto& n : names) os << " " << n;
    os << "\n";
  };
  // Declaration order must survive the round trip, so emit one statement per
  // run of equal kinds.
  std::size_t i = 0;
  while (i < model.species.size()) {
    SpeciesKind kind = model.species[i].kind;
    std::vector<std::string> run;
    while (i < model.species.size() && model.species[i].kind == kind) run.push_back(model.species[i++].name);
    line(kind == SpeciesKind::Mode ? "mode species" : "species", run);
  }
  os << "init";
  for (const auto& s : model.species) os << " " << s.name << "=" << s.initial_count;
  os << "\n";
  for (const auto& [n, v] : model.rates) os << "rate " << n << "=" << format_rational(v) << "\n";
  for (const auto& r : model.reactions) {
    os << "reaction " << format_term(model, r.consume) << " -> " << format_term(model, r.produce) << " @ ";
    if (r.custom_propensity)
      os << "poly(" << r.custom_text << ")";
    else if (!r.rate_name.empty())
      os << r.rate_name;
    else
      os << format_rational(r.rate_exact);
    os << "\n";
  }
  return os.str();
}

std::string serialize_query(const Pctmc& model, const FptQuery& query) {
  std::ostringstream os;
  os << "query {\n  threshold ";
  for (std::size_t i = 0; i < query.thresholds.size(); ++i) {
    if (i) os << ", ";
    os << model.species[query.thresholds[i].species].name << " >= " << query.thresholds[i].level;
  }
  os << ";\n  horizon " << (query.horizon ? format_double(*query.horizon) : std::string("inf")) << ";\n";
  os << "  objective " << (query.objective == Objective::Mfpt ? "mfpt" : "hitprob") << ";\n";
  os << "  order " << query.order << ";\n";
  if (query.time_scale_hint) os << "  timescale " << format_double(*query.time_scale_hint) << ";\n";
  for (const auto& [s, v] : query.scale_bounds)
    os << "  scale " << model.species[s].name << " " << format_double(v) << ";\n";
  os << "}\n";
  return os.str();
}

Polynomial propensity_polynomial(const Pctmc& model, std::size_t j) {
  const Reaction& r = model.reactions.at(j);
  std::size_t n = model.num_species();
  if (r.custom_propensity) return *r.custom_propensity;
  Polynomial p = Polynomial::constant(n, r.rate_exact);
  for (std::size_t i = 0; i < n; ++i)
    if (r.consume[i] > 0) p *= binomial_polynomial(n, i, r.consume[i]);
  return p;
}

Polynomial propensity_at_mode(const Pctmc& model, std::size_t j, const std::vector<int>& mode) {
  Polynomial p = propensity_polynomial(model, j);
  auto modes = model.mode_indices();
  if (mode.size() != modes.size()) throw std::invalid_argument("mode assignment arity mismatch");
  for (std::size_t q = modes.size(); q-- > 0;) p = p.substitute(modes[q], mode[q]);
  return p;
}

std::vector<int> restricted_change(const Reaction& r, const std::vector<std::size_t>& indices) {
  std::vector<int> v;
  v.reserve(indices.size());
  for (auto i : indices) v.push_back(r.produce[i] - r.consume[i]);
  return v;
}

namespace {

struct ModeExplore {
  std::vector<std::vector<int>> modes;
  std::vector<std::string> escapes;
};

ModeExplore explore_modes(const Pctmc& model) {
  ModeExplore out;
  auto mi = model.mode_indices();
  std::vector<int> start;
  auto x0 = model.initial_state();
  for (auto i : mi) start.push_back(x0[i]);
  std::set<std::vector<int>> seen{start};
  std::vector<std::vector<int>> frontier{start};
  while (!frontier.empty()) {
    auto y = frontier.back();
    frontier.pop_back();
    for (std::size_t j = 0; j < model.reactions.size(); ++j) {
      auto vh = restricted_change(model.reactions[j], mi);
      if (std::all_of(vh.begin(), vh.end(), [](int v) { return v == 0; })) continue;
      if (propensity_at_mode(model, j, y).is_zero()) continue;
      std::vector<int> next(y.size());
      bool ok = true;
      for (std::size_t q = 0; q < y.size(); ++q) {
        next[q] = y[q] + vh[q];
        if (next[q] != 0 && next[q] != 1) ok = false;
      }
      if (!ok) {
        std::string bits;
        for (int b : y) bits += std::to_string(b);
        out.escapes.push_back("reaction " + std::to_string(j + 1) + " moves mode assignment " + bits +
                              " outside {0,1}");
        continue;
      }
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  out.modes.assign(seen.begin(), seen.end());
  return out;
}

}  // namespace

std::vector<std::vector<int>> reachable_modes(const Pctmc& model) { return explore_modes(model).modes; }

std::vector<Diagnostic> validate(const Pctmc& model, const FptQuery& query, const ValidateOptions& options) {
  std::vector<Diagnostic> out;
  std::set<std::size_t> thresholded;
  for (const auto& th : query.thresholds) {
    thresholded.insert(th.species);
    const auto& sp = model.species.at(th.species);
    if (sp.kind != SpeciesKind::Population)
      out.push_back({Severity::Error, "threshold species " + sp.name + " is a mode species"});
    if (th.level <= sp.initial_count)
      out.push_back({Severity::Error, "threshold " + sp.name + " >= " + std::to_string(th.level) +
                                          " is already met by the initial state"});
    for (std::size_t j = 0; j < model.reactions.size(); ++j) {
      int dv = model.reactions[j].change()[th.species];
      if (dv > 1)
        out.push_back({Severity::Error, "reaction " + std::to_string(j + 1) + " increases threshold species " +
                                            sp.name + " by " + std::to_string(dv) +
                                            " and can overshoot the threshold"});
    }
  }
  if (query.thresholds.empty()) out.push_back({Severity::Error, "query has no threshold"});
  if (query.order < 1) out.push_back({Severity::Error, "relaxation order must be at least 1"});
  if (query.horizon && !(*query.horizon > 0))
    out.push_back({Severity::Error, "horizon must be positive"});
  for (const auto& e : explore_modes(model).escapes) out.push_back({Severity::Error, e});
  if (!query.horizon && !query.time_scale_hint && options.scaling)
    out.push_back({Severity::Error, "infinite horizon requires a time scale hint when scaling is enabled"});
  for (std::size_t i : model.population_indices()) {
    if (thresholded.count(i) || query.scale_bounds.count(i)) continue;
    bool grows = std::any_of(model.reactions.begin(), model.reactions.end(),
                             [&](const Reaction& r) { return r.change()[i] > 0; });
    if (grows)
      out.push_back({Severity::Warning, "species " + model.species[i].name +
                                            " is unbounded; its scale bound defaults to a simulation pilot"});
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

Reduction reduce(const Pctmc& model, const FptQuery& query) {
  std::size_t n = model.num_species();
  std::vector<bool> keep(n, false);
  for (const auto& th : query.thresholds) keep[th.species] = true;
  std::vector<Polynomial> props;
  for (std::size_t j = 0; j < model.reactions.size(); ++j) props.push_back(propensity_polynomial(model, j));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < model.reactions.size(); ++j) {
      auto v = model.reactions[j].change();
      bool relevant = false;
      for (std::size_t i = 0; i < n; ++i)
        if (keep[i] && v[i] != 0) relevant = true;
      if (!relevant) continue;
      for (const auto& [m, c] : props[j].terms())
        for (std::size_t i = 0; i < n; ++i)
          if (m[i] > 0 && !keep[i]) {
            keep[i] = true;
            changed = true;
          }
    }
  }
  Reduction red;
  std::vector<std::size_t> new_index(n, n);
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) {
      new_index[i] = red.kept.size();
      red.kept.push_back(i);
    }
  red.model.name = model.name;
  red.model.rates = model.rates;
  for (auto i : red.kept) red.model.species.push_back(model.species[i]);
  for (std::size_t j = 0; j < model.reactions.size(); ++j) {
    const auto& r = model.reactions[j];
    auto v = r.change();
    bool relevant = false;
    for (auto i : red.kept)
      if (v[i] != 0) relevant = true;
    if (!relevant) continue;
    Reaction nr = r;
    nr.consume.clear();
    nr.produce.clear();
    for (auto i : red.kept) {
      nr.consume.push_back(r.consume[i]);
      nr.produce.push_back(r.produce[i]);
    }
    if (r.custom_propensity) {
      Polynomial p(red.kept.size());
      for (const auto& [m, c] : r.custom_propensity->terms()) {
        MultiIndex e(red.kept.size());
        for (std::size_t i = 0; i < n; ++i)
          if (m[i] > 0) e[new_index[i]] = m[i];
        p.add_term(e, c);
      }
      nr.custom_propensity = p;
    }
    red.model.reactions.push_back(std::move(nr));
  }
  red.query = query;
  for (auto& th : red.query.thresholds) th.species = new_index[th.species];
  red.query.scale_bounds.clear();
  for (const auto& [s, v] : query.scale_bounds)
    if (keep[s]) red.query.scale_bounds[new_index[s]] = v;
  return red;
}

}  // namespace fpt
