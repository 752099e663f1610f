#include "fptbound/model.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace fpt {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { Ident, Number, Symbol, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '\n') {
      out.push_back({Tok::Newline, "\n", line, col, i});
      advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), line, col, i});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                        std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), line, col, i});
      advance(j - i);
      continue;
    }
    if ((c == '-' && i + 1 < src.size() && src[i + 1] == '>') ||
        (c == '>' && i + 1 < src.size() && src[i + 1] == '=')) {
      out.push_back({Tok::Symbol, std::string(src.substr(i, 2)), line, col, i});
      advance(2);
      continue;
    }
    static const std::string singles = "@+=,;{}()*^-/~";
    if (singles.find(c) != std::string::npos) {
      out.push_back({Tok::Symbol, std::string(1, c), line, col, i});
      advance(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }
  out.push_back({Tok::End, "", line, col, src.size()});
  return out;
}

class Parser {
 public:
  Parser(std::string_view src, const Pctmc* fixed_model) : src_(src), toks_(tokenize(src)) {
    if (fixed_model) {
      file_.model = *fixed_model;
      model_fixed_ = true;
    }
  }

 private:
  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ModelFile file_;
  bool model_fixed_ = false;
  std::set<std::string> init_seen_;

  struct PendingReaction {
    std::vector<std::pair<std::string, int>> lhs, rhs;
    Token at;
    Reaction reaction;
    std::vector<Token> poly_tokens;
  };
  std::vector<PendingReaction> pending_;

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg, const Token& t) const { throw ParseError(msg, t.line, t.column); }

  bool is_symbol(const Token& t, std::string_view s) const { return t.kind == Tok::Symbol && t.text == s; }
  void expect_symbol(std::string_view s) {
    const Token& t = peek();
    if (!is_symbol(t, s)) fail("expected '" + std::string(s) + "'", t);
    next();
  }
  void skip_separators() {
    while (peek().kind == Tok::Newline || is_symbol(peek(), ";")) next();
  }
  void skip_newlines() {
    while (peek().kind == Tok::Newline) next();
  }
  bool at_statement_end() const {
    const Token& t = peek();
    return t.kind == Tok::Newline || t.kind == Tok::End || is_symbol(t, ";");
  }
  void end_statement() {
    if (!at_statement_end()) fail("unexpected '" + peek().text + "'", peek());
  }

  std::string expect_ident(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(std::string("expected ") + what, t);
    return next().text;
  }

  long long parse_int(const Token& t, const char* what) const {
    if (t.kind != Tok::Number || t.text.find_first_not_of("0123456789") != std::string::npos)
      fail(std::string("expected a nonnegative integer ") + what, t);
    try {
      return std::stoll(t.text);
    } catch (const std::exception&) {
      fail("integer out of range", t);
    }
  }

  Rational parse_decimal(bool allow_sign) {
    bool neg = false;
    if (allow_sign && is_symbol(peek(), "-")) {
      neg = true;
      next();
    }
    const Token& t = peek();
    if (t.kind != Tok::Number) fail("expected a decimal number", t);
    next();
    Rational q;
    try {
      q = rational_from_decimal(t.text);
    } catch (const std::invalid_argument& e) {
      fail(e.what(), t);
    }
    return neg ? Rational(-q) : q;
  }

  void declare_species(SpeciesKind kind) {
    if (at_statement_end()) fail("expected species names", peek());
    while (!at_statement_end()) {
      const Token& t = peek();
      std::string name = expect_ident("a species name");
      if (name == "mode" || name == "species") fail("reserved word used as species name", t);
      if (file_.model.species_index(name)) fail("duplicate species '" + name + "'", t);
      for (const auto& [rn, rv] : file_.model.rates)
        if (rn == name) fail("species '" + name + "' clashes with a rate name", t);
      file_.model.species.push_back({name, kind, 0});
    }
  }

  void parse_statement() {
    const Token& kw = next();
    if (kw.text == "model") {
      file_.model.name = expect_ident("a model name");
      end_statement();
    } else if (kw.text == "species") {
      declare_species(SpeciesKind::Population);
    } else if (kw.text == "mode") {
      const Token& t = peek();
      if (t.kind != Tok::Ident || t.text != "species") fail("expected 'species' after 'mode'", t);
      next();
      declare_species(SpeciesKind::Mode);
    } else if (kw.text == "init") {
      if (at_statement_end()) fail("expected initial counts", peek());
      while (!at_statement_end()) {
        const Token& nt = peek();
        std::string name = expect_ident("a species name");
        auto idx = file_.model.species_index(name);
        if (!idx) fail("unknown species '" + name + "'", nt);
        if (!init_seen_.insert(name).second) fail("initial count of '" + name + "' given twice", nt);
        if (is_symbol(peek(), "~"))
          fail("distributional initial conditions are not supported; give a fixed count", peek());
        expect_symbol("=");
        const Token& vt = peek();
        if (vt.kind != Tok::Number || vt.text.find_first_not_of("0123456789") != std::string::npos)
          fail("initial count must be a nonnegative integer (the initial state is a point mass)", vt);
        long long v = parse_int(next(), "initial count");
        if (v > std::numeric_limits<int>::max()) fail("initial count out of range", vt);
        auto& sp = file_.model.species[*idx];
        if (sp.kind == SpeciesKind::Mode && v > 1) fail("mode species must start at 0 or 1", vt);
        sp.initial_count = static_cast<int>(v);
      }
    } else if (kw.text == "rate") {
      const Token& nt = peek();
      std::string name = expect_ident("a rate name");
      for (const auto& [rn, rv] : file_.model.rates)
        if (rn == name) fail("duplicate rate '" + name + "'", nt);
      if (file_.model.species_index(name)) fail("rate '" + name + "' clashes with a species name", nt);
      expect_symbol("=");
      const Token& vt = peek();
      Rational v = parse_decimal(true);
      if (v <= 0) fail("rate constant must be positive", vt);
      file_.model.rates.emplace_back(name, v);
      end_statement();
    } else if (kw.text == "reaction") {
      parse_reaction();
    } else {
      fail("unknown statement '" + kw.text + "'", kw);
    }
  }

  std::vector<std::pair<std::string, int>> parse_term_side() {
    std::vector<std::pair<std::string, int>> out;
    if (peek().kind == Tok::Number && peek().text == "0" && peek(1).kind != Tok::Ident) {
      next();
      return out;
    }
    while (true) {
      int coeff = 1;
      if (peek().kind == Tok::Number) {
        const Token& ct = peek();
        long long c = parse_int(next(), "stoichiometric coefficient");
        if (c < 1 || c > 1000) fail("stoichiometric coefficient out of range", ct);
        coeff = static_cast<int>(c);
      }
      const Token& st = peek();
      if (st.kind != Tok::Ident) fail("expected a species name", st);
      out.emplace_back(next().text, coeff);
      if (!is_symbol(peek(), "+")) break;
      next();
    }
    return out;
  }

  void parse_reaction() {
    PendingReaction pr;
    pr.lhs = parse_term_side();
    expect_symbol("->");
    pr.rhs = parse_term_side();
    pr.at = peek();
    expect_symbol("@");
    const Token& rt = peek();
    if (rt.kind == Tok::Ident && rt.text == "poly") {
      next();
      expect_symbol("(");
      std::size_t start = peek().offset;
      int depth = 1;
      while (true) {
        const Token& t = peek();
        if (t.kind == Tok::End || t.kind == Tok::Newline) fail("unterminated poly(...)", t);
        if (is_symbol(t, "(")) ++depth;
        if (is_symbol(t, ")") && --depth == 0) break;
        pr.poly_tokens.push_back(next());
      }
      std::size_t stop = peek().offset;
      next();
      if (pr.poly_tokens.empty()) fail("empty polynomial propensity", rt);
      pr.reaction.custom_text = std::string(src_.substr(start, stop - start));
      while (!pr.reaction.custom_text.empty() && std::isspace(static_cast<unsigned char>(pr.reaction.custom_text.back())))
        pr.reaction.custom_text.pop_back();
    } else if (rt.kind == Tok::Ident) {
      next();
      bool found = false;
      for (const auto& [rn, rv] : file_.model.rates)
        if (rn == rt.text) {
          pr.reaction.rate_exact = rv;
          pr.reaction.rate_name = rn;
          found = true;
        }
      if (!found) fail("unknown rate '" + rt.text + "'", rt);
    } else {
      Rational v = parse_decimal(true);
      if (v <= 0) fail("rate constant must be positive", rt);
      pr.reaction.rate_exact = v;
    }
    end_statement();
    pending_.push_back(std::move(pr));
  }

  // Polynomial expression grammar over species and rate names:
  //   expr := ['-'] term (('+'|'-') term)*
  //   term := factor ('*' factor)*
  //   factor := atom ('^' int)?
  //   atom := number | name | '(' expr ')'
  struct PolyParser {
    const Parser& owner;
    const std::vector<Token>& toks;
    std::size_t i = 0;
    std::size_t n;

    const Token& peek() const { return toks[std::min(i, toks.size() - 1)]; }
    bool done() const { return i >= toks.size(); }
    [[noreturn]] void fail(const std::string& msg) const {
      owner.fail(msg, done() ? toks.back() : peek());
    }

    Polynomial expr() {
      Polynomial acc(n);
      bool neg = false;
      if (!done() && owner.is_symbol(peek(), "-")) {
        neg = true;
        ++i;
      }
      acc = term();
      if (neg) acc = -acc;
      while (!done() && (owner.is_symbol(peek(), "+") || owner.is_symbol(peek(), "-"))) {
        bool minus = peek().text == "-";
        ++i;
        Polynomial t = term();
        acc = minus ? acc - t : acc + t;
      }
      return acc;
    }
    Polynomial term() {
      Polynomial acc = factor();
      while (!done() && owner.is_symbol(peek(), "*")) {
        ++i;
        acc *= factor();
      }
      return acc;
    }
    Polynomial factor() {
      Polynomial base = atom();
      if (!done() && owner.is_symbol(peek(), "^")) {
        ++i;
        if (done()) fail("expected an exponent");
        long long e = owner.parse_int(peek(), "exponent");
        ++i;
        if (e > 64) fail("exponent too large");
        base = base.pow(static_cast<int>(e));
      }
      return base;
    }
    Polynomial atom() {
      if (done()) fail("unexpected end of polynomial");
      const Token& t = peek();
      if (t.kind == Tok::Number) {
        ++i;
        try {
          return Polynomial::constant(n, rational_from_decimal(t.text));
        } catch (const std::invalid_argument& e) {
          owner.fail(e.what(), t);
        }
      }
      if (t.kind == Tok::Ident) {
        ++i;
        if (auto idx = owner.file_.model.species_index(t.text)) return Polynomial::variable(n, *idx);
        for (const auto& [rn, rv] : owner.file_.model.rates)
          if (rn == t.text) return Polynomial::constant(n, rv);
        owner.fail("unknown name '" + t.text + "' in polynomial", t);
      }
      if (owner.is_symbol(t, "(")) {
        ++i;
        Polynomial p = expr();
        if (done() || !owner.is_symbol(peek(), ")")) fail("expected ')'");
        ++i;
        return p;
      }
      owner.fail("unexpected '" + t.text + "' in polynomial", t);
    }
  };

  void finish_model() {
    auto& m = file_.model;
    if (m.species.empty()) throw ParseError("model declares no species", 1, 1);
    if (pending_.empty()) throw ParseError("model declares no reactions", 1, 1);
    std::size_t n = m.species.size();
    for (auto& pr : pending_) {
      Reaction& r = pr.reaction;
      r.consume.assign(n, 0);
      r.produce.assign(n, 0);
      auto fill = [&](const std::vector<std::pair<std::string, int>>& side, std::vector<int>& into) {
        for (const auto& [name, c] : side) {
          auto idx = m.species_index(name);
          if (!idx) fail("unknown species '" + name + "' in reaction", pr.at);
          into[*idx] += c;
        }
      };
      fill(pr.lhs, r.consume);
      fill(pr.rhs, r.produce);
      for (auto i : m.mode_indices())
        if (r.consume[i] > 1 || r.produce[i] > 1)
          fail("mode species '" + m.species[i].name + "' must appear with coefficient 0 or 1", pr.at);
      if (!pr.poly_tokens.empty()) {
        PolyParser pp{*this, pr.poly_tokens, 0, n};
        Polynomial p = pp.expr();
        if (!pp.done()) pp.fail("unexpected '" + pp.peek().text + "' in polynomial");
        if (p.is_zero()) fail("polynomial propensity is identically zero", pr.at);
        r.custom_propensity = p;
        r.rate_exact = 1;
      }
      r.rate_constant = r.rate_exact.get_d();
      m.reactions.push_back(r);
    }
  }

  void parse_query_block() {
    const Token& qt = next();
    if (file_.query) fail("duplicate query block", qt);
    if (!model_fixed_) finish_model_for_query();
    skip_newlines();
    expect_symbol("{");
    FptQuery q;
    bool have_threshold = false, have_horizon = false;
    const Pctmc& m = file_.model;
    while (true) {
      while (peek().kind == Tok::Newline || is_symbol(peek(), ";")) next();
      if (is_symbol(peek(), "}")) {
        next();
        break;
      }
      const Token& kw = peek();
      if (kw.kind == Tok::End) fail("unterminated query block", kw);
      std::string key = expect_ident("a query field");
      if (key == "threshold") {
        while (true) {
          skip_newlines();
          const Token& st = peek();
          std::string name = expect_ident("a species name");
          auto idx = m.species_index(name);
          if (!idx) fail("unknown species '" + name + "'", st);
          expect_symbol(">=");
          const Token& vt = peek();
          long long h = parse_int(next(), "threshold");
          if (h < 1 || h > std::numeric_limits<int>::max()) fail("threshold must be a positive integer", vt);
          for (const auto& th : q.thresholds)
            if (th.species == *idx) fail("duplicate threshold on '" + name + "'", st);
          q.thresholds.push_back({*idx, static_cast<int>(h)});
          if (!is_symbol(peek(), ",")) break;
          next();
        }
        have_threshold = true;
      } else if (key == "horizon") {
        const Token& vt = peek();
        if (vt.kind == Tok::Ident && vt.text == "inf") {
          next();
          q.horizon.reset();
        } else {
          Rational v = parse_decimal(false);
          if (v <= 0) fail("horizon must be positive", vt);
          q.horizon = v.get_d();
        }
        have_horizon = true;
      } else if (key == "objective") {
        const Token& vt = peek();
        std::string v = expect_ident("mfpt or hitprob");
        if (v == "mfpt")
          q.objective = Objective::Mfpt;
        else if (v == "hitprob")
          q.objective = Objective::HitProbability;
        else
          fail("objective must be mfpt or hitprob", vt);
      } else if (key == "order") {
        const Token& vt = peek();
        long long r = parse_int(next(), "order");
        if (r < 1 || r > 64) fail("order must be between 1 and 64", vt);
        q.order = static_cast<int>(r);
      } else if (key == "scale") {
        const Token& st = peek();
        std::string name = expect_ident("a species name");
        auto idx = m.species_index(name);
        if (!idx) fail("unknown species '" + name + "'", st);
        const Token& vt = peek();
        Rational v = parse_decimal(false);
        if (v <= 0) fail("scale bound must be positive", vt);
        q.scale_bounds[*idx] = v.get_d();
      } else if (key == "timescale") {
        const Token& vt = peek();
        Rational v = parse_decimal(false);
        if (v <= 0) fail("time scale must be positive", vt);
        q.time_scale_hint = v.get_d();
      } else {
        fail("unknown query field '" + key + "'", kw);
      }
      const Token& t = peek();
      if (!(is_symbol(t, ";") || is_symbol(t, "}") || t.kind == Tok::Newline)) fail("expected ';'", t);
    }
    if (!have_threshold) fail("query block needs a threshold", qt);
    if (!have_horizon) fail("query block needs a horizon", qt);
    file_.query = q;
  }

  // Reactions may only be resolved once all species are known; a query block
  // always follows the model statements it refers to.
  void finish_model_for_query() {
    if (!file_.model.reactions.empty() || pending_.empty()) return;
    finish_model();
    pending_.clear();
    finalized_ = true;
  }

 public:
  bool finalized_ = false;

  ModelFile run() {
    while (true) {
      skip_separators();
      const Token& t = peek();
      if (t.kind == Tok::End) break;
      if (t.kind != Tok::Ident) fail("expected a statement keyword", t);
      if (t.text == "query") {
        parse_query_block();
      } else if (model_fixed_) {
        fail("only a query block is allowed here", t);
      } else {
        if (finalized_) fail("model statements must precede the query block", t);
        parse_statement();
      }
    }
    if (!model_fixed_ && !finalized_) finish_model();
    return std::move(file_);
  }
};

}  // namespace

ModelFile parse_model_file(std::string_view text) {
  Parser p(text, nullptr);
  return p.run();
}

Pctmc parse_model(std::string_view text) { return parse_model_file(text).model; }

FptQuery parse_query(const Pctmc& model, std::string_view text) {
  Parser p(text, &model);
  auto file = p.run();
  if (!file.query) throw ParseError("no query block found", 1, 1);
  return *file.query;
}

}  // namespace fpt
