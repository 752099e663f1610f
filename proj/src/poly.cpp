#include "fptbound/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fpt {

Rational rational_from_decimal(std::string_view text) {
  std::size_t pos = 0;
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("malformed decimal literal '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long exponent = 0;
  bool any_digit = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    digits += text[pos++];
    any_digit = true;
  }
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      digits += text[pos++];
      --exponent;
      any_digit = true;
    }
  }
  if (!any_digit) return fail();
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    bool eneg = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      eneg = text[pos] == '-';
      ++pos;
    }
    if (pos >= text.size()) return fail();
    long e = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      e = e * 10 + (text[pos++] - '0');
      if (e > 4000) return fail();
    }
    exponent += eneg ? -e : e;
  }
  if (pos != text.size()) return fail();
  mpz_class mantissa(digits.empty() ? std::string("0") : digits, 10);
  mpz_class power;
  mpz_ui_pow_ui(power.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  Rational q = exponent >= 0 ? Rational(mantissa * power) : Rational(mantissa, power);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

int MultiIndex::degree() const { return std::accumulate(exps_.begin(), exps_.end(), 0); }

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.size() != size()) throw std::invalid_argument("multi-index arity mismatch");
  MultiIndex out(*this);
  for (std::size_t i = 0; i < size(); ++i) out.exps_[i] += other.exps_[i];
  return out;
}

std::strong_ordering MultiIndex::operator<=>(const MultiIndex& other) const {
  if (auto c = degree() <=> other.degree(); c != 0) return c;
  if (auto c = size() <=> other.size(); c != 0) return c;
  for (std::size_t i = 0; i < size(); ++i) {
    if (exps_[i] != other.exps_[i]) return other.exps_[i] <=> exps_[i];
  }
  return std::strong_ordering::equal;
}

std::vector<MultiIndex> monomials_of_degree(std::size_t nvars, int degree) {
  std::vector<MultiIndex> out;
  if (nvars == 0) {
    if (degree == 0) out.emplace_back(0);
    return out;
  }
  MultiIndex cur(nvars);
  // Enumerate compositions in descending lexicographic order.
  auto rec = [&](auto&& self, std::size_t i, int remaining) -> void {
    if (i + 1 == nvars) {
      cur[i] = remaining;
      out.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[i] = e;
      self(self, i + 1, remaining - e);
    }
  };
  rec(rec, 0, degree);
  return out;
}

std::vector<MultiIndex> monomials_up_to(std::size_t nvars, int degree) {
  std::vector<MultiIndex> out;
  for (int d = 0; d <= degree; ++d) {
    auto part = monomials_of_degree(nvars, d);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Polynomial Polynomial::constant(std::size_t nvars, const Rational& c) {
  Polynomial p(nvars);
  p.add_term(MultiIndex(nvars), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
  MultiIndex m(nvars);
  m[index] = 1;
  return monomial(m);
}

Polynomial Polynomial::monomial(const MultiIndex& m, const Rational& c) {
  Polynomial p(m.size());
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

Rational Polynomial::coefficient(const MultiIndex& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

void Polynomial::add_term(const MultiIndex& m, const Rational& c) {
  if (m.size() != nvars_) throw std::invalid_argument("monomial arity mismatch");
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.nvars_ != nvars_) throw std::invalid_argument("polynomial arity mismatch");
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (other.nvars_ != nvars_) throw std::invalid_argument("polynomial arity mismatch");
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out(*this);
  out += other;
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial out(*this);
  out -= other;
  return out;
}

Polynomial Polynomial::operator-() const { return scaled(-1); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.nvars_ != nvars_) throw std::invalid_argument("polynomial arity mismatch");
  Polynomial out(nvars_);
  for (const auto& [a, ca] : terms_)
    for (const auto& [b, cb] : other.terms_) out.add_term(a + b, ca * cb);
  return out;
}

Polynomial& Polynomial::operator*=(const Polynomial& other) {
  *this = *this * other;
  return *this;
}

bool Polynomial::operator==(const Polynomial& other) const {
  return nvars_ == other.nvars_ && terms_ == other.terms_;
}

Polynomial Polynomial::scaled(const Rational& c) const {
  Polynomial out(nvars_);
  if (c == 0) return out;
  for (const auto& [m, coef] : terms_) out.terms_.emplace(m, coef * c);
  return out;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial out = constant(nvars_, 1);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) out *= base;
    k >>= 1;
    if (k > 0) base *= base;
  }
  return out;
}

Polynomial Polynomial::shift(std::span<const int> v) const {
  if (v.size() != nvars_) throw std::invalid_argument("shift vector arity mismatch");
  // (x_i + v_i)^e for each variable, cached per (i, e).
  std::vector<std::map<int, Polynomial>> cache(nvars_);
  auto factor = [&](std::size_t i, int e) -> const Polynomial& {
    auto it = cache[i].find(e);
    if (it != cache[i].end()) return it->second;
    Polynomial base = variable(nvars_, i) + constant(nvars_, v[i]);
    return cache[i].emplace(e, base.pow(e)).first->second;
  };
  Polynomial out(nvars_);
  for (const auto& [m, c] : terms_) {
    Polynomial term = constant(nvars_, c);
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (m[i] == 0) continue;
      if (v[i] == 0) {
        MultiIndex single(nvars_);
        single[i] = m[i];
        term *= monomial(single);
      } else {
        term *= factor(i, m[i]);
      }
    }
    out += term;
  }
  return out;
}

Polynomial Polynomial::substitute(std::size_t index, const Rational& value) const {
  if (index >= nvars_) throw std::invalid_argument("substitution index out of range");
  Polynomial out(nvars_ - 1);
  for (const auto& [m, c] : terms_) {
    std::vector<int> e;
    e.reserve(nvars_ - 1);
    for (std::size_t i = 0; i < nvars_; ++i)
      if (i != index) e.push_back(m[i]);
    Rational f = 1;
    for (int p = 0; p < m[index]; ++p) f *= value;
    out.add_term(MultiIndex(std::move(e)), c * f);
  }
  return out;
}

Polynomial Polynomial::embed(std::size_t new_nvars, std::span<const std::size_t> target) const {
  if (target.size() != nvars_) throw std::invalid_argument("embedding arity mismatch");
  Polynomial out(new_nvars);
  for (const auto& [m, c] : terms_) {
    MultiIndex e(new_nvars);
    for (std::size_t i = 0; i < nvars_; ++i) e[target[i]] += m[i];
    out.add_term(e, c);
  }
  return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (point.size() != nvars_) throw std::invalid_argument("evaluation point arity mismatch");
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double v = c.get_d();
    for (std::size_t i = 0; i < nvars_; ++i)
      for (int p = 0; p < m[i]; ++p) v *= point[i];
    sum += v;
  }
  return sum;
}

Rational Polynomial::evaluate_exact(std::span<const Rational> point) const {
  if (point.size() != nvars_) throw std::invalid_argument("evaluation point arity mismatch");
  Rational sum = 0;
  for (const auto& [m, c] : terms_) {
    Rational v = c;
    for (std::size_t i = 0; i < nvars_; ++i)
      for (int p = 0; p < m[i]; ++p) v *= point[i];
    sum += v;
  }
  return sum;
}

std::string format_rational(const Rational& q) {
  mpz_class den = q.get_den();
  int twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den == 1) {
    int places = std::max(twos, fives);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(places));
    mpz_class scaled_num = q.get_num() * scale / q.get_den();
    bool neg = scaled_num < 0;
    std::string digits = mpz_class(abs(scaled_num)).get_str();
    if (places > 0) {
      if (static_cast<int>(digits.size()) <= places)
        digits.insert(0, static_cast<std::size_t>(places) - digits.size() + 1, '0');
      digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    }
    return neg ? "-" + digits : digits;
  }
  std::ostringstream os;
  os.precision(17);
  os << q.get_d();
  return os.str();
}

std::string Polynomial::to_string(std::span<const std::string> names) const {
  if (names.size() != nvars_) throw std::invalid_argument("variable name count mismatch");
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    std::string mono;
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (m[i] == 0) continue;
      if (!mono.empty()) mono += " * ";
      mono += names[i];
      if (m[i] > 1) mono += "^" + std::to_string(m[i]);
    }
    if (mono.empty()) {
      out += format_rational(mag);
    } else if (mag == 1) {
      out += mono;
    } else {
      out += format_rational(mag) + " * " + mono;
    }
  }
  return out;
}

Polynomial add(const Polynomial& p, const Polynomial& q) { return p + q; }
Polynomial mul(const Polynomial& p, const Polynomial& q) { return p * q; }
Polynomial scale(const Polynomial& p, const Rational& c) { return p.scaled(c); }
Polynomial shift(const Polynomial& p, std::span<const int> v) { return p.shift(v); }
double evaluate(const Polynomial& p, std::span<const double> point) { return p.evaluate(point); }

Polynomial binomial_polynomial(std::size_t nvars, std::size_t index, int k) {
  Polynomial out = Polynomial::constant(nvars, 1);
  mpz_class fact = 1;
  for (int i = 0; i < k; ++i) {
    out *= Polynomial::variable(nvars, index) - Polynomial::constant(nvars, i);
    fact *= i + 1;
  }
  return out.scaled(Rational(1, 1) / Rational(fact));
}

}  // namespace fpt
