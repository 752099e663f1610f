#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpt {

using Rational = mpq_class;

/// Parses a decimal literal such as "0.2", "1e4" or "-3.5E-2" into an exact
/// rational. Throws std::invalid_argument on malformed input.
Rational rational_from_decimal(std::string_view text);

/// Exponent vector of a monomial. By convention variable 0 is time and the
/// remaining entries follow the species order of the model in scope.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t nvars) : exps_(nvars, 0) {}
  MultiIndex(std::initializer_list<int> exps) : exps_(exps) {}
  explicit MultiIndex(std::vector<int> exps) : exps_(std::move(exps)) {}

  std::size_t size() const { return exps_.size(); }
  int degree() const;
  int operator[](std::size_t i) const { return exps_[i]; }
  int& operator[](std::size_t i) { return exps_[i]; }
  const std::vector<int>& exponents() const { return exps_; }

  MultiIndex operator+(const MultiIndex& other) const;

  /// Graded order: total degree first, then lexicographically descending
  /// exponents, so (1, x1, x2, x1^2, x1 x2, x2^2, ...) comes out in order.
  std::strong_ordering operator<=>(const MultiIndex& other) const;
  bool operator==(const MultiIndex& other) const = default;

 private:
  std::vector<int> exps_;
};

/// All exponent vectors over `nvars` variables with total degree <= `degree`,
/// in graded order.
std::vector<MultiIndex> monomials_up_to(std::size_t nvars, int degree);

/// All exponent vectors over `nvars` variables with total degree exactly `degree`.
std::vector<MultiIndex> monomials_of_degree(std::size_t nvars, int degree);

/// Sparse multivariate polynomial with exact rational coefficients.
/// Zero coefficients are never stored.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, Rational>;

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const Rational& c);
  static Polynomial variable(std::size_t nvars, std::size_t index);
  static Polynomial monomial(const MultiIndex& m, const Rational& c = 1);

  std::size_t num_vars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Total degree; -1 for the zero polynomial.
  int degree() const;
  Rational coefficient(const MultiIndex& m) const;

  void add_term(const MultiIndex& m, const Rational& c);

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Polynomial& other);
  bool operator==(const Polynomial& other) const;

  Polynomial scaled(const Rational& c) const;
  Polynomial pow(int k) const;

  /// Composes with x_i -> x_i + v_i. `v` has one entry per variable; pass a
  /// zero entry for variables that must stay fixed (such as time).
  Polynomial shift(std::span<const int> v) const;

  /// Substitutes a fixed value for variable `index` and removes it, so the
  /// result has one variable fewer.
  Polynomial substitute(std::size_t index, const Rational& value) const;

  /// Re-embeds into a larger variable space: variable i maps to `target[i]`.
  Polynomial embed(std::size_t new_nvars, std::span<const std::size_t> target) const;

  double evaluate(std::span<const double> point) const;
  Rational evaluate_exact(std::span<const Rational> point) const;

  /// Human-readable form, e.g. "100 - 0.4 * M^2 + 0.4 * M". `names` has one
  /// entry per variable.
  std::string to_string(std::span<const std::string> names) const;

 private:
  std::size_t nvars_ = 0;
  TermMap terms_;
};

Polynomial add(const Polynomial& p, const Polynomial& q);
Polynomial mul(const Polynomial& p, const Polynomial& q);
Polynomial scale(const Polynomial& p, const Rational& c);
Polynomial shift(const Polynomial& p, std::span<const int> v);
double evaluate(const Polynomial& p, std::span<const double> point);

/// binom(x_index, k) expanded as a falling factorial over k!.
Polynomial binomial_polynomial(std::size_t nvars, std::size_t index, int k);

/// Formats a rational as a short decimal string (exact when it terminates).
std::string format_rational(const Rational& q);

}  // namespace fpt
