#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fptbound/poly.hpp"

#include <random>
#include <vector>

using namespace fpt;

TEST_CASE("decimal literals parse exactly") {
  CHECK(rational_from_decimal("0.2") == Rational(1, 5));
  CHECK(rational_from_decimal("1e4") == Rational(10000));
  CHECK(rational_from_decimal("-3.5E-2") == Rational(-7, 200));
  CHECK(rational_from_decimal("100") == Rational(100));
  CHECK_THROWS_AS(rational_from_decimal("1..2"), std::invalid_argument);
  CHECK_THROWS_AS(rational_from_decimal(""), std::invalid_argument);
  CHECK_THROWS_AS(rational_from_decimal("abc"), std::invalid_argument);
}

TEST_CASE("graded monomial order") {
  auto ms = monomials_up_to(2, 2);
  std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(ms == expected);
  CHECK(monomials_up_to(3, 3).size() == 20);
  CHECK(monomials_of_degree(3, 2).size() == 6);
  for (const auto& m : monomials_of_degree(3, 2)) CHECK(m.degree() == 2);
}

TEST_CASE("hand expansions") {
  auto x = Polynomial::variable(2, 0);
  auto y = Polynomial::variable(2, 1);
  auto one = Polynomial::constant(2, 1);
  auto sq = (x + one).pow(2);
  CHECK(sq.coefficient({2, 0}) == 1);
  CHECK(sq.coefficient({1, 0}) == 2);
  CHECK(sq.coefficient({0, 0}) == 1);
  CHECK(sq.terms().size() == 3);

  auto p = (x - y) * (x + y);
  CHECK(p.coefficient({2, 0}) == 1);
  CHECK(p.coefficient({0, 2}) == -1);
  CHECK(p.coefficient({1, 1}) == 0);
  CHECK(p.terms().size() == 2);
  CHECK(p.degree() == 2);
  CHECK(Polynomial(2).degree() == -1);
  CHECK((x - x).is_zero());
}

TEST_CASE("shift and substitute") {
  auto x = Polynomial::variable(2, 0);
  auto t = Polynomial::variable(2, 1);
  std::vector<int> v{1, 0};
  auto s = (x * x * t).shift(v);
  // (x+1)^2 t
  CHECK(s.coefficient({2, 1}) == 1);
  CHECK(s.coefficient({1, 1}) == 2);
  CHECK(s.coefficient({0, 1}) == 1);
  CHECK(s.terms().size() == 3);

  auto q = (x * t + x).substitute(0, 3);
  CHECK(q.num_vars() == 1);
  CHECK(q.coefficient({1}) == 3);
  CHECK(q.coefficient({0}) == 3);
}

TEST_CASE("binomial polynomial is a falling factorial") {
  auto b = binomial_polynomial(1, 0, 2);
  CHECK(b.coefficient({2}) == Rational(1, 2));
  CHECK(b.coefficient({1}) == Rational(-1, 2));
  CHECK(b.coefficient({0}) == 0);
  for (int n = 0; n < 8; ++n) {
    std::vector<Rational> pt{Rational(n)};
    CHECK(b.evaluate_exact(pt) == Rational(n * (n - 1) / 2));
  }
  auto b3 = binomial_polynomial(1, 0, 3);
  std::vector<Rational> pt{Rational(5)};
  CHECK(b3.evaluate_exact(pt) == 10);
  CHECK(binomial_polynomial(1, 0, 0) == Polynomial::constant(1, 1));
}

TEST_CASE("formatting") {
  CHECK(format_rational(Rational(1, 5)) == "0.2");
  CHECK(format_rational(Rational(-3)) == "-3");
  std::vector<std::string> names{"M"};
  auto m = Polynomial::variable(1, 0);
  auto p = Polynomial::constant(1, 100) + m.scaled(Rational(2, 5)) - (m * m).scaled(Rational(2, 5));
  auto s = p.to_string(names);
  CHECK(s.find("100") != std::string::npos);
  CHECK(s.find("M^2") != std::string::npos);
  CHECK(s.find("0.4") != std::string::npos);
}

TEST_CASE("random products evaluate multiplicatively") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-5, 5), expo(0, 3);
  auto frac = [](long a, long b) {
    Rational r(a, b);
    r.canonicalize();
    return r;
  };
  auto random_poly = [&] {
    Polynomial p(3);
    for (int i = 0; i < 6; ++i) p.add_term(MultiIndex{expo(rng), expo(rng), expo(rng)}, frac(coef(rng), 1 + expo(rng)));
    return p;
  };
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_poly();
    auto q = random_poly();
    std::vector<Rational> pt{frac(coef(rng), 3), Rational(coef(rng)), frac(coef(rng), 7)};
    CHECK((p * q).evaluate_exact(pt) == p.evaluate_exact(pt) * q.evaluate_exact(pt));
    CHECK((p + q).evaluate_exact(pt) == p.evaluate_exact(pt) + q.evaluate_exact(pt));
    if (!p.is_zero() && !q.is_zero()) CHECK((p * q).degree() == p.degree() + q.degree());
    std::vector<int> v{1, -2, 0};
    std::vector<Rational> shifted{pt[0] + 1, pt[1] - 2, pt[2]};
    CHECK(p.shift(v).evaluate_exact(pt) == p.evaluate_exact(shifted));
    std::vector<double> dp{pt[0].get_d(), pt[1].get_d(), pt[2].get_d()};
    CHECK(p.evaluate(dp) == doctest::Approx(p.evaluate_exact(pt).get_d()).epsilon(1e-12));
  }
}
