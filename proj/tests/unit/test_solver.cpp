#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "fptbound/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace fpt;

namespace {

// 2x2 block [[x0, x1], [x1, x2]] over three variables.
StandardSdp hankel_2x2() {
  StandardSdp s;
  s.block_sizes = {2};
  s.c = {1, 0, 0};
  s.matrices = {{}, {{0, 0, 0, 1.0}}, {{0, 0, 1, 1.0}}, {{0, 1, 1, 1.0}}};
  return s;
}

}  // namespace

TEST_CASE("minimum of x0 with x1 = x2 = 1") {
  auto s = hankel_2x2();
  s.eq_rows = {{{1, 1.0}}, {{2, 1.0}}};
  s.eq_rhs = {1.0, 1.0};
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.dual_objective == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(sol.x.size() == 3);
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("maximum off-diagonal of a unit-diagonal PSD matrix") {
  // min -x  s.t.  x E12 + I >= 0
  StandardSdp s;
  s.block_sizes = {2};
  s.c = {-1.0};
  s.matrices = {{{0, 0, 0, -1.0}, {0, 1, 1, -1.0}}, {{0, 0, 1, 1.0}}};
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_objective == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("infeasible problems") {
  auto s = hankel_2x2();
  s.eq_rows = {{{1, 1.0}}, {{1, 1.0}}};
  s.eq_rhs = {1.0, 2.0};
  CHECK(solve(s).status == SolveStatus::Infeasible);

  StandardSdp neg;
  neg.block_sizes = {1};
  neg.c = {1.0};
  neg.matrices = {{}, {{0, 0, 0, 1.0}}};
  neg.eq_rows = {{{0, 1.0}}};
  neg.eq_rhs = {-1.0};
  CHECK(solve(neg).status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded problem") {
  StandardSdp s;
  s.block_sizes = {1};
  s.c = {-1.0};
  s.matrices = {{}, {{0, 0, 0, 1.0}}};
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("trivial problem without equalities") {
  StandardSdp s;
  s.block_sizes = {1};
  s.c = {1.0};
  s.matrices = {{}, {{0, 0, 0, 1.0}}};
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.primal_objective) < 1e-6);
}

TEST_CASE("diagonal blocks act as a linear program") {
  // min x1 + 2 x2  s.t.  x1 + x2 = 1, x >= 0
  StandardSdp s;
  s.block_sizes = {-2};
  s.c = {1.0, 2.0};
  s.matrices = {{}, {{0, 0, 0, 1.0}}, {{0, 1, 1, 1.0}}};
  s.eq_rows = {{{0, 1.0}, {1, 1.0}}};
  s.eq_rhs = {1.0};
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("random feasible problems respect weak duality") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 4, m = 5;
    StandardSdp s;
    s.block_sizes = {n, -2};
    s.matrices.resize(m + 1);
    std::vector<Eigen::MatrixXd> F(m + 1);
    for (int k = 0; k <= m; ++k) {
      Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
      F[k] = (A + A.transpose()) / 2;
      if (k == 0) F[k] -= 6.0 * Eigen::MatrixXd::Identity(n, n);
    }
    // F_1 = I keeps the problem bounded; a point with x1 large is strictly feasible.
    F[1] = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k <= m; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          if (F[k](i, j) != 0.0) s.matrices[k].push_back({0, i, j, F[k](i, j)});
    // box -3 <= x2 <= 3 through a diagonal block
    s.matrices[0].push_back({1, 0, 0, -3.0});
    s.matrices[0].push_back({1, 1, 1, -3.0});
    s.matrices[2].push_back({1, 0, 0, 1.0});
    s.matrices[2].push_back({1, 1, 1, -1.0});
    // dual feasibility for the free variables: c_k = <F_k, Y0> for a PD Y0
    Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    Eigen::MatrixXd Y0 = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
    s.c.resize(m);
    for (int k = 1; k <= m; ++k) s.c[k - 1] = (F[k].cwiseProduct(Y0)).sum();
    s.c[1] += 0.5;
    s.eq_rows = {{{3, 1.0}, {4, 1.0}}};
    s.eq_rhs = {0.5};
    auto sol = solve(s);
    INFO("trial " << trial);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.primal_objective >= sol.dual_objective - 1e-6 * (1 + std::abs(sol.primal_objective)));
    CHECK(sol.duality_gap <= 1e-6);
    CHECK(sol.primal_infeasibility <= 1e-6);

    Eigen::MatrixXd S = -F[0];
    for (int k = 1; k <= m; ++k) S += sol.x[k - 1] * F[k];
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff() >= -1e-6);
    CHECK(std::abs(sol.x[3] + sol.x[4] - 0.5) <= 1e-7);
    CHECK(std::abs(sol.x[1]) <= 3.0 + 1e-6);

    auto again = solve(s);
    CHECK(again.primal_objective == sol.primal_objective);
    CHECK(again.x == sol.x);
  }
}

TEST_CASE("lowering a moment problem") {
  auto m = parse_model(test::model1_text());
  auto q = parse_query(m, "query { threshold D >= 5; horizon 1; order 2; scale M 35; }");
  auto r = reduce(m, q);
  SdpOptions opt;
  opt.species_bounds[0] = 35;
  auto pmin = assemble(r.model, r.query, Sense::Minimize, opt);
  auto pmax = assemble(r.model, r.query, Sense::Maximize, opt);
  auto lmin = lower_to_standard(pmin);
  auto lmax = lower_to_standard(pmax);
  CHECK(lmin.objective_sign == 1.0);
  CHECK(lmax.objective_sign == -1.0);
  REQUIRE(lmin.sdp.c.size() == lmax.sdp.c.size());
  for (std::size_t k = 0; k < lmin.sdp.c.size(); ++k) CHECK(lmin.sdp.c[k] == -lmax.sdp.c[k]);
  CHECK(lmin.vars == pmin.vars);

  auto smin = solve_lowered(lmin);
  auto smax = solve_lowered(lmax);
  CHECK(smin.status == SolveStatus::Optimal);
  CHECK(smax.status == SolveStatus::Optimal);
  CHECK(smin.primal_objective == doctest::Approx(0.2661).epsilon(0.02));
  CHECK(smax.primal_objective == doctest::Approx(0.3068).epsilon(0.02));
  CHECK(smin.primal_objective < smax.primal_objective);
  MomentVar z00{MeasureId{MeasureKind::Occupation, -1, {}}, 0, {0, 0}};
  REQUIRE(smin.moment_values.count(z00) == 1);
  CHECK(smin.moment_values.at(z00) == doctest::Approx(smin.primal_objective).epsilon(1e-5));
}
