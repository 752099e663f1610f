#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include "common.hpp"
#include "fptbound/sdp.hpp"
#include "fptbound/ssa.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <set>

using namespace fpt;

namespace {

FptQuery q(const Pctmc& m, const std::string& body) { return parse_query(m, "query {\n" + body + "\n}\n"); }

Reduction model1_m25(int order) {
  auto m = parse_model(test::model1_text());
  return reduce(m, q(m, "threshold M >= 25; horizon 1; order " + std::to_string(order) + ";"));
}

MomentVar var(MeasureKind kind, int k, std::vector<int> m, int face = -1) {
  return MomentVar{MeasureId{kind, face, {}}, k, std::move(m)};
}

double coeff(const AffineExpr& e, const MomentVar& v) {
  double s = 0;
  for (const auto& [w, a] : e)
    if (w == v) s += a;
  return s;
}

}  // namespace

TEST_CASE("basis sizes") {
  auto b = make_basis({"t", "x"}, 1);
  CHECK(b.monomials.size() == 3);
  CHECK(b.monomials[0] == MultiIndex{0, 0});
  CHECK(make_basis({"t", "x", "y"}, 3).monomials.size() == 20);
  CHECK(make_basis({"x"}, 4).monomials.size() == 5);
}

TEST_CASE("occupation moment matrix over (1, t, x)") {
  MeasureId occ{MeasureKind::Occupation, -1, {}};
  auto M = moment_matrix(occ, make_basis({"t", "x"}, 1), std::nullopt, "M_1(z)");
  REQUIRE(M.size() == 3);
  CHECK(M.entry(1, 2).size() == 1);
  CHECK(coeff(M.entry(1, 2), var(MeasureKind::Occupation, 1, {1})) == 1.0);
  CHECK(coeff(M.entry(0, 0), var(MeasureKind::Occupation, 0, {0})) == 1.0);
  CHECK(coeff(M.entry(2, 2), var(MeasureKind::Occupation, 0, {2})) == 1.0);
}

TEST_CASE("localizing matrices") {
  MeasureId hf{MeasureKind::HorizonFace, -1, {}};
  auto x = Polynomial::variable(1, 0);
  auto uH = x.scaled(25) - x * x;
  auto L = moment_matrix(hf, make_basis({"M"}, 1), uH, "M_1(u_M, y2)");
  REQUIRE(L.size() == 2);
  auto y = [](int m) { return var(MeasureKind::HorizonFace, 0, {m}); };
  CHECK(coeff(L.entry(0, 0), y(1)) == 25.0);
  CHECK(coeff(L.entry(0, 0), y(2)) == -1.0);
  CHECK(coeff(L.entry(0, 1), y(2)) == 25.0);
  CHECK(coeff(L.entry(0, 1), y(3)) == -1.0);
  CHECK(coeff(L.entry(1, 1), y(3)) == 25.0);
  CHECK(coeff(L.entry(1, 1), y(4)) == -1.0);

  auto X = moment_matrix(hf, make_basis({"M"}, 1), x, "M_1(x, y2)");
  CHECK(coeff(X.entry(0, 0), y(1)) == 1.0);
  CHECK(coeff(X.entry(0, 1), y(2)) == 1.0);
  CHECK(coeff(X.entry(1, 1), y(3)) == 1.0);
}

TEST_CASE("blocks are symmetric and cover every measure") {
  for (const char* name : {"model1_dimerization.fpt", "model3_gene_expression.fpt"}) {
    auto f = test::load(name);
    auto r = reduce(f.model, *f.query);
    SdpOptions opt;
    opt.species_bounds[0] = 50;
    auto blocks = build_blocks(r.model, r.query, opt);
    std::set<MeasureId> seen;
    for (const auto& b : blocks) {
      seen.insert(b.measure);
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) CHECK(b.entry(i, j) == b.entry(j, i));
    }
    DerivationContext ctx(r.model, r.query);
    CHECK(seen.size() == ctx.measures().size());
  }
}

TEST_CASE("assembled dimerization problem") {
  auto r = model1_m25(2);
  auto p = assemble(r.model, r.query, Sense::Minimize);
  int max_deg = 0;
  for (const auto& b : p.blocks) {
    if (b.localizer) continue;
    for (const auto& e : b.entries)
      for (const auto& [v, c] : e) max_deg = std::max(max_deg, v.degree());
  }
  CHECK(max_deg == 4);
  CHECK(p.equalities.size() == constraint_set(r.model, r.query).size() + 1);
  REQUIRE(p.objective.size() == 1);
  CHECK(p.objective[0].first == var(MeasureKind::Occupation, 0, {0}));
  CHECK(p.var_index.size() == p.vars.size());

  std::set<MomentVar> in_blocks;
  for (const auto& b : p.blocks)
    for (const auto& e : b.entries)
      for (const auto& [v, c] : e) in_blocks.insert(v);
  for (const auto& eq : p.equalities)
    for (const auto& [v, c] : eq.terms) CHECK(in_blocks.count(v) == 1);
  for (const auto& vb : p.bounds) CHECK(vb.upper.has_value());

  auto pmax = assemble(r.model, r.query, Sense::Maximize);
  CHECK(pmax.sense == Sense::Maximize);
  CHECK(pmax.vars == p.vars);
  CHECK(pmax.equalities.size() == p.equalities.size());

  auto qh = r.query;
  qh.objective = Objective::HitProbability;
  auto ph = assemble(r.model, qh, Sense::Maximize);
  REQUIRE(ph.objective.size() == 1);
  CHECK(ph.objective[0].first == var(MeasureKind::HitFace, 0, {}, 0));
}

TEST_CASE("scaling factors") {
  auto m = parse_model("species X\nreaction 0 -> X @ 1\n");
  auto qq = q(m, "threshold X >= 10; horizon 4;");
  std::vector<MomentVar> vars{var(MeasureKind::Occupation, 1, {2}), var(MeasureKind::Occupation, 0, {0}),
                              var(MeasureKind::HitFace, 0, {}, 0), var(MeasureKind::HitFace, 2, {}, 0),
                              var(MeasureKind::HorizonFace, 0, {3})};
  auto s = scaling_vector(m, qq, vars, SdpOptions{});
  CHECK(s.factor(vars[0]) == doctest::Approx(1600));
  CHECK(s.factor(vars[1]) == doctest::Approx(4));
  CHECK(s.factor(vars[2]) == doctest::Approx(1));
  CHECK(s.factor(vars[3]) == doctest::Approx(16));
  CHECK(s.factor(vars[4]) == doctest::Approx(1000));

  auto q1 = q(m, "threshold X >= 25; horizon 1;");
  CHECK(scaling_vector(m, q1, {vars[1]}, SdpOptions{}).factor(vars[1]) == doctest::Approx(1));
  auto off = scaling_vector(m, qq, vars, SdpOptions{}, false);
  for (const auto& v : vars) CHECK(off.factor(v) == 1.0);

  auto two = parse_model("species X Y\nreaction 0 -> X @ 1\nreaction X -> Y @ 1\nreaction Y -> X @ 1\n");
  auto q2 = q(two, "threshold X >= 10; horizon 2;");
  SdpOptions with_bound;
  with_bound.species_bounds[1] = 5;
  auto s2 = scaling_vector(two, q2, {var(MeasureKind::Occupation, 1, {1, 2})}, with_bound);
  CHECK(s2.factor(var(MeasureKind::Occupation, 1, {1, 2})) == doctest::Approx(4 * 10 * 25));
  CHECK_THROWS(scaling_vector(two, q2, {var(MeasureKind::Occupation, 1, {1, 2})}, SdpOptions{}));
}

TEST_CASE("empirical moments of simulated paths satisfy every block") {
  auto r = model1_m25(2);
  auto p = assemble(r.model, r.query, Sense::Minimize);
  DerivationContext ctx(r.model, r.query);
  SimulationOptions so;
  for (const auto& v : p.vars)
    if (v.measure.kind == MeasureKind::Occupation) so.integrals.push_back(v);
  auto samples = simulate_fpt(r.model, r.query, 400, 11, so);
  std::map<MomentVar, double> mean;
  for (const auto& v : p.vars) {
    double s = 0;
    for (const auto& smp : samples) s += sample_moment(ctx, smp, v, so.integrals);
    mean[v] = s / static_cast<double>(samples.size());
  }
  for (const auto& b : p.blocks) {
    Eigen::MatrixXd A(b.size(), b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) {
        double s = 0;
        for (const auto& [v, c] : b.entry(i, j)) s += c * mean[v] / p.scaling.factor(v);
        A(i, j) = s;
      }
    Eigen::VectorXd d = A.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd N = d.asDiagonal() * A * d.asDiagonal();
    double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(N).eigenvalues().minCoeff();
    INFO(b.label);
    CHECK(lo >= -1e-8);
  }
  for (const auto& eq : p.equalities) {
    double s = eq.constant.get_d(), mag = std::abs(s);
    for (const auto& [v, c] : eq.terms) {
      s += c.get_d() * mean[v];
      mag += std::abs(c.get_d() * mean[v]);
    }
    INFO(eq.label);
    CHECK(std::abs(s) <= 0.1 * mag + 1e-9);
  }
}

TEST_CASE("json dump") {
  auto r = model1_m25(1);
  auto p = assemble(r.model, r.query, Sense::Maximize);
  auto j = nlohmann::json::parse(sdp_problem_to_json(p));
  CHECK(j.is_object());
  CHECK(j.dump().find("M_1(z)") != std::string::npos);
}
