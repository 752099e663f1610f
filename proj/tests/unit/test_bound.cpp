#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "fptbound/bound.hpp"
#include "fptbound/report.hpp"

#include <cmath>

using namespace fpt;

TEST_CASE("pure birth mean is pinned by the relaxation") {
  auto f = test::load("pure_birth.fpt");
  auto b = bound(f.model, *f.query);
  CHECK(b.optimal());
  CHECK(b.lower <= 2.0 + 1e-6);
  CHECK(b.upper >= 2.0 - 1e-6);
  CHECK(b.upper - b.lower <= 1e-3);
}

TEST_CASE("dimerization interval at order 2") {
  auto f = test::load("model1_dimerization.fpt");
  auto b = bound(f.model, *f.query);
  CHECK(b.optimal());
  CHECK(b.order == 2);
  CHECK(b.lower == doctest::Approx(0.2661).epsilon(0.02));
  CHECK(b.upper == doctest::Approx(0.3068).epsilon(0.02));
  CHECK(b.min_side.value <= b.min_side.solution.primal_objective + 1e-12);
  CHECK(b.max_side.value >= b.max_side.solution.primal_objective - 1e-12);
}

TEST_CASE("order table tightens") {
  auto f = test::load("model1_dimerization.fpt");
  auto rows = bound_table(f.model, *f.query, 3);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].lower >= rows[i - 1].lower - 1e-6);
    CHECK(rows[i].upper <= rows[i - 1].upper + 1e-6);
  }
}

TEST_CASE("hit probability sweep") {
  auto f = test::load("pure_birth.fpt");
  auto qq = *f.query;
  qq.order = 3;
  auto rows = cdf_sweep(f.model, qq, {1.0, 0.01, 0.5});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].horizon == 0.01);
  CHECK(rows[0].bounds.upper < 0.01);
  CHECK(rows[0].bounds.lower >= -1e-6);
  double p1 = 1.0 - 2.0 / std::exp(1.0);
  CHECK(rows[2].bounds.lower <= p1 + 1e-6);
  CHECK(rows[2].bounds.upper >= p1 - 1e-6);
  for (const auto& r : rows) {
    CHECK_FALSE(r.lower_decrease);
    CHECK_FALSE(r.upper_decrease);
  }

  auto single = qq;
  single.horizon = 1.0;
  single.objective = Objective::HitProbability;
  auto direct = bound(f.model, single);
  auto one = cdf_sweep(f.model, qq, {1.0});
  CHECK(one[0].bounds.lower == doctest::Approx(direct.lower).epsilon(1e-9));
  CHECK(one[0].bounds.upper == doctest::Approx(direct.upper).epsilon(1e-9));
}

TEST_CASE("invalid queries are rejected before solving") {
  auto m = parse_model("species M\nreaction 0 -> 2 M @ 1\n");
  auto qq = parse_query(m, "query { threshold M >= 5; horizon 1; }");
  CHECK_THROWS_AS(prepare(m, qq), std::invalid_argument);
}

TEST_CASE("json reports round trip") {
  auto f = test::load("model1_dimerization.fpt");
  auto qq = *f.query;
  qq.order = 1;
  auto b = bound(f.model, qq);
  b.warnings.push_back("note");
  auto text = render_bound(b, Format::Json);
  auto back = bound_from_json(text);
  CHECK(back.lower == b.lower);
  CHECK(back.upper == b.upper);
  CHECK(back.order == b.order);
  CHECK(back.min_side.solution.status == b.min_side.solution.status);
  CHECK(render_bound(back, Format::Json) == text);

  BoundResult bad;
  bad.lower = -INFINITY;
  bad.upper = NAN;
  auto t2 = render_bound(bad, Format::Json);
  auto b2 = bound_from_json(t2);
  CHECK(std::isinf(b2.lower));
  CHECK(std::isnan(b2.upper));
  CHECK(render_bound(b2, Format::Json) == t2);
}

TEST_CASE("text renderers") {
  CHECK(parse_format("json") == Format::Json);
  CHECK(parse_format("csv") == Format::Csv);
  CHECK_FALSE(parse_format("xml").has_value());

  auto f = test::load("model1_dimerization.fpt");
  auto moments = render_moments(f.model, *f.query, 2, Format::Text);
  CHECK(moments.find("dE[M]/dt = 100 + 0.2*E[M] - 0.2*E[M^2]") != std::string::npos);
  CHECK(moments.find("dE[D]/dt") != std::string::npos);

  auto g = test::load("model3_gene_expression.fpt");
  auto hm = render_moments(g.model, *g.query, 1, Format::Text);
  auto at = hm.find("k=0,m=(1)@y=10:");
  REQUIRE(at != std::string::npos);
  auto line = hm.substr(at, hm.find('\n', at) - at);
  CHECK(line.find("z[0,1]@y=01") != std::string::npos);
}
