#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "fptbound/solver.hpp"

using namespace fpt;

namespace {

StandardSdp toy() {
  StandardSdp s;
  s.block_sizes = {2, -3};
  s.c = {1.0, 0.25, -2.0};
  s.matrices = {{{0, 0, 0, -1.0}, {1, 2, 2, 0.5}},
                {{0, 0, 0, 1.0}, {1, 0, 0, 1.0}},
                {{0, 0, 1, 0.1}, {1, 1, 1, 3.0}},
                {{0, 1, 1, 1.0}}};
  s.eq_rows = {{{1, 1.0}, {2, -1.0}}};
  s.eq_rhs = {0.75};
  return s;
}

}  // namespace

TEST_CASE("export layout") {
  auto text = export_sdpa(toy());
  CHECK(text.rfind("*", 0) == 0);
  CHECK(text.find("\n3\n3\n2 -3 -2\n") != std::string::npos);
  CHECK(text.find("\n1 0.25 -2\n") != std::string::npos);
}

TEST_CASE("round trip is exact") {
  auto s = toy();
  auto text = export_sdpa(s);
  auto back = parse_sdpa(text);
  CHECK(back == s);
  CHECK(export_sdpa(back) == text);
}

TEST_CASE("round trip of a moment relaxation") {
  auto m = parse_model(test::model1_text());
  auto q = parse_query(m, "query { threshold D >= 5; horizon 1; order 2; }");
  auto r = reduce(m, q);
  SdpOptions opt;
  opt.species_bounds[0] = 35;
  auto low = lower_to_standard(assemble(r.model, r.query, Sense::Minimize, opt));
  auto text = export_sdpa(low.sdp);
  auto back = parse_sdpa(text);
  CHECK(export_sdpa(back) == text);
  CHECK(back.block_sizes == low.sdp.block_sizes);
  CHECK(back.eq_rows.size() == low.sdp.eq_rows.size());
  auto a = solve(low.sdp), b = solve(back);
  CHECK(a.primal_objective == doctest::Approx(b.primal_objective).epsilon(1e-9));
}

TEST_CASE("foreign files without an equality block") {
  const char* text =
      "\"a plain problem\"\n"
      "1 = mDIM\n"
      "2 = nBLOCK\n"
      "{2, -1}\n"
      "{1.0}\n"
      "0 1 1 2 -1\n"
      "1 1 1 1 1\n"
      "1 1 2 2 1\n"
      "1 2 1 1 1\n";
  auto s = parse_sdpa(text);
  CHECK(s.num_vars() == 1);
  CHECK(s.block_sizes == std::vector<int>{2, -1});
  CHECK(s.eq_rows.empty());
  REQUIRE(s.matrices.size() == 2);
  CHECK(s.matrices[1].size() == 3);
  auto sol = solve(s);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("parse errors report the line") {
  auto line_of = [](const std::string& text) {
    try {
      parse_sdpa(text);
    } catch (const SdpaParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("1\n1\n2\n1\n1 1 1 1 x\n") == 5);
  CHECK(line_of("1\n1\n2\n1\n5 1 1 1 1\n") == 5);
  CHECK(line_of("1\n1\n2\n1\n1 2 1 1 1\n") == 5);
  CHECK(line_of("1\n1\n2\n1\n1 1 3 1 1\n") == 5);
  CHECK(line_of("1\nfoo\n") == 2);
  CHECK(line_of("1\n1\n-2\n1\n1 1 1 2 1\n") == 5);
}

TEST_CASE("solution files") {
  auto sdpa = parse_sdpa_solution(
      "SDPA start\nphase.value = pdOPT\nobjValPrimal = +2.5e-01\nobjValDual   = +2.4999e-01\n"
      "xVec = \n{+1.0e+00,-2.0e+00}\n");
  CHECK(sdpa.status == SolveStatus::Optimal);
  CHECK(sdpa.primal_objective == doctest::Approx(0.25));
  CHECK(sdpa.dual_objective == doctest::Approx(0.24999));
  CHECK(sdpa.x == std::vector<double>{1.0, -2.0});

  auto csdp = parse_sdpa_solution("1.5 2.5 \n1 1 1 1 1.0\n");
  CHECK(csdp.x == std::vector<double>{1.5, 2.5});
}
