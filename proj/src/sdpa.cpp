#include "fptbound/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace fpt {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const char* kEqualityTag = "equality-pairs";

struct Quint {
  int mat, block, i, j;
  double value;
};

}  // namespace

std::string export_sdpa(const StandardSdp& sdp) {
  std::size_t m = sdp.num_vars();
  std::vector<int> sizes = sdp.block_sizes;
  int eq_block = -1;
  std::size_t q = sdp.eq_rows.size();
  if (q > 0) {
    eq_block = static_cast<int>(sizes.size());
    sizes.push_back(-static_cast<int>(2 * q));
  }
  std::map<std::tuple<int, int, int, int>, double> merged;
  for (std::size_t k = 0; k < sdp.matrices.size(); ++k)
    for (const auto& e : sdp.matrices[k]) {
      int i = std::min(e.i, e.j), j = std::max(e.i, e.j);
      merged[{static_cast<int>(k), e.block, i, j}] += e.value;
    }
  for (std::size_t r = 0; r < q; ++r) {
    int pos = static_cast<int>(2 * r);
    for (const auto& [k, v] : sdp.eq_rows[r]) {
      merged[{k + 1, eq_block, pos, pos}] += v;
      merged[{k + 1, eq_block, pos + 1, pos + 1}] -= v;
    }
    merged[{0, eq_block, pos, pos}] += sdp.eq_rhs[r];
    merged[{0, eq_block, pos + 1, pos + 1}] -= sdp.eq_rhs[r];
  }
  std::ostringstream os;
  os << "* fptbound sdpa export";
  if (eq_block >= 0) os << "; " << kEqualityTag << " block=" << eq_block + 1 << " rows=" << q;
  os << "\n";
  os << m << "\n" << sizes.size() << "\n";
  for (std::size_t b = 0; b < sizes.size(); ++b) os << (b ? " " : "") << sizes[b];
  os << "\n";
  for (std::size_t k = 0; k < m; ++k) os << (k ? " " : "") << fmt(sdp.c[k]);
  os << "\n";
  for (const auto& [key, v] : merged) {
    if (v == 0.0) continue;
    auto [mat, blk, i, j] = key;
    os << mat << " " << blk + 1 << " " << i + 1 << " " << j + 1 << " " << fmt(v) << "\n";
  }
  return os.str();
}

namespace {

std::vector<std::string> split_numbers(const std::string& line) {
  std::string cleaned = line;
  for (char& ch : cleaned)
    if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
  std::istringstream is(cleaned);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& s, int line) {
  std::string t = s;
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw SdpaParseError("malformed number '" + s + "'", line);
  return v;
}

long to_long(const std::string& s, int line) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw SdpaParseError("malformed integer '" + s + "'", line);
  return v;
}

}  // namespace

StandardSdp parse_sdpa(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  int eq_block = -1;
  long eq_rows = 0;
  std::vector<std::pair<int, std::string>> content;
  bool header_done = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!header_done && !line.empty() && (line[0] == '*' || line[0] == '"')) {
      auto pos = line.find(kEqualityTag);
      if (pos != std::string::npos) {
        auto bpos = line.find("block=", pos);
        auto rpos = line.find("rows=", pos);
        if (bpos == std::string::npos || rpos == std::string::npos)
          throw SdpaParseError("malformed equality annotation", lineno);
        std::istringstream bs(line.substr(bpos + 6)), rs(line.substr(rpos + 5));
        int b = 0;
        if (!(bs >> b) || !(rs >> eq_rows)) throw SdpaParseError("malformed equality annotation", lineno);
        eq_block = b - 1;
      }
      continue;
    }
    header_done = true;
    auto toks = split_numbers(line);
    if (toks.empty()) continue;
    content.emplace_back(lineno, line);
  }
  if (content.size() < 4) throw SdpaParseError("incomplete header", lineno);
  auto first_tok = [&](std::size_t idx) {
    auto t = split_numbers(content[idx].second);
    return t;
  };
  StandardSdp sdp;
  long m = to_long(first_tok(0)[0], content[0].first);
  long nb = to_long(first_tok(1)[0], content[1].first);
  if (m < 0 || nb <= 0) throw SdpaParseError("invalid dimensions", content[0].first);
  // Block sizes and the objective vector may span several lines.
  std::size_t idx = 2;
  std::vector<std::string> pool;
  auto take = [&](std::size_t count, std::vector<std::pair<std::string, int>>& into) {
    while (into.size() < count) {
      if (idx >= content.size()) throw SdpaParseError("unexpected end of header", lineno);
      for (auto& t : split_numbers(content[idx].second)) into.emplace_back(t, content[idx].first);
      ++idx;
    }
    if (into.size() != count) throw SdpaParseError("too many values on header line", into.back().second);
  };
  std::vector<std::pair<std::string, int>> sizes, costs;
  take(static_cast<std::size_t>(nb), sizes);
  for (const auto& [t, ln] : sizes) {
    long s = to_long(t, ln);
    if (s == 0) throw SdpaParseError("block size zero", ln);
    sdp.block_sizes.push_back(static_cast<int>(s));
  }
  if (m > 0) take(static_cast<std::size_t>(m), costs);
  for (const auto& [t, ln] : costs) sdp.c.push_back(to_double(t, ln));
  sdp.matrices.assign(static_cast<std::size_t>(m) + 1, {});
  std::map<std::pair<long, long>, double> eq_entries;  // (row, var+1) -> value
  for (; idx < content.size(); ++idx) {
    int ln = content[idx].first;
    auto t = split_numbers(content[idx].second);
    if (t.size() != 5) throw SdpaParseError("expected 'matno blkno i j value'", ln);
    long mat = to_long(t[0], ln), blk = to_long(t[1], ln), i = to_long(t[2], ln), j = to_long(t[3], ln);
    double v = to_double(t[4], ln);
    if (mat < 0 || mat > m) throw SdpaParseError("matrix number out of range", ln);
    if (blk < 1 || blk > nb) throw SdpaParseError("block number out of range", ln);
    long size = std::labs(sdp.block_sizes[static_cast<std::size_t>(blk - 1)]);
    if (i < 1 || j < 1 || i > size || j > size) throw SdpaParseError("entry index out of range", ln);
    if (sdp.block_sizes[static_cast<std::size_t>(blk - 1)] < 0 && i != j)
      throw SdpaParseError("off-diagonal entry in a diagonal block", ln);
    if (blk - 1 == eq_block) {
      if (i % 2 == 1) eq_entries[{(i - 1) / 2, mat}] += v;
      continue;
    }
    sdp.matrices[static_cast<std::size_t>(mat)].push_back(
        {static_cast<int>(blk - 1), static_cast<int>(std::min(i, j) - 1), static_cast<int>(std::max(i, j) - 1), v});
  }
  if (eq_block >= 0) {
    if (eq_block >= nb || -sdp.block_sizes[static_cast<std::size_t>(eq_block)] != 2 * eq_rows)
      throw SdpaParseError("equality annotation does not match the block structure", 1);
    sdp.block_sizes.erase(sdp.block_sizes.begin() + eq_block);
    for (auto& mat : sdp.matrices)
      for (auto& e : mat)
        if (e.block > eq_block) --e.block;
    sdp.eq_rows.assign(static_cast<std::size_t>(eq_rows), {});
    sdp.eq_rhs.assign(static_cast<std::size_t>(eq_rows), 0.0);
    for (const auto& [key, v] : eq_entries) {
      auto [row, mat] = key;
      if (mat == 0)
        sdp.eq_rhs[static_cast<std::size_t>(row)] = v;
      else
        sdp.eq_rows[static_cast<std::size_t>(row)].emplace_back(static_cast<int>(mat - 1), v);
    }
  }
  return sdp;
}

Solution parse_sdpa_solution(const std::string& text) {
  Solution sol;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool sdpa_style = text.find("objValPrimal") != std::string::npos || text.find("xVec") != std::string::npos;
  auto value_after_eq = [&](const std::string& l) {
    auto pos = l.find('=');
    if (pos == std::string::npos) throw SdpaParseError("expected '='", lineno);
    auto toks = split_numbers(l.substr(pos + 1));
    if (toks.empty()) throw SdpaParseError("missing value", lineno);
    return toks[0];
  };
  if (sdpa_style) {
    bool have_p = false, have_d = false, want_x = false;
    sol.status = SolveStatus::NumericalFailure;
    while (std::getline(is, line)) {
      ++lineno;
      if (want_x) {
        auto toks = split_numbers(line);
        if (toks.empty()) continue;
        for (const auto& t : toks) sol.x.push_back(to_double(t, lineno));
        want_x = false;
        continue;
      }
      if (line.rfind("objValPrimal", 0) == 0) {
        sol.primal_objective = to_double(value_after_eq(line), lineno);
        have_p = true;
      } else if (line.rfind("objValDual", 0) == 0) {
        sol.dual_objective = to_double(value_after_eq(line), lineno);
        have_d = true;
      } else if (line.rfind("phase.value", 0) == 0) {
        std::string ph = value_after_eq(line);
        if (ph == "pdOPT")
          sol.status = SolveStatus::Optimal;
        else if (ph == "pUNBD" || ph == "pFEAS_dINF")
          sol.status = SolveStatus::Unbounded;
        else if (ph == "dUNBD" || ph == "pINF_dFEAS" || ph == "pdINF")
          sol.status = SolveStatus::Infeasible;
        else
          sol.status = SolveStatus::IterationLimit;
        sol.message = ph;
      } else if (line.rfind("xVec", 0) == 0) {
        auto pos = line.find('=');
        auto rest = pos == std::string::npos ? std::string() : line.substr(pos + 1);
        auto toks = split_numbers(rest);
        if (toks.empty()) {
          want_x = true;
        } else {
          for (const auto& t : toks) sol.x.push_back(to_double(t, lineno));
        }
      } else if (line.rfind("iteration", 0) == 0 && line.find('=') != std::string::npos) {
        sol.iterations = static_cast<int>(to_double(value_after_eq(line), lineno));
      }
    }
    if (!have_p || !have_d) throw SdpaParseError("missing objValPrimal/objValDual", lineno);
    if (sol.message.empty()) sol.status = SolveStatus::Optimal;
  } else {
    // CSDP solution: first line is the x vector, then "1|2 blk i j v" entries.
    while (std::getline(is, line)) {
      ++lineno;
      auto toks = split_numbers(line);
      if (toks.empty()) continue;
      for (const auto& t : toks) sol.x.push_back(to_double(t, lineno));
      break;
    }
    if (sol.x.empty()) throw SdpaParseError("empty solution file", lineno);
    while (std::getline(is, line)) {
      ++lineno;
      auto toks = split_numbers(line);
      if (toks.empty()) continue;
      if (toks.size() != 5) throw SdpaParseError("expected 'matno blkno i j value'", lineno);
      for (const auto& t : toks) to_double(t, lineno);
    }
    sol.status = SolveStatus::Optimal;
    sol.primal_objective = sol.dual_objective = std::numeric_limits<double>::quiet_NaN();
  }
  sol.duality_gap = std::abs(sol.primal_objective - sol.dual_objective) /
                    (1.0 + std::abs(sol.primal_objective) + std::abs(sol.dual_objective));
  return sol;
}

}  // namespace fpt
