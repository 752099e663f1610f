#pragma once

#include "fptbound/sdp.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace fpt {

/// Nonzero of a block matrix; (i, j) with i <= j, 0-based.
struct SparseEntry {
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

/// Block-diagonal SDP in the SDPA convention:
///   minimize c^T x  subject to  sum_k x_k F_k - F_0 >= 0 (PSD),  E x = e.
/// Its dual is: maximize <F_0, Y> subject to <F_k, Y> = c_k, Y >= 0.
/// Negative block sizes denote diagonal blocks.
struct StandardSdp {
  std::vector<int> block_sizes;
  std::vector<double> c;
  /// matrices[0] = F_0, matrices[k] = F_k for variable k - 1.
  std::vector<std::vector<SparseEntry>> matrices;
  std::vector<std::vector<std::pair<int, double>>> eq_rows;
  std::vector<double> eq_rhs;

  std::size_t num_vars() const { return c.size(); }
  bool operator==(const StandardSdp&) const = default;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// Relative gap |p - d| / (1 + |p| + |d|).
  double duality_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  /// Values of the problem variables x.
  std::vector<double> x;
  /// Unscaled moment values (filled when solving a lowered moment problem).
  std::map<MomentVar, double> moment_values;
  std::string message;
};

/// Primal-dual interior point method (HKM direction, Mehrotra predictor
/// corrector, infeasible start). Equality rows are eliminated through an
/// orthonormal null-space basis before iterating.
Solution solve(const StandardSdp& sdp, const SolverOptions& options = {});

/// Result of lowering a moment problem: x_k is the scaled moment vars[k] / scale[k].
struct LoweredSdp {
  StandardSdp sdp;
  std::vector<MomentVar> vars;
  std::vector<double> scale;
  /// +1 for minimization, -1 for maximization (c was negated).
  double objective_sign = 1.0;
};

LoweredSdp lower_to_standard(const SdpProblem& problem);

/// Solves a lowered problem and maps the result back: objectives in the
/// original sense and unscaled moment values.
Solution solve_lowered(const LoweredSdp& lowered, const SolverOptions& options = {});

/// Writes the SDPA sparse format. Equality rows are encoded as a trailing
/// diagonal block of +/- pairs announced in the leading comment line.
std::string export_sdpa(const StandardSdp& sdp);

/// Parses the SDPA sparse format written by export_sdpa (or any .dat-s file).
StandardSdp parse_sdpa(const std::string& text);

/// Parses an SDPA .result file (objValPrimal/objValDual/xVec) or a CSDP
/// solution file (first line holds x).
Solution parse_sdpa_solution(const std::string& text);

class SdpaParseError : public std::runtime_error {
 public:
  SdpaParseError(const std::string& message, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace fpt
