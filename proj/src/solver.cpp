#include "fptbound/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpt {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::Infeasible:
      return "Infeasible";
    case SolveStatus::Unbounded:
      return "Unbounded";
    case SolveStatus::NumericalFailure:
      return "NumericalFailure";
    case SolveStatus::IterationLimit:
      return "IterationLimit";
  }
  return "Unknown";
}

namespace {

struct Entry {
  int i;
  int j;
  double v;
};

// Variable k restricted to one block.
struct VarPart {
  int var;
  std::vector<Entry> entries;
};

struct Structure {
  int m = 0;
  std::vector<int> size;
  std::vector<std::vector<VarPart>> parts;  // per block
  std::vector<std::vector<Entry>> f0;       // per block
  std::vector<char> diag;
  int total_dim = 0;
};

Structure make_structure(const StandardSdp& sdp) {
  Structure st;
  st.m = static_cast<int>(sdp.num_vars());
  if (sdp.matrices.size() != sdp.num_vars() + 1)
    throw std::invalid_argument("StandardSdp needs one matrix per variable plus F_0");
  int nb = static_cast<int>(sdp.block_sizes.size());
  for (int b = 0; b < nb; ++b) {
    int s = std::abs(sdp.block_sizes[static_cast<std::size_t>(b)]);
    if (s == 0) throw std::invalid_argument("block of size zero");
    st.size.push_back(s);
    st.diag.push_back(sdp.block_sizes[static_cast<std::size_t>(b)] < 0);
    st.total_dim += s;
  }
  st.parts.assign(static_cast<std::size_t>(nb), {});
  st.f0.assign(static_cast<std::size_t>(nb), {});
  for (std::size_t k = 0; k < sdp.matrices.size(); ++k) {
    std::vector<std::vector<Entry>> per_block(static_cast<std::size_t>(nb));
    for (const auto& e : sdp.matrices[k]) {
      if (e.block < 0 || e.block >= nb) throw std::invalid_argument("entry refers to a missing block");
      int s = st.size[static_cast<std::size_t>(e.block)];
      int i = std::min(e.i, e.j), j = std::max(e.i, e.j);
      if (i < 0 || j >= s) throw std::invalid_argument("entry index outside its block");
      if (sdp.block_sizes[static_cast<std::size_t>(e.block)] < 0 && i != j)
        throw std::invalid_argument("off-diagonal entry in a diagonal block");
      if (e.value == 0.0) continue;
      auto& list = per_block[static_cast<std::size_t>(e.block)];
      auto it = std::find_if(list.begin(), list.end(), [&](const Entry& x) { return x.i == i && x.j == j; });
      if (it != list.end())
        it->v += e.value;
      else
        list.push_back({i, j, e.value});
    }
    for (int b = 0; b < nb; ++b) {
      auto& list = per_block[static_cast<std::size_t>(b)];
      if (list.empty()) continue;
      if (k == 0)
        st.f0[static_cast<std::size_t>(b)] = std::move(list);
      else
        st.parts[static_cast<std::size_t>(b)].push_back({static_cast<int>(k) - 1, std::move(list)});
    }
  }
  return st;
}

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
// Dense blocks are n x n; diagonal blocks are stored as n x 1 columns.
template <class S>
using Blocks = std::vector<Mat<S>>;

template <class S>
Blocks<S> zeros(const Structure& st) {
  Blocks<S> out;
  for (std::size_t b = 0; b < st.size.size(); ++b)
    out.push_back(st.diag[b] ? Mat<S>(Mat<S>::Zero(st.size[b], 1)) : Mat<S>(Mat<S>::Zero(st.size[b], st.size[b])));
  return out;
}

template <class S>
void add_entries(Mat<S>& M, const std::vector<Entry>& entries, S scale, bool diag) {
  for (const auto& e : entries) {
    if (diag) {
      M(e.i, 0) += scale * S(e.v);
      continue;
    }
    M(e.i, e.j) += scale * S(e.v);
    if (e.i != e.j) M(e.j, e.i) += scale * S(e.v);
  }
}

// sum_k x_k F_k
template <class S>
Blocks<S> apply_at(const Structure& st, const Vec<S>& x) {
  Blocks<S> out = zeros<S>(st);
  for (std::size_t b = 0; b < st.size.size(); ++b)
    for (const auto& part : st.parts[b])
      if (x(part.var) != S(0)) add_entries(out[b], part.entries, x(part.var), st.diag[b]);
  return out;
}

// (<F_k, K>)_k, valid for nonsymmetric K.
template <class S>
Vec<S> apply_a(const Structure& st, const Blocks<S>& K) {
  Vec<S> out = Vec<S>::Zero(st.m);
  for (std::size_t b = 0; b < st.size.size(); ++b)
    for (const auto& part : st.parts[b]) {
      S acc(0);
      if (st.diag[b])
        for (const auto& e : part.entries) acc += S(e.v) * K[b](e.i, 0);
      else
        for (const auto& e : part.entries)
          acc += S(e.v) * (e.i == e.j ? K[b](e.i, e.i) : K[b](e.i, e.j) + K[b](e.j, e.i));
      out(part.var) += acc;
    }
  return out;
}

template <class S>
S inner(const Blocks<S>& A, const Blocks<S>& B) {
  S acc(0);
  for (std::size_t b = 0; b < A.size(); ++b) acc += A[b].cwiseProduct(B[b]).sum();
  return acc;
}

template <class S>
S max_abs(const Blocks<S>& A) {
  S acc(0);
  for (const auto& M : A)
    if (M.size()) acc = std::max(acc, S(M.cwiseAbs().maxCoeff()));
  return acc;
}

template <class S>
S fro_norm(const Blocks<S>& A) {
  S acc(0);
  for (const auto& M : A) acc += M.squaredNorm();
  return std::sqrt(acc);
}

template <class S>
Mat<S> mul3(const Mat<S>& A, const Mat<S>& B, const Mat<S>& C, bool diag) {
  if (diag) return A.cwiseProduct(B).cwiseProduct(C);
  return A * B * C;
}

template <class S>
Mat<S> sym(const Mat<S>& M, bool diag) {
  if (diag) return M;
  return (M + M.transpose()) / S(2);
}

template <class S>
bool is_pd(const Mat<S>& M, bool diag) {
  if (diag) return M.size() == 0 || M.minCoeff() > S(0);
  return Eigen::LLT<Mat<S>>(M).info() == Eigen::Success;
}

template <class S>
S min_eigenvalue(const Mat<S>& M, bool diag) {
  if (diag) return M.minCoeff();
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Largest step alpha with X + alpha dX PSD (infinity if unbounded).
template <class S>
bool max_step(const Structure& st, const Blocks<S>& X, const Blocks<S>& dX, S& alpha) {
  alpha = std::numeric_limits<S>::infinity();
  for (std::size_t b = 0; b < X.size(); ++b) {
    if (st.diag[b]) {
      for (Eigen::Index i = 0; i < X[b].rows(); ++i) {
        if (!(X[b](i, 0) > S(0))) return false;
        if (dX[b](i, 0) < S(0)) alpha = std::min(alpha, -X[b](i, 0) / dX[b](i, 0));
      }
      continue;
    }
    Eigen::LLT<Mat<S>> llt(X[b]);
    if (llt.info() != Eigen::Success) return false;
    Mat<S> Linv = llt.matrixL().solve(Mat<S>::Identity(X[b].rows(), X[b].cols()));
    Mat<S> W = Linv * dX[b] * Linv.transpose();
    W = (W + W.transpose()) / S(2);
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(W, Eigen::EigenvaluesOnly);
    S lmin = es.eigenvalues().minCoeff();
    if (lmin < S(0)) alpha = std::min(alpha, S(-1) / lmin);
  }
  return true;
}

// Interior iterate carried from a double run into the extended precision run.
struct IpmState {
  Vec<long double> w;
  Blocks<long double> Y, Z;
};

template <class S, class T>
Blocks<T> cast_blocks(const Blocks<S>& A) {
  Blocks<T> out;
  for (const auto& M : A) out.push_back(M.template cast<T>());
  return out;
}

template <class S>
Solution run_ipm(const StandardSdp& sdp, const Structure& st, const SolverOptions& opt,
                 const IpmState* start = nullptr, IpmState* best_state = nullptr) {
  Solution sol;
  const int m = st.m;
  const std::size_t nb = st.size.size();
  Vec<S> c(m);
  for (int k = 0; k < m; ++k) c(k) = S(sdp.c[static_cast<std::size_t>(k)]);

  // Eliminate equality rows: x = xp + N w.
  Mat<S> N;
  Vec<S> xp = Vec<S>::Zero(m);
  const int q = static_cast<int>(sdp.eq_rows.size());
  if (q > 0) {
    Mat<S> E = Mat<S>::Zero(q, m);
    Vec<S> e(q);
    for (int r = 0; r < q; ++r) {
      for (const auto& [k, v] : sdp.eq_rows[static_cast<std::size_t>(r)]) {
        if (k < 0 || k >= m) throw std::invalid_argument("equality row refers to a missing variable");
        E(r, k) += S(v);
      }
      e(r) = S(sdp.eq_rhs[static_cast<std::size_t>(r)]);
    }
    Eigen::ColPivHouseholderQR<Mat<S>> qr(E.transpose());
    qr.setThreshold(S(1e-12));
    int rank = static_cast<int>(qr.rank());
    Mat<S> Q = qr.householderQ();
    N = Q.rightCols(m - rank);
    // Minimum-norm particular solution from the same factorization:
    // E^T P = Q R, so E = P R^T Q^T and xp = Q_1 R_11^{-T} (P^T e)_1.
    Vec<S> pe = qr.colsPermutation().transpose() * e;
    Mat<S> R11 = qr.matrixR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>();
    Vec<S> u = R11.transpose().template triangularView<Eigen::Lower>().solve(pe.head(rank));
    xp = Q.leftCols(rank) * u;
    S resid = (E * xp - e).cwiseAbs().maxCoeff();
    S escale = S(1) + e.cwiseAbs().maxCoeff();
    if (resid > S(1e-8) * escale) {
      sol.status = SolveStatus::Infeasible;
      sol.message = "equality constraints are inconsistent";
      return sol;
    }
  } else {
    N = Mat<S>::Identity(m, m);
  }
  const int p = static_cast<int>(N.cols());
  const bool identity_n = q == 0;

  Blocks<S> F0 = zeros<S>(st);
  for (std::size_t b = 0; b < nb; ++b) add_entries(F0[b], st.f0[b], S(1), st.diag[b]);
  auto slack_of = [&](const Vec<S>& x) {
    Blocks<S> Sx = apply_at<S>(st, x);
    for (std::size_t b = 0; b < nb; ++b) Sx[b] -= F0[b];
    return Sx;
  };
  Blocks<S> G0 = slack_of(xp);
  const S const_obj = c.dot(xp);
  Vec<S> g = identity_n ? c : Vec<S>(N.transpose() * c);
  auto to_x = [&](const Vec<S>& w) -> Vec<S> { return identity_n ? Vec<S>(xp + w) : Vec<S>(xp + N * w); };
  auto project = [&](const Vec<S>& v) -> Vec<S> { return identity_n ? v : Vec<S>(N.transpose() * v); };

  const S n_tot = S(st.total_dim);
  if (p == 0) {
    // Fully determined by the equalities.
    bool psd = true;
    for (std::size_t b = 0; b < nb; ++b)
      if (min_eigenvalue(G0[b], st.diag[b]) < -S(opt.feas_tol)) psd = false;
    sol.status = psd ? SolveStatus::Optimal : SolveStatus::Infeasible;
    sol.primal_objective = sol.dual_objective = static_cast<double>(const_obj);
    sol.x.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) sol.x[static_cast<std::size_t>(k)] = static_cast<double>(xp(k));
    return sol;
  }

  // Starting point following the usual norm-based heuristic.
  S max_gnorm(0), max_ratio(0);
  for (int i = 0; i < p; ++i) {
    Vec<S> col = identity_n ? Vec<S>(Vec<S>::Unit(m, i)) : Vec<S>(N.col(i));
    S nrm = fro_norm(apply_at<S>(st, col));
    max_gnorm = std::max(max_gnorm, nrm);
    max_ratio = std::max(max_ratio, (S(1) + std::abs(g(i))) / (S(1) + nrm));
  }
  S g0norm = fro_norm(G0);
  S alpha0 = n_tot * max_ratio;
  S beta0 = (S(1) + std::max(max_gnorm, g0norm)) / std::sqrt(n_tot);
  Blocks<S> Y = zeros<S>(st), Z = zeros<S>(st);
  for (std::size_t b = 0; b < nb; ++b) {
    if (st.diag[b]) {
      Y[b].setConstant(S(10) * alpha0);
      Z[b].setConstant(S(10) * beta0);
    } else {
      Y[b].diagonal().setConstant(S(10) * alpha0);
      Z[b].diagonal().setConstant(S(10) * beta0);
    }
  }
  Vec<S> w = Vec<S>::Zero(p);
  if (start && start->w.size() == p) {
    w = start->w.template cast<S>();
    Y = cast_blocks<long double, S>(start->Y);
    Z = cast_blocks<long double, S>(start->Z);
  }
  const S gnorm = g.norm();
  const S pscale = S(1) + std::max(max_abs(G0), max_abs(F0));
  const S dscale = S(1) + S(g.cwiseAbs().maxCoeff());

  // Rows of each diagonal block with the variables touching them.
  std::vector<std::vector<std::vector<std::pair<int, S>>>> diag_rows(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (!st.diag[b]) continue;
    diag_rows[b].resize(static_cast<std::size_t>(st.size[b]));
    for (const auto& part : st.parts[b])
      for (const auto& e : part.entries) diag_rows[b][static_cast<std::size_t>(e.i)].emplace_back(part.var, S(e.v));
  }

  auto fill_solution = [&](const Vec<S>& wv, S pobj, S dobj, S pinf, S dinf, int iters) {
    Vec<S> x = to_x(wv);
    sol.x.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) sol.x[static_cast<std::size_t>(k)] = static_cast<double>(x(k));
    sol.primal_objective = static_cast<double>(pobj);
    sol.dual_objective = static_cast<double>(dobj);
    sol.duality_gap = static_cast<double>(std::abs(pobj - dobj) / (S(1) + std::abs(pobj) + std::abs(dobj)));
    sol.primal_infeasibility = static_cast<double>(pinf);
    sol.dual_infeasibility = static_cast<double>(dinf);
    sol.iterations = iters;
  };

  const S tau = S(0.95);
  int stalls = 0;
  // Best iterate by its worst tolerance ratio; returned when progress stops.
  Solution best;
  S best_merit = std::numeric_limits<S>::infinity();
  int since_best = 0;
  // A steady fall of mu also counts as progress while the gap is still dominated by large duals.
  S progress_mu = std::numeric_limits<S>::infinity();
  auto finish = [&](SolveStatus status, const char* message) {
    if (best_merit <= S(1)) {
      best.status = SolveStatus::Optimal;
      best.message = "";
      return best;
    }
    if (best_merit < std::numeric_limits<S>::infinity() && status != SolveStatus::Infeasible &&
        status != SolveStatus::Unbounded) {
      best.status = status;
      best.message = message;
      return best;
    }
    sol.status = status;
    sol.message = message;
    return sol;
  };
  for (int iter = 0;; ++iter) {
    Vec<S> x = to_x(w);
    Blocks<S> Sx = slack_of(x);
    Blocks<S> Fd(nb);
    for (std::size_t b = 0; b < nb; ++b) Fd[b] = Sx[b] - Z[b];
    Vec<S> Fp = g - project(apply_a<S>(st, Y));
    S pobj = c.dot(x);
    S dobj = const_obj - inner(G0, Y);
    S pinf = max_abs(Fd) / pscale;
    S dinf = S(Fp.cwiseAbs().maxCoeff()) / dscale;
    S gap = std::abs(pobj - dobj) / (S(1) + std::abs(pobj) + std::abs(dobj));
    S mu = inner(Y, Z) / n_tot;
    fill_solution(w, pobj, dobj, pinf, dinf, iter);
    if (opt.verbose)
      std::fprintf(stderr, "it %3d pobj %+.10e dobj %+.10e gap %.2e pinf %.2e dinf %.2e mu %.2e\n", iter,
                   static_cast<double>(pobj), static_cast<double>(dobj), static_cast<double>(gap),
                   static_cast<double>(pinf), static_cast<double>(dinf), static_cast<double>(mu));
    if (gap <= S(opt.gap_tol) && pinf <= S(opt.feas_tol) && dinf <= S(opt.feas_tol)) {
      sol.status = SolveStatus::Optimal;
      return sol;
    }
    S merit = std::max({gap / S(opt.gap_tol), pinf / S(opt.feas_tol), dinf / S(opt.feas_tol)});
    if (merit < best_merit) {
      best_merit = merit;
      best = sol;
      since_best = 0;
      progress_mu = mu;
      if (best_state) {
        best_state->w = w.template cast<long double>();
        best_state->Y = cast_blocks<S, long double>(Y);
        best_state->Z = cast_blocks<S, long double>(Z);
      }
    } else if (mu < S(0.1) * progress_mu) {
      progress_mu = mu;
      since_best = 0;
    } else if (++since_best >= 30) {
      return finish(SolveStatus::NumericalFailure, "no progress in 30 iterations");
    }
    // Ray certificates once iterates blow up.
    S ynorm = fro_norm(Y);
    if (ynorm > S(1e10)) {
      S ray = -inner(G0, Y) / ynorm;
      S resid = project(apply_a<S>(st, Y)).norm() / ynorm;
      if (ray > S(1e-8) && resid < S(1e-10) * (S(1) + gnorm))
        return finish(SolveStatus::Infeasible, "dual ray certifies an empty feasible set");
    }
    S wnorm = w.norm();
    if (wnorm > S(1e10)) {
      S slope = g.dot(w) / wnorm;
      if (slope < S(-1e-8) && fro_norm(Fd) / wnorm < S(1e-10))
        return finish(SolveStatus::Unbounded, "primal ray decreases the objective without bound");
    }
    if (iter >= opt.max_iter) return finish(SolveStatus::IterationLimit, "iteration limit reached");

    // Schur complement M_x(k,l) = <F_k, Y F_l Z^{-1}>.
    Blocks<S> Zinv(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      if (st.diag[b]) {
        if (!is_pd(Z[b], true)) return finish(SolveStatus::NumericalFailure, "slack matrix lost definiteness");
        Zinv[b] = Z[b].cwiseInverse();
        continue;
      }
      Eigen::LLT<Mat<S>> llt(Z[b]);
      if (llt.info() != Eigen::Success) return finish(SolveStatus::NumericalFailure, "slack matrix lost definiteness");
      Zinv[b] = llt.solve(Mat<S>::Identity(st.size[b], st.size[b]));
      Zinv[b] = (Zinv[b] + Zinv[b].transpose()) / S(2);
    }
    Mat<S> Mx = Mat<S>::Zero(m, m);
    for (std::size_t b = 0; b < nb; ++b) {
      if (st.diag[b]) {
        for (std::size_t i = 0; i < diag_rows[b].size(); ++i) {
          S d = Y[b](static_cast<Eigen::Index>(i), 0) * Zinv[b](static_cast<Eigen::Index>(i), 0);
          for (const auto& [ka, va] : diag_rows[b][i])
            for (const auto& [kl, vl] : diag_rows[b][i]) Mx(ka, kl) += va * vl * d;
        }
        continue;
      }
      const auto& parts = st.parts[b];
      int s = st.size[b];
      Mat<S> P(s, s);
      for (std::size_t a = 0; a < parts.size(); ++a) {
        P.setZero();
        for (const auto& e : parts[a].entries) {
          P.noalias() += S(e.v) * Y[b].col(e.i) * Zinv[b].row(e.j);
          if (e.i != e.j) P.noalias() += S(e.v) * Y[b].col(e.j) * Zinv[b].row(e.i);
        }
        for (std::size_t l = a; l < parts.size(); ++l) {
          S acc(0);
          for (const auto& e : parts[l].entries) acc += S(e.v) * (e.i == e.j ? P(e.i, e.i) : P(e.i, e.j) + P(e.j, e.i));
          Mx(parts[a].var, parts[l].var) += acc;
          if (l != a) Mx(parts[l].var, parts[a].var) += acc;
        }
      }
    }
    Mat<S> Mw = identity_n ? Mx : Mat<S>(N.transpose() * Mx * N);
    Mw = (Mw + Mw.transpose()) / S(2);
    // Jacobi equilibration.
    Vec<S> jd(p);
    for (int i = 0; i < p; ++i) jd(i) = Mw(i, i) > S(0) ? S(1) / std::sqrt(Mw(i, i)) : S(1);
    Mw = jd.asDiagonal() * Mw * jd.asDiagonal();
    Eigen::LLT<Mat<S>> chol(Mw);
    Eigen::LDLT<Mat<S>> ldlt;
    bool use_ldlt = chol.info() != Eigen::Success;
    if (use_ldlt) {
      ldlt.compute(Mw);
      if (ldlt.info() != Eigen::Success)
        return finish(SolveStatus::NumericalFailure, "Schur complement factorization failed");
    }
    auto schur_solve = [&](const Vec<S>& rhs) -> Vec<S> {
      Vec<S> r = jd.cwiseProduct(rhs);
      Vec<S> v = use_ldlt ? Vec<S>(ldlt.solve(r)) : Vec<S>(chol.solve(r));
      return jd.cwiseProduct(v);
    };

    // Direction for target mu_t with optional second-order correction.
    auto direction = [&](S mu_t, const Blocks<S>* corr, Vec<S>& dw, Blocks<S>& dY, Blocks<S>& dZ) {
      Blocks<S> K(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        K[b] = mu_t * Zinv[b] - mul3(Y[b], Fd[b], Zinv[b], st.diag[b]);
        if (corr) K[b] -= (*corr)[b];
      }
      Vec<S> rhs = project(apply_a<S>(st, K)) - g;
      dw = schur_solve(rhs);
      auto expand = [&]() {
        Vec<S> dx = identity_n ? dw : Vec<S>(N * dw);
        dZ = apply_at<S>(st, dx);
        dY.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
          dZ[b] += Fd[b];
          Mat<S> D = mu_t * Zinv[b] - Y[b] - mul3(Y[b], dZ[b], Zinv[b], st.diag[b]);
          if (corr) D -= (*corr)[b];
          dY[b] = sym(D, st.diag[b]);
        }
      };
      expand();
      // Refinement against the dual residual equation A(dY) = Fp.
      for (int pass = 0; pass < 2; ++pass) {
        Vec<S> res = project(apply_a<S>(st, dY)) - Fp;
        dw += schur_solve(res);
        expand();
      }
    };

    Vec<S> dw_a;
    Blocks<S> dY_a, dZ_a;
    direction(S(0), nullptr, dw_a, dY_a, dZ_a);
    S ap, ad;
    if (!max_step(st, Y, dY_a, ap) || !max_step(st, Z, dZ_a, ad))
      return finish(SolveStatus::NumericalFailure, "iterate lost definiteness");
    ap = std::min(S(1), ap);
    ad = std::min(S(1), ad);
    Blocks<S> Ya(nb), Za(nb), corr(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      Ya[b] = Y[b] + ap * dY_a[b];
      Za[b] = Z[b] + ad * dZ_a[b];
      corr[b] = mul3(dY_a[b], dZ_a[b], Zinv[b], st.diag[b]);
    }
    S mu_aff = inner(Ya, Za) / n_tot;
    S sigma = mu > S(0) ? std::pow(std::max(S(0), mu_aff) / mu, 3) : S(0);
    sigma = std::min(S(1), std::max(S(0), sigma));

    Vec<S> dw;
    Blocks<S> dY, dZ;
    direction(sigma * mu, &corr, dw, dY, dZ);
    if (!max_step(st, Y, dY, ap) || !max_step(st, Z, dZ, ad))
      return finish(SolveStatus::NumericalFailure, "iterate lost definiteness");
    ap = std::min(S(1), tau * ap);
    ad = std::min(S(1), tau * ad);
    if (!std::isfinite(static_cast<double>(ap)) || !std::isfinite(static_cast<double>(ad)) ||
        !std::isfinite(static_cast<double>(dw.norm())))
      return finish(SolveStatus::NumericalFailure, "non-finite search direction");
    if (std::max(ap, ad) < S(1e-9)) {
      if (++stalls >= 3) return finish(SolveStatus::NumericalFailure, "step length collapsed");
    } else {
      stalls = 0;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      Y[b] = sym(Mat<S>(Y[b] + ap * dY[b]), st.diag[b]);
      Z[b] = sym(Mat<S>(Z[b] + ad * dZ[b]), st.diag[b]);
    }
    w += ad * dw;
    if (ad == S(1) || pinf < S(1e-3) * S(opt.feas_tol)) {
      Blocks<S> Sn = slack_of(to_x(w));
      bool pd = true;
      for (std::size_t b = 0; b < nb && pd; ++b) pd = is_pd(Sn[b], st.diag[b]);
      if (pd) Z = std::move(Sn);
    }
  }
}

}  // namespace

Solution solve(const StandardSdp& sdp, const SolverOptions& options) {
  if (sdp.eq_rows.size() != sdp.eq_rhs.size()) throw std::invalid_argument("equality rows and rhs differ in length");
  Structure st = make_structure(sdp);
  IpmState state;
  Solution sol = run_ipm<double>(sdp, st, options, nullptr, &state);
  if (sol.status == SolveStatus::NumericalFailure || sol.status == SolveStatus::IterationLimit) {
    SolverOptions rest = options;
    rest.max_iter = std::max(1, options.max_iter - sol.iterations);
    Solution ext = run_ipm<long double>(sdp, st, rest, state.w.size() ? &state : nullptr);
    if (ext.status != SolveStatus::Optimal && state.w.size()) {
      Solution cold = run_ipm<long double>(sdp, st, options);
      if (cold.status == SolveStatus::Optimal || cold.duality_gap < ext.duality_gap) ext = cold;
    } else {
      ext.iterations += sol.iterations;
    }
    if (ext.status == SolveStatus::Optimal || ext.duality_gap < sol.duality_gap) {
      ext.message = ext.message.empty() ? "solved in extended precision" : ext.message + " (extended precision)";
      return ext;
    }
  }
  return sol;
}

LoweredSdp lower_to_standard(const SdpProblem& problem) {
  LoweredSdp out;
  out.vars = problem.vars;
  std::size_t m = problem.vars.size();
  out.scale.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.scale[k] = problem.scaling.factor(problem.vars[k]);
  out.objective_sign = problem.sense == Sense::Minimize ? 1.0 : -1.0;
  StandardSdp& s = out.sdp;
  s.c.assign(m, 0.0);
  for (const auto& [v, coef] : problem.objective) {
    std::size_t k = problem.var_index.at(v);
    s.c[k] += out.objective_sign * coef * out.scale[k];
  }
  s.matrices.assign(m + 1, {});
  std::vector<std::string> pop = problem.population_names;
  // Basis scales for the congruence D^{-1/2} M D^{-1/2}.
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const MatrixSpec& spec = problem.blocks[b];
    std::size_t n = spec.size();
    std::vector<double> bs(n, 1.0);
    if (problem.scaled && !problem.scaling.species_scale.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        const MultiIndex& e = spec.basis.monomials[i];
        double v = 1.0;
        std::size_t pos = 0;
        if (spec.measure.has_time()) v *= std::pow(problem.scaling.time_scale, e[pos++]);
        for (int slot = 0; slot < static_cast<int>(problem.population_names.size()); ++slot) {
          if (spec.measure.kind == MeasureKind::HitFace && spec.measure.face == slot) continue;
          v *= std::pow(problem.scaling.species_scale[static_cast<std::size_t>(slot)], e[pos++]);
        }
        bs[i] = v;
      }
    }
    std::vector<SparseEntry> entries;
    double maxabs = 0.0;
    std::vector<std::pair<std::size_t, SparseEntry>> tmp;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        for (const auto& [v, coef] : spec.entry(i, j)) {
          std::size_t k = problem.var_index.at(v);
          double val = coef * out.scale[k] / (bs[i] * bs[j]);
          maxabs = std::max(maxabs, std::abs(val));
          tmp.push_back({k, SparseEntry{static_cast<int>(b), static_cast<int>(i), static_cast<int>(j), val}});
        }
    if (maxabs == 0.0) maxabs = 1.0;
    for (auto& [k, e] : tmp) {
      e.value /= maxabs;
      s.matrices[k + 1].push_back(e);
    }
    s.block_sizes.push_back(static_cast<int>(n));
  }
  if (!problem.bounds.empty()) {
    int b = static_cast<int>(s.block_sizes.size());
    int row = 0;
    for (const auto& vb : problem.bounds) {
      std::size_t k = problem.var_index.at(vb.var);
      s.matrices[k + 1].push_back(SparseEntry{b, row, row, 1.0});
      ++row;
      if (vb.upper) {
        s.matrices[k + 1].push_back(SparseEntry{b, row, row, -1.0});
        s.matrices[0].push_back(SparseEntry{b, row, row, -*vb.upper / out.scale[k]});
        ++row;
      }
    }
    s.block_sizes.push_back(-row);
  }
  for (const auto& eq : problem.equalities) {
    std::vector<std::pair<int, double>> row;
    double maxabs = 0.0;
    for (const auto& [v, coef] : eq.terms) {
      std::size_t k = problem.var_index.at(v);
      double val = coef.get_d() * out.scale[k];
      maxabs = std::max(maxabs, std::abs(val));
      row.emplace_back(static_cast<int>(k), val);
    }
    if (maxabs == 0.0) continue;
    for (auto& [k, val] : row) val /= maxabs;
    s.eq_rows.push_back(std::move(row));
    s.eq_rhs.push_back(-eq.constant.get_d() / maxabs);
  }
  return out;
}

Solution solve_lowered(const LoweredSdp& lowered, const SolverOptions& options) {
  Solution sol = solve(lowered.sdp, options);
  sol.primal_objective *= lowered.objective_sign;
  sol.dual_objective *= lowered.objective_sign;
  if (sol.x.size() == lowered.vars.size())
    for (std::size_t k = 0; k < lowered.vars.size(); ++k)
      sol.moment_values[lowered.vars[k]] = sol.x[k] * lowered.scale[k];
  return sol;
}

}  // namespace fpt
