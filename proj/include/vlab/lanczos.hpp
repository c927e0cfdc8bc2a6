#pragma once

// Counting eigenvalues above a threshold for a symmetric operator with a restarted,
// fully reorthogonalized Krylov iteration and locking of converged Ritz pairs.

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vlab/core.hpp"

namespace vlab {

using MatVec = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct CountOptions {
  double threshold = 1.0;
  double margin = 1e-6;       ///< stop once the top unlocked eigenvalue is below threshold - margin
  double ambiguity = 1e-8;    ///< eigenvalues within this of the threshold are flagged
  double tolerance = 1e-11;   ///< Ritz residual (relative to the operator scale) for locking
  int krylov = 60;
  int max_restarts = 400;
  unsigned seed = 12345;
};

struct CountResult {
  int count = 0;                  ///< eigenvalues > threshold
  bool ambiguous = false;
  int count_if_boundary_above = 0;  ///< count when flagged eigenvalues are taken as above
  std::vector<double> locked;     ///< converged eigenvalues, descending
  double next_below = 0.0;        ///< first converged eigenvalue below threshold - margin
  int matvecs = 0;
};

/// Extremal eigenvalues from the top until one falls below threshold - margin.
/// Thick-restarted Krylov iteration: the basis grows by the residual of the leading
/// unconverged Ritz pair (which spans the same space as plain Lanczos steps), converged
/// pairs are locked and deflated, and the basis is compressed to the leading Ritz
/// vectors when full.
inline CountResult count_above(const MatVec& apply, int n, const CountOptions& opt = {}) {
  require(n >= 1, "count_above: operator dimension must be >= 1");
  CountResult res;
  Eigen::MatrixXd L(n, 0);  // locked vectors
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;

  auto deflate = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass)
      if (L.cols() > 0) v -= L * (L.transpose() * v);
  };
  auto op = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n);
    apply(x, y);
    ++res.matvecs;
    deflate(y);
    return y;
  };
  auto random_vector = [&]() {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
  };

  Eigen::MatrixXd V(n, 0), W(n, 0);
  auto append = [&](Eigen::VectorXd t) -> bool {
    deflate(t);
    for (int pass = 0; pass < 2; ++pass)
      if (V.cols() > 0) t -= V * (V.transpose() * t);
    const double nt = t.norm();
    if (!(nt > 1e-12)) return false;
    t /= nt;
    V.conservativeResize(Eigen::NoChange, V.cols() + 1);
    W.conservativeResize(Eigen::NoChange, W.cols() + 1);
    V.col(V.cols() - 1) = t;
    W.col(W.cols() - 1) = op(t);
    return true;
  };

  const int keep = std::max(4, opt.krylov / 4);
  double scale = 0.0;
  append(random_vector());
  for (int iter = 0; iter < opt.max_restarts * opt.krylov; ++iter) {
    const int free_dim = n - static_cast<int>(L.cols());
    if (free_dim <= 0) {
      res.next_below = -std::numeric_limits<double>::infinity();
      break;
    }
    Eigen::MatrixXd H = V.transpose() * W;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const int k = static_cast<int>(V.cols());
    scale = std::max(scale, es.eigenvalues().cwiseAbs().maxCoeff());
    const double tol = opt.tolerance * std::max(scale, 1.0);
    // Leading Ritz pair, from the top.
    const Eigen::VectorXd s = es.eigenvectors().col(k - 1);
    const double theta = es.eigenvalues()(k - 1);
    Eigen::VectorXd y = V * s;
    Eigen::VectorXd r = W * s - theta * y;
    const bool exhausted = (k >= free_dim);
    if (r.norm() <= tol || exhausted) {
      if (theta < opt.threshold - opt.margin) {
        res.next_below = theta;
        break;
      }
      y.normalize();
      L.conservativeResize(Eigen::NoChange, L.cols() + 1);
      L.col(L.cols() - 1) = y;
      res.locked.push_back(theta);
      // Rebuild the basis from the remaining Ritz vectors.
      const int kept = std::min(k - 1, keep);
      Eigen::MatrixXd Vk = V * es.eigenvectors().middleCols(k - 1 - kept, kept);
      V.resize(n, 0);
      W.resize(n, 0);
      for (int j = kept - 1; j >= 0; --j) append(Vk.col(j));
      if (V.cols() == 0) append(random_vector());
      continue;
    }
    if (k >= opt.krylov) {
      // thick restart: keep the leading Ritz vectors, exact in A V
      const Eigen::MatrixXd Sk = es.eigenvectors().rightCols(keep);
      V = V * Sk;
      W = W * Sk;
    }
    if (!append(r)) append(random_vector());
    if (iter + 1 == opt.max_restarts * opt.krylov)
      throw numerical_error("count_above: Krylov iteration did not converge");
  }
  std::sort(res.locked.begin(), res.locked.end(), std::greater<>());
  for (double th : res.locked) {
    if (std::abs(th - opt.threshold) <= opt.ambiguity) {
      res.ambiguous = true;
      ++res.count_if_boundary_above;
    } else if (th > opt.threshold) {
      ++res.count;
      ++res.count_if_boundary_above;
    }
  }
  return res;
}

/// Largest eigenvalue of a symmetric operator from a fully reorthogonalized Lanczos run.
inline double top_eigenvalue(const MatVec& apply, int n, int steps = 80, double tol = 1e-12, unsigned seed = 12345) {
  require(n >= 1, "top_eigenvalue: operator dimension must be >= 1");
  steps = std::min(steps, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd V(n, steps);
  Eigen::VectorXd v(n), w(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  v.normalize();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < steps; ++k) {
    V.col(k) = v;
    apply(v, w);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = V.leftCols(k + 1).transpose() * w;
      w -= V.leftCols(k + 1) * h;
      T.col(k).head(k + 1) += h;
    }
    const Eigen::MatrixXd Tk = 0.5 * (T.topLeftCorner(k + 1, k + 1) + T.topLeftCorner(k + 1, k + 1).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tk, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues()(k);
    const double beta = w.norm();
    if (k + 1 == steps || beta < 1e-14 * std::max(1.0, std::abs(top)) ||
        std::abs(top - prev) <= tol * std::abs(top))
      return top;
    prev = top;
    T(k + 1, k) = beta;
    v = w / beta;
  }
  return prev;
}

/// Largest singular value of a dense matrix.
inline double top_singular_value(const Eigen::MatrixXd& M, int steps = 80) {
  Eigen::VectorXd tmp(M.rows());
  const double s2 = top_eigenvalue(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        tmp.noalias() = M * x;
        y.noalias() = M.transpose() * tmp;
      },
      static_cast<int>(M.cols()), steps);
  return std::sqrt(std::max(0.0, s2));
}

inline CountResult count_above(const Eigen::MatrixXd& A, const CountOptions& opt = {}) {
  require(A.rows() == A.cols(), "count_above: matrix must be square");
  return count_above([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = A * x; },
                     static_cast<int>(A.rows()), opt);
}

}  // namespace vlab
