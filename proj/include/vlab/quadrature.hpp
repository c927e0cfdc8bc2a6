#pragma once

// One-dimensional Gauss rules used throughout the library.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace vlab {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1, 1], Newton iteration on the three-term recurrence.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) { p1 = x; p0 = 1.0; }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Gauss-Jacobi rule for the weight (1-t)^a (1+t)^b on [-1, 1] (Golub-Welsch).
inline GaussRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
  if (a <= -1.0 || b <= -1.0) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
  Eigen::VectorXd diag(n), off(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    diag(k) = (s == 0.0 || (s + 2.0) == 0.0) ? (b - a) / (a + b + 2.0)
                                              : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double kk = k + 1.0;
      const double s1 = 2.0 * kk + a + b;
      off(k) = std::sqrt(4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) /
                         (s1 * s1 * (s1 + 1.0) * (s1 - 1.0)));
    }
  }
  if (n == 1) diag(0) = (b - a) / (a + b + 2.0);
  const double mu0 = std::pow(2.0, a + b + 1.0) * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                                            std::lgamma(a + b + 2.0));
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off.head(n - 1), Eigen::ComputeEigenvectors);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v0 * v0;
  }
  return rule;
}

/// Normalized angular-average rule for directions in R^d: weight (1-t^2)^{(d-3)/2},
/// weights summing to one. For d = 3 this is Gauss-Legendre, for d = 4 Chebyshev of the
/// second kind.
inline GaussRule angular_average_rule(int d, int n) {
  if (d < 2) throw std::invalid_argument("angular_average_rule: d must be >= 2");
  const double e = 0.5 * (d - 3);
  GaussRule rule = (d == 3) ? gauss_legendre(n) : gauss_jacobi(n, e, e);
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

/// Affine map of a rule on [-1, 1] to [lo, hi].
inline GaussRule map_rule(const GaussRule& ref, double lo, double hi) {
  GaussRule out;
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.nodes[i] = mid + half * ref.nodes[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

/// Barycentric Lagrange interpolation on a fixed node set.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(std::vector<double> nodes) : x_(std::move(nodes)), w_(x_.size(), 1.0) {
    for (std::size_t j = 0; j < x_.size(); ++j)
      for (std::size_t k = 0; k < x_.size(); ++k)
        if (k != j) w_[j] /= (x_[j] - x_[k]);
  }

  /// Values of all basis polynomials at t.
  void evaluate(double t, std::vector<double>& out) const {
    out.assign(x_.size(), 0.0);
    for (std::size_t j = 0; j < x_.size(); ++j) {
      if (t == x_[j]) {
        out[j] = 1.0;
        return;
      }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < x_.size(); ++j) {
      out[j] = w_[j] / (t - x_[j]);
      denom += out[j];
    }
    for (double& v : out) v /= denom;
  }

  std::size_t size() const { return x_.size(); }

 private:
  std::vector<double> x_;
  std::vector<double> w_;
};

}  // namespace vlab
