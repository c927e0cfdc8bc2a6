#pragma once

// Bessel-type series, digamma values and free-resolvent kernels.

#include <array>
#include <cmath>
#include <complex>
#include <functional>

#include "vlab/core.hpp"

namespace vlab {

inline constexpr int series_order = 30;

/// psi(k) = H_{k-1} - gamma for positive integers.
inline double digamma(int k) {
  require(k >= 1, "digamma: argument must be a positive integer");
  double h = 0.0;
  for (int j = 1; j < k; ++j) h += 1.0 / j;
  return h - euler_gamma;
}

/// Coefficient tables a_k = (-1)^k / (4^k k! (k+1)!) and b_k = (psi(k+1) + psi(k+2)) a_k.
struct SeriesCoefficients {
  int order = series_order;
  std::array<double, series_order + 1> a{};
  std::array<double, series_order + 1> b{};
  std::array<double, series_order + 2> psi{};  ///< psi[k] = psi(k), psi[0] unused
};

inline const SeriesCoefficients& series_coefficients() {
  static const SeriesCoefficients c = [] {
    SeriesCoefficients s;
    for (int k = 1; k <= series_order + 1; ++k) s.psi[k] = digamma(k);
    double fk = 1.0;  // k!
    for (int k = 0; k <= series_order; ++k) {
      if (k > 0) fk *= k;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      s.a[k] = sign / (std::pow(4.0, k) * fk * fk * (k + 1));
      const double psi_next = (k + 2 <= series_order + 1) ? s.psi[k + 2] : digamma(k + 2);
      s.b[k] = (s.psi[k + 1] + psi_next) * s.a[k];
    }
    return s;
  }();
  return c;
}

/// Largest |zeta| for which the truncated series is trusted.
inline constexpr double hankel_series_radius = 5.0;

/// H_1^{(1)}(zeta) = J_1 + i Y_1 from the ascending series with J terms.
inline std::complex<double> hankel1_1(std::complex<double> zeta, int terms = series_order) {
  require(zeta != std::complex<double>(0.0, 0.0), "hankel1_1: zeta = 0 is a pole");
  require(std::abs(zeta) <= hankel_series_radius + 1e-12, "hankel1_1: |zeta| exceeds the validated series radius 5");
  require(terms >= 1 && terms <= series_order, "hankel1_1: truncation order out of range");
  const auto& c = series_coefficients();
  const std::complex<double> z2 = zeta * zeta;
  std::complex<double> sa = 0.0, sb = 0.0, p = 1.0;
  for (int k = 0; k <= terms; ++k) {
    sa += c.a[k] * p;
    sb += c.b[k] * p;
    p *= z2;
  }
  const std::complex<double> j1 = 0.5 * zeta * sa;
  const std::complex<double> y1 =
      -2.0 / (pi * zeta) + (2.0 / pi) * std::log(0.5 * zeta) * j1 - zeta / (2.0 * pi) * sb;
  return j1 + std::complex<double>(0.0, 1.0) * y1;
}

/// Above this the K_1 series cancels (terms grow like e^x while the sum decays like e^-x).
inline constexpr double k1_series_limit = 2.0;

/// x K_1(x) for x > 0: ascending series for small x, the library routine beyond.
inline double x_bessel_k1(double x) {
  require(x > 0.0, "x_bessel_k1: argument must be > 0");
  if (x > k1_series_limit) return x * std::cyl_bessel_k(1.0, x);
  const auto& c = series_coefficients();
  // K_1 shares the a_k, b_k tables with the sign pattern removed: (x/2)^{2k} terms.
  const double q = 0.25 * x * x;
  double si = 0.0, sb = 0.0, p = 1.0;
  for (int k = 0; k <= series_order; ++k) {
    const double ak = std::abs(c.a[k]) * std::pow(4.0, k);  // 1/(k!(k+1)!)
    si += ak * p;
    sb += (c.psi[k + 1] + digamma(k + 2)) * ak * p;
    p *= q;
  }
  const double i1 = 0.5 * x * si;
  return 1.0 + x * std::log(0.5 * x) * i1 - 0.25 * x * x * sb;
}

/// Kernel of (-(1/2m) Delta - z)^{-1} at separation s in d = 3 or 4.
inline double free_resolvent_kernel(int d, double m, double z, double s) {
  require(s > 0.0, "free_resolvent_kernel: separation must be > 0");
  require(z <= 0.0, "free_resolvent_kernel: energy must be <= 0");
  require(m > 0.0, "free_resolvent_kernel: mass must be > 0");
  require(d == 3 || d == 4, "free_resolvent_kernel: dimension must be 3 or 4");
  const double kappa = std::sqrt(-2.0 * m * z);
  if (d == 3) return m / (2.0 * pi) * std::exp(-kappa * s) / s;
  if (z == 0.0) return m / (2.0 * pi * pi * s * s);
  // H_1^{(1)}(i x) = -(2/pi) K_1(x): the Hankel form on the imaginary axis is real.
  return m / (2.0 * pi * pi * s * s) * x_bessel_k1(kappa * s);
}

// ---------------------------------------------------------------------------
// Partial-wave Green's functions
// ---------------------------------------------------------------------------

namespace detail {

// e^{-x} I_nu(x) and e^{x} K_nu(x); asymptotic series once the library routines overflow.
inline double scaled_bessel_i(double nu, double x) {
  if (x < 600.0) return std::cyl_bessel_i(nu, x) * std::exp(-x);
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 12; ++k) {
    term *= -(mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
    sum += term;
  }
  return sum / std::sqrt(2.0 * pi * x);
}

inline double scaled_bessel_k(double nu, double x) {
  if (x < 600.0) return std::cyl_bessel_k(nu, x) * std::exp(x);
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 12; ++k) {
    term *= (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
    sum += term;
  }
  return sum * std::sqrt(pi / (2.0 * x));
}

}  // namespace detail

/// Angular-momentum-ell component of the free resolvent kernel in R^d, as a kernel on
/// radial functions with respect to the measure w_d r^{d-1} dr.
inline double radial_green(int d, int ell, double m, double z, double r, double rp) {
  require(d >= 3 && ell >= 0, "radial_green: need d >= 3 and ell >= 0");
  require(z <= 0.0, "radial_green: energy must be <= 0");
  require(r > 0.0 && rp > 0.0, "radial_green: radii must be > 0");
  const double lo = std::min(r, rp), hi = std::max(r, rp);
  const double nu = ell + 0.5 * (d - 2);
  const double wd = sphere_surface(d);
  if (z == 0.0)
    return 2.0 * m * std::pow(lo / hi, ell) * std::pow(hi, 2.0 - d) / ((2.0 * ell + d - 2.0) * wd);
  const double kappa = std::sqrt(-2.0 * m * z);
  const double xl = kappa * lo, xh = kappa * hi;
  const double prod = detail::scaled_bessel_i(nu, xl) * detail::scaled_bessel_k(nu, xh) * std::exp(xl - xh);
  return 2.0 * m * std::pow(r * rp, -0.5 * (d - 2)) * prod / wd;
}

/// Same projection by direct angular quadrature of the full kernel (d = 3, 4 only).
/// Used as an independent check away from r = r'.
inline double radial_green_by_angles(int d, int ell, double m, double z, double r, double rp, int order = 64) {
  require(d == 3 || d == 4, "radial_green_by_angles: dimension must be 3 or 4");
  const GaussRule rule = angular_average_rule(d, order);
  // Gegenbauer polynomial C^{(d-2)/2}_ell(t) normalized by its value at t = 1.
  const double lam = 0.5 * (d - 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double t = rule.nodes[i];
    double c0 = 1.0, c1 = 2.0 * lam * t, c = (ell == 0) ? 1.0 : c1;
    for (int n = 2; n <= ell; ++n) {
      c = (2.0 * t * (n + lam - 1.0) * c1 - (n + 2.0 * lam - 2.0) * c0) / n;
      c0 = c1;
      c1 = c;
    }
    double c_one = 1.0;  // C_ell(1) = (2 lam)_ell / ell!
    for (int n = 0; n < ell; ++n) c_one *= (2.0 * lam + n) / (n + 1.0);
    const double s = std::sqrt(std::max(r * r + rp * rp - 2.0 * r * rp * t, 0.0));
    acc += rule.weights[i] * free_resolvent_kernel(d, m, z, s) * c / c_one;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Small-energy expansion of the d = 4 resolvent, s-wave projected
// ---------------------------------------------------------------------------

/// Kernels of the d = 4 expansion |v|^{1/2} r_0(z) |v|^{1/2} = G + z G_1 + z ln|z| G_2 + o(z),
/// projected to ell = 0 (angular averages taken in closed form).
struct ResolventExpansionKernels {
  double mass = 1.0;
  double psi_one = -euler_gamma;  ///< value used for psi(1)
  std::function<double(double)> sqrt_v;  ///< |v(r)|^{1/2}

  /// s-wave average of m/(2 pi^2 |x-y|^2).
  double g0(double r, double rp) const {
    const double hi = std::max(r, rp);
    return sqrt_v(r) * sqrt_v(rp) * mass / (2.0 * pi * pi * hi * hi);
  }
  /// s-wave average of (m^2/4pi^2)(psi(1) + psi(2) - ln 2m - 2 ln(|x-y|/2)).
  double g1(double r, double rp) const {
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    const double rho = lo / hi;
    const double avg_log = std::log(hi) + 0.25 * rho * rho - std::log(2.0);
    const double c = psi_one + digamma(2) - std::log(2.0 * mass) - 2.0 * avg_log;
    return sqrt_v(r) * sqrt_v(rp) * mass * mass / (4.0 * pi * pi) * c;
  }
  double g2(double r, double rp) const {
    return -sqrt_v(r) * sqrt_v(rp) * mass * mass / (4.0 * pi * pi);
  }
};

inline ResolventExpansionKernels expansion_kernels(const TwoBodyChannel& ch, double psi_one = -euler_gamma) {
  ch.validate();
  require(ch.dimension == 4, "expansion_kernels: dimension must be 4");
  ResolventExpansionKernels k;
  k.mass = ch.mass;
  k.psi_one = psi_one;
  const PotentialSpec pot = ch.potential;
  k.sqrt_v = [pot](double r) { return std::sqrt(std::abs(evaluate_potential(pot, r))); };
  return k;
}

}  // namespace vlab
