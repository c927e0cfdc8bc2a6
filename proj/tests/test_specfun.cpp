#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "vlab/specfun.hpp"
#include "vlab/twobody.hpp"

using namespace vlab;

namespace {

template <class F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Bessel integral representations (Schlaefli / Bessel).
double j1_integral(double x) {
  return simpson([&](double t) { return std::cos(t - x * std::sin(t)); }, 0.0, pi, 20000) / pi;
}
double y1_integral(double x) {
  const double a = simpson([&](double t) { return std::sin(x * std::sin(t) - t); }, 0.0, pi, 20000) / pi;
  const double b = simpson([&](double t) { return (std::exp(t) - std::exp(-t)) * std::exp(-x * std::sinh(t)); }, 0.0, 12.0,
                           200000) / pi;
  return a - b;
}

}  // namespace

TEST(Digamma, IntegerValues) {
  EXPECT_NEAR(digamma(1), -0.5772157, 1e-7);
  EXPECT_NEAR(digamma(2), 0.4227843, 1e-7);
  EXPECT_NEAR(digamma(3), 0.9227843, 1e-7);
  EXPECT_NEAR(digamma(1), -euler_gamma, 1e-15);
  EXPECT_THROW(digamma(0), validation_error);
}

TEST(SeriesCoefficients, ClosedForms) {
  const auto& c = series_coefficients();
  double fk = 1.0;
  for (int k = 0; k <= 10; ++k) {
    if (k > 0) fk *= k;
    const double a = ((k % 2) ? -1.0 : 1.0) / (std::pow(4.0, k) * fk * fk * (k + 1));
    EXPECT_NEAR(c.a[k] / a, 1.0, 1e-14);
    EXPECT_NEAR(c.b[k], (digamma(k + 1) + digamma(k + 2)) * c.a[k], 1e-15 * std::abs(c.b[k]) + 1e-300);
  }
}

TEST(Hankel, LeadingPole) {
  for (double x : {1e-3, 1e-5, 1e-7}) {
    const std::complex<double> v = x * hankel1_1({x, 0.0});
    EXPECT_NEAR(v.real(), 0.0, 1e-3);
    EXPECT_NEAR(v.imag(), -2.0 / pi, 10 * x);
  }
}

TEST(Hankel, UnitArgumentAgainstIntegralRepresentation) {
  const std::complex<double> h = hankel1_1({1.0, 0.0});
  EXPECT_NEAR(h.real() / j1_integral(1.0), 1.0, 1e-10);
  EXPECT_NEAR(h.imag() / y1_integral(1.0), 1.0, 1e-10);
}

TEST(Hankel, MatchesLibraryOnWindow) {
  for (double x : {0.3, 1.7, 3.2, 4.9}) {
    const std::complex<double> h = hankel1_1({x, 0.0});
    EXPECT_NEAR(h.real(), std::cyl_bessel_j(1.0, x), 1e-12);
    EXPECT_NEAR(h.imag(), std::cyl_neumann(1.0, x), 1e-12);
  }
}

TEST(Hankel, TruncationStableAtThirtyTerms) {
  for (double r : {0.5, 2.0, 5.0})
    for (double arg : {0.0, 0.7, 1.5707963}) {
      const std::complex<double> z = std::polar(r, arg);
      const auto a = hankel1_1(z, 29), b = hankel1_1(z, 30);
      EXPECT_LT(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(b)));
    }
}

TEST(Hankel, RejectsPoleAndLargeArguments) {
  EXPECT_THROW(hankel1_1({0.0, 0.0}), validation_error);
  EXPECT_THROW(hankel1_1({6.0, 0.0}), validation_error);
}

TEST(BesselK, SeriesMatchesLibrary) {
  for (double x : {1e-4, 0.01, 0.5, 1.99, 2.0, 2.01, 4.99, 20.0})
    EXPECT_NEAR(x_bessel_k1(x) / (x * std::cyl_bessel_k(1.0, x)), 1.0, 1e-12) << x;
}

TEST(FreeResolvent, ZeroEnergyValues) {
  EXPECT_NEAR(free_resolvent_kernel(4, 1.0, 0.0, 2.0), 1.0 / (8.0 * pi * pi), 1e-15);
  EXPECT_NEAR(free_resolvent_kernel(4, 1.0, 0.0, 2.0), 0.01266515, 1e-8);
  EXPECT_NEAR(free_resolvent_kernel(3, 1.0, 0.0, 1.0), 1.0 / (2.0 * pi), 1e-15);
}

TEST(FreeResolvent, ContinuityAtZero) {
  const double a = free_resolvent_kernel(4, 1.0, -1e-4, 1.0), b = free_resolvent_kernel(4, 1.0, 0.0, 1.0);
  EXPECT_LT(std::abs(a / b - 1.0), 1e-6 * 1e3);  // first correction is O(z ln|z|) ~ 1e-3
  const double c = free_resolvent_kernel(4, 1.0, -1e-10, 1.0);
  EXPECT_LT(std::abs(c / b - 1.0), 1e-6);
}

TEST(FreeResolvent, PositiveAndDecreasing) {
  for (double z : {-1e-6, -1e-2, -1.0, -30.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 200; ++i) {
      const double v = free_resolvent_kernel(4, 0.7, z, 0.05 * i);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(FreeResolvent, RejectsInvalidInput) {
  EXPECT_THROW(free_resolvent_kernel(4, 1.0, 0.0, 0.0), validation_error);
  EXPECT_THROW(free_resolvent_kernel(5, 1.0, 0.0, 1.0), validation_error);
  EXPECT_THROW(free_resolvent_kernel(4, 1.0, 0.1, 1.0), validation_error);
}

TEST(RadialGreen, ClosedFormMatchesAngularAverage) {
  for (int d : {3, 4})
    for (int ell : {0, 1, 2})
      for (double z : {0.0, -0.3})
        for (auto [r, rp] : {std::pair{0.4, 1.3}, std::pair{2.0, 0.7}}) {
          const double a = radial_green(d, ell, 1.0, z, r, rp);
          const double b = radial_green_by_angles(d, ell, 1.0, z, r, rp, 64);
          EXPECT_NEAR(a / b, 1.0, 1e-10) << "d=" << d << " l=" << ell << " z=" << z;
        }
}

TEST(RadialGreen, LargeArgumentsStayFinite) {
  const double g = radial_green(4, 0, 1.0, -1e4, 5.0, 5.1);
  EXPECT_TRUE(std::isfinite(g));
  EXPECT_GE(g, 0.0);
}

TEST(ExpansionKernels, SignAndSymmetry) {
  TwoBodyChannel ch;
  ch.dimension = 4;
  ch.potential = make_potential(PotentialFamily::gaussian_well, 2.0, 1.0);
  const ResolventExpansionKernels k = expansion_kernels(ch);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    EXPECT_LE(k.g2(x, y), 0.0);
    EXPECT_DOUBLE_EQ(k.g1(x, y), k.g1(y, x));
    EXPECT_DOUBLE_EQ(k.g0(x, y), k.g0(y, x));
    EXPECT_NEAR(k.g2(x, y), -k.sqrt_v(x) * k.sqrt_v(y) / (4.0 * pi * pi), 1e-16);
  }
  ch.dimension = 3;
  EXPECT_THROW(expansion_kernels(ch), validation_error);
}

TEST(ExpansionKernels, RemainderIsLittleOofZ) {
  TwoBodyChannel ch;
  ch.dimension = 4;
  ch.potential = make_potential(PotentialFamily::gaussian_well, 3.0, 1.0);
  const RadialQuadrature q = channel_quadrature(ch);
  const ResolventExpansionKernels k = expansion_kernels(ch);
  const Eigen::MatrixXd G0 = assemble_bs(ch, 0.0, q).matrix;
  const Eigen::MatrixXd G1 = discretize_kernel(q, [&](double r, double rp) { return k.g1(r, rp); });
  const Eigen::MatrixXd G2 = discretize_kernel(q, [&](double r, double rp) { return k.g2(r, rp); });
  double prev = std::numeric_limits<double>::infinity();
  for (double z : {-1e-2, -1e-3, -1e-4}) {
    const Eigen::MatrixXd R = assemble_bs(ch, z, q).matrix - G0 - z * G1 - z * std::log(-z) * G2;
    const double ratio = R.norm() / std::abs(z);
    EXPECT_LT(ratio, prev);
    prev = ratio;
  }
  EXPECT_LT(prev, 5e-3);
}
