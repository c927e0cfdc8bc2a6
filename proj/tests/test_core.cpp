#include <cmath>

#include <gtest/gtest.h>

#include "vlab/core.hpp"
#include "vlab/quadrature.hpp"

using namespace vlab;

namespace {

// Composite trapezoid reference, independent of the Gauss machinery.
template <class F>
double trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

TEST(Potential, GaussianDepthAtOrigin) {
  const PotentialSpec p = make_potential(PotentialFamily::gaussian_well, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_potential(p, 0.0), -1.0);
}

TEST(Potential, GaussianValueAtUnitRadius) {
  const PotentialSpec p = make_potential(PotentialFamily::gaussian_well, 2.0, 1.0);
  EXPECT_NEAR(evaluate_potential(p, 1.0), -2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(evaluate_potential(p, 1.0), -0.7357589, 1e-7);
}

TEST(Potential, NonPositiveEverywhere) {
  for (auto fam : {PotentialFamily::gaussian_well, PotentialFamily::exponential_well, PotentialFamily::finite_spherical_well}) {
    const PotentialSpec p = make_potential(fam, 3.0, 0.7);
    for (int i = 0; i <= 400; ++i) EXPECT_LE(evaluate_potential(p, 0.05 * i), 0.0);
  }
}

TEST(Potential, DecayBoundAtTenRanges) {
  for (auto fam : {PotentialFamily::gaussian_well, PotentialFamily::exponential_well, PotentialFamily::finite_spherical_well}) {
    const PotentialSpec p = make_potential(fam, 2.5, 1.3);
    const double r = 10.0 * p.range;
    EXPECT_LE(std::abs(evaluate_potential(p, r)), p.decay_constant * std::pow(1.0 + r, -p.decay_exponent));
    EXPECT_TRUE(decay_bound_holds(p, 4));
  }
}

TEST(Potential, DecayExponentThresholdDependsOnDimension) {
  const PotentialSpec p = make_potential(PotentialFamily::exponential_well, 1.0, 1.0, 3.0);
  EXPECT_FALSE(decay_bound_holds(p, 4));
  EXPECT_TRUE(decay_bound_holds(p, 5));
}

TEST(Potential, RejectsNegativeRadius) {
  const PotentialSpec p = make_potential(PotentialFamily::gaussian_well, 1.0, 1.0);
  EXPECT_THROW(evaluate_potential(p, -0.1), validation_error);
}

TEST(Potential, RejectsInvalidParameters) {
  EXPECT_THROW(make_potential(PotentialFamily::gaussian_well, -1.0, 1.0), validation_error);
  EXPECT_THROW(make_potential(PotentialFamily::gaussian_well, 1.0, 0.0), validation_error);
  EXPECT_THROW(parse_family("square-well"), validation_error);
  EXPECT_EQ(parse_family("exponential-well"), PotentialFamily::exponential_well);
}

TEST(Channel, Validation) {
  TwoBodyChannel ch;
  ch.mass = 0.0;
  EXPECT_THROW(ch.validate(), validation_error);
  ch.mass = 1.0;
  ch.dimension = 2;
  EXPECT_THROW(ch.validate(), validation_error);
  ch.dimension = 4;
  ch.sector = Sector::antisymmetric;
  ch.ell = 0;
  EXPECT_THROW(ch.validate(), validation_error);
  ch.ell = 1;
  EXPECT_NO_THROW(ch.validate());
  EXPECT_EQ(TwoBodyChannel::lowest_ell(Sector::antisymmetric), 1);
}

TEST(Sphere, FourDimensionalSurface) { EXPECT_NEAR(sphere_surface(4), 2.0 * pi * pi, 1e-14); }

TEST(Sphere, Recursion) {
  for (int d : {5, 6}) EXPECT_NEAR(sphere_surface(d), 2.0 * pi * sphere_surface(d - 2) / (d - 2), 1e-12);
}

TEST(Quadrature, BallVolumes) {
  const RadialQuadrature q4 = build_radial_quadrature(4, 1.0, 32);
  EXPECT_NEAR(q4.integrate([](double) { return 1.0; }) / (pi * pi / 2.0), 1.0, 1e-8);
  EXPECT_NEAR(q4.integrate([](double) { return 1.0; }), 4.934802, 1e-6);
  const RadialQuadrature q3 = build_radial_quadrature(3, 1.0, 16);
  EXPECT_NEAR(q3.integrate([](double) { return 1.0; }) / (4.0 * pi / 3.0), 1.0, 1e-8);
}

TEST(Quadrature, FiveDimensionalGaussianMomentAgainstTrapezoid) {
  const RadialQuadrature q = build_radial_quadrature(5, 12.0, 96);
  const double got = q.integrate([](double r) { return r * r * std::exp(-r * r); });
  const double w5 = sphere_surface(5);
  const double ref = trapezoid([&](double r) { return w5 * std::pow(r, 6) * std::exp(-r * r); }, 0.0, 12.0, 200000);
  EXPECT_NEAR(got / ref, 1.0, 1e-9);
}

TEST(Quadrature, NodesIncreasingWeightsPositive) {
  const RadialQuadrature q = build_radial_quadrature(4, 3.0, 64);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_GT(q.nodes[i], 0.0);
    EXPECT_GT(q.weights[i], 0.0);
    if (i > 0) EXPECT_GT(q.nodes[i], q.nodes[i - 1]);
  }
  EXPECT_LE(q.nodes.back(), 3.0);
}

TEST(Quadrature, DoublingAtLeastHalvesError) {
  // Under-resolved oscillation so that the error is far above round-off.
  auto f = [](double r) { return std::cos(14.0 * r); };
  const double R = 6.0;
  const double w3 = sphere_surface(3);
  // int_0^R r^2 cos(a r) dr in closed form.
  const double a = 14.0;
  const double exact = w3 * ((R * R / a - 2.0 / (a * a * a)) * std::sin(a * R) + 2.0 * R / (a * a) * std::cos(a * R));
  double prev = std::abs(build_radial_quadrature(3, R, 16).integrate(f) - exact);
  for (int n : {32, 64}) {
    const double err = std::abs(build_radial_quadrature(3, R, n).integrate(f) - exact);
    if (prev < 1e-12) break;
    EXPECT_LE(err, 0.5 * prev) << "n = " << n;
    prev = err;
  }
}

TEST(Quadrature, RejectsBadArguments) {
  EXPECT_THROW(build_radial_quadrature(4, 1.0, 15), validation_error);
  EXPECT_THROW(build_radial_quadrature(2, 1.0, 32), validation_error);
  EXPECT_THROW(build_radial_quadrature(4, 0.0, 32), validation_error);
}

TEST(GaussRules, LegendreAndJacobiExactness) {
  const GaussRule g = gauss_legendre(10);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], 18);
  EXPECT_NEAR(s, 2.0 / 19.0, 1e-14);
  // normalized angular rule in d = 4: average of t^2 over S^3 is 1/4
  const GaussRule a = angular_average_rule(4, 8);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m0 += a.weights[i];
    m2 += a.weights[i] * a.nodes[i] * a.nodes[i];
  }
  EXPECT_NEAR(m0, 1.0, 1e-14);
  EXPECT_NEAR(m2, 0.25, 1e-14);
}

TEST(Report, SortedAndCounted) {
  const SpectralReport r = make_report("bs", {0.2, 1.5, 0.9, 1.1}, 1.0);
  EXPECT_EQ(r.count_above, 2);
  EXPECT_DOUBLE_EQ(r.eigenvalues.front(), 1.5);
  EXPECT_DOUBLE_EQ(r.eigenvalues.back(), 0.2);
}
