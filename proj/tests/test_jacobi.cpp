#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vlab/jacobi.hpp"

using namespace vlab;

namespace {

struct Triple {
  Vec k1, k2, k3;
};

Triple random_triple(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Triple t{Vec(dim), Vec(dim), Vec(dim)};
  for (int i = 0; i < dim; ++i) {
    t.k1(i) = g(rng);
    t.k2(i) = g(rng);
  }
  t.k3 = -t.k1 - t.k2;
  return t;
}

double h0_particles(const Triple& t, const JacobiFrame& f) {
  return t.k1.squaredNorm() / (2 * f.masses[0]) + t.k2.squaredNorm() / (2 * f.masses[1]) +
         t.k3.squaredNorm() / (2 * f.masses[2]);
}

}  // namespace

TEST(Jacobi, ReducedMasses) {
  const JacobiFrame f = make_frame(1.0, 2.0, 3.0);
  EXPECT_NEAR(f.m[P12], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.n[P12], 3.0 * 3.0 / 6.0, 1e-15);
  EXPECT_NEAR(f.m[P23], 6.0 / 5.0, 1e-15);
  EXPECT_NEAR(f.n[P23], 1.0 * 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(f.m[P31], 3.0 / 4.0, 1e-15);
  EXPECT_NEAR(f.n[P31], 2.0 * 4.0 / 6.0, 1e-15);
}

TEST(Jacobi, EqualMassExample) {
  const JacobiFrame f = make_frame(1, 1, 1);
  Vec k1(4), k2(4), k3 = Vec::Zero(4);
  k1 << 1, 0, 0, 0;
  k2 << -1, 0, 0, 0;
  const ConjugateMomenta c = conjugate_momenta(k1, k2, k3, f);
  EXPECT_NEAR((c.k[P12] - k1).norm(), 0.0, 1e-15);
  EXPECT_NEAR(c.p[P12].norm(), 0.0, 1e-15);
}

TEST(Jacobi, ZeroAndSwap) {
  const JacobiFrame f = make_frame(1, 1, 2);
  const Vec z = Vec::Zero(3);
  const ConjugateMomenta c0 = conjugate_momenta(z, z, z, f);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(c0.k[a].norm(), 0.0);
    EXPECT_EQ(c0.p[a].norm(), 0.0);
  }
  std::mt19937_64 rng(1);
  const Triple t = random_triple(rng, 3);
  const ConjugateMomenta a = conjugate_momenta(t.k1, t.k2, t.k3, f);
  const ConjugateMomenta b = conjugate_momenta(t.k2, t.k1, t.k3, f);
  EXPECT_NEAR((a.k[P12] + b.k[P12]).norm(), 0.0, 1e-14);
  EXPECT_NEAR((a.p[P12] - b.p[P12]).norm(), 0.0, 1e-14);
}

TEST(Jacobi, RejectsNonzeroTotalMomentum) {
  const JacobiFrame f = make_frame(1, 1, 1);
  Vec k = Vec::Ones(3);
  EXPECT_THROW(conjugate_momenta(k, k, -k, f), validation_error);
  EXPECT_THROW(make_frame(1, 0, 1), validation_error);
}

TEST(Jacobi, EqualMassCrossCoefficients) {
  const JacobiFrame f = make_frame(1, 1, 1);
  EXPECT_NEAR(f.d[P12][P31], 0.5, 1e-14);
  EXPECT_NEAR(f.e[P12][P31], 1.0, 1e-14);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) EXPECT_NEAR(std::abs(f.e[a][b]), 1.0, 1e-14);
}

TEST(Jacobi, ReconstructionAndKineticIdentities) {
  std::mt19937_64 rng(2024);
  for (auto masses : {std::array<double, 3>{1, 1, 1}, {1, 2, 3}, {0.3, 7.0, 1.1}}) {
    const JacobiFrame f = make_frame(masses[0], masses[1], masses[2]);
    double worst_k = 0.0, worst_h = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const Triple t = random_triple(rng, 4);
      const ConjugateMomenta c = conjugate_momenta(t.k1, t.k2, t.k3, f);
      const double h = h0_particles(t, f);
      for (int a = 0; a < 3; ++a) {
        worst_h = std::max(worst_h, std::abs(kinetic_kp(c.k[a], c.p[a], a, f) / h - 1.0));
        for (int b = 0; b < 3; ++b) {
          if (a == b) continue;
          const Vec rec = f.d[a][b] * c.p[a] + f.e[a][b] * c.p[b];
          worst_k = std::max(worst_k, (rec - c.k[a]).norm() / std::max(1.0, c.k[a].norm()));
          worst_h = std::max(worst_h, std::abs(kinetic_form(c.p[a], c.p[b], a, b, f) / h - 1.0));
        }
      }
    }
    EXPECT_LT(worst_k, 1e-12);
    EXPECT_LT(worst_h, 1e-12);
  }
}

TEST(Jacobi, KineticFormWithVanishingSecondMomentum) {
  const JacobiFrame f = make_frame(1, 2, 3);
  Vec p(3), z = Vec::Zero(3);
  p << 0.3, -1.2, 0.5;
  EXPECT_NEAR(kinetic_form(p, z, P12, P23, f), p.squaredNorm() / (2 * f.m[P23]), 1e-15);
  EXPECT_THROW(kinetic_form(p, Vec::Zero(4), P12, P23, f), validation_error);
}

TEST(Jacobi, PositivityAndProductLowerBound) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (auto masses : {std::array<double, 3>{1, 1, 1}, {1, 2, 3}}) {
    const JacobiFrame f = make_frame(masses[0], masses[1], masses[2]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        const double c = kinetic_lower_constant(a, b, f);
        ASSERT_GT(c, 0.0);
        for (int s = 0; s < 10000 / 6; ++s) {
          Vec pa(4), pb(4);
          for (int i = 0; i < 4; ++i) {
            pa(i) = g(rng);
            pb(i) = g(rng);
          }
          const double h = kinetic_form(pa, pb, a, b, f);
          EXPECT_GT(h, 0.0);
          EXPECT_GE(h, c * (pa.squaredNorm() + pb.squaredNorm()) * (1 - 1e-12));
          EXPECT_GE(h, 2.0 * c * pa.norm() * pb.norm() * (1 - 1e-12));
        }
      }
  }
}

TEST(Jacobi, PermutationEquivariance) {
  const JacobiFrame f = make_frame(1, 2, 3);
  const JacobiFrame g = make_frame(2, 3, 1);
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(g.m[a], f.m[(a + 1) % 3], 1e-15);
    EXPECT_NEAR(g.n[a], f.n[(a + 1) % 3], 1e-15);
  }
}
