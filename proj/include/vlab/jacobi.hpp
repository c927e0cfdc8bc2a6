#pragma once

// Jacobi momenta for three particles: conjugate pairs (k_a, p_a), reduced masses, the
// linear relations k_a = d_ab p_a + e_ab p_b and the kinetic energy in every pairing.

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vlab/core.hpp"

namespace vlab {

/// Pair labels 12, 23, 31 as indices 0, 1, 2. Pair a consists of particles a and a+1
/// (mod 3); the spectator is a+2.
enum Pair : int { P12 = 0, P23 = 1, P31 = 2 };

inline std::string pair_name(int a) {
  static const char* names[3] = {"12", "23", "31"};
  return names[a];
}

struct JacobiFrame {
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  std::array<double, 3> m{};  ///< pair reduced masses m_a
  std::array<double, 3> n{};  ///< spectator reduced masses n_a
  std::array<std::array<double, 3>, 3> d{};  ///< d[a][b], a != b
  std::array<std::array<double, 3>, 3> e{};  ///< e[a][b], a != b
  std::array<std::array<double, 3>, 3> l{};  ///< cross-term mass l for the pairing (a, b)

  /// Row vectors c with k_a = c . (k1, k2, k3) and p_a = c . (k1, k2, k3).
  Eigen::RowVector3d k_row(int a) const {
    const int i = a, j = (a + 1) % 3;
    Eigen::RowVector3d r = Eigen::RowVector3d::Zero();
    const double s = masses[i] + masses[j];
    r(i) = masses[j] / s;
    r(j) = -masses[i] / s;
    return r;
  }
  Eigen::RowVector3d p_row(int a) const {
    const int i = a, j = (a + 1) % 3, s = (a + 2) % 3;
    const double M = masses[0] + masses[1] + masses[2];
    Eigen::RowVector3d r;
    r(i) = masses[s] / M;
    r(j) = masses[s] / M;
    r(s) = -(masses[i] + masses[j]) / M;
    return r;
  }

  /// Maps (p_a, p_b) back to particle momenta with zero total.
  Eigen::Matrix3d inverse_map(int a, int b) const {
    Eigen::Matrix3d M;
    M.row(0) = p_row(a);
    M.row(1) = p_row(b);
    M.row(2) = Eigen::RowVector3d::Ones();
    return M.inverse();
  }
};

inline JacobiFrame make_frame(double m1, double m2, double m3) {
  require(m1 > 0.0 && m2 > 0.0 && m3 > 0.0, "jacobi frame: masses must be > 0");
  JacobiFrame f;
  f.masses = {m1, m2, m3};
  const double M = m1 + m2 + m3;
  for (int a = 0; a < 3; ++a) {
    const double mi = f.masses[a], mj = f.masses[(a + 1) % 3], ms = f.masses[(a + 2) % 3];
    f.m[a] = mi * mj / (mi + mj);
    f.n[a] = ms * (mi + mj) / M;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      const Eigen::Matrix3d inv = f.inverse_map(a, b);
      const Eigen::RowVector3d c = f.k_row(a) * inv;
      f.d[a][b] = c(0);
      f.e[a][b] = c(1);
      // H0 = sum_i k_i^2 / 2 m_i; cross coefficient of <p_a, p_b> is 1 / l.
      double cross = 0.0;
      for (int i = 0; i < 3; ++i) cross += inv(i, 0) * inv(i, 1) / f.masses[i];
      f.l[a][b] = 1.0 / cross;
    }
  return f;
}

/// Vectors in R^dim as Eigen dynamic vectors.
using Vec = Eigen::VectorXd;

struct ConjugateMomenta {
  std::array<Vec, 3> k;
  std::array<Vec, 3> p;
};

inline ConjugateMomenta conjugate_momenta(const Vec& k1, const Vec& k2, const Vec& k3, const JacobiFrame& f,
                                          double tol = 1e-10) {
  require(k1.size() == k2.size() && k2.size() == k3.size(), "conjugate_momenta: dimension mismatch");
  const double scale = std::max({k1.norm(), k2.norm(), k3.norm(), 1.0});
  require((k1 + k2 + k3).norm() <= tol * scale, "conjugate_momenta: total momentum must vanish");
  ConjugateMomenta out;
  const std::array<const Vec*, 3> ks{&k1, &k2, &k3};
  for (int a = 0; a < 3; ++a) {
    const Eigen::RowVector3d kr = f.k_row(a), pr = f.p_row(a);
    out.k[a] = Vec::Zero(k1.size());
    out.p[a] = Vec::Zero(k1.size());
    for (int i = 0; i < 3; ++i) {
      out.k[a] += kr(i) * *ks[i];
      out.p[a] += pr(i) * *ks[i];
    }
  }
  return out;
}

/// H0 from one conjugate pair: k^2 / 2 m_a + p^2 / 2 n_a.
inline double kinetic_kp(const Vec& k, const Vec& p, int a, const JacobiFrame& f) {
  require(k.size() == p.size(), "kinetic_kp: dimension mismatch");
  return k.squaredNorm() / (2.0 * f.m[a]) + p.squaredNorm() / (2.0 * f.n[a]);
}

/// H0_ab(p_a, p_b) = p_a^2 / 2 m_b + <p_a, p_b> / l + p_b^2 / 2 m_a.
inline double kinetic_form(const Vec& pa, const Vec& pb, int a, int b, const JacobiFrame& f) {
  require(pa.size() == pb.size(), "kinetic_form: dimension mismatch");
  require(a != b && a >= 0 && a < 3 && b >= 0 && b < 3, "kinetic_form: need two distinct pairs");
  return pa.squaredNorm() / (2.0 * f.m[b]) + pa.dot(pb) / f.l[a][b] + pb.squaredNorm() / (2.0 * f.m[a]);
}

/// Same form in terms of |p_a|, |p_b| and the cosine between them.
inline double kinetic_form_radial(double qa, double qb, double t, int a, int b, const JacobiFrame& f) {
  return qa * qa / (2.0 * f.m[b]) + qa * qb * t / f.l[a][b] + qb * qb / (2.0 * f.m[a]);
}

/// Smallest eigenvalue c of the 2x2 form, so H0_ab >= c (p_a^2 + p_b^2).
inline double kinetic_lower_constant(int a, int b, const JacobiFrame& f) {
  Eigen::Matrix2d Q;
  Q << 1.0 / (2.0 * f.m[b]), 0.5 / f.l[a][b], 0.5 / f.l[a][b], 1.0 / (2.0 * f.m[a]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Q);
  return es.eigenvalues()(0);
}

}  // namespace vlab
