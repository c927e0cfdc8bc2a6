#pragma once

// Independent checks: a radial shooting solver (Pruefer angle, adaptive Runge-Kutta), a
// finite-difference reference, and a Rayleigh-Ritz count for the three-body Hamiltonian
// with pair potentials acting in pair s-waves.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "vlab/core.hpp"
#include "vlab/faddeev.hpp"
#include "vlab/jacobi.hpp"
#include "vlab/quadrature.hpp"
#include "vlab/specfun.hpp"
#include "vlab/twobody.hpp"

namespace vlab {

// ---------------------------------------------------------------------------
// Radial shooting
// ---------------------------------------------------------------------------

/// u = r^{(d-1)/2} R solves -u''/2m + (c/(2m r^2) + v - E) u = 0 with
/// c = (l + (d-3)/2)(l + (d-1)/2).
struct ShootingOptions {
  double r_max = 0.0;      ///< 0 selects the potential support plus a margin
  double r_min = 1e-6;     ///< start of the integration, in units of the range
  double tolerance = 1e-12;
  int bisection_steps = 200;
};

struct ShootingState {
  double theta = 0.0;  ///< Pruefer angle at r_max: u = R sin(theta), u' = R cos(theta)
  int nodes = 0;       ///< zeros of u on (0, r_max)
  int exterior = 0;    ///< zeros beyond r_max (0 or 1)
  int count() const { return nodes + exterior; }
};

namespace detail {

inline double shooting_rmax(const TwoBodyChannel& ch, const ShootingOptions& opt) {
  const double rmax = opt.r_max > 0.0 ? opt.r_max : support_radius(ch.potential) + 2.0 * ch.potential.range;
  require(rmax >= support_radius(ch.potential),
          "shooting: r_max is inside the potential support; exterior matching needs v ~ 0 beyond r_max");
  return rmax;
}

// Log-derivatives of the decaying and growing free solutions at r.
inline std::pair<double, double> exterior_log_derivatives(int d, int ell, double m, double E, double r) {
  const double a = ell + 0.5 * (d - 1);  // u ~ r^a  (growing at E = 0)
  const double b = ell + 0.5 * (d - 3);  // u ~ r^-b (decaying at E = 0)
  if (E == 0.0) return {-b / r, a / r};
  const double nu = ell + 0.5 * (d - 2);
  const double kappa = std::sqrt(-2.0 * m * E), x = kappa * r;
  // u = sqrt(r) K_nu(kappa r) and sqrt(r) I_nu(kappa r)
  const double kr = scaled_bessel_k(nu + 1.0, x) / scaled_bessel_k(nu, x);
  const double ir = scaled_bessel_i(nu + 1.0, x) / scaled_bessel_i(nu, x);
  const double gk = 0.5 / r + kappa * (nu / x - kr);
  const double gi = 0.5 / r + kappa * (nu / x + ir);
  return {gk, gi};
}

}  // namespace detail

/// Integrates the Pruefer angle outward at energy E <= 0 and counts eigenvalues below E.
inline ShootingState shoot(const TwoBodyChannel& ch, double E, const ShootingOptions& opt = {}) {
  ch.validate();
  require(E <= 0.0, "shoot: energy must be <= 0");
  namespace ode = boost::numeric::odeint;
  const int d = ch.dimension, ell = ch.ell;
  const double m = ch.mass;
  const double c = (ell + 0.5 * (d - 3)) * (ell + 0.5 * (d - 1));
  const double s = ell + 0.5 * (d - 1);
  const double r0 = opt.r_min * ch.potential.range;
  const double rmax = detail::shooting_rmax(ch, opt);
  const PotentialSpec pot = ch.potential;
  // u'' = Q u  ->  theta' = cos^2 - Q sin^2
  auto rhs = [&](const double& th, double& dth, double r) {
    const double Q = c / (r * r) + 2.0 * m * (evaluate_potential(pot, r) - E);
    const double sn = std::sin(th), cs = std::cos(th);
    dth = cs * cs - Q * sn * sn;
  };
  double theta = std::atan2(r0, s);
  auto stepper = ode::make_controlled(opt.tolerance, opt.tolerance, ode::runge_kutta_dopri5<double>());
  // Panel edges keep steps from skipping the potential's features.
  const int segments = 400;
  double r = r0;
  for (int k = 1; k <= segments; ++k) {
    const double r1 = r0 * std::pow(rmax / r0, double(k) / segments);
    ode::integrate_adaptive(stepper, rhs, theta, r, r1, (r1 - r) * 1e-2);
    r = r1;
  }
  ShootingState st;
  st.theta = theta;
  st.nodes = static_cast<int>(std::floor(theta / pi));
  // u = A g_grow + B g_decay beyond r_max; one more zero iff A and u(r_max) differ in sign.
  const auto [gd, gg] = detail::exterior_log_derivatives(d, ell, m, E, rmax);
  const double sn = std::sin(theta), cs = std::cos(theta);
  // A is proportional to W(u, g_decay) / W(g_grow, g_decay); the denominator gd - gg < 0.
  const double wA = sn * gd - cs;  // W(u, g_decay) / (R g_decay)
  const double A_sign = -wA;
  st.exterior = (A_sign * sn < 0.0) ? 1 : 0;
  return st;
}

struct ShootingResult {
  bool bound = false;
  double energy = 0.0;     ///< lowest eigenvalue when bound
  ShootingState at_zero;   ///< state at E = 0; count() == 0 certifies absence
};

/// Ground state by bisection on the eigenvalue count, or an absence certificate.
inline ShootingResult shooting_ground_state(const TwoBodyChannel& ch, const ShootingOptions& opt = {}) {
  ShootingResult res;
  res.at_zero = shoot(ch, 0.0, opt);
  if (res.at_zero.count() == 0) return res;
  res.bound = true;
  // h >= -sup|v| gives a lower bracket.
  double lo = -std::abs(ch.potential.strength) * 1.0001 - 1e-12, hi = 0.0;
  require(shoot(ch, lo, opt).count() == 0, "shooting_ground_state: lower bracket contains an eigenvalue");
  for (int k = 0; k < opt.bisection_steps && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    if (shoot(ch, mid, opt).count() >= 1) hi = mid; else lo = mid;
  }
  res.energy = 0.5 * (lo + hi);
  return res;
}

/// lambda at which a zero-energy bound state appears, by bisection on the E = 0 count.
inline double shooting_critical_coupling(const TwoBodyChannel& ch, double lo, double hi, const ShootingOptions& opt = {}) {
  require(lo > 0.0 && hi > lo, "shooting_critical_coupling: need 0 < lo < hi");
  require(shoot(ch.with_strength(lo), 0.0, opt).count() == 0, "shooting_critical_coupling: lower bracket already binds");
  require(shoot(ch.with_strength(hi), 0.0, opt).count() >= 1, "shooting_critical_coupling: upper bracket does not bind");
  for (int k = 0; k < 200 && hi - lo > 1e-14 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (shoot(ch.with_strength(mid), 0.0, opt).count() >= 1) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Lowest eigenvalue of the radial operator on a uniform grid with n interior points
/// and Dirichlet ends at 0 and r_max.
inline double fd_ground_state(const TwoBodyChannel& ch, double r_max, int n) {
  ch.validate();
  require(n >= 10, "fd_ground_state: need at least 10 grid points");
  const int d = ch.dimension, ell = ch.ell;
  const double m = ch.mass, h = r_max / (n + 1);
  const double c = (ell + 0.5 * (d - 3)) * (ell + 0.5 * (d - 1));
  Eigen::VectorXd diag(n), off(n - 1);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 1) * h;
    diag(i) = 1.0 / (m * h * h) + c / (2.0 * m * r * r) + evaluate_potential(ch.potential, r);
  }
  off.setConstant(-0.5 / (m * h * h));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Richardson extrapolation of fd_ground_state over n, 2n+1, 4n+3 (h, h/2, h/4).
inline double fd_ground_state_extrapolated(const TwoBodyChannel& ch, double r_max, int n) {
  const double e1 = fd_ground_state(ch, r_max, n);
  const double e2 = fd_ground_state(ch, r_max, 2 * n + 1);
  const double e3 = fd_ground_state(ch, r_max, 4 * n + 3);
  const double r12 = (4.0 * e2 - e1) / 3.0, r23 = (4.0 * e3 - e2) / 3.0;
  return (16.0 * r23 - r12) / 15.0;
}

// ---------------------------------------------------------------------------
// Rayleigh-Ritz with correlated Gaussians
// ---------------------------------------------------------------------------

struct VariationalBasis {
  int size = 120;
  double width_min = 0.1;   ///< in units of the range
  double width_max = 30.0;
  Symmetrization mode = Symmetrization::identical_bosons;
  unsigned seed = 7;
  double cond_limit = 1e10;
};

struct VariationalReport {
  int count = 0;
  int basis_size = 0;
  int kept = 0;              ///< dimension after pruning
  bool pruned = false;
  double condition = 0.0;    ///< of the normalized overlap matrix before pruning
  std::vector<double> energies;  ///< Ritz values, ascending
};

/// Galerkin matrices of the pair-s-wave Hamiltonian H0 + sum_a V_a P_a, P_a the projection
/// onto functions of |x_a| and |y_a|.
struct VariationalProblem {
  Eigen::MatrixXd S, T;
  std::array<Eigen::MatrixXd, 3> V;
  int basis_size = 0;
};

namespace detail {

// Rows x_a, y_a of the map from particle positions to Jacobi positions of set a.
inline Eigen::Matrix<double, 2, 3> jacobi_rows(int a, const std::array<double, 3>& mass) {
  const int i = a, j = (a + 1) % 3, s = (a + 2) % 3;
  Eigen::Matrix<double, 2, 3> J = Eigen::Matrix<double, 2, 3>::Zero();
  J(0, i) = 1.0;
  J(0, j) = -1.0;
  J(1, i) = mass[i] / (mass[i] + mass[j]);
  J(1, j) = mass[j] / (mass[i] + mass[j]);
  J(1, s) = -1.0;
  return J;
}

// X_b = T X_a for Jacobi sets a and b.
inline Eigen::Matrix2d jacobi_transform(int b, int a, const std::array<double, 3>& mass) {
  const double M = mass[0] + mass[1] + mass[2];
  Eigen::Matrix3d Ja;
  Ja.topRows<2>() = jacobi_rows(a, mass);
  Ja.row(2) << mass[0] / M, mass[1] / M, mass[2] / M;
  const Eigen::Matrix<double, 2, 3> Jb = jacobi_rows(b, mass);
  const Eigen::Matrix<double, 2, 3> T = Jb * Ja.inverse();
  return T.leftCols<2>();
}

// log of the average of exp(s t) over directions.
inline double log_angular_exp(int d, double s) {
  s = std::abs(s);
  if (s < 1e-8) return 0.0;
  if (d == 3) return s + std::log1p(-std::exp(-2.0 * s)) - std::log(2.0 * s);
  const double nu = 0.5 * d - 1.0;
  return s + std::log(scaled_bessel_i(nu, s)) + std::lgamma(nu + 1.0) + nu * std::log(2.0 / s);
}

}  // namespace detail

/// Builds the Galerkin problem. Each basis function is a sum of exp(-a x_c^2 - b y_c^2)
/// over Jacobi sets c (all three for bosons, one set for distinct particles).
inline VariationalProblem build_variational_problem(const FaddeevSystem& sys, const VariationalBasis& basis) {
  require(basis.size >= 1, "variational basis: size must be >= 1");
  require(basis.width_min > 0.0 && basis.width_max > basis.width_min, "variational basis: need 0 < width_min < width_max");
  const int d = sys.dimension;
  const std::array<double, 3> mass = sys.frame.masses;
  const double sigma = sys.channels[0].potential.range;

  struct Term { int set; double a, b; };
  std::vector<std::vector<Term>> funcs;
  std::mt19937_64 rng(basis.seed);
  std::uniform_real_distribution<double> u(std::log(basis.width_min * sigma), std::log(basis.width_max * sigma));
  for (int k = 0; k < basis.size; ++k) {
    const double wx = std::exp(u(rng)), wy = std::exp(u(rng));
    const double a = 1.0 / (wx * wx), b = 1.0 / (wy * wy);
    if (basis.mode == Symmetrization::identical_bosons) {
      funcs.push_back({{0, a, b}, {1, a, b}, {2, a, b}});
    } else {
      funcs.push_back({{k % 3, a, b}});
    }
  }
  const int n = static_cast<int>(funcs.size());

  // Gaussian matrices in the set-0 frame.
  std::array<Eigen::Matrix2d, 3> to0;
  for (int c = 0; c < 3; ++c) to0[c] = detail::jacobi_transform(c, 0, mass);
  auto matrix0 = [&](const Term& t) {
    const Eigen::Matrix2d D = Eigen::Vector2d(t.a, t.b).asDiagonal();
    return Eigen::Matrix2d(to0[t.set].transpose() * D * to0[t.set]);
  };
  // Kinetic metric in the set-0 frame: H0 = (1/2) P^T Lambda P.
  Eigen::Matrix2d Lam;
  {
    Eigen::Matrix<double, 2, 3> J = detail::jacobi_rows(0, mass);
    Lam = J * Eigen::Vector3d(1.0 / mass[0], 1.0 / mass[1], 1.0 / mass[2]).asDiagonal() * J.transpose();
  }

  VariationalProblem P;
  P.basis_size = n;
  P.S = Eigen::MatrixXd::Zero(n, n);
  P.T = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::vector<Eigen::Matrix2d>> A0(n);
  for (int i = 0; i < n; ++i)
    for (const Term& t : funcs[i]) A0[i].push_back(matrix0(t));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0, t = 0.0;
      for (const auto& A : A0[i])
        for (const auto& B : A0[j]) {
          const Eigen::Matrix2d C = A + B;
          const double ov = std::pow(pi * pi / C.determinant(), 0.5 * d);
          s += ov;
          t += d * (A * Lam * B * C.inverse()).trace() * ov;
        }
      P.S(i, j) = P.S(j, i) = s;
      P.T(i, j) = P.T(j, i) = t;
    }

  // Potential terms on a radial product grid in the frame of each pair.
  const double wd = sphere_surface(d);
  const PotentialSpec& shape = sys.channels[0].potential;
  const double rsup = support_radius(shape);
  std::vector<double> rn, rw;
  {
    const int panels = shape.family == PotentialFamily::finite_spherical_well ? 4 : 10;
    const GaussRule ref = gauss_legendre(16);
    for (int k = 0; k < panels; ++k) {
      double lo, hi;
      if (shape.family == PotentialFamily::finite_spherical_well) {
        lo = rsup * k / panels;
        hi = rsup * (k + 1) / panels;
      } else {
        const double h = std::log1p(rsup / sigma) / panels;
        lo = sigma * std::expm1(h * k);
        hi = sigma * std::expm1(h * (k + 1));
      }
      const GaussRule g = map_rule(ref, lo, hi);
      for (std::size_t q = 0; q < g.size(); ++q) { rn.push_back(g.nodes[q]); rw.push_back(g.weights[q]); }
    }
  }
  std::vector<double> yn, yw;
  {
    const double lo = 1e-3 * basis.width_min * sigma, hi = 8.0 * basis.width_max * sigma;
    const GaussRule ref = gauss_legendre(12);
    const GaussRule g0 = map_rule(ref, 0.0, lo);
    for (std::size_t q = 0; q < g0.size(); ++q) { yn.push_back(g0.nodes[q]); yw.push_back(g0.weights[q]); }
    const int panels = static_cast<int>(std::ceil(2.0 * std::log10(hi / lo)));
    for (int k = 0; k < panels; ++k) {
      const double a = std::log(lo) + (std::log(hi) - std::log(lo)) * k / panels;
      const double b = std::log(lo) + (std::log(hi) - std::log(lo)) * (k + 1) / panels;
      const GaussRule g = map_rule(ref, a, b);
      for (std::size_t q = 0; q < g.size(); ++q) {
        const double y = std::exp(g.nodes[q]);
        yn.push_back(y);
        yw.push_back(y * g.weights[q]);
      }
    }
  }
  const int nr = static_cast<int>(rn.size()), ny = static_cast<int>(yn.size()), nq = nr * ny;
  for (int al = 0; al < 3; ++al) {
    const PotentialSpec& pot = sys.channels[al].potential;
    if (pot.strength == 0.0) {
      P.V[al] = Eigen::MatrixXd::Zero(n, n);
      continue;
    }
    // X_0 = T X_al; measure factor |det T|^d.
    const Eigen::Matrix2d T = detail::jacobi_transform(0, al, mass);
    const double jac = std::pow(std::abs(T.determinant()), d);
    Eigen::VectorXd wv(nq);
    for (int ir = 0; ir < nr; ++ir)
      for (int iy = 0; iy < ny; ++iy) {
        const double r = rn[ir], y = yn[iy];
        wv(ir * ny + iy) = jac * wd * wd * std::pow(r * y, d - 1) * rw[ir] * yw[iy] * evaluate_potential(pot, r);
      }
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(n, nq);
    for (int i = 0; i < n; ++i)
      for (const auto& A : A0[i]) {
        const Eigen::Matrix2d Aa = T.transpose() * A * T;
        for (int ir = 0; ir < nr; ++ir)
          for (int iy = 0; iy < ny; ++iy) {
            const double r = rn[ir], y = yn[iy];
            const double e = -Aa(0, 0) * r * r - Aa(1, 1) * y * y + detail::log_angular_exp(d, 2.0 * Aa(0, 1) * r * y);
            Phi(i, ir * ny + iy) += std::exp(e);
          }
      }
    P.V[al] = Phi * wv.asDiagonal() * Phi.transpose();
    P.V[al] = 0.5 * (P.V[al] + P.V[al].transpose()).eval();
  }
  return P;
}

struct RitzSolution {
  Eigen::VectorXd energies;   ///< ascending
  Eigen::MatrixXd vectors;    ///< coefficients in the original basis, S-orthonormal
  int kept = 0;
  double condition = 0.0;
};

/// Generalized eigenproblem H c = E S c with canonical orthogonalization; directions of the
/// normalized overlap below 1 / cond_limit of its largest eigenvalue are dropped.
inline RitzSolution solve_ritz(const VariationalProblem& P, double cond_limit) {
  const int n = P.basis_size;
  Eigen::VectorXd dn = P.S.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Sn = dn.asDiagonal() * P.S * dn.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sn);
  const double smax = es.eigenvalues()(n - 1), smin = es.eigenvalues()(0);
  RitzSolution R;
  R.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  std::vector<int> keep;
  for (int k = 0; k < n; ++k)
    if (es.eigenvalues()(k) > smax / cond_limit) keep.push_back(k);
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd X(n, m);
  for (int k = 0; k < m; ++k) X.col(k) = dn.asDiagonal() * es.eigenvectors().col(keep[k]) / std::sqrt(es.eigenvalues()(keep[k]));
  Eigen::MatrixXd H = P.T;
  for (const auto& V : P.V) H += V;
  Eigen::MatrixXd Hr = X.transpose() * H * X;
  Hr = 0.5 * (Hr + Hr.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(Hr);
  R.energies = eh.eigenvalues();
  R.vectors = X * eh.eigenvectors();
  R.kept = m;
  return R;
}

/// Number of Ritz values below z: a lower bound on the number of eigenvalues of the
/// pair-s-wave Hamiltonian below z.
inline VariationalReport variational_count(const FaddeevSystem& sys, double z, const VariationalBasis& basis) {
  require(z < 0.0, "variational_count: z must be < 0");
  require(std::abs(z) >= 1e-2 * (1 - 1e-12), "variational_count: |z| must be >= 1e-2");
  require(basis.mode == sys.mode, "variational_count: basis symmetrization differs from the system's");
  const VariationalProblem P = build_variational_problem(sys, basis);
  const RitzSolution R = solve_ritz(P, basis.cond_limit);
  VariationalReport rep;
  rep.basis_size = P.basis_size;
  rep.kept = R.kept;
  rep.pruned = R.kept < P.basis_size;
  rep.condition = R.condition;
  for (int k = 0; k < R.energies.size(); ++k) {
    rep.energies.push_back(R.energies(k));
    if (R.energies(k) < z) ++rep.count;
  }
  return rep;
}

struct ComponentResidual {
  double sum_residual = 0.0;      ///< || u - sum_a u_a || / || u ||
  double coupled_residual = 0.0;  ///< max_a || (H0 + V_a - z) u_a + V_a (u_b + u_c) || / || V_a u ||
  std::array<double, 3> component_norms{};
  double value() const { return std::max(sum_residual, coupled_residual); }
};

/// Faddeev components u_a = -R0(z) V_a u of a Ritz pair (u, z) within the Ritz subspace.
inline ComponentResidual faddeev_component_residual(const VariationalProblem& P, const RitzSolution& R, int k,
                                                    double converged_tol = 1e-8) {
  require(k >= 0 && k < R.energies.size(), "faddeev_component_residual: eigenpair index out of range");
  const double z = R.energies(k);
  const Eigen::VectorXd c = R.vectors.col(k);
  Eigen::MatrixXd H = P.T;
  for (const auto& V : P.V) H += V;
  const double eig_res = (H * c - z * (P.S * c)).norm() / std::max(1e-300, (P.S * c).norm() * std::max(1.0, std::abs(z)));
  require(eig_res < converged_tol, "faddeev_component_residual: eigenpair is not converged");
  // Work in the pruned subspace spanned by the Ritz vectors: X^T (T - z S) X is invertible
  // away from eigenvalues of the free operator.
  const Eigen::MatrixXd& X = R.vectors;
  const Eigen::MatrixXd G = X.transpose() * (P.T - z * P.S) * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  const Eigen::VectorXd cr = Eigen::VectorXd::Unit(X.cols(), k);  // u in Ritz coordinates
  std::array<Eigen::VectorXd, 3> ua;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(X.cols());
  ComponentResidual out;
  for (int a = 0; a < 3; ++a) {
    const Eigen::MatrixXd Va = X.transpose() * P.V[a] * X;
    ua[a] = -lu.solve(Va * cr);
    sum += ua[a];
    out.component_norms[a] = ua[a].norm();
  }
  out.sum_residual = (cr - sum).norm() / cr.norm();
  for (int a = 0; a < 3; ++a) {
    const Eigen::MatrixXd Va = X.transpose() * P.V[a] * X;
    const Eigen::VectorXd lhs = (G + Va) * ua[a] + Va * (sum - ua[a]);
    const double scale = (Va * cr).norm();
    if (scale > 0.0) out.coupled_residual = std::max(out.coupled_residual, lhs.norm() / scale);
  }
  return out;
}

}  // namespace vlab
