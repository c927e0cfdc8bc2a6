#pragma once

// Two-body channel spectral tools: Birman-Schwinger matrices, critical couplings,
// zero-energy profiles, the small-energy constant tau and the gap on the complement.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "vlab/core.hpp"
#include "vlab/specfun.hpp"

namespace vlab {

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Radius beyond which the channel's |v|^{1/2} is below double precision relevance.
inline double support_radius(const PotentialSpec& p) {
  switch (p.family) {
    case PotentialFamily::gaussian_well: return 9.0 * p.range;
    case PotentialFamily::exponential_well: return 75.0 * p.range;
    case PotentialFamily::finite_spherical_well: return p.range;
  }
  return p.range;
}

/// Panels uniform in log(1 + r/sigma) on (0, support]; refine multiplies the panel count.
inline RadialQuadrature channel_quadrature(const TwoBodyChannel& ch, int refine = 1, int base_panels = 0) {
  ch.validate();
  require(refine >= 1, "channel_quadrature: refine must be >= 1");
  const PotentialSpec& p = ch.potential;
  const double rmax = support_radius(p);
  int panels = base_panels;
  if (panels <= 0) {
    switch (p.family) {
      case PotentialFamily::gaussian_well: panels = 8; break;
      case PotentialFamily::exponential_well: panels = 14; break;
      case PotentialFamily::finite_spherical_well: panels = 4; break;
    }
  }
  panels *= refine;
  std::vector<double> breaks(panels + 1);
  if (p.family == PotentialFamily::finite_spherical_well) {
    for (int k = 0; k <= panels; ++k) breaks[k] = rmax * k / panels;
  } else {
    const double h = std::log1p(rmax / p.range) / panels;
    for (int k = 0; k <= panels; ++k) breaks[k] = p.range * std::expm1(h * k);
    breaks.back() = rmax;
  }
  return build_panel_quadrature(ch.dimension, std::move(breaks), 16);
}

// ---------------------------------------------------------------------------
// Kernel discretization
// ---------------------------------------------------------------------------

/// Symmetric matrix S with S_ij ~ sqrt(u_i) k(r_i, r_j) sqrt(u_j). Off-diagonal panel
/// pairs use the Nystrom rule; diagonal panels use Galerkin entries in L^2(dr) for the
/// kernel sqrt(w_d r^{d-1}) k sqrt(w_d r'^{d-1}), integrated on both sides of r = r', so
/// kernels with a diagonal kink keep full order.
template <class Kernel>
Eigen::MatrixXd discretize_kernel(const RadialQuadrature& q, Kernel&& k, int outer_order = 48) {
  const int n = static_cast<int>(q.size());
  const int p = q.order;
  const int d = q.dimension;
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i) {
    const int pi_ = i / p;
    for (int j = 0; j <= i; ++j) {
      if (j / p == pi_) continue;
      const double v = std::sqrt(q.weights[i] * q.weights[j]) * k(q.nodes[i], q.nodes[j]);
      S(i, j) = v;
      S(j, i) = v;
    }
  }
  const GaussRule ref = gauss_legendre(outer_order);
  std::vector<double> li, lj;
  for (std::size_t pan = 0; pan < q.panels(); ++pan) {
    const double A = q.breaks[pan], B = q.breaks[pan + 1];
    const int off = static_cast<int>(pan) * p;
    LagrangeBasis basis(std::vector<double>(q.nodes.begin() + off, q.nodes.begin() + off + p));
    const GaussRule outer = map_rule(ref, A, B);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd h(p), lo(p);
    for (std::size_t a = 0; a < outer.size(); ++a) {
      const double s = outer.nodes[a];
      const double ws = outer.weights[a] * std::sqrt(q.surface * std::pow(s, d - 1));
      h.setZero();
      for (int side = 0; side < 2; ++side) {
        const GaussRule inner = side == 0 ? map_rule(ref, A, s) : map_rule(ref, s, B);
        for (std::size_t b = 0; b < inner.size(); ++b) {
          const double t = inner.nodes[b];
          const double wt = inner.weights[b] * std::sqrt(q.surface * std::pow(t, d - 1)) * k(s, t);
          basis.evaluate(t, lj);
          for (int jj = 0; jj < p; ++jj) h(jj) += wt * lj[jj];
        }
      }
      basis.evaluate(s, li);
      for (int ii = 0; ii < p; ++ii) lo(ii) = li[ii];
      G.noalias() += ws * lo * h.transpose();
    }
    for (int ii = 0; ii < p; ++ii)
      for (int jj = 0; jj < p; ++jj)
        S(off + ii, off + jj) =
            0.5 * (G(ii, jj) + G(jj, ii)) / std::sqrt(q.raw_weights[off + ii] * q.raw_weights[off + jj]);
  }
  return S;
}

// ---------------------------------------------------------------------------
// Birman-Schwinger operator
// ---------------------------------------------------------------------------

/// Discretized |v|^{1/2} r_0(z) |v|^{1/2} in one angular-momentum sector, in the
/// symmetric Nystrom representation (vectors carry sqrt(u_i) factors).
struct BirmanSchwingerOperator {
  TwoBodyChannel channel;
  double z = 0.0;
  RadialQuadrature quad;
  std::vector<double> sqrt_v;  ///< |v(r_i)|^{1/2}
  Eigen::MatrixXd matrix;

  /// Eigenvalues in descending order.
  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
  }
  double mu_max() const { return eigenvalues()(0); }
};

inline std::vector<double> sqrt_potential(const PotentialSpec& p, const RadialQuadrature& q) {
  std::vector<double> a(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) a[i] = std::sqrt(std::abs(evaluate_potential(p, q.nodes[i])));
  return a;
}

inline BirmanSchwingerOperator assemble_bs(const TwoBodyChannel& ch, double z, const RadialQuadrature& q) {
  ch.validate();
  require(z <= 0.0, "assemble_bs: energy z must be <= 0");
  require(q.dimension == ch.dimension, "assemble_bs: quadrature dimension differs from channel dimension");
  BirmanSchwingerOperator op;
  op.channel = ch;
  op.z = z;
  op.quad = q;
  op.sqrt_v = sqrt_potential(ch.potential, q);
  const PotentialSpec pot = ch.potential;
  const int d = ch.dimension, ell = ch.ell;
  const double m = ch.mass;
  auto kernel = [&](double r, double rp) {
    const double a = std::sqrt(std::abs(evaluate_potential(pot, r))) * std::sqrt(std::abs(evaluate_potential(pot, rp)));
    if (a == 0.0) return 0.0;
    return a * radial_green(d, ell, m, z, r, rp);
  };
  op.matrix = discretize_kernel(q, kernel);
  return op;
}

inline BirmanSchwingerOperator assemble_bs(const TwoBodyChannel& ch, double z) {
  return assemble_bs(ch, z, channel_quadrature(ch));
}

/// lambda* such that mu_max(BS(0)) = 1 on the given grid.
inline double critical_coupling(const TwoBodyChannel& ch, const RadialQuadrature& q) {
  ch.validate();
  if (!(ch.potential.strength > 0.0))
    throw no_critical_coupling("find_critical_coupling: potential is zero, no critical coupling exists");
  const double mu = assemble_bs(ch, 0.0, q).mu_max();
  if (!(mu > 0.0)) throw no_critical_coupling("find_critical_coupling: potential is not attractive");
  return ch.potential.strength / mu;
}

inline double find_critical_coupling(const TwoBodyChannel& ch, int refine = 1) {
  return critical_coupling(ch, channel_quadrature(ch, refine));
}

// ---------------------------------------------------------------------------
// Zero-energy profile
// ---------------------------------------------------------------------------

enum class VirtualLevel { resonance, zero_eigenvalue };

inline std::string_view to_string(VirtualLevel v) {
  return v == VirtualLevel::resonance ? "resonance" : "zero-eigenvalue";
}

struct ResonanceProfile {
  TwoBodyChannel channel;
  RadialQuadrature quad;
  std::vector<double> phi;        ///< |v|^{1/2} f at quadrature nodes
  std::vector<double> f_nodes;    ///< f at quadrature nodes
  std::vector<double> radii;      ///< nodes followed by the tail grid
  std::vector<double> f;          ///< f on radii
  double v_f = 0.0;               ///< <v, f>
  double sqrt_v_phi = 0.0;        ///< <|v|^{1/2}, phi>
  double mu_max = 0.0;
  double c_tail = 0.0;
  double p_tail = 0.0;
  double tail_r_min = 0.0, tail_r_max = 0.0;
  double remainder_norm = 0.0;    ///< ||f - c r^{-p}|| over r >= tail_r_min (finite part)
  bool square_integrable = false;
  std::vector<double> l2_radii, l2_mass;  ///< int_{B_R} |f|^2 on a doubling schedule

  /// f(r) for any r > 0 from the integral representation.
  double operator()(double r) const;
};

namespace detail {

// f(r) = int g_ell(r, r') |v|^{1/2}(r') phi(r') dmu(r') with phi interpolated panelwise.
inline double profile_integral(const TwoBodyChannel& ch, const RadialQuadrature& q, const std::vector<double>& phi,
                               double r) {
  const int p = q.order;
  const int d = q.dimension;
  static const GaussRule ref = gauss_legendre(24);
  double acc = 0.0;
  std::vector<double> L;
  for (std::size_t pan = 0; pan < q.panels(); ++pan) {
    const double A = q.breaks[pan], B = q.breaks[pan + 1];
    const int off = static_cast<int>(pan) * p;
    LagrangeBasis basis(std::vector<double>(q.nodes.begin() + off, q.nodes.begin() + off + p));
    auto piece = [&](double lo, double hi) {
      if (hi <= lo) return;
      const GaussRule g = map_rule(ref, lo, hi);
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = g.nodes[k];
        basis.evaluate(t, L);
        double ph = 0.0;
        for (int j = 0; j < p; ++j) ph += L[j] * phi[off + j];
        const double a = std::sqrt(std::abs(evaluate_potential(ch.potential, t)));
        acc += g.weights[k] * q.surface * std::pow(t, d - 1) * a * ph *
               radial_green(d, ch.ell, ch.mass, 0.0, r, t);
      }
    };
    if (r > A && r < B) {
      piece(A, r);
      piece(r, B);
    } else {
      piece(A, B);
    }
  }
  return acc;
}

inline std::pair<double, double> fit_power_law(const std::vector<double>& r, const std::vector<double>& f) {
  // ln f = ln c - p ln r
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = std::log(r[i]), y = std::log(std::abs(f[i]));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  return {-slope, std::exp(icpt)};
}

}  // namespace detail

inline double ResonanceProfile::operator()(double r) const {
  require(r > 0.0, "profile evaluation: radius must be > 0");
  return detail::profile_integral(channel, quad, phi, r);
}

struct ProfileOptions {
  double tail_min_factor = 20.0;   ///< tail window in units of sigma
  double tail_max_factor = 100.0;
  int tail_points = 41;
  double l2_start_factor = 50.0;
  int l2_doublings = 48;
  double l2_tolerance = 1e-6;      ///< relative increment that certifies convergence
};

/// Zero-energy solution at critical coupling. For d = 4, s-wave, phi is scaled so that
/// <|v|^{1/2}, phi> = 2 pi / m; otherwise ||phi|| = 1. Sign fixed so that phi's mean is positive.
inline ResonanceProfile resonance_profile(const TwoBodyChannel& ch, const RadialQuadrature& q,
                                          const ProfileOptions& opt = {}) {
  const BirmanSchwingerOperator bs = assemble_bs(ch, 0.0, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bs.matrix);
  const int n = static_cast<int>(q.size());
  const double mu = es.eigenvalues()(n - 1);
  if (std::abs(mu - 1.0) > 1e-6)
    throw numerical_error("resonance_profile: channel is not critical (mu_max(BS(0)) = " + std::to_string(mu) +
                          ", expected 1 within 1e-6)");
  Eigen::VectorXd s = es.eigenvectors().col(n - 1);
  ResonanceProfile pr;
  pr.channel = ch;
  pr.quad = q;
  pr.mu_max = mu;
  pr.phi.resize(n);
  double mean = 0.0, apsi = 0.0, norm2 = 0.0;
  for (int i = 0; i < n; ++i) {
    pr.phi[i] = s(i) / std::sqrt(q.weights[i]);
    mean += q.weights[i] * pr.phi[i];
    apsi += q.weights[i] * bs.sqrt_v[i] * pr.phi[i];
    norm2 += q.weights[i] * pr.phi[i] * pr.phi[i];
  }
  double scale = 1.0 / std::sqrt(norm2);
  if (ch.dimension == 4 && ch.ell == 0) {
    if (apsi == 0.0) throw numerical_error("resonance_profile: <|v|^{1/2}, phi> vanishes, cannot normalize");
    scale = 2.0 * pi / ch.mass / apsi;
  } else if (mean < 0.0) {
    scale = -scale;
  }
  for (double& v : pr.phi) v *= scale;
  pr.sqrt_v_phi = apsi * scale;

  pr.f_nodes.resize(n);
  pr.v_f = 0.0;
  for (int i = 0; i < n; ++i) {
    pr.f_nodes[i] = detail::profile_integral(ch, q, pr.phi, q.nodes[i]);
    pr.v_f += q.weights[i] * evaluate_potential(ch.potential, q.nodes[i]) * pr.f_nodes[i];
  }
  pr.radii = q.nodes;
  pr.f = pr.f_nodes;

  const double sigma = ch.potential.range;
  pr.tail_r_min = opt.tail_min_factor * sigma;
  pr.tail_r_max = opt.tail_max_factor * sigma;
  std::vector<double> tr, tf;
  for (int k = 0; k < opt.tail_points; ++k) {
    const double r = pr.tail_r_min * std::pow(pr.tail_r_max / pr.tail_r_min, double(k) / (opt.tail_points - 1));
    tr.push_back(r);
    tf.push_back(detail::profile_integral(ch, q, pr.phi, r));
  }
  const auto [p_fit, c_fit] = detail::fit_power_law(tr, tf);
  pr.p_tail = p_fit;
  pr.c_tail = c_fit * ((tf.front() < 0) ? -1.0 : 1.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr[k] <= pr.radii.back()) continue;
    pr.radii.push_back(tr[k]);
    pr.f.push_back(tf[k]);
  }

  // Remainder f - c r^{-p} on [tail_r_min, tail_r_max], trapezoid in log r.
  double rem = 0.0;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    auto g = [&](std::size_t j) {
      const double e = tf[j] - pr.c_tail * std::pow(tr[j], -pr.p_tail);
      return e * e * q.surface * std::pow(tr[j], ch.dimension);
    };
    rem += 0.5 * (g(k) + g(k + 1)) * std::log(tr[k + 1] / tr[k]);
  }
  pr.remainder_norm = std::sqrt(rem);

  // Cauchy test of int_{B_R} |f|^2 along R_k = R_0 2^k.
  double mass = 0.0;
  for (int i = 0; i < n; ++i) mass += q.weights[i] * pr.f_nodes[i] * pr.f_nodes[i];
  const GaussRule ref = gauss_legendre(16);
  auto add_shell = [&](double lo, double hi) {
    // Gauss in log r
    const GaussRule g = map_rule(ref, std::log(lo), std::log(hi));
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = std::exp(g.nodes[k]);
      const double fv = detail::profile_integral(ch, q, pr.phi, r);
      s += g.weights[k] * q.surface * std::pow(r, ch.dimension) * fv * fv;
    }
    return s;
  };
  const double R0 = opt.l2_start_factor * sigma;
  mass += add_shell(q.r_max(), R0);
  pr.l2_radii.push_back(R0);
  pr.l2_mass.push_back(mass);
  pr.square_integrable = false;
  for (int k = 0; k < opt.l2_doublings; ++k) {
    const double lo = pr.l2_radii.back(), hi = 2.0 * lo;
    const double inc = add_shell(lo, hi);
    mass += inc;
    pr.l2_radii.push_back(hi);
    pr.l2_mass.push_back(mass);
    if (inc < opt.l2_tolerance * mass) {
      pr.square_integrable = true;
      break;
    }
  }
  return pr;
}

inline ResonanceProfile resonance_profile(const TwoBodyChannel& ch, const ProfileOptions& opt = {}) {
  return resonance_profile(ch, channel_quadrature(ch), opt);
}

/// Constant c in f(r) ~ c / r^2 from a least-squares fit of r^2 f(r) on the tail window.
inline double tail_coefficient(const ResonanceProfile& pr, double m) {
  require(pr.channel.dimension == 4, "tail_coefficient: profile must be four-dimensional");
  require(m > 0.0, "tail_coefficient: mass must be > 0");
  require(pr.tail_r_max >= 20.0 * pr.channel.potential.range, "tail_coefficient: tail grid shorter than 20 sigma");
  double s = 0.0;
  int cnt = 0;
  for (std::size_t i = 0; i < pr.radii.size(); ++i) {
    if (pr.radii[i] < pr.tail_r_min * (1 - 1e-12)) continue;
    s += pr.radii[i] * pr.radii[i] * pr.f[i];
    ++cnt;
  }
  if (cnt == 0) throw numerical_error("tail_coefficient: no tail samples");
  return s / cnt;
}

struct Classification {
  VirtualLevel verdict = VirtualLevel::resonance;
  double tail_exponent = 0.0;
  bool square_integrable = false;
};

/// Resonance iff the zero-energy solution fails the L^2 Cauchy test.
inline Classification classify_virtual_level(const TwoBodyChannel& ch, const RadialQuadrature& q) {
  const ResonanceProfile pr = resonance_profile(ch, q);
  // 2p = d is the log-divergent borderline (d = 4 s-wave); there only the Cauchy test decides.
  const double excess = 2.0 * pr.p_tail - ch.dimension;
  if (std::abs(excess) > 0.1 && (excess > 0.0) != pr.square_integrable)
    throw numerical_error("classify_virtual_level: tail exponent and L^2 Cauchy test disagree");
  Classification c;
  c.square_integrable = pr.square_integrable;
  c.tail_exponent = pr.p_tail;
  c.verdict = pr.square_integrable ? VirtualLevel::zero_eigenvalue : VirtualLevel::resonance;
  return c;
}

inline Classification classify_virtual_level(const TwoBodyChannel& ch) {
  return classify_virtual_level(ch, channel_quadrature(ch));
}

// ---------------------------------------------------------------------------
// tau and the w(z) singularity
// ---------------------------------------------------------------------------

struct WSample {
  double z = 0.0;
  double mu_w = 0.0;
};

struct WExpansion {
  double tau = 0.0;
  double mu_alpha = -0.5;
  double t1 = -0.95;        ///< left end of the interpolation window for zeta
  double phi_norm2 = 0.0;   ///< ||phi||^2 under the normalization <|v|^{1/2}, phi> = 2 pi / m
  double g2_value = 0.0;    ///< <G_2 phi, phi>
  double tau_fit = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<WSample> samples;
};

/// Places mu_alpha and the interpolation window given tau.
inline void set_cutoffs(WExpansion& w) {
  const double L = std::min(1.0, std::exp(w.tau));
  w.mu_alpha = -0.5 * L;
  w.t1 = -0.95 * L;
}

inline WExpansion make_wexpansion(double tau) {
  WExpansion w;
  w.tau = tau;
  set_cutoffs(w);
  return w;
}

/// tau = <G_1 phi, phi> with phi normalized as in resonance_profile.
inline WExpansion extract_tau(const TwoBodyChannel& ch, const RadialQuadrature& q, double psi_one = -euler_gamma) {
  require(ch.dimension == 4, "extract_tau: channel must be four-dimensional");
  require(ch.ell == 0, "extract_tau: requires the s-wave sector");
  const BirmanSchwingerOperator bs = assemble_bs(ch, 0.0, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bs.matrix);
  const int n = static_cast<int>(q.size());
  if (std::abs(es.eigenvalues()(n - 1) - 1.0) > 1e-6)
    throw numerical_error("extract_tau: channel is not critical");
  Eigen::VectorXd s = es.eigenvectors().col(n - 1);
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = bs.sqrt_v[i] * std::sqrt(q.weights[i]);
  const double apsi = a.dot(s);
  if (std::abs(apsi) < 1e-14)
    throw numerical_error("extract_tau: <|v|^{1/2}, phi> = 0; antisymmetric input cannot be normalized");
  s *= 2.0 * pi / ch.mass / apsi;
  const ResolventExpansionKernels ek = expansion_kernels(ch, psi_one);
  const Eigen::MatrixXd G1 = discretize_kernel(q, [&](double r, double rp) { return ek.g1(r, rp); });
  const Eigen::MatrixXd G2 = discretize_kernel(q, [&](double r, double rp) { return ek.g2(r, rp); });
  WExpansion w;
  w.tau = s.dot(G1 * s);
  w.g2_value = s.dot(G2 * s);
  w.phi_norm2 = s.squaredNorm();
  set_cutoffs(w);
  return w;
}

/// Largest eigenvalue of w(z) = (I - BS(z))^{-1}.
inline double w_leading_eigenvalue(const TwoBodyChannel& ch, double z, const RadialQuadrature& q) {
  require(z < 0.0, "w_leading_eigenvalue: z must be < 0");
  const double mu = assemble_bs(ch, z, q).mu_max();
  const double gap = 1.0 - mu;
  const double floor = 1e-13 * std::max(1.0, std::abs(mu));
  if (!(gap > floor))
    throw numerical_error("w_leading_eigenvalue: I - BS(z) numerically singular (1 - mu_max = " + std::to_string(gap) +
                          ")");
  return 1.0 / gap;
}

/// tau from fitting ||phi||^2 / mu_w(z) = z (ln|z| - tau) + c z^2 ln^2|z|.
inline void fit_tau(const TwoBodyChannel& ch, const RadialQuadrature& q, const std::vector<double>& zs, WExpansion& w) {
  require(zs.size() >= 3, "fit_tau: need at least three energies");
  require(w.phi_norm2 > 0.0, "fit_tau: run extract_tau first");
  const int n = static_cast<int>(zs.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  w.samples.clear();
  for (int i = 0; i < n; ++i) {
    const double z = zs[i];
    const double mw = w_leading_eigenvalue(ch, z, q);
    w.samples.push_back({z, mw});
    const double L = std::log(std::abs(z));
    // y = ||phi||^2 / (z mu_w) - ln|z| = -tau + c z ln^2|z|
    y(i) = w.phi_norm2 / (z * mw) - L;
    A(i, 0) = -1.0;
    A(i, 1) = z * L * L;
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  w.tau_fit = c(0);
  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double model = (A.row(i) * c)(0) + std::log(std::abs(zs[i]));
    const double data = y(i) + std::log(std::abs(zs[i]));
    res = std::max(res, std::abs(model - data) / std::abs(data));
  }
  w.fit_residual = res;
}

struct ScanSample {
  double z = 0.0;
  double mu_max = 0.0;
};

inline std::vector<ScanSample> bs_scan(const TwoBodyChannel& ch, const RadialQuadrature& q, const std::vector<double>& zs) {
  std::vector<ScanSample> out;
  for (double z : zs) out.push_back({z, assemble_bs(ch, z, q).mu_max()});
  return out;
}

struct ExponentFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double residual = 0.0;  ///< max relative deviation of the model from 1 - mu_max
};

/// Fits 1 - mu_max(z) = C |z|^p L(z) by least squares in log variables; L = 1 gives a pure
/// power, L(z) = |ln|z|| + tau the d = 4 logarithmic correction.
template <class Correction>
ExponentFit fit_singularity_exponent(const std::vector<ScanSample>& s, Correction&& L) {
  require(s.size() >= 3, "fit_singularity_exponent: need at least three samples");
  const int n = static_cast<int>(s.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double gap = 1.0 - s[i].mu_max;
    require(gap > 0.0 && s[i].z < 0.0, "fit_singularity_exponent: need z < 0 and mu_max < 1");
    const double l = L(s[i].z);
    require(l > 0.0, "fit_singularity_exponent: correction factor must be positive");
    A(i, 0) = std::log(-s[i].z);
    A(i, 1) = 1.0;
    y(i) = std::log(gap / l);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  ExponentFit f;
  f.exponent = c(0);
  f.log_prefactor = c(1);
  for (int i = 0; i < n; ++i) f.residual = std::max(f.residual, std::abs(std::expm1((A.row(i) * c)(0) - y(i))));
  return f;
}

inline ExponentFit fit_singularity_exponent(const std::vector<ScanSample>& s) {
  return fit_singularity_exponent(s, [](double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// zeta regularizer
// ---------------------------------------------------------------------------

namespace detail {
// C-infinity step: 0 at u <= 0, 1 at u >= 1.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}
}  // namespace detail

/// sqrt(t (ln|t| - tau)) near zero, 1 far from zero, smooth and positive in between.
inline double zeta(double t, const WExpansion& w) {
  require(t < 0.0, "zeta: t must be < 0");
  if (t <= w.t1) return 1.0;
  const double res = std::sqrt(t * (std::log(-t) - w.tau));
  if (t >= w.mu_alpha) return res;
  const double u = (t - w.t1) / (w.mu_alpha - w.t1);
  return std::exp(detail::smooth_step(u) * std::log(res));
}

// ---------------------------------------------------------------------------
// Gap on the orthogonal complement
// ---------------------------------------------------------------------------

struct GapResult {
  double unconstrained_min = 0.0;
  double mu_gap = 0.0;
  int elements = 0;
};

namespace detail {

struct P2Radial {
  std::vector<double> mesh;  // element edges
  int ndof() const { return 2 * static_cast<int>(mesh.size() - 1) + 1; }
};

}  // namespace detail

/// Minimum of <h g, g> / ||(2m)^{-1/2} grad g||^2 over radial P2 finite elements, with and
/// without the constraint <grad g, grad f> = 0, f the zero-energy profile.
inline GapResult gap_on_complement(const TwoBodyChannel& ch, int elements = 160, bool constrained = true) {
  ch.validate();
  require(elements >= 8, "gap_on_complement: need at least 8 elements");
  const int d = ch.dimension, ell = ch.ell;
  const double m = ch.mass;
  const double sigma = ch.potential.range;
  const double R = ch.potential.family == PotentialFamily::finite_spherical_well ? 4.0 * sigma
                                                                                  : support_radius(ch.potential) + sigma;
  std::vector<double> mesh(elements + 1);
  const double hlog = std::log1p(R / sigma) / elements;
  for (int k = 0; k <= elements; ++k) mesh[k] = sigma * std::expm1(hlog * k);
  mesh.back() = R;
  if (ch.potential.family == PotentialFamily::finite_spherical_well) {
    // put a node on the jump
    auto it = std::min_element(mesh.begin() + 1, mesh.end() - 1,
                               [&](double a, double b) { return std::abs(a - sigma) < std::abs(b - sigma); });
    *it = sigma;
  }
  const int N = 2 * elements + 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N), V = Eigen::MatrixXd::Zero(N, N);
  const GaussRule g = gauss_legendre(8);
  const double wd = sphere_surface(d);
  const double cent = ell * (ell + d - 2.0);
  for (int e = 0; e < elements; ++e) {
    const double a = mesh[e], b = mesh[e + 1], h = b - a;
    const int dof[3] = {2 * e, 2 * e + 1, 2 * e + 2};
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double xi = 0.5 * (g.nodes[k] + 1.0);
      const double r = a + h * xi;
      const double w = 0.5 * g.weights[k] * h * wd * std::pow(r, d - 1);
      const double N0 = 2 * (xi - 0.5) * (xi - 1), N1 = -4 * xi * (xi - 1), N2 = 2 * xi * (xi - 0.5);
      const double D0 = (4 * xi - 3) / h, D1 = (-8 * xi + 4) / h, D2 = (4 * xi - 1) / h;
      const double Nv[3] = {N0, N1, N2}, Dv[3] = {D0, D1, D2};
      const double vv = std::abs(evaluate_potential(ch.potential, r));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          K(dof[i], dof[j]) += w * (Dv[i] * Dv[j] + cent * Nv[i] * Nv[j] / (r * r));
          V(dof[i], dof[j]) += w * 2.0 * m * vv * Nv[i] * Nv[j];
        }
    }
  }
  // exterior harmonic extension g(R) (R/r)^{ell+d-2}
  K(N - 1, N - 1) += wd * (ell + d - 2.0) * std::pow(R, d - 2);
  if (ell > 0) {
    // regularity at the origin: g(0) = 0
    K.row(0).setZero();
    K.col(0).setZero();
    V.row(0).setZero();
    V.col(0).setZero();
    K(0, 0) = 1.0;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(V, K);
  const Eigen::VectorXd nu = ges.eigenvalues();
  GapResult out;
  out.elements = elements;
  out.unconstrained_min = 1.0 - nu(N - 1);
  out.mu_gap = std::numeric_limits<double>::quiet_NaN();
  if (!constrained) return out;

  // Constraint from the zero-energy profile interpolated on the FEM nodes.
  const ResonanceProfile pr = resonance_profile(ch);
  Eigen::VectorXd fI(N);
  for (int e = 0; e < elements; ++e) {
    fI(2 * e) = pr(std::max(mesh[e], 1e-12 * sigma));
    fI(2 * e + 1) = pr(0.5 * (mesh[e] + mesh[e + 1]));
  }
  fI(N - 1) = pr(R);
  if (ell > 0) fI(0) = 0.0;
  Eigen::VectorXd c = K * fI;
  if (c.norm() == 0.0) throw numerical_error("gap_on_complement: constraint vector vanishes");
  // Null space of c^T from a Householder reflection.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(N - 1);
  const Eigen::MatrixXd Kz = Z.transpose() * K * Z, Vz = Z.transpose() * V * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gz(Vz, Kz);
  out.mu_gap = 1.0 - gz.eigenvalues()(N - 2);
  return out;
}

}  // namespace vlab
