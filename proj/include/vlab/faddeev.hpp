#pragma once

// Symmetrized Faddeev operator A(z) = W^{1/2} K W^{1/2} for three particles with
// radial pair wells, restricted to pair s-waves (zero relative and spectator angular
// momentum), and counting of its eigenvalues above one.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vlab/core.hpp"
#include "vlab/jacobi.hpp"
#include "vlab/lanczos.hpp"
#include "vlab/twobody.hpp"

namespace vlab {

// ---------------------------------------------------------------------------
// Form factor: average of exp(i k.x) over directions, Gamma(d/2) (2/s)^{d/2-1} J_{d/2-1}(s)
// ---------------------------------------------------------------------------

class FormFactor {
 public:
  explicit FormFactor(int d, double s_max = 400.0, double h = 2e-3) : d_(d), h_(h) {
    require(d >= 3, "form factor: dimension must be >= 3");
    if (d_ == 3) return;
    nu_ = 0.5 * d_ - 1.0;
    pref_ = std::tgamma(nu_ + 1.0) * std::pow(2.0, nu_);
    const int n = static_cast<int>(std::ceil(s_max / h_)) + 2;
    val_.resize(n);
    der_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double s = i * h_;
      val_[i] = exact(s);
      der_[i] = (s == 0.0) ? 0.0 : -pref_ * std::pow(s, -nu_) * std::cyl_bessel_j(nu_ + 1.0, s);
    }
  }

  double exact(double s) const {
    if (d_ == 3) return s == 0.0 ? 1.0 : std::sin(s) / s;
    if (s < 1e-4) return 1.0 - s * s / (4.0 * (nu_ + 1.0));
    return pref_ * std::pow(s, -nu_) * std::cyl_bessel_j(nu_, s);
  }

  double operator()(double s) const {
    if (d_ == 3) return s == 0.0 ? 1.0 : std::sin(s) / s;
    const double x = s / h_;
    const int i = static_cast<int>(x);
    if (i + 1 >= static_cast<int>(val_.size())) return exact(s);
    // cubic Hermite
    const double t = x - i, t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * val_[i] + h10 * h_ * der_[i] + h01 * val_[i + 1] + h11 * h_ * der_[i + 1];
  }

 private:
  int d_;
  double h_;
  double nu_ = 0.0, pref_ = 1.0;
  std::vector<double> val_, der_;
};

inline const FormFactor& form_factor(int d) {
  require(d == 3 || d == 4, "form_factor: dimension must be 3 or 4");
  static const FormFactor f3(3), f4(4);
  return d == 3 ? f3 : f4;
}

// ---------------------------------------------------------------------------
// System definition
// ---------------------------------------------------------------------------

enum class Symmetrization { identical_bosons, distinct };

inline std::string_view to_string(Symmetrization s) {
  return s == Symmetrization::identical_bosons ? "identical-bosons" : "distinct";
}

/// Radial momentum grid with measure w_d q^{d-1} dq folded into the weights.
struct MomentumGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

struct FaddeevGrids {
  int x_panels = 2;          ///< panels graded in log(1 + r / range) up to the support radius
  int x_order = 16;
  double p_min = 1e-6;       ///< lower edge of the logarithmic panels
  double p_max = 15.0;       ///< in units of 1 / range
  double p_panels_per_decade = 1.0;
  int p_order = 8;
  int angular_order = 32;

  FaddeevGrids doubled() const {
    FaddeevGrids g = *this;
    g.x_panels *= 2;
    g.p_panels_per_decade *= 2;
    return g;
  }
};

inline MomentumGrid build_momentum_grid(int d, const FaddeevGrids& g, double range) {
  require(g.p_min > 0.0 && g.p_max > g.p_min, "momentum grid: need 0 < p_min < p_max");
  require(g.p_order >= 2 && g.p_panels_per_decade > 0.0, "momentum grid: invalid panel settings");
  const double lo = g.p_min / range, hi = g.p_max / range;
  const double wd = sphere_surface(d);
  MomentumGrid mg;
  const GaussRule ref = gauss_legendre(g.p_order);
  auto add = [&](const GaussRule& r, bool logscale) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double q = logscale ? std::exp(r.nodes[i]) : r.nodes[i];
      const double dq = logscale ? q * r.weights[i] : r.weights[i];
      mg.nodes.push_back(q);
      mg.weights.push_back(wd * std::pow(q, d - 1) * dq);
    }
  };
  add(map_rule(ref, 0.0, lo), false);
  const double decades = std::log10(hi / lo);
  const int panels = std::max(1, static_cast<int>(std::ceil(decades * g.p_panels_per_decade)));
  const double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < panels; ++k) add(map_rule(ref, a + (b - a) * k / panels, a + (b - a) * (k + 1) / panels), true);
  return mg;
}

/// How a pair coupling is fixed: an absolute depth or a multiple of the critical depth
/// computed on the system's own pair grid.
struct Coupling {
  bool relative = true;
  double value = 1.0;
};

struct FaddeevSystem {
  int dimension = 4;
  JacobiFrame frame;
  std::array<TwoBodyChannel, 3> channels;  ///< resolved strengths
  std::array<double, 3> critical{};        ///< critical depth of each channel on the pair grid
  RadialQuadrature xgrid;
  MomentumGrid pgrid;
  GaussRule angular;
  Symmetrization mode = Symmetrization::identical_bosons;
  FaddeevGrids grids;
  std::array<std::optional<WExpansion>, 3> w;  ///< filled for d = 4 resonant channels when needed

  int nx() const { return static_cast<int>(xgrid.size()); }
  int np() const { return static_cast<int>(pgrid.size()); }
  int block_size() const { return nx() * np(); }
};

/// Builds a system. shape supplies family, range and decay exponent; coupling fixes the depth
/// of every pair. Pair reduced masses come from the particle masses.
inline FaddeevSystem make_faddeev_system(int d, std::array<double, 3> masses, const PotentialSpec& shape,
                                         Coupling coupling, Symmetrization mode, const FaddeevGrids& grids = {}) {
  require(d == 3 || d == 4, "faddeev system: dimension must be 3 or 4");
  require(grids.angular_order >= 4, "faddeev system: angular order must be >= 4");
  require(grids.x_panels >= 1 && grids.x_order >= 4, "faddeev system: invalid pair grid");
  if (mode == Symmetrization::identical_bosons)
    require(masses[0] == masses[1] && masses[1] == masses[2], "identical-boson mode requires equal masses");
  FaddeevSystem sys;
  sys.dimension = d;
  sys.mode = mode;
  sys.grids = grids;
  sys.frame = make_frame(masses[0], masses[1], masses[2]);
  const double sigma = shape.range;
  const double rmax = support_radius(shape);
  std::vector<double> breaks(grids.x_panels + 1);
  const double h = std::log1p(rmax / sigma) / grids.x_panels;
  for (int k = 0; k <= grids.x_panels; ++k)
    breaks[k] = shape.family == PotentialFamily::finite_spherical_well ? rmax * k / grids.x_panels
                                                                        : sigma * std::expm1(h * k);
  breaks.back() = rmax;
  sys.xgrid = build_panel_quadrature(d, breaks, grids.x_order);
  sys.pgrid = build_momentum_grid(d, grids, sigma);
  sys.angular = angular_average_rule(d, grids.angular_order);
  for (int a = 0; a < 3; ++a) {
    TwoBodyChannel ch;
    ch.mass = sys.frame.m[a];
    ch.dimension = d;
    ch.ell = 0;
    ch.potential = make_potential(shape.family, 1.0, sigma, shape.decay_exponent);
    sys.critical[a] = critical_coupling(ch, sys.xgrid);
    const double lambda = coupling.relative ? coupling.value * sys.critical[a] : coupling.value;
    require(lambda >= 0.0, "faddeev system: coupling must be >= 0");
    sys.channels[a] = ch.with_strength(lambda);
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

/// Discretized |V_a|^{1/2} R_0(z) |V_b|^{1/2} between pair-s-wave components, in the
/// symmetric representation: index (i, p) -> p * nx + i.
inline Eigen::MatrixXd assemble_K_block(const FaddeevSystem& sys, int a, int b, double z) {
  require(a != b && a >= 0 && a < 3 && b >= 0 && b < 3, "assemble_K_block: need two distinct pairs");
  require(z <= 0.0, "assemble_K_block: z must be <= 0");
  require(sys.angular.size() >= 4, "assemble_K_block: angular order below minimum");
  const int d = sys.dimension;
  const FormFactor& ff = form_factor(d);
  const int nx = sys.nx(), np = sys.np(), nt = static_cast<int>(sys.angular.size());
  const JacobiFrame& f = sys.frame;
  const double dab = f.d[a][b], eab = f.e[a][b], dba = f.d[b][a], eba = f.e[b][a];
  const double pref = std::pow(2.0 * pi, -d);
  std::vector<double> sa(nx), sb(nx);
  for (int i = 0; i < nx; ++i) {
    sa[i] = std::sqrt(sys.xgrid.weights[i]) * std::sqrt(std::abs(evaluate_potential(sys.channels[a].potential, sys.xgrid.nodes[i])));
    sb[i] = std::sqrt(sys.xgrid.weights[i]) * std::sqrt(std::abs(evaluate_potential(sys.channels[b].potential, sys.xgrid.nodes[i])));
  }
  Eigen::MatrixXd K(nx * np, nx * np);
  Eigen::MatrixXd Fa(nx, nt), Fb(nx, nt);
  for (int pa = 0; pa < np; ++pa) {
    const double q = sys.pgrid.nodes[pa];
    for (int pb = 0; pb < np; ++pb) {
      const double qp = sys.pgrid.nodes[pb];
      const double wq = pref * std::sqrt(sys.pgrid.weights[pa] * sys.pgrid.weights[pb]);
      for (int k = 0; k < nt; ++k) {
        const double t = sys.angular.nodes[k];
        const double ka = std::sqrt(std::max(0.0, dab * dab * q * q + eab * eab * qp * qp + 2.0 * dab * eab * q * qp * t));
        const double kb = std::sqrt(std::max(0.0, dba * dba * qp * qp + eba * eba * q * q + 2.0 * dba * eba * q * qp * t));
        const double den = kinetic_form_radial(q, qp, t, a, b, f) - z;
        const double wt = wq * sys.angular.weights[k] / den;
        for (int i = 0; i < nx; ++i) {
          const double r = sys.xgrid.nodes[i];
          Fa(i, k) = sa[i] * ff(r * ka) * wt;
          Fb(i, k) = sb[i] * ff(r * kb);
        }
      }
      K.block(pa * nx, pb * nx, nx, nx).noalias() = Fa * Fb.transpose();
    }
  }
  return K;
}

/// Per-momentum factors of channel a at total energy z: for each momentum node, the
/// symmetric inverse square root of I - BS(z - p^2 / 2 n_a).
inline std::vector<Eigen::MatrixXd> assemble_W_half(const FaddeevSystem& sys, int a, double z) {
  require(z < 0.0, "assemble_W_half: z must be < 0 (z = 0 is reached through M-blocks)");
  std::vector<Eigen::MatrixXd> out(sys.np());
  const TwoBodyChannel& ch = sys.channels[a];
  for (int p = 0; p < sys.np(); ++p) {
    const double q = sys.pgrid.nodes[p];
    const double E = z - q * q / (2.0 * sys.frame.n[a]);
    if (ch.potential.strength == 0.0) {
      out[p] = Eigen::MatrixXd::Identity(sys.nx(), sys.nx());
      continue;
    }
    const Eigen::MatrixXd bs = assemble_bs(ch, E, sys.xgrid).matrix;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(sys.nx(), sys.nx()) - bs;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double lmin = es.eigenvalues()(0);
    if (!(lmin > 0.0))
      throw numerical_error("assemble_W_half: z lies at or above the two-body threshold (I - BS has eigenvalue " +
                            std::to_string(lmin) + " at effective energy " + std::to_string(E) + ")");
    out[p] = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose();
  }
  return out;
}

/// zeta_a(z - p^2 / 2 n_a) on the momentum grid.
inline std::vector<double> gamma_factors(const FaddeevSystem& sys, int a, double z) {
  require(sys.w[a].has_value(), "gamma_factors: tau of channel " + pair_name(a) + " missing; run extract_tau first");
  std::vector<double> g(sys.np());
  for (int p = 0; p < sys.np(); ++p) {
    const double q = sys.pgrid.nodes[p];
    g[p] = zeta(z - q * q / (2.0 * sys.frame.n[a]), *sys.w[a]);
  }
  return g;
}

/// Computes tau for every channel of a four-dimensional system at its critical depth.
inline void attach_tau(FaddeevSystem& sys) {
  require(sys.dimension == 4, "attach_tau: requires d = 4");
  for (int a = 0; a < 3; ++a) {
    const TwoBodyChannel& ch = sys.channels[a];
    const RadialQuadrature q = channel_quadrature(ch, 2);
    const TwoBodyChannel crit = ch.with_strength(critical_coupling(ch, q));
    sys.w[a] = extract_tau(crit, q);
  }
}

/// M_ab(z) = Gamma_a^{-1} K_ab(z) Gamma_b^{-1}.
inline Eigen::MatrixXd assemble_M_block(const FaddeevSystem& sys, int a, int b, double z) {
  require(sys.dimension == 4, "assemble_M_block: requires d = 4");
  Eigen::MatrixXd K = assemble_K_block(sys, a, b, z);
  const std::vector<double> ga = gamma_factors(sys, a, z), gb = gamma_factors(sys, b, z);
  const int nx = sys.nx();
  for (int pa = 0; pa < sys.np(); ++pa)
    for (int pb = 0; pb < sys.np(); ++pb) K.block(pa * nx, pb * nx, nx, nx) /= (ga[pa] * gb[pb]);
  return K;
}

// ---------------------------------------------------------------------------
// A(z)
// ---------------------------------------------------------------------------

enum class WRoute { direct, zeta_split };

struct FaddeevOperator {
  double z = 0.0;
  Symmetrization mode = Symmetrization::identical_bosons;
  int nx = 0, np = 0;
  Eigen::MatrixXd matrix;  ///< reduced block (bosons) or full 3x3 block operator
};

namespace detail {

inline void sandwich(Eigen::MatrixXd& K, const std::vector<Eigen::MatrixXd>& Wa,
                     const std::vector<Eigen::MatrixXd>& Wb, int nx, int np, int row0, int col0) {
  for (int pa = 0; pa < np; ++pa)
    for (int pb = 0; pb < np; ++pb) {
      auto blk = K.block(row0 + pa * nx, col0 + pb * nx, nx, nx);
      blk = Wa[pa] * blk * Wb[pb];
    }
}

}  // namespace detail

/// Assembles A(z); in identical-boson mode the symmetric sector 2 A_{12,23}.
inline FaddeevOperator assemble_A(const FaddeevSystem& sys, double z, WRoute route = WRoute::direct) {
  require(z < 0.0, "assemble_A: z must be < 0");
  const int nx = sys.nx(), np = sys.np(), nb = nx * np;
  FaddeevOperator op;
  op.z = z;
  op.mode = sys.mode;
  op.nx = nx;
  op.np = np;
  auto factors = [&](int a) {
    std::vector<Eigen::MatrixXd> W = assemble_W_half(sys, a, z);
    if (route == WRoute::zeta_split) {
      // W^{1/2} = Gamma^{-1} (Gamma W^{1/2}); K is regularized by the inverse factors.
      const std::vector<double> g = gamma_factors(sys, a, z);
      for (int p = 0; p < np; ++p) W[p] *= g[p];
    }
    return W;
  };
  auto block = [&](int a, int b) {
    return route == WRoute::zeta_split ? assemble_M_block(sys, a, b, z) : assemble_K_block(sys, a, b, z);
  };
  if (sys.mode == Symmetrization::identical_bosons) {
    const auto W = factors(0);
    op.matrix = block(P12, P23);
    detail::sandwich(op.matrix, W, W, nx, np, 0, 0);
    op.matrix *= 2.0;
    op.matrix = 0.5 * (op.matrix + op.matrix.transpose()).eval();
    return op;
  }
  std::array<std::vector<Eigen::MatrixXd>, 3> W;
  for (int a = 0; a < 3; ++a) W[a] = factors(a);
  op.matrix = Eigen::MatrixXd::Zero(3 * nb, 3 * nb);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      Eigen::MatrixXd Kab = block(a, b);
      detail::sandwich(Kab, W[a], W[b], nx, np, 0, 0);
      op.matrix.block(a * nb, b * nb, nb, nb) = Kab;
      op.matrix.block(b * nb, a * nb, nb, nb) = Kab.transpose();
    }
  return op;
}

struct FaddeevCount {
  double z = 0.0;
  int count = 0;
  bool ambiguous = false;
  int count_if_boundary_above = 0;
  double top_eigenvalue = 0.0;
  double gap_to_one = 0.0;  ///< min |mu - 1| over the computed eigenvalues
};

inline FaddeevCount count_above_one(const FaddeevOperator& op, const CountOptions& opt = {}) {
  const CountResult r = count_above(op.matrix, opt);
  FaddeevCount c;
  c.z = op.z;
  c.count = r.count;
  c.ambiguous = r.ambiguous;
  c.count_if_boundary_above = r.count_if_boundary_above;
  c.top_eigenvalue = r.locked.empty() ? r.next_below : r.locked.front();
  c.gap_to_one = std::abs(r.next_below - opt.threshold);
  for (double th : r.locked) c.gap_to_one = std::min(c.gap_to_one, std::abs(th - opt.threshold));
  return c;
}

// ---------------------------------------------------------------------------
// Counting curves
// ---------------------------------------------------------------------------

enum class FitMode { log_slope, plateau };

struct CountingCurve {
  std::vector<FaddeevCount> samples;
  FitMode mode = FitMode::plateau;
  double slope = 0.0;       ///< counts per unit of ln(1/|z|)
  double intercept = 0.0;
  double residual = 0.0;    ///< rms residual of the linear-in-ln|z| fit over the mean count
};

/// Least-squares fit of counts against ln(1/|z|).
inline void fit_counting_curve(CountingCurve& c) {
  const int n = static_cast<int>(c.samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : c.samples) {
    const double x = std::log(1.0 / std::abs(s.z)), y = s.count;
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  c.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  c.intercept = (sy - c.slope * sx) / n;
  double rss = 0.0;
  for (const auto& s : c.samples) {
    const double x = std::log(1.0 / std::abs(s.z));
    const double e = s.count - (c.intercept + c.slope * x);
    rss += e * e;
  }
  c.residual = std::sqrt(rss / n) / std::max(1.0, sy / n);
}

/// At least four negative energies spanning four decades.
inline void check_schedule(const std::vector<double>& zs) {
  require(zs.size() >= 4, "counting_curve: need at least four schedule points");
  double lo = 1e300, hi = 0.0;
  for (double z : zs) {
    require(z < 0.0, "counting_curve: schedule energies must be < 0");
    lo = std::min(lo, std::abs(z));
    hi = std::max(hi, std::abs(z));
  }
  require(hi / lo >= 1e4 * (1 - 1e-12), "counting_curve: schedule must span at least four decades");
}

/// Counts at every schedule point; for_each(n, f) decides how the points are dispatched.
template <class ForEach>
CountingCurve counting_curve(const FaddeevSystem& sys, const std::vector<double>& zs, const CountOptions& opt,
                             ForEach&& for_each) {
  check_schedule(zs);
  CountingCurve c;
  c.mode = sys.dimension == 3 ? FitMode::log_slope : FitMode::plateau;
  c.samples.resize(zs.size());
  for_each(static_cast<int>(zs.size()), [&](int i) { c.samples[i] = count_above_one(assemble_A(sys, zs[i]), opt); });
  fit_counting_curve(c);
  return c;
}

inline CountingCurve counting_curve(const FaddeevSystem& sys, const std::vector<double>& zs, const CountOptions& opt = {}) {
  return counting_curve(sys, zs, opt, [](int n, auto&& f) {
    for (int i = 0; i < n; ++i) f(i);
  });
}

}  // namespace vlab
