#pragma once

// Shared problem definitions: pair potentials, two-body channels, radial grids
// and spectral result records.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlab/quadrature.hpp"

namespace vlab {

inline constexpr double pi = std::numbers::pi;
inline constexpr double euler_gamma = std::numbers::egamma;

/// Precondition or configuration violated; the message names the precondition.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver a trustworthy answer (singular system,
/// non-critical channel, unconverged iteration).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The potential admits no critical coupling (repulsive or identically zero).
class no_critical_coupling : public validation_error {
 public:
  using validation_error::validation_error;
};

inline void require(bool ok, std::string_view what) {
  if (!ok) throw validation_error(std::string(what));
}

// ---------------------------------------------------------------------------
// Pair potentials
// ---------------------------------------------------------------------------

enum class PotentialFamily { gaussian_well, exponential_well, finite_spherical_well };

inline std::string_view to_string(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::gaussian_well: return "gaussian-well";
    case PotentialFamily::exponential_well: return "exponential-well";
    case PotentialFamily::finite_spherical_well: return "finite-spherical-well";
  }
  return "?";
}

inline PotentialFamily parse_family(std::string_view s) {
  if (s == "gaussian-well") return PotentialFamily::gaussian_well;
  if (s == "exponential-well") return PotentialFamily::exponential_well;
  if (s == "finite-spherical-well") return PotentialFamily::finite_spherical_well;
  throw validation_error("unknown potential family '" + std::string(s) + "'");
}

/// Radial attractive well v(r) <= 0 together with its decay certificate
/// |v(r)| <= C (1 + r)^{-b} for r >= gamma.
struct PotentialSpec {
  PotentialFamily family = PotentialFamily::gaussian_well;
  double strength = 1.0;  ///< depth lambda >= 0
  double range = 1.0;     ///< sigma > 0
  double decay_exponent = 6.0;
  double decay_radius = 0.0;
  double decay_constant = 1.0;
};

namespace detail {

inline double shape(PotentialFamily f, double r, double sigma) {
  switch (f) {
    case PotentialFamily::gaussian_well: return std::exp(-(r * r) / (sigma * sigma));
    case PotentialFamily::exponential_well: return std::exp(-r / sigma);
    case PotentialFamily::finite_spherical_well: return r < sigma ? 1.0 : 0.0;
  }
  return 0.0;
}

// sup_{r >= 0} shape(r) (1 + r)^b, attained at a stationary point or at an edge.
inline double decay_sup(PotentialFamily f, double sigma, double b) {
  switch (f) {
    case PotentialFamily::gaussian_well: {
      const double r = 0.5 * (-1.0 + std::sqrt(1.0 + 2.0 * b * sigma * sigma));
      return shape(f, r, sigma) * std::pow(1.0 + r, b);
    }
    case PotentialFamily::exponential_well: {
      const double r = std::max(0.0, b * sigma - 1.0);
      return shape(f, r, sigma) * std::pow(1.0 + r, b);
    }
    case PotentialFamily::finite_spherical_well: return std::pow(1.0 + sigma, b);
  }
  return 0.0;
}

}  // namespace detail

/// Builds a potential with its decay certificate (C chosen as the tight supremum).
inline PotentialSpec make_potential(PotentialFamily family, double strength, double range,
                                    double decay_exponent = 6.0) {
  require(strength >= 0.0, "potential strength must be >= 0 (attractive well depth)");
  require(range > 0.0, "potential range sigma must be > 0");
  require(decay_exponent > 0.0, "decay exponent b must be > 0");
  PotentialSpec s;
  s.family = family;
  s.strength = strength;
  s.range = range;
  s.decay_exponent = decay_exponent;
  s.decay_radius = 0.0;
  s.decay_constant = strength * detail::decay_sup(family, range, decay_exponent) * (1.0 + 1e-12);
  return s;
}

inline PotentialSpec scaled_potential(const PotentialSpec& s, double lambda) {
  return make_potential(s.family, lambda, s.range, s.decay_exponent);
}

/// v(r); throws for r < 0.
inline double evaluate_potential(const PotentialSpec& spec, double r) {
  if (!(r >= 0.0)) throw validation_error("evaluate_potential: radius must be >= 0");
  return -spec.strength * detail::shape(spec.family, r, spec.range);
}

/// Radius beyond which |v| / lambda < tol (exact support edge for the spherical well).
inline double effective_range(const PotentialSpec& spec, double tol = 1e-30) {
  switch (spec.family) {
    case PotentialFamily::gaussian_well: return spec.range * std::sqrt(-std::log(tol));
    case PotentialFamily::exponential_well: return spec.range * (-std::log(tol));
    case PotentialFamily::finite_spherical_well: return spec.range;
  }
  return spec.range;
}

/// Checks |v(r)| <= C (1+r)^{-b} on a sample grid and b against the dimension's
/// threshold (b > 4 for d = 4, b > 2 for d >= 5, b > 2 for d = 3).
inline bool decay_bound_holds(const PotentialSpec& spec, int d, int samples = 2000, double r_max = 0.0) {
  const double need = (d == 4) ? 4.0 : 2.0;
  if (!(spec.decay_exponent > need)) return false;
  if (r_max <= 0.0) r_max = 100.0 * spec.range;
  for (int i = 0; i <= samples; ++i) {
    const double r = r_max * i / samples;
    const double bound = spec.decay_constant * std::pow(1.0 + r, -spec.decay_exponent);
    if (std::abs(evaluate_potential(spec, r)) > bound * (1.0 + 1e-12) + 1e-300) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Two-body channels
// ---------------------------------------------------------------------------

enum class Sector { generic, antisymmetric };

inline std::string_view to_string(Sector s) { return s == Sector::generic ? "generic" : "antisymmetric"; }

inline Sector parse_sector(std::string_view s) {
  if (s == "generic") return Sector::generic;
  if (s == "antisymmetric") return Sector::antisymmetric;
  throw validation_error("unknown sector '" + std::string(s) + "'");
}

/// One pair subsystem h = -(1/2m) Delta + v on L^2(R^d), restricted to angular momentum ell.
struct TwoBodyChannel {
  double mass = 1.0;
  PotentialSpec potential;
  int dimension = 4;
  int ell = 0;
  Sector sector = Sector::generic;

  void validate() const {
    require(mass > 0.0, "channel reduced mass must be > 0");
    require(dimension >= 3, "channel dimension must be >= 3");
    require(ell >= 0, "angular momentum must be >= 0");
    if (sector == Sector::antisymmetric)
      require(ell % 2 == 1, "antisymmetric sector requires odd angular momentum");
  }

  TwoBodyChannel with_strength(double lambda) const {
    TwoBodyChannel c = *this;
    c.potential = scaled_potential(potential, lambda);
    return c;
  }

  /// Lowest admissible angular momentum for the sector.
  static int lowest_ell(Sector s) { return s == Sector::antisymmetric ? 1 : 0; }
};

// ---------------------------------------------------------------------------
// Radial quadrature
// ---------------------------------------------------------------------------

/// Surface area of the unit sphere S^{d-1}.
inline double sphere_surface(int d) {
  return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Composite Gauss-Legendre grid on (0, r_max] with the measure w_d r^{d-1} dr folded
/// into the weights. Panel structure is kept so that kernels with a diagonal kink can
/// be integrated exactly on the diagonal blocks.
struct RadialQuadrature {
  int dimension = 3;
  double surface = 0.0;          ///< w_d
  int order = 16;                ///< nodes per panel
  std::vector<double> breaks;    ///< panel edges, breaks.front() == 0
  std::vector<double> nodes;     ///< r_i
  std::vector<double> raw_weights;  ///< Gauss weights for dr
  std::vector<double> weights;   ///< u_i = w_d r_i^{d-1} raw_i

  std::size_t size() const { return nodes.size(); }
  std::size_t panels() const { return breaks.size() - 1; }
  double r_max() const { return breaks.back(); }

  /// Integral of a radial function over the ball of radius r_max().
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Grid with explicit panel edges; order nodes per panel.
inline RadialQuadrature build_panel_quadrature(int d, std::vector<double> breaks, int order) {
  require(d >= 1, "quadrature dimension must be >= 1");
  require(order >= 2, "panel order must be >= 2");
  require(breaks.size() >= 2 && breaks.front() == 0.0, "panel edges must start at 0");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    require(breaks[i] > breaks[i - 1], "panel edges must be strictly increasing");
  RadialQuadrature q;
  q.dimension = d;
  q.surface = sphere_surface(d);
  q.order = order;
  q.breaks = std::move(breaks);
  const GaussRule ref = gauss_legendre(order);
  for (std::size_t p = 0; p + 1 < q.breaks.size(); ++p) {
    const GaussRule r = map_rule(ref, q.breaks[p], q.breaks[p + 1]);
    for (std::size_t i = 0; i < r.size(); ++i) {
      q.nodes.push_back(r.nodes[i]);
      q.raw_weights.push_back(r.weights[i]);
      q.weights.push_back(q.surface * std::pow(r.nodes[i], d - 1) * r.weights[i]);
    }
  }
  return q;
}

/// Uniform panels of 16 Gauss nodes on (0, r_max]; n is rounded up to a multiple of 16.
inline RadialQuadrature build_radial_quadrature(int d, double r_max, int n) {
  require(d >= 3, "build_radial_quadrature: dimension must be >= 3");
  require(n >= 16, "build_radial_quadrature: n must be >= 16");
  require(r_max > 0.0, "build_radial_quadrature: r_max must be > 0");
  constexpr int order = 16;
  const int panels = (n + order - 1) / order;
  std::vector<double> breaks(panels + 1);
  for (int p = 0; p <= panels; ++p) breaks[p] = r_max * p / panels;
  return build_panel_quadrature(d, std::move(breaks), order);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct SpectralReport {
  std::string operator_tag;
  std::vector<double> eigenvalues;  ///< descending
  int count_above = 0;
  double threshold = 1.0;
  std::vector<double> refinement_deltas;  ///< [0] is the top-eigenvalue change under refinement
};

inline SpectralReport make_report(std::string tag, std::vector<double> eig, double threshold) {
  std::sort(eig.begin(), eig.end(), std::greater<>());
  SpectralReport r;
  r.operator_tag = std::move(tag);
  r.threshold = threshold;
  r.count_above = static_cast<int>(std::count_if(eig.begin(), eig.end(), [&](double e) { return e > threshold; }));
  r.eigenvalues = std::move(eig);
  return r;
}

}  // namespace vlab
