// Batch front end: every subcommand reads a JSON config, writes CSV/JSON results and a
// manifest into the output directory. Exit codes: 0 ok, 2 invalid input, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vlab/config.hpp"
#include "vlab/faddeev.hpp"
#include "vlab/io.hpp"
#include "vlab/jacobi.hpp"
#include "vlab/oracle.hpp"
#include "vlab/twobody.hpp"

namespace fs = std::filesystem;
using namespace vlab;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string out;
  int workers = 1;
  std::optional<int> dimension;
  std::optional<unsigned> seed;
};

struct Run {
  RunConfig cfg;
  fs::path dir;
  json manifest;
  Stopwatch clock;
  int workers = 1;
};

Run start(const std::string& name, const Flags& f) {
  require(!f.config.empty(), "--config is required");
  require(f.workers >= 1, "--workers must be >= 1");
  Run r;
  r.cfg = load_config(f.config);
  if (f.dimension) r.cfg.dimension = *f.dimension;
  if (f.seed) {
    r.cfg.seed = *f.seed;
    r.cfg.basis.seed = *f.seed;
  }
  require(r.cfg.dimension >= 3 && r.cfg.dimension <= 5, "--d must be 3, 4 or 5");
  r.dir = f.out.empty() ? fs::path(r.cfg.output) : fs::path(f.out);
  fs::create_directories(r.dir);
  r.workers = f.workers;
  r.manifest = {{"subcommand", name},
                {"experiment", r.cfg.experiment},
                {"config_path", f.config},
                {"dimension", r.cfg.dimension},
                {"seed", r.cfg.seed},
                {"workers", f.workers},
                {"started", utc_timestamp()}};
  return r;
}

void finish(Run& r, const std::vector<std::string>& artifacts) {
  r.manifest["artifacts"] = artifacts;
  r.manifest["finished"] = utc_timestamp();
  r.manifest["elapsed_seconds"] = r.clock.seconds();
  write_json(r.dir / "manifest.json", r.manifest);
}

json potential_json(const PotentialSpec& p) {
  return {{"family", std::string(to_string(p.family))},
          {"strength", p.strength},
          {"range", p.range},
          {"decay_exponent", p.decay_exponent},
          {"decay_constant", p.decay_constant}};
}

json grids_json(const FaddeevSystem& s) {
  return {{"x_nodes", s.nx()},
          {"x_panels", s.grids.x_panels},
          {"x_order", s.grids.x_order},
          {"p_nodes", s.np()},
          {"p_min", s.grids.p_min},
          {"p_max", s.grids.p_max},
          {"p_panels_per_decade", s.grids.p_panels_per_decade},
          {"p_order", s.grids.p_order},
          {"angular_order", s.grids.angular_order},
          {"block_size", s.block_size()}};
}

json system_json(const FaddeevSystem& s) {
  json ch = json::array();
  for (int a = 0; a < 3; ++a)
    ch.push_back({{"pair", pair_name(a)},
                  {"reduced_mass", s.channels[a].mass},
                  {"strength", s.channels[a].potential.strength},
                  {"critical_strength", s.critical[a]}});
  json j = {{"dimension", s.dimension},
            {"masses", s.frame.masses},
            {"symmetrization", std::string(to_string(s.mode))},
            {"potential", potential_json(s.channels[0].potential)},
            {"channels", ch},
            {"grids", grids_json(s)}};
  json taus = json::array();
  for (int a = 0; a < 3; ++a)
    if (s.w[a]) taus.push_back({{"pair", pair_name(a)}, {"tau", s.w[a]->tau}, {"mu_alpha", s.w[a]->mu_alpha}});
  if (!taus.empty()) j["tau"] = taus;
  return j;
}

/// Two-body channel with the configured coupling applied (relative couplings refer to the
/// critical depth on the channel grid).
TwoBodyChannel configured_channel(const RunConfig& c, const RadialQuadrature& q) {
  TwoBodyChannel ch = c.channel();
  if (c.coupling.relative) {
    const double ls = critical_coupling(ch.with_strength(1.0), q);
    return ch.with_strength(c.coupling.value * ls);
  }
  return ch.with_strength(c.coupling.value);
}

TwoBodyChannel critical_channel(const RunConfig& c, const RadialQuadrature& q) {
  const TwoBodyChannel ch = c.channel().with_strength(1.0);
  return ch.with_strength(critical_coupling(ch, q));
}

std::vector<double> schedule_or(const RunConfig& c, double from, double to, int points) {
  return c.schedule.values.empty() ? geometric_schedule(from, to, points) : c.schedule.values;
}

// ---------------------------------------------------------------------------

int cmd_critical_coupling(const Flags& f) {
  Run r = start("critical-coupling", f);
  const TwoBodyChannel ch = r.cfg.channel().with_strength(1.0);
  const RadialQuadrature q = channel_quadrature(ch, r.cfg.refine);
  const double ls = critical_coupling(ch, q);
  const double ls2 = critical_coupling(ch, channel_quadrature(ch, 2 * r.cfg.refine));
  const double eps = 1e-3;
  const ShootingResult below = shooting_ground_state(ch.with_strength(ls * (1 - eps)));
  const ShootingResult above = shooting_ground_state(ch.with_strength(ls * (1 + eps)));
  json res = {{"lambda_star", ls},
              {"lambda_star_refined", ls2},
              {"refinement_delta", std::abs(ls2 - ls) / ls},
              {"epsilon", eps},
              {"bound_below", below.bound},
              {"bound_above", above.bound},
              {"energy_above", above.bound ? json(above.energy) : json(nullptr)}};
  {
    CsvWriter csv(r.dir / "critical_coupling.csv", {"refine", "lambda_star"});
    csv.row(r.cfg.refine, ls);
    csv.row(2 * r.cfg.refine, ls2);
  }
  write_json(r.dir / "critical_coupling.json", res);
  r.manifest["potential"] = potential_json(ch.potential);
  r.manifest["grid_nodes"] = q.size();
  finish(r, {"critical_coupling.csv", "critical_coupling.json"});
  std::cout << "lambda* = " << format_number(ls) << " (refined " << format_number(ls2) << ")\n";
  return 0;
}

int cmd_resonance(const Flags& f) {
  Run r = start("resonance", f);
  const RadialQuadrature q = channel_quadrature(r.cfg.channel(), r.cfg.refine);
  const TwoBodyChannel ch = critical_channel(r.cfg, q);
  const ResonanceProfile pr = resonance_profile(ch, q);
  const Classification cl = classify_virtual_level(ch, q);
  {
    CsvWriter csv(r.dir / "profile.csv", {"r", "f", "r2f"});
    for (std::size_t i = 0; i < pr.radii.size(); ++i) csv.row(pr.radii[i], pr.f[i], pr.radii[i] * pr.radii[i] * pr.f[i]);
  }
  json res = {{"verdict", std::string(to_string(cl.verdict))},
              {"tail_exponent", pr.p_tail},
              {"tail_coefficient_fit", pr.c_tail},
              {"square_integrable", pr.square_integrable},
              {"lambda_star", ch.potential.strength},
              {"mu_max", pr.mu_max},
              {"v_f", pr.v_f},
              {"tail_window", {pr.tail_r_min, pr.tail_r_max}}};
  if (ch.dimension == 4 && ch.ell == 0) {
    res["tail_coefficient"] = tail_coefficient(pr, ch.mass);
    res["tail_coefficient_predicted"] = -ch.mass / (2.0 * pi * pi) * pr.v_f;
  }
  json l2 = json::array();
  for (std::size_t i = 0; i < pr.l2_radii.size(); ++i) l2.push_back({pr.l2_radii[i], pr.l2_mass[i]});
  res["l2_ball_mass"] = l2;
  write_json(r.dir / "resonance.json", res);
  finish(r, {"profile.csv", "resonance.json"});
  std::cout << "verdict: " << to_string(cl.verdict) << ", tail exponent " << format_number(pr.p_tail) << "\n";
  return 0;
}

int cmd_tau(const Flags& f) {
  Run r = start("tau", f);
  require(r.cfg.dimension == 4, "tau: requires --d 4");
  const RadialQuadrature q = channel_quadrature(r.cfg.channel(), r.cfg.refine);
  const TwoBodyChannel ch = critical_channel(r.cfg, q);
  WExpansion w = extract_tau(ch, q);
  fit_tau(ch, q, schedule_or(r.cfg, -1e-2, -1e-6, 17), w);
  {
    CsvWriter csv(r.dir / "w_samples.csv", {"z", "mu_w"});
    for (const auto& s : w.samples) csv.row(s.z, s.mu_w);
  }
  const json res = {{"tau", w.tau},
                    {"mu_alpha", w.mu_alpha},
                    {"fit_residual", w.fit_residual},
                    {"tau_fit", w.tau_fit},
                    {"phi_norm2", w.phi_norm2},
                    {"g2", w.g2_value}};
  write_json(r.dir / "tau.json", res);
  finish(r, {"w_samples.csv", "tau.json"});
  std::cout << "tau = " << format_number(w.tau) << " (fit " << format_number(w.tau_fit) << ")\n";
  return 0;
}

int cmd_bs_scan(const Flags& f) {
  Run r = start("bs-scan", f);
  const RadialQuadrature q = channel_quadrature(r.cfg.channel(), r.cfg.refine);
  const TwoBodyChannel ch = configured_channel(r.cfg, q);
  const std::vector<double> zs = schedule_or(r.cfg, -1e-2, -1e-6, 17);
  std::vector<ScanSample> s(zs.size());
  parallel_for(static_cast<int>(zs.size()), r.workers, [&](int i) { s[i] = {zs[i], assemble_bs(ch, zs[i], q).mu_max()}; });
  {
    CsvWriter csv(r.dir / "bs_scan.csv", {"z", "mu_max", "one_minus_mu"});
    for (const auto& x : s) csv.row(x.z, x.mu_max, 1.0 - x.mu_max);
  }
  json res = {{"strength", ch.potential.strength}};
  if (std::all_of(s.begin(), s.end(), [](const ScanSample& x) { return x.mu_max < 1.0; })) {
    const ExponentFit e = fit_singularity_exponent(s);
    res["exponent"] = e.exponent;
    res["residual"] = e.residual;
    if (ch.dimension == 4 && ch.ell == 0 && std::abs(s.front().mu_max - 1.0) < 1.0) {
      try {
        const WExpansion w = extract_tau(ch, q);
        const ExponentFit g = fit_singularity_exponent(s, [&](double z) { return std::abs(std::log(-z)) + w.tau; });
        res["log_corrected_exponent"] = g.exponent;
        res["log_corrected_residual"] = g.residual;
        res["tau"] = w.tau;
      } catch (const numerical_error&) {
        // not critical: no logarithmic correction to report
      }
    }
  }
  write_json(r.dir / "bs_scan.json", res);
  finish(r, {"bs_scan.csv", "bs_scan.json"});
  std::cout << "scanned " << s.size() << " energies\n";
  return 0;
}

int cmd_gap(const Flags& f) {
  Run r = start("gap", f);
  const RadialQuadrature q = channel_quadrature(r.cfg.channel(), r.cfg.refine);
  const TwoBodyChannel ch = critical_channel(r.cfg, q);
  const int n = r.cfg.gap_elements;
  const GapResult g1 = gap_on_complement(ch, n), g2 = gap_on_complement(ch, 2 * n);
  {
    CsvWriter csv(r.dir / "gap.csv", {"elements", "unconstrained_min", "mu_gap"});
    csv.row(g1.elements, g1.unconstrained_min, g1.mu_gap);
    csv.row(g2.elements, g2.unconstrained_min, g2.mu_gap);
  }
  write_json(r.dir / "gap.json",
             {{"mu_gap", g1.mu_gap},
              {"mu_gap_doubled", g2.mu_gap},
              {"relative_change", std::abs(g2.mu_gap - g1.mu_gap) / g1.mu_gap},
              {"unconstrained_min", g1.unconstrained_min}});
  finish(r, {"gap.csv", "gap.json"});
  std::cout << "mu_gap = " << format_number(g1.mu_gap) << "\n";
  return 0;
}

int cmd_jacobi_check(const Flags& f) {
  Run r = start("jacobi-check", f);
  const auto& m = r.cfg.masses;
  const JacobiFrame fr = make_frame(m[0], m[1], m[2]);
  {
    CsvWriter csv(r.dir / "jacobi_coefficients.csv", {"a", "b", "d", "e", "l", "residual"});
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        // k_a - d p_a - e p_b as a row over particle momenta, restricted to zero total momentum
        const Eigen::RowVector3d res = fr.k_row(a) - fr.d[a][b] * fr.p_row(a) - fr.e[a][b] * fr.p_row(b);
        const double resid = (res.array() - res.mean()).abs().maxCoeff();
        csv.row(pair_name(a), pair_name(b), fr.d[a][b], fr.e[a][b], fr.l[a][b], resid);
      }
  }
  std::mt19937_64 rng(r.cfg.seed);
  std::normal_distribution<double> g;
  double worst = 0.0;
  const int dim = r.cfg.dimension, trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Vec k1(dim), k2(dim);
    for (int i = 0; i < dim; ++i) { k1(i) = g(rng); k2(i) = g(rng); }
    const Vec k3 = -(k1 + k2);
    const double h = k1.squaredNorm() / (2 * m[0]) + k2.squaredNorm() / (2 * m[1]) + k3.squaredNorm() / (2 * m[2]);
    const ConjugateMomenta cm = conjugate_momenta(k1, k2, k3, fr);
    for (int a = 0; a < 3; ++a) {
      worst = std::max(worst, std::abs(kinetic_kp(cm.k[a], cm.p[a], a, fr) / h - 1.0));
      const int b = (a + 1) % 3;
      worst = std::max(worst, std::abs(kinetic_form(cm.p[a], cm.p[b], a, b, fr) / h - 1.0));
    }
  }
  json res = {{"masses", m}, {"trials", trials}, {"max_relative_deviation", worst}};
  json red = json::array();
  for (int a = 0; a < 3; ++a) red.push_back({{"pair", pair_name(a)}, {"m", fr.m[a]}, {"n", fr.n[a]}});
  res["reduced_masses"] = red;
  write_json(r.dir / "jacobi_check.json", res);
  finish(r, {"jacobi_coefficients.csv", "jacobi_check.json"});
  std::cout << "max relative kinetic deviation " << format_number(worst) << "\n";
  return 0;
}

void write_counts(const fs::path& path, const std::vector<FaddeevCount>& samples) {
  CsvWriter csv(path, {"z", "count", "top_eigenvalue", "gap_to_one", "ambiguous", "count_if_boundary_above"});
  for (const auto& s : samples)
    csv.row(s.z, s.count, s.top_eigenvalue, s.gap_to_one, s.ambiguous, s.count_if_boundary_above);
}

int cmd_faddeev_count(const Flags& f) {
  Run r = start("faddeev-count", f);
  const FaddeevSystem sys = r.cfg.system();
  require(!r.cfg.schedule.values.empty(), "faddeev-count: config needs a z_schedule");
  const auto& zs = r.cfg.schedule.values;
  std::vector<FaddeevCount> out(zs.size());
  parallel_for(static_cast<int>(zs.size()), r.workers, [&](int i) { out[i] = count_above_one(assemble_A(sys, zs[i])); });
  write_counts(r.dir / "faddeev_count.csv", out);
  r.manifest["system"] = system_json(sys);
  finish(r, {"faddeev_count.csv"});
  for (const auto& s : out) std::cout << "z = " << format_number(s.z) << "  count = " << s.count << "\n";
  return 0;
}

int cmd_efimov_scan(const Flags& f) {
  Run r = start("efimov-scan", f);
  const FaddeevSystem sys = r.cfg.system();
  const std::vector<double> zs = schedule_or(r.cfg, -1e-2, -1e-8, 7);
  auto dispatch = [&](int n, auto&& fn) { parallel_for(n, r.workers, fn); };
  Stopwatch t;
  const CountingCurve c = counting_curve(sys, zs, {}, dispatch);
  const double t_base = t.seconds();
  const std::string name = sys.dimension == 3 ? "efimov_growth.csv" : "efimov_plateau.csv";
  write_counts(r.dir / name, c.samples);
  json res = {{"fit_mode", c.mode == FitMode::log_slope ? "log-slope" : "plateau"},
              {"slope_per_ln", c.slope},
              {"intercept", c.intercept},
              {"residual", c.residual},
              {"counts", json::array()}};
  for (const auto& s : c.samples) res["counts"].push_back(s.count);
  std::vector<std::string> artifacts{name, "efimov_scan.json"};
  r.manifest["timings"] = {{"base_grid_seconds", t_base}};
  if (r.cfg.verify_doubled) {
    FaddeevGrids g2 = r.cfg.grids.doubled();
    const FaddeevSystem sys2 = make_faddeev_system(sys.dimension, r.cfg.masses, r.cfg.potential, r.cfg.coupling, r.cfg.mode, g2);
    Stopwatch t2;
    const CountingCurve c2 = counting_curve(sys2, zs, {}, dispatch);
    r.manifest["timings"]["doubled_grid_seconds"] = t2.seconds();
    write_counts(r.dir / "efimov_doubled.csv", c2.samples);
    artifacts.push_back("efimov_doubled.csv");
    bool same = true;
    for (std::size_t i = 0; i < zs.size(); ++i) same = same && c.samples[i].count == c2.samples[i].count;
    res["doubled_counts_identical"] = same;
    r.manifest["system_doubled"] = system_json(sys2);
  }
  write_json(r.dir / "efimov_scan.json", res);
  r.manifest["system"] = system_json(sys);
  finish(r, artifacts);
  std::cout << "counts:";
  for (const auto& s : c.samples) std::cout << ' ' << s.count;
  std::cout << "\nslope per unit ln(1/|z|): " << format_number(c.slope) << "\n";
  return 0;
}

int cmd_oracle_count(const Flags& f) {
  Run r = start("oracle-count", f);
  const FaddeevSystem sys = r.cfg.system();
  const std::vector<double> zs = r.cfg.schedule.values.empty() ? std::vector<double>{-0.5, -0.1} : r.cfg.schedule.values;
  VariationalBasis basis = r.cfg.basis;
  basis.mode = sys.mode;
  const VariationalProblem P = build_variational_problem(sys, basis);
  const RitzSolution R = solve_ritz(P, basis.cond_limit);
  std::vector<FaddeevCount> fc(zs.size());
  parallel_for(static_cast<int>(zs.size()), r.workers, [&](int i) { fc[i] = count_above_one(assemble_A(sys, zs[i])); });
  json rows = json::array();
  {
    CsvWriter csv(r.dir / "oracle_count.csv", {"z", "variational_count", "faddeev_count"});
    for (std::size_t i = 0; i < zs.size(); ++i) {
      require(std::abs(zs[i]) >= 1e-2, "oracle-count: |z| must be >= 1e-2");
      int vc = 0;
      for (int k = 0; k < R.energies.size(); ++k) vc += R.energies(k) < zs[i];
      csv.row(zs[i], vc, fc[i].count);
      rows.push_back({{"z", zs[i]}, {"variational_count", vc}, {"faddeev_count", fc[i].count}});
    }
  }
  json res = {{"basis_size", P.basis_size},
              {"kept", R.kept},
              {"pruned", R.kept < P.basis_size},
              {"condition", R.condition},
              {"lowest_energies", std::vector<double>(R.energies.data(), R.energies.data() + std::min<int>(4, R.energies.size()))},
              {"counts", rows}};
  if (R.energies.size() > 0 && R.energies(0) < 0.0) {
    try {
      res["component_residual"] = faddeev_component_residual(P, R, 0).value();
    } catch (const validation_error& e) {
      res["component_residual_error"] = e.what();
    }
  }
  write_json(r.dir / "oracle_count.json", res);
  r.manifest["system"] = system_json(sys);
  finish(r, {"oracle_count.csv", "oracle_count.json"});
  for (const auto& row : rows)
    std::cout << "z = " << format_number(row["z"].get<double>()) << "  variational " << row["variational_count"]
              << "  faddeev " << row["faddeev_count"] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlab: virtual levels, Birman-Schwinger counts and Faddeev operators"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_option("--out", flags.out, "output directory (overrides the config)");
  app.add_option("--workers", flags.workers, "parallel workers over z-schedules")->check(CLI::PositiveNumber);
  app.add_option("--d", flags.dimension, "space dimension (3, 4 or 5)");
  app.add_option("--seed", flags.seed, "seed for randomized bases and checks");

  struct Entry { const char* name; const char* help; int (*fn)(const Flags&); };
  const Entry entries[] = {
      {"critical-coupling", "critical depth of a pair channel", cmd_critical_coupling},
      {"resonance", "zero-energy profile and virtual-level classification", cmd_resonance},
      {"tau", "tau constant of a four-dimensional s-wave channel", cmd_tau},
      {"bs-scan", "top Birman-Schwinger eigenvalue along a z schedule", cmd_bs_scan},
      {"gap", "Rayleigh quotient gap on the orthogonal complement", cmd_gap},
      {"jacobi-check", "Jacobi coefficient table and kinetic identities", cmd_jacobi_check},
      {"faddeev-count", "n(1, A(z)) along a z schedule", cmd_faddeev_count},
      {"efimov-scan", "counting curve with growth or plateau fit", cmd_efimov_scan},
      {"oracle-count", "variational count against the Faddeev count", cmd_oracle_count},
  };
  int (*chosen)(const Flags&) = nullptr;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->callback([&chosen, fn = e.fn] { chosen = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return chosen(flags);
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
