#pragma once

// Run configuration: a JSON document with a closed set of keys. Unknown keys, wrong
// types and out-of-range values raise validation_error.

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlab/core.hpp"
#include "vlab/faddeev.hpp"
#include "vlab/oracle.hpp"

namespace vlab {

using json = nlohmann::json;

struct ZSchedule {
  std::vector<double> values;
};

struct RunConfig {
  std::string experiment;
  int dimension = 4;
  PotentialSpec potential = make_potential(PotentialFamily::gaussian_well, 1.0, 1.0);
  // two-body channel
  double channel_mass = 1.0;
  int ell = 0;
  Sector sector = Sector::generic;
  int refine = 1;
  // three-body system
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  Symmetrization mode = Symmetrization::identical_bosons;
  Coupling coupling;
  FaddeevGrids grids;
  bool verify_doubled = false;
  VariationalBasis basis;
  int gap_elements = 160;
  ZSchedule schedule;
  std::string output = "out";
  unsigned seed = 7;

  TwoBodyChannel channel() const {
    TwoBodyChannel ch;
    ch.mass = channel_mass;
    ch.potential = potential;
    ch.dimension = dimension;
    ch.ell = ell;
    ch.sector = sector;
    ch.validate();
    return ch;
  }

  FaddeevSystem system() const {
    return make_faddeev_system(dimension, masses, potential, coupling, mode, grids);
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require(j.is_object(), where + ": expected an object");
  std::set<std::string> ok;
  for (const char* k : allowed) ok.insert(k);
  for (auto it = j.begin(); it != j.end(); ++it)
    require(ok.count(it.key()) == 1, where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error(where + "." + key + ": wrong type");
  }
}

inline double get_number(const json& j, const char* key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline int get_int(const json& j, const char* key, const std::string& where, int fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number_integer(), where + "." + key + ": expected an integer");
  return j.at(key).get<int>();
}

}  // namespace detail

/// Geometric schedule from..to with the given number of points (both ends included).
inline std::vector<double> geometric_schedule(double from, double to, int points) {
  require(from < 0.0 && to < 0.0, "z schedule: energies must be < 0");
  require(points >= 2, "z schedule: need at least two points");
  std::vector<double> z(points);
  const double a = std::log(-from), b = std::log(-to);
  for (int k = 0; k < points; ++k) z[k] = -std::exp(a + (b - a) * k / (points - 1));
  z.front() = from;
  z.back() = to;
  return z;
}

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  const std::string root = "config";
  check_keys(j, root,
             {"experiment", "dimension", "potential", "channel", "masses", "symmetrization", "coupling", "grids",
              "verify_doubled", "basis", "gap", "z_schedule", "output", "seed"});
  RunConfig c;
  require(j.contains("experiment") && j.at("experiment").is_string(), "config: missing required string 'experiment'");
  c.experiment = j.at("experiment").get<std::string>();
  require(!c.experiment.empty(), "config: 'experiment' must not be empty");
  c.dimension = get_int(j, "dimension", root, c.dimension);
  require(c.dimension >= 3, "config.dimension: must be >= 3");

  if (j.contains("potential")) {
    const json& p = j.at("potential");
    const std::string w = "config.potential";
    check_keys(p, w, {"family", "strength", "range", "decay_exponent"});
    const PotentialFamily fam = parse_family(get<std::string>(p, "family", w, "gaussian-well"));
    const double strength = get_number(p, "strength", w, 1.0);
    const double range = get_number(p, "range", w, 1.0);
    const double b = get_number(p, "decay_exponent", w, 6.0);
    require(strength >= 0.0, w + ".strength: must be >= 0");
    require(range > 0.0, w + ".range: must be > 0");
    c.potential = make_potential(fam, strength, range, b);
  }
  if (j.contains("channel")) {
    const json& p = j.at("channel");
    const std::string w = "config.channel";
    check_keys(p, w, {"mass", "ell", "sector", "refine"});
    c.channel_mass = get_number(p, "mass", w, 1.0);
    c.ell = get_int(p, "ell", w, 0);
    c.sector = parse_sector(get<std::string>(p, "sector", w, "generic"));
    c.refine = get_int(p, "refine", w, 1);
    require(c.refine >= 1, w + ".refine: must be >= 1");
  }
  if (j.contains("masses")) {
    const json& m = j.at("masses");
    require(m.is_array() && m.size() == 3, "config.masses: expected an array of three numbers");
    for (int k = 0; k < 3; ++k) {
      require(m[k].is_number(), "config.masses: expected numbers");
      c.masses[k] = m[k].get<double>();
      require(c.masses[k] > 0.0, "config.masses: masses must be > 0");
    }
  }
  if (j.contains("symmetrization")) {
    const std::string s = get<std::string>(j, "symmetrization", root, "");
    if (s == "identical-bosons") c.mode = Symmetrization::identical_bosons;
    else if (s == "distinct") c.mode = Symmetrization::distinct;
    else throw validation_error("config.symmetrization: expected 'identical-bosons' or 'distinct'");
  }
  c.basis.mode = c.mode;
  if (j.contains("coupling")) {
    const json& p = j.at("coupling");
    const std::string w = "config.coupling";
    check_keys(p, w, {"mode", "value"});
    const std::string mode = get<std::string>(p, "mode", w, "critical-multiple");
    if (mode == "critical-multiple") c.coupling.relative = true;
    else if (mode == "absolute") c.coupling.relative = false;
    else throw validation_error(w + ".mode: expected 'critical-multiple' or 'absolute'");
    c.coupling.value = get_number(p, "value", w, 1.0);
    require(c.coupling.value >= 0.0, w + ".value: must be >= 0");
  }
  if (j.contains("grids")) {
    const json& p = j.at("grids");
    const std::string w = "config.grids";
    check_keys(p, w, {"x_panels", "x_order", "p_min", "p_max", "p_panels_per_decade", "p_order", "angular_order"});
    FaddeevGrids& g = c.grids;
    g.x_panels = get_int(p, "x_panels", w, g.x_panels);
    g.x_order = get_int(p, "x_order", w, g.x_order);
    g.p_min = get_number(p, "p_min", w, g.p_min);
    g.p_max = get_number(p, "p_max", w, g.p_max);
    g.p_panels_per_decade = get_number(p, "p_panels_per_decade", w, g.p_panels_per_decade);
    g.p_order = get_int(p, "p_order", w, g.p_order);
    g.angular_order = get_int(p, "angular_order", w, g.angular_order);
    require(g.x_panels >= 1 && g.x_order >= 4, w + ": invalid pair grid");
    require(g.p_min > 0.0 && g.p_max > g.p_min, w + ": need 0 < p_min < p_max");
    require(g.p_panels_per_decade > 0.0 && g.p_order >= 2, w + ": invalid momentum panels");
    require(g.angular_order >= 4, w + ".angular_order: must be >= 4");
  }
  if (j.contains("verify_doubled")) {
    require(j.at("verify_doubled").is_boolean(), "config.verify_doubled: expected a boolean");
    c.verify_doubled = j.at("verify_doubled").get<bool>();
  }
  if (j.contains("basis")) {
    const json& p = j.at("basis");
    const std::string w = "config.basis";
    check_keys(p, w, {"size", "width_min", "width_max", "cond_limit"});
    c.basis.size = get_int(p, "size", w, c.basis.size);
    c.basis.width_min = get_number(p, "width_min", w, c.basis.width_min);
    c.basis.width_max = get_number(p, "width_max", w, c.basis.width_max);
    c.basis.cond_limit = get_number(p, "cond_limit", w, c.basis.cond_limit);
    require(c.basis.size >= 1, w + ".size: must be >= 1");
    require(c.basis.width_min > 0.0 && c.basis.width_max > c.basis.width_min, w + ": need 0 < width_min < width_max");
  }
  if (j.contains("gap")) {
    const json& p = j.at("gap");
    check_keys(p, "config.gap", {"elements"});
    c.gap_elements = get_int(p, "elements", "config.gap", c.gap_elements);
    require(c.gap_elements >= 8, "config.gap.elements: must be >= 8");
  }
  if (j.contains("z_schedule")) {
    const json& p = j.at("z_schedule");
    const std::string w = "config.z_schedule";
    if (p.is_array()) {
      for (const auto& v : p) {
        require(v.is_number(), w + ": expected numbers");
        c.schedule.values.push_back(v.get<double>());
      }
    } else {
      check_keys(p, w, {"from", "to", "points"});
      require(p.contains("from") && p.contains("to") && p.contains("points"), w + ": needs from, to and points");
      c.schedule.values = geometric_schedule(get_number(p, "from", w, 0.0), get_number(p, "to", w, 0.0),
                                             get_int(p, "points", w, 0));
    }
    for (double z : c.schedule.values) require(z < 0.0, w + ": energies must be < 0");
  }
  c.output = get<std::string>(j, "output", root, c.output);
  if (j.contains("seed")) {
    require(j.at("seed").is_number_unsigned(), "config.seed: expected a non-negative integer");
    c.seed = j.at("seed").get<unsigned>();
  }
  c.basis.seed = c.seed;
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  require(text.find_first_not_of(" \t\r\n") != std::string::npos, "config: file is empty; 'experiment' is required");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("config: not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace vlab
