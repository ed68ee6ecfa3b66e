// Experiment configuration: JSON schema, defaults, and upfront validation.
//
// A config describes one statistical reconstruction experiment end to end:
// medium constants, the random-surface model, the frequency continuation
// schedule, measurement geometry, synthesis and statistics options, and
// output placement. load_config fills documented defaults and validates
// every cross-field invariant (including anomaly checks for each
// frequency/angle pair) before any work starts, so failures surface as
// ConfigError with a field path instead of mid-run surprises.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gratstat/core.hpp"
#include "gratstat/fnv.hpp"
#include "gratstat/modes.hpp"
#include "gratstat/profile.hpp"
#include "gratstat/surface.hpp"

namespace gratstat {

using Json = nlohmann::json;

struct GeometryConfig {
  bool auto_mode = true;
  Real b_plus = 0.0, a_plus = 0.0, a_minus = 0.0, b_minus = 0.0;
};

struct SynthConfig {
  int n_extra = 10;        // spectral margin of the synthesis solve
  Real residual_flag = 1e-4;
  bool export_paths = false; // also write sampled surface paths as CSV
};

struct StatsConfig {
  int n = 101;                     // stats grid size over one period
  std::string ground_truth = "nominal"; // nominal | periodized | empirical
  std::vector<Real> kde_locations = {PI / 2, PI, 3 * PI / 2, TWO_PI};
};

struct ExperimentConfig {
  std::string name = "experiment";
  MediumParams medium;
  std::string surface_preset = "ex1";
  Real sigma = 0.0, ell = 1.0, S = 0.0, K = 3.0;
  Schedule schedule;
  GeometryConfig geometry;
  SynthConfig synth;
  StatsConfig stats;
  std::string output = "out";
  int workers = 0; // 0 means use the hardware concurrency

  SurfaceSpec surface_spec() const {
    SurfaceSpec s;
    s.base = preset_profile(surface_preset);
    s.sigma = sigma;
    s.ell = ell;
    s.S = S;
    s.K = K;
    return s;
  }

  // Measurement height and auxiliary line levels. Auto mode stands clear of
  // the deterministic profile plus a three-sigma fluctuation envelope.
  GeometryConfig resolved_geometry() const {
    if (!geometry.auto_mode) return geometry;
    GeometryConfig g;
    g.auto_mode = false;
    const auto base = preset_profile(surface_preset);
    g.b_plus = profile_max(base.f) + 3.0 * sigma + 0.5;
    g.a_plus = g.b_plus - 0.25;
    g.a_minus = profile_min(base.f) - 3.0 * sigma - 0.25;
    g.b_minus = g.a_minus - 0.25;
    return g;
  }

  void validate() const {
    medium.validate();
    surface_spec().validate();
    schedule.validate();
    if (name.empty()) throw ConfigError("config: name must be nonempty");
    if (output.empty()) throw ConfigError("config: output must be nonempty");
    if (workers < 0) throw ConfigError("config: workers must be >= 0");
    if (synth.n_extra < 0) throw ConfigError("config: synth.n_extra must be >= 0");
    if (!(synth.residual_flag > 0.0)) throw ConfigError("config: synth.residual_flag must be > 0");
    if (stats.n < 2) throw ConfigError("config: stats.n must be >= 2");
    if (stats.ground_truth != "nominal" && stats.ground_truth != "periodized" &&
        stats.ground_truth != "empirical")
      throw ConfigError("config: stats.ground_truth must be nominal, periodized, or empirical");
    for (Real loc : stats.kde_locations)
      if (!(loc >= 0.0 && loc <= TWO_PI))
        throw ConfigError("config: stats.kde_locations must lie in [0, 2 pi]");

    const GeometryConfig g = resolved_geometry();
    const auto base = preset_profile(surface_preset);
    const Real fmax = profile_max(base.f), fmin = profile_min(base.f);
    if (!(g.b_plus > g.a_plus && g.a_plus > fmax))
      throw ConfigError("config: geometry must satisfy b_plus > a_plus > max f");
    if (!(fmin > g.a_minus && g.a_minus > g.b_minus))
      throw ConfigError("config: geometry must satisfy min f > a_minus > b_minus");

    // anomaly screen for every stage/angle pair at the widest mode table
    for (Real kappa : schedule.kappas) {
      for (Real theta : schedule.angles) {
        auto [ctx, tab] =
            make_mode_table(medium, kappa, theta, schedule.N + synth.n_extra);
        const auto wood = check_wood(ctx, tab);
        if (!wood.ok) throw ConfigError("config: " + wood.describe());
      }
    }
  }
};

namespace detail {

// Missing keys fall back to defaults; unknown keys are rejected so typos
// cannot silently disable an option.
inline void reject_unknown(const Json &j, const std::vector<std::string> &known,
                           const std::string &where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
inline T get_or(const Json &j, const std::string &key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception &) {
    throw ConfigError("config: bad value for \"" + key + "\"");
  }
}

} // namespace detail

inline ExperimentConfig config_from_json(const Json &j) {
  ExperimentConfig c;
  detail::reject_unknown(j, {"name", "medium", "surface", "schedule", "geometry", "synth",
                             "stats", "output", "workers"},
                         "config root");
  c.name = detail::get_or<std::string>(j, "name", c.name);
  if (j.contains("medium")) {
    const Json &m = j.at("medium");
    detail::reject_unknown(m, {"rho_f", "rho", "lambda", "mu", "c"}, "medium");
    c.medium.rho_f = detail::get_or(m, "rho_f", c.medium.rho_f);
    c.medium.rho = detail::get_or(m, "rho", c.medium.rho);
    c.medium.lambda = detail::get_or(m, "lambda", c.medium.lambda);
    c.medium.mu = detail::get_or(m, "mu", c.medium.mu);
    c.medium.c = detail::get_or(m, "c", c.medium.c);
  }
  if (j.contains("surface")) {
    const Json &s = j.at("surface");
    detail::reject_unknown(s, {"preset", "sigma", "ell", "S", "K"}, "surface");
    c.surface_preset = detail::get_or<std::string>(s, "preset", c.surface_preset);
    c.sigma = detail::get_or(s, "sigma", c.sigma);
    c.ell = detail::get_or(s, "ell", c.ell);
    c.S = detail::get_or(s, "S", c.S);
    c.K = detail::get_or(s, "K", c.K);
  }
  if (j.contains("schedule")) {
    const Json &s = j.at("schedule");
    detail::reject_unknown(s, {"kappas", "M", "angles", "eps", "gamma", "delta", "T", "tau",
                               "N", "N_prime", "seed", "eta"},
                           "schedule");
    c.schedule.kappas = detail::get_or(s, "kappas", c.schedule.kappas);
    c.schedule.M_per_stage = detail::get_or(s, "M", c.schedule.M_per_stage);
    c.schedule.angles = detail::get_or(s, "angles", c.schedule.angles);
    c.schedule.eps = detail::get_or(s, "eps", c.schedule.eps);
    c.schedule.gamma = detail::get_or(s, "gamma", c.schedule.gamma);
    c.schedule.delta = detail::get_or(s, "delta", c.schedule.delta);
    c.schedule.T = detail::get_or(s, "T", c.schedule.T);
    c.schedule.tau = detail::get_or(s, "tau", c.schedule.tau);
    c.schedule.N = detail::get_or(s, "N", c.schedule.N);
    c.schedule.N_prime = detail::get_or(s, "N_prime", c.schedule.N_prime);
    c.schedule.seed = detail::get_or(s, "seed", c.schedule.seed);
    c.schedule.eta_override = detail::get_or(s, "eta", c.schedule.eta_override);
  }
  if (j.contains("geometry")) {
    const Json &g = j.at("geometry");
    detail::reject_unknown(g, {"mode", "b_plus", "a_plus", "a_minus", "b_minus"}, "geometry");
    const std::string mode = detail::get_or<std::string>(g, "mode", "auto");
    if (mode == "auto") {
      c.geometry.auto_mode = true;
    } else if (mode == "explicit") {
      c.geometry.auto_mode = false;
      if (!g.contains("b_plus") || !g.contains("a_plus") || !g.contains("a_minus") ||
          !g.contains("b_minus"))
        throw ConfigError("config: explicit geometry needs b_plus, a_plus, a_minus, b_minus");
      c.geometry.b_plus = g.at("b_plus").get<Real>();
      c.geometry.a_plus = g.at("a_plus").get<Real>();
      c.geometry.a_minus = g.at("a_minus").get<Real>();
      c.geometry.b_minus = g.at("b_minus").get<Real>();
    } else {
      throw ConfigError("config: geometry.mode must be auto or explicit");
    }
  }
  if (j.contains("synth")) {
    const Json &s = j.at("synth");
    detail::reject_unknown(s, {"n_extra", "residual_flag", "export_paths"}, "synth");
    c.synth.n_extra = detail::get_or(s, "n_extra", c.synth.n_extra);
    c.synth.residual_flag = detail::get_or(s, "residual_flag", c.synth.residual_flag);
    c.synth.export_paths = detail::get_or(s, "export_paths", c.synth.export_paths);
  }
  if (j.contains("stats")) {
    const Json &s = j.at("stats");
    detail::reject_unknown(s, {"n", "ground_truth", "kde_locations"}, "stats");
    c.stats.n = detail::get_or(s, "n", c.stats.n);
    c.stats.ground_truth = detail::get_or<std::string>(s, "ground_truth", c.stats.ground_truth);
    c.stats.kde_locations = detail::get_or(s, "kde_locations", c.stats.kde_locations);
  }
  c.output = detail::get_or<std::string>(j, "output", c.output);
  c.workers = detail::get_or(j, "workers", c.workers);
  return c;
}

inline Json config_to_json(const ExperimentConfig &c) {
  Json j;
  j["name"] = c.name;
  j["medium"] = {{"rho_f", c.medium.rho_f}, {"rho", c.medium.rho}, {"lambda", c.medium.lambda},
                 {"mu", c.medium.mu},       {"c", c.medium.c}};
  j["surface"] = {
      {"preset", c.surface_preset}, {"sigma", c.sigma}, {"ell", c.ell}, {"S", c.S}, {"K", c.K}};
  j["schedule"] = {{"kappas", c.schedule.kappas},
                   {"M", c.schedule.M_per_stage},
                   {"angles", c.schedule.angles},
                   {"eps", c.schedule.eps},
                   {"gamma", c.schedule.gamma},
                   {"delta", c.schedule.delta},
                   {"T", c.schedule.T},
                   {"tau", c.schedule.tau},
                   {"N", c.schedule.N},
                   {"N_prime", c.schedule.N_prime},
                   {"seed", c.schedule.seed},
                   {"eta", c.schedule.eta_override}};
  if (c.geometry.auto_mode) {
    j["geometry"] = {{"mode", "auto"}};
  } else {
    j["geometry"] = {{"mode", "explicit"},
                     {"b_plus", c.geometry.b_plus},
                     {"a_plus", c.geometry.a_plus},
                     {"a_minus", c.geometry.a_minus},
                     {"b_minus", c.geometry.b_minus}};
  }
  j["synth"] = {{"n_extra", c.synth.n_extra},
                {"residual_flag", c.synth.residual_flag},
                {"export_paths", c.synth.export_paths}};
  j["stats"] = {{"n", c.stats.n},
                {"ground_truth", c.stats.ground_truth},
                {"kde_locations", c.stats.kde_locations}};
  j["output"] = c.output;
  j["workers"] = c.workers;
  return j;
}

// Canonical serialized form: nlohmann objects iterate in sorted key order
// and doubles print in shortest round-trip form, so equal configs hash equal.
inline std::string config_canonical(const ExperimentConfig &c) {
  return config_to_json(c).dump();
}

inline std::string config_hash(const ExperimentConfig &c) {
  return fnv_hex(fnv1a(config_canonical(c)));
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception &e) {
    throw ConfigError("config: parse failure in " + path + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  c.validate();
  return c;
}

} // namespace gratstat
