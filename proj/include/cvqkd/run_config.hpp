#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvqkd/detector.hpp"
#include "cvqkd/mc.hpp"
#include "cvqkd/protocol.hpp"

namespace cvqkd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run needs. Defaults are the simulation scenario used
/// throughout: eps_c = 0.01, V = 40, eta_e = 0.9, eta_d = 0.6, beta = 0.956,
/// alpha = 0.2 dB/km.
struct RunConfig {
  // channel
  double distance_km = 30.0;
  double alpha_db_per_km = 0.2;
  double excess_noise = 0.01;
  std::optional<double> transmittance;  // overrides distance/alpha when set

  // detector
  double eta_d = 0.6;
  double eta_e = 0.9;

  // protocol
  double epr_variance = 40.0;
  double beta = 0.956;
  double gain = 1.0;

  // sweep grids
  double distance_min_km = 0.0;
  double distance_max_km = 100.0;
  double distance_step_km = 1.0;
  double va_min = 0.5;
  double va_max = 100.0;
  double va_step = 0.5;
  std::vector<double> va_distances_km{30.0, 50.0, 80.0};
  std::vector<double> sweep_gains{1.0, 3.0, 10.0};
  bool include_ideal = true;
  double max_noise_tol = 1e-8;
  double max_noise_min_km = 1.0;
  double max_noise_max_km = 50.0;
  double max_noise_step_km = 1.0;

  // monte carlo
  double amplification = 3.0;
  double lo_amplitude = 10.0;
  double raw_electronic_variance = 100.0;  // together with the above: eta_e = 0.9
  std::optional<double> v_b1;              // default: channel output variance
  std::uint64_t samples = 1000000;
  double z_threshold = 4.0;

  // common
  std::uint64_t seed = 12345;
  std::string out_path;
  bool clamp = false;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

inline double read_number(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError(std::string("key '") + key + "' must be a number");
  }
  return obj[key].get<double>();
}

inline bool read_bool(const nlohmann::json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) {
    throw ConfigError(std::string("key '") + key + "' must be a boolean");
  }
  return obj[key].get<bool>();
}

inline std::vector<double> read_number_list(const nlohmann::json& obj, const char* key,
                                            std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_array()) {
    throw ConfigError(std::string("key '") + key + "' must be an array of numbers");
  }
  std::vector<double> values;
  for (const auto& entry : obj[key]) {
    if (!entry.is_number()) {
      throw ConfigError(std::string("key '") + key + "' must be an array of numbers");
    }
    values.push_back(entry.get<double>());
  }
  return values;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
  RunConfig cfg;
  detail::reject_unknown_keys(root, "config root",
                              {"channel", "detector", "protocol", "sweep", "mc", "output", "seed"});

  if (root.contains("channel")) {
    const auto& ch = root["channel"];
    detail::reject_unknown_keys(
        ch, "channel", {"distance_km", "alpha_db_per_km", "excess_noise", "transmittance"});
    cfg.distance_km = detail::read_number(ch, "distance_km", cfg.distance_km);
    cfg.alpha_db_per_km = detail::read_number(ch, "alpha_db_per_km", cfg.alpha_db_per_km);
    cfg.excess_noise = detail::read_number(ch, "excess_noise", cfg.excess_noise);
    if (ch.contains("transmittance")) {
      if (ch.contains("distance_km")) {
        throw ConfigError("channel: give either transmittance or distance_km, not both");
      }
      cfg.transmittance = detail::read_number(ch, "transmittance", 1.0);
    }
  }

  if (root.contains("detector")) {
    const auto& det = root["detector"];
    detail::reject_unknown_keys(det, "detector", {"eta_d", "eta_e"});
    cfg.eta_d = detail::read_number(det, "eta_d", cfg.eta_d);
    cfg.eta_e = detail::read_number(det, "eta_e", cfg.eta_e);
  }

  if (root.contains("protocol")) {
    const auto& pp = root["protocol"];
    detail::reject_unknown_keys(pp, "protocol", {"epr_variance", "beta", "gain"});
    cfg.epr_variance = detail::read_number(pp, "epr_variance", cfg.epr_variance);
    cfg.beta = detail::read_number(pp, "beta", cfg.beta);
    cfg.gain = detail::read_number(pp, "gain", cfg.gain);
  }

  if (root.contains("sweep")) {
    const auto& sw = root["sweep"];
    detail::reject_unknown_keys(
        sw, "sweep",
        {"distance_min_km", "distance_max_km", "distance_step_km", "va_min", "va_max", "va_step",
         "va_distances_km", "gains", "include_ideal", "max_noise_tol", "max_noise_min_km",
         "max_noise_max_km", "max_noise_step_km"});
    cfg.distance_min_km = detail::read_number(sw, "distance_min_km", cfg.distance_min_km);
    cfg.distance_max_km = detail::read_number(sw, "distance_max_km", cfg.distance_max_km);
    cfg.distance_step_km = detail::read_number(sw, "distance_step_km", cfg.distance_step_km);
    cfg.va_min = detail::read_number(sw, "va_min", cfg.va_min);
    cfg.va_max = detail::read_number(sw, "va_max", cfg.va_max);
    cfg.va_step = detail::read_number(sw, "va_step", cfg.va_step);
    cfg.va_distances_km = detail::read_number_list(sw, "va_distances_km", cfg.va_distances_km);
    cfg.sweep_gains = detail::read_number_list(sw, "gains", cfg.sweep_gains);
    cfg.include_ideal = detail::read_bool(sw, "include_ideal", cfg.include_ideal);
    cfg.max_noise_tol = detail::read_number(sw, "max_noise_tol", cfg.max_noise_tol);
    cfg.max_noise_min_km = detail::read_number(sw, "max_noise_min_km", cfg.max_noise_min_km);
    cfg.max_noise_max_km = detail::read_number(sw, "max_noise_max_km", cfg.max_noise_max_km);
    cfg.max_noise_step_km = detail::read_number(sw, "max_noise_step_km", cfg.max_noise_step_km);
  }

  if (root.contains("mc")) {
    const auto& mc = root["mc"];
    detail::reject_unknown_keys(mc, "mc",
                                {"amplification", "lo_amplitude", "raw_electronic_variance",
                                 "v_b1", "samples", "z_threshold"});
    cfg.amplification = detail::read_number(mc, "amplification", cfg.amplification);
    cfg.lo_amplitude = detail::read_number(mc, "lo_amplitude", cfg.lo_amplitude);
    cfg.raw_electronic_variance =
        detail::read_number(mc, "raw_electronic_variance", cfg.raw_electronic_variance);
    if (mc.contains("v_b1")) {
      cfg.v_b1 = detail::read_number(mc, "v_b1", 1.0);
    }
    if (mc.contains("samples")) {
      if (!mc["samples"].is_number_unsigned()) {
        throw ConfigError("key 'samples' must be a nonnegative integer");
      }
      cfg.samples = mc["samples"].get<std::uint64_t>();
    }
    cfg.z_threshold = detail::read_number(mc, "z_threshold", cfg.z_threshold);
  }

  if (root.contains("output")) {
    const auto& out = root["output"];
    detail::reject_unknown_keys(out, "output", {"path", "clamp"});
    if (out.contains("path")) {
      if (!out["path"].is_string()) {
        throw ConfigError("key 'path' must be a string");
      }
      cfg.out_path = out["path"].get<std::string>();
    }
    cfg.clamp = detail::read_bool(out, "clamp", cfg.clamp);
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) {
      throw ConfigError("key 'seed' must be a nonnegative integer");
    }
    cfg.seed = root["seed"].get<std::uint64_t>();
  }

  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (!root.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }
  return parse_run_config(root);
}

/// Collects every range violation so the caller can report them all at once.
inline std::vector<std::string> config_violations(const RunConfig& cfg) {
  std::vector<std::string> bad;
  const auto check = [&](bool ok, const char* message) {
    if (!ok) bad.emplace_back(message);
  };
  if (cfg.transmittance) {
    check(*cfg.transmittance > 0.0 && *cfg.transmittance <= 1.0,
          "channel.transmittance: must lie in (0, 1]");
  } else {
    check(cfg.distance_km >= 0.0, "channel.distance_km: must be nonnegative");
    check(cfg.alpha_db_per_km >= 0.0, "channel.alpha_db_per_km: must be nonnegative");
  }
  check(cfg.excess_noise >= 0.0, "channel.excess_noise: must be nonnegative");
  check(cfg.eta_d > 0.0 && cfg.eta_d <= 1.0, "detector.eta_d: must lie in (0, 1]");
  check(cfg.eta_e > 0.0 && cfg.eta_e <= 1.0, "detector.eta_e: must lie in (0, 1]");
  check(cfg.epr_variance > 1.0, "protocol.epr_variance: must exceed 1");
  check(cfg.beta >= 0.0 && cfg.beta <= 1.0, "protocol.beta: must lie in [0, 1]");
  check(cfg.gain >= 1.0, "protocol.gain: must be at least 1");
  check(cfg.distance_step_km > 0.0, "sweep.distance_step_km: must be positive");
  check(cfg.distance_max_km >= cfg.distance_min_km,
        "sweep.distance_max_km: must be at least distance_min_km");
  check(cfg.va_min > 0.0, "sweep.va_min: must be positive");
  check(cfg.va_step > 0.0, "sweep.va_step: must be positive");
  check(cfg.va_max >= cfg.va_min, "sweep.va_max: must be at least va_min");
  check(cfg.max_noise_tol > 0.0, "sweep.max_noise_tol: must be positive");
  check(cfg.max_noise_step_km > 0.0, "sweep.max_noise_step_km: must be positive");
  check(cfg.max_noise_min_km >= 0.0, "sweep.max_noise_min_km: must be nonnegative");
  check(cfg.max_noise_max_km >= cfg.max_noise_min_km,
        "sweep.max_noise_max_km: must be at least max_noise_min_km");
  for (double g : cfg.sweep_gains) {
    check(g >= 1.0, "sweep.gains: every gain must be at least 1");
  }
  for (double l : cfg.va_distances_km) {
    check(l >= 0.0, "sweep.va_distances_km: lengths must be nonnegative");
  }
  check(cfg.amplification > 0.0, "mc.amplification: must be positive");
  check(cfg.lo_amplitude > 0.0, "mc.lo_amplitude: must be positive");
  check(cfg.raw_electronic_variance >= 0.0, "mc.raw_electronic_variance: must be nonnegative");
  if (cfg.v_b1) {
    check(*cfg.v_b1 >= 1.0, "mc.v_b1: must be at least 1");
  }
  check(cfg.samples >= 10000, "mc.samples: must be at least 1e4");
  check(cfg.z_threshold > 0.0, "mc.z_threshold: must be positive");
  return bad;
}

inline ChannelParams channel_from_config(const RunConfig& cfg) {
  ChannelParams ch;
  if (cfg.transmittance) {
    ch = ChannelParams::from_transmittance(*cfg.transmittance, cfg.excess_noise);
  } else {
    ch = ChannelParams::from_length(cfg.distance_km, cfg.alpha_db_per_km, cfg.excess_noise);
  }
  return ch;
}

inline ModifiedDetector detector_from_config(const RunConfig& cfg) {
  return ModifiedDetector{cfg.eta_d, cfg.eta_e};
}

inline ProtocolParams protocol_from_config(const RunConfig& cfg) {
  return ProtocolParams{cfg.epr_variance, cfg.beta, cfg.gain};
}

inline PMConfig pm_from_config(const RunConfig& cfg) {
  PMConfig pm;
  pm.cal = RawCalibration{cfg.amplification, cfg.lo_amplitude, cfg.raw_electronic_variance};
  pm.eta_d = cfg.eta_d;
  pm.gain = cfg.gain;
  if (cfg.v_b1) {
    pm.v_b1 = *cfg.v_b1;
  } else {
    const ChannelParams ch = channel_from_config(cfg);
    pm.v_b1 = ch.transmittance * (cfg.epr_variance - 1.0 + ch.excess_noise) + 1.0;
  }
  pm.n_samples = cfg.samples;
  pm.seed = cfg.seed;
  return pm;
}

}  // namespace cvqkd
