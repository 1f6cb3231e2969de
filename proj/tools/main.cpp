#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvqkd/analysis.hpp"
#include "cvqkd/csv.hpp"
#include "cvqkd/mc.hpp"
#include "cvqkd/protocol.hpp"
#include "cvqkd/run_config.hpp"

namespace {

using cvqkd::RunConfig;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool clamp = false;
  double gain = 0, eta_d = 0, eta_e = 0, distance_km = 0, excess_noise = 0;
  double epr_variance = 0, beta = 0, alpha = 0;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_gain = nullptr;
  CLI::Option* o_eta_d = nullptr;
  CLI::Option* o_eta_e = nullptr;
  CLI::Option* o_distance = nullptr;
  CLI::Option* o_excess = nullptr;
  CLI::Option* o_variance = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_alpha = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  o.o_config = sub->add_option("--config", o.config_path, "JSON config file");
  o.o_out = sub->add_option("--out", o.out_path, "output file path");
  o.o_seed = sub->add_option("--seed", o.seed, "random seed");
  sub->add_flag("--clamp", o.clamp, "clamp negative key rates to zero in output");
  o.o_gain = sub->add_option("--gain", o.gain, "PSA gain g >= 1");
  o.o_eta_d = sub->add_option("--eta-d", o.eta_d, "detection efficiency");
  o.o_eta_e = sub->add_option("--eta-e", o.eta_e, "electronic-noise transmittance");
  o.o_distance = sub->add_option("--distance-km", o.distance_km, "fiber length in km");
  o.o_excess = sub->add_option("--excess-noise", o.excess_noise, "channel excess noise (SNU)");
  o.o_variance = sub->add_option("--epr-variance", o.epr_variance, "EPR variance V");
  o.o_beta = sub->add_option("--beta", o.beta, "reconciliation efficiency");
  o.o_alpha = sub->add_option("--alpha-db-per-km", o.alpha, "fiber attenuation");
}

RunConfig build_config(const CommonOpts& o) {
  RunConfig cfg;
  if (o.o_config->count()) {
    cfg = cvqkd::load_run_config(o.config_path);
  }
  if (o.o_gain->count()) cfg.gain = o.gain;
  if (o.o_eta_d->count()) cfg.eta_d = o.eta_d;
  if (o.o_eta_e->count()) cfg.eta_e = o.eta_e;
  if (o.o_distance->count()) {
    cfg.distance_km = o.distance_km;
    cfg.transmittance.reset();
  }
  if (o.o_excess->count()) cfg.excess_noise = o.excess_noise;
  if (o.o_variance->count()) cfg.epr_variance = o.epr_variance;
  if (o.o_beta->count()) cfg.beta = o.beta;
  if (o.o_alpha->count()) cfg.alpha_db_per_km = o.alpha;
  if (o.o_seed->count()) cfg.seed = o.seed;
  if (o.o_out->count()) cfg.out_path = o.out_path;
  if (o.clamp) cfg.clamp = true;

  const std::vector<std::string> bad = cvqkd::config_violations(cfg);
  if (!bad.empty()) {
    std::string message = "invalid configuration:";
    for (const std::string& item : bad) {
      message += "\n  " + item;
    }
    throw cvqkd::ConfigError(message);
  }
  return cfg;
}

std::vector<double> linear_grid(double min, double max, double step) {
  const int count = static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] = min + step * i;
  }
  return grid;
}

std::vector<cvqkd::SweepVariant> sweep_variants(const RunConfig& cfg) {
  std::vector<cvqkd::SweepVariant> variants;
  for (double g : cfg.sweep_gains) {
    char label[32];
    std::snprintf(label, sizeof label, "g=%g", g);
    cvqkd::ProtocolParams pp = cvqkd::protocol_from_config(cfg);
    pp.gain = g;
    variants.push_back({label, cvqkd::detector_from_config(cfg), pp});
  }
  if (cfg.include_ideal) {
    cvqkd::ModifiedDetector ideal = cvqkd::detector_from_config(cfg);
    ideal.eta_d = 1.0;
    cvqkd::ProtocolParams pp = cvqkd::protocol_from_config(cfg);
    pp.gain = 1.0;
    variants.push_back({"ideal eta_d=1", ideal, pp});
  }
  return variants;
}

std::string require_out_path(const RunConfig& cfg) {
  if (cfg.out_path.empty()) {
    throw cvqkd::ConfigError("invalid configuration:\n  output.path: required (or pass --out)");
  }
  return cfg.out_path;
}

int cmd_keyrate(const RunConfig& cfg) {
  const cvqkd::KeyRateBreakdown breakdown = cvqkd::secret_key_rate(
      cvqkd::channel_from_config(cfg), cvqkd::detector_from_config(cfg),
      cvqkd::protocol_from_config(cfg));
  const double rate = cfg.clamp ? std::max(breakdown.rate, 0.0) : breakdown.rate;
  std::printf("R=%s I_AB=%s chi_BE=%s lambda1=%s lambda2=%s lambda3=%s lambda4=%s lambda5=%s\n",
              cvqkd::format_value(rate).c_str(), cvqkd::format_value(breakdown.i_ab).c_str(),
              cvqkd::format_value(breakdown.chi_be).c_str(),
              cvqkd::format_value(breakdown.lambdas[0]).c_str(),
              cvqkd::format_value(breakdown.lambdas[1]).c_str(),
              cvqkd::format_value(breakdown.lambdas[2]).c_str(),
              cvqkd::format_value(breakdown.lambdas[3]).c_str(),
              cvqkd::format_value(breakdown.lambdas[4]).c_str());
  return 0;
}

int cmd_sweep_distance(const RunConfig& cfg) {
  const std::string path = require_out_path(cfg);
  const std::vector<double> grid =
      linear_grid(cfg.distance_min_km, cfg.distance_max_km, cfg.distance_step_km);
  const std::vector<cvqkd::SweepVariant> variants = sweep_variants(cfg);
  const cvqkd::SweepResult result =
      cvqkd::sweep_distance(cvqkd::channel_from_config(cfg), variants, grid);
  cvqkd::write_text_atomic(path, cvqkd::sweep_csv(result, cfg.clamp));
  return 0;
}

int cmd_sweep_variance(const RunConfig& cfg) {
  const std::string path = require_out_path(cfg);
  const std::vector<double> grid = linear_grid(cfg.va_min, cfg.va_max, cfg.va_step);
  const std::vector<cvqkd::SweepVariant> variants = sweep_variants(cfg);
  const cvqkd::SweepResult result = cvqkd::sweep_modulation_variance(
      cvqkd::channel_from_config(cfg), variants, grid, cfg.va_distances_km);
  cvqkd::write_text_atomic(path, cvqkd::sweep_csv(result, cfg.clamp));
  return 0;
}

int cmd_max_noise(const RunConfig& cfg) {
  const std::string path = require_out_path(cfg);
  const std::vector<double> grid =
      linear_grid(cfg.max_noise_min_km, cfg.max_noise_max_km, cfg.max_noise_step_km);
  const std::vector<cvqkd::SweepVariant> variants = sweep_variants(cfg);
  const cvqkd::ChannelParams ch = cvqkd::channel_from_config(cfg);

  std::vector<cvqkd::MaxNoisePoint> points;
  points.reserve(grid.size() * variants.size());
  for (const cvqkd::SweepVariant& variant : variants) {
    for (double length : grid) {
      cvqkd::MaxNoisePoint point;
      point.length_km = length;
      point.label = variant.label;
      try {
        point.report = cvqkd::max_tolerable_excess_noise(ch, variant.det, variant.pp, length,
                                                         cfg.max_noise_tol);
      } catch (const std::exception& e) {
        point.reason = e.what();
      }
      points.push_back(std::move(point));
    }
  }
  cvqkd::write_text_atomic(path, cvqkd::max_noise_csv(points));
  return 0;
}

int cmd_mc_verify(const RunConfig& cfg) {
  const cvqkd::PMConfig pm = cvqkd::pm_from_config(cfg);
  const cvqkd::EquivalenceReport report = cvqkd::verify_equivalence(pm, cfg.z_threshold);
  std::printf("samples=%llu seed=%llu v_b1=%s eta_d=%s g=%s\n",
              static_cast<unsigned long long>(pm.n_samples),
              static_cast<unsigned long long>(pm.seed), cvqkd::format_value(pm.v_b1).c_str(),
              cvqkd::format_value(pm.eta_d).c_str(), cvqkd::format_value(pm.gain).c_str());
  std::printf("x: sample_variance=%s predicted=%s z=%s\n",
              cvqkd::format_value(report.sample_variance_x).c_str(),
              cvqkd::format_value(report.predicted_x).c_str(),
              cvqkd::format_value(report.z_x).c_str());
  std::printf("p: sample_variance=%s predicted=%s z=%s\n",
              cvqkd::format_value(report.sample_variance_p).c_str(),
              cvqkd::format_value(report.predicted_p).c_str(),
              cvqkd::format_value(report.z_p).c_str());
  std::printf("result: %s\n", report.pass ? "PASS" : "FAIL");
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic key rates for coherent-state CV-QKD with a trusted"
               " homodyne detector and an optional phase-sensitive amplifier"};
  app.require_subcommand(1);

  CommonOpts keyrate_opts, sweep_d_opts, sweep_v_opts, max_noise_opts, mc_opts;
  CLI::App* keyrate = app.add_subcommand("keyrate", "single key-rate evaluation");
  CLI::App* sweep_d = app.add_subcommand("sweep-distance", "key rate vs fiber length (CSV)");
  CLI::App* sweep_v = app.add_subcommand("sweep-variance", "key rate vs modulation variance (CSV)");
  CLI::App* max_noise = app.add_subcommand("max-noise", "maximal tolerable excess noise (CSV)");
  CLI::App* mc_verify = app.add_subcommand("mc-verify", "Monte-Carlo detector-model check");
  add_common(keyrate, keyrate_opts);
  add_common(sweep_d, sweep_d_opts);
  add_common(sweep_v, sweep_v_opts);
  add_common(max_noise, max_noise_opts);
  add_common(mc_verify, mc_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (keyrate->parsed()) return cmd_keyrate(build_config(keyrate_opts));
    if (sweep_d->parsed()) return cmd_sweep_distance(build_config(sweep_d_opts));
    if (sweep_v->parsed()) return cmd_sweep_variance(build_config(sweep_v_opts));
    if (max_noise->parsed()) return cmd_max_noise(build_config(max_noise_opts));
    if (mc_verify->parsed()) return cmd_mc_verify(build_config(mc_opts));
  } catch (const cvqkd::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
