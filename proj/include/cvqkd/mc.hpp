#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

#include "cvqkd/detector.hpp"

namespace cvqkd {

/// Prepare-and-measure sampling setup. The incoming mode is collapsed to its
/// marginal: a zero-mean Gaussian of variance v_b1 in both quadratures.
struct PMConfig {
  RawCalibration cal;
  double eta_d = 1.0;
  double gain = 1.0;
  double v_b1 = 1.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// One detector output pair, both in raw units and normalized by u_s'.
struct PMSample {
  double x_raw = 0.0;
  double p_raw = 0.0;
  double x = 0.0;
  double p = 0.0;
};

struct EquivalenceReport {
  double sample_variance_x = 0.0;
  double sample_variance_p = 0.0;
  double predicted_x = 0.0;
  double predicted_p = 0.0;
  double z_x = 0.0;
  double z_p = 0.0;
  bool pass = false;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Box-Muller pairs over mt19937_64. Spelled out rather than delegated to
/// std::normal_distribution, whose sample sequence is implementation-defined
/// and would break bit-exact regression streams.
class NormalPairStream {
 public:
  explicit NormalPairStream(std::uint64_t seed) : rng_(seed) {}

  std::pair<double, double> next() {
    const double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;       // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return {radius * std::cos(two_pi * u2), radius * std::sin(two_pi * u2)};
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Samples are produced in fixed-size shards, each from a substream derived
/// only from (seed, shard index). The stream for a given (seed, n_samples)
/// is therefore identical no matter how shards are distributed over workers.
inline constexpr std::uint64_t pm_shard_size = 1u << 16;

inline void validate(const PMConfig& cfg) {
  if (!(cfg.cal.amplification > 0.0) || !(cfg.cal.lo_amplitude > 0.0)) {
    throw std::domain_error("detector amplification and LO amplitude must be positive");
  }
  if (!(cfg.cal.raw_electronic_variance >= 0.0)) {
    throw std::domain_error("raw electronic-noise variance must be nonnegative");
  }
  if (!(cfg.eta_d > 0.0 && cfg.eta_d <= 1.0)) {
    throw std::domain_error("detection efficiency must lie in (0, 1]");
  }
  if (!(cfg.gain >= 1.0)) {
    throw std::domain_error("PSA gain must be at least 1");
  }
  if (!(cfg.v_b1 >= 1.0)) {
    throw std::domain_error("incoming mode variance must be at least shot noise");
  }
}

/// Draws the detector output stream of the prepare-and-measure picture:
/// x_raw = A X_LO (sqrt(eta_d g) x_B1 + sqrt(1-eta_d) x_v1) + X_ele and the
/// p counterpart with 1/g in place of g, then normalizes by sqrt(u_s').
/// Deterministic given (seed, n_samples).
template <typename Visitor>
void simulate_pm(const PMConfig& cfg, Visitor&& visit) {
  validate(cfg);
  const double a_xlo = cfg.cal.amplification * cfg.cal.lo_amplitude;
  const double inv_root_us_prime = 1.0 / std::sqrt(modified_shot_noise_unit(cfg.cal));
  const double sd_b1 = std::sqrt(cfg.v_b1);
  const double sd_ele = std::sqrt(cfg.cal.raw_electronic_variance);
  const double tx = std::sqrt(cfg.eta_d * cfg.gain);
  const double tp = std::sqrt(cfg.eta_d / cfg.gain);
  const double refl = std::sqrt(1.0 - cfg.eta_d);

  std::uint64_t produced = 0;
  for (std::uint64_t shard = 0; produced < cfg.n_samples; ++shard) {
    std::uint64_t state = cfg.seed ^ (0x632be59bd9b4e019ULL * (shard + 1));
    detail::NormalPairStream normals(detail::splitmix64(state));
    const std::uint64_t in_shard = std::min<std::uint64_t>(pm_shard_size, cfg.n_samples - produced);
    for (std::uint64_t i = 0; i < in_shard; ++i) {
      const auto [xb1, pb1] = normals.next();
      const auto [xv1, pv1] = normals.next();
      const auto [xele, pele] = normals.next();
      PMSample s;
      s.x_raw = a_xlo * (tx * sd_b1 * xb1 + refl * xv1) + sd_ele * xele;
      s.p_raw = a_xlo * (tp * sd_b1 * pb1 + refl * pv1) + sd_ele * pele;
      s.x = s.x_raw * inv_root_us_prime;
      s.p = s.p_raw * inv_root_us_prime;
      visit(s);
    }
    produced += in_shard;
  }
}

/// Welford accumulator with an exact parallel combine, so shard-wise
/// accumulation reproduces the single-pass result.
class MomentAccumulator {
 public:
  void add(double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
  }

  void combine(const MomentAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / (na + nb);
    m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
    count_ += other.count_;
  }

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }

  double variance() const {
    if (count_ < 2) {
      throw std::domain_error("sample variance needs at least two samples");
    }
    return m2_ / static_cast<double>(count_ - 1);
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Trusted-receiver prediction for the normalized output variances:
/// V_x = eta_e (eta_d g V_B1 + 1 - eta_d) + 1 - eta_e and the p counterpart
/// with 1/g, where eta_e comes from the raw calibration.
inline std::pair<double, double> eb_predicted_variance(const PMConfig& cfg) {
  validate(cfg);
  const double eta_e = eta_e_from_raw(cfg.cal);
  const double vx = eta_e * (cfg.eta_d * cfg.gain * cfg.v_b1 + 1.0 - cfg.eta_d) + 1.0 - eta_e;
  const double vp = eta_e * (cfg.eta_d * cfg.v_b1 / cfg.gain + 1.0 - cfg.eta_d) + 1.0 - eta_e;
  return {vx, vp};
}

/// Compares sampled variances against an explicit prediction. The z scores
/// use the normal-theory standard error of a sample variance,
/// SE = V sqrt(2/(n-1)). A failed comparison is a result, not an error.
inline EquivalenceReport equivalence_report(const PMConfig& cfg, double predicted_x,
                                            double predicted_p, double z_threshold = 4.0) {
  if (cfg.n_samples < 10000) {
    throw std::domain_error("equivalence check needs at least 1e4 samples");
  }
  MomentAccumulator acc_x;
  MomentAccumulator acc_p;
  simulate_pm(cfg, [&](const PMSample& s) {
    acc_x.add(s.x);
    acc_p.add(s.p);
  });

  const double se_scale = std::sqrt(2.0 / static_cast<double>(cfg.n_samples - 1));
  EquivalenceReport report;
  report.sample_variance_x = acc_x.variance();
  report.sample_variance_p = acc_p.variance();
  report.predicted_x = predicted_x;
  report.predicted_p = predicted_p;
  report.z_x = (report.sample_variance_x - predicted_x) / (predicted_x * se_scale);
  report.z_p = (report.sample_variance_p - predicted_p) / (predicted_p * se_scale);
  report.pass = std::abs(report.z_x) < z_threshold && std::abs(report.z_p) < z_threshold;
  return report;
}

inline EquivalenceReport verify_equivalence(const PMConfig& cfg, double z_threshold = 4.0) {
  const auto [vx, vp] = eb_predicted_variance(cfg);
  return equivalence_report(cfg, vx, vp, z_threshold);
}

}  // namespace cvqkd
