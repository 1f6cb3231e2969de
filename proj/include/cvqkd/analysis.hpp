#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/protocol.hpp"

namespace cvqkd {

/// One detector/protocol configuration evaluated across a sweep axis.
struct SweepVariant {
  std::string label;
  ModifiedDetector det;
  ProtocolParams pp;
};

/// A sweep point either carries a full key-rate breakdown or the reason it
/// could not be evaluated. NaN never appears as a value.
struct SweepPoint {
  std::optional<KeyRateBreakdown> value;
  std::string reason;
};

struct SweepSeries {
  std::string label;
  std::string params_echo;
  std::vector<SweepPoint> points;  // one per axis value
};

struct SweepResult {
  std::string axis_name;
  std::vector<double> axis_values;
  std::vector<SweepSeries> series;
};

struct BisectionReport {
  double root = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline std::string echo_params(const ModifiedDetector& det, const ProtocolParams& pp,
                               const ChannelParams& ch) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "eta_d=%g eta_e=%g V=%g beta=%g g=%g eps=%g alpha=%g",
                det.eta_d, det.eta_e, pp.epr_variance, pp.beta, pp.gain, ch.excess_noise,
                ch.alpha_db_per_km);
  return buf;
}

inline SweepPoint evaluate_point(const ChannelParams& ch, const ModifiedDetector& det,
                                 const ProtocolParams& pp) {
  SweepPoint point;
  try {
    KeyRateBreakdown breakdown = secret_key_rate(ch, det, pp);
    if (!std::isfinite(breakdown.rate)) {
      point.reason = "non-finite rate";
      return point;
    }
    point.value = std::move(breakdown);
  } catch (const std::exception& e) {
    point.reason = e.what();
  }
  return point;
}

}  // namespace detail

/// Rebuilds the channel of a template at a new fiber length, keeping its
/// attenuation and excess noise.
inline ChannelParams channel_at_length(const ChannelParams& tpl, double length_km) {
  return ChannelParams::from_length(length_km, tpl.alpha_db_per_km, tpl.excess_noise);
}

/// Key rate of every variant over a fiber-length grid (strictly increasing).
/// Per-point failures are recorded in the result, never thrown.
inline SweepResult sweep_distance(const ChannelParams& ch_template,
                                  std::span<const SweepVariant> variants,
                                  std::span<const double> length_grid_km) {
  for (std::size_t i = 1; i < length_grid_km.size(); ++i) {
    if (!(length_grid_km[i] > length_grid_km[i - 1])) {
      throw std::invalid_argument("length grid must be strictly increasing");
    }
  }
  SweepResult result;
  result.axis_name = "distance_km";
  result.axis_values.assign(length_grid_km.begin(), length_grid_km.end());
  for (const SweepVariant& variant : variants) {
    SweepSeries series;
    series.label = variant.label;
    series.params_echo = detail::echo_params(variant.det, variant.pp, ch_template);
    series.points.reserve(length_grid_km.size());
    for (double length : length_grid_km) {
      series.points.push_back(
          detail::evaluate_point(channel_at_length(ch_template, length), variant.det, variant.pp));
    }
    result.series.push_back(std::move(series));
  }
  return result;
}

/// Key rate against modulation variance V_A (V = V_A + 1), one series per
/// (variant, fiber length) pair.
inline SweepResult sweep_modulation_variance(const ChannelParams& ch_template,
                                             std::span<const SweepVariant> variants,
                                             std::span<const double> va_grid,
                                             std::span<const double> lengths_km) {
  for (double va : va_grid) {
    if (!(va > 0.0)) {
      throw std::invalid_argument("modulation variance grid must be positive");
    }
  }
  SweepResult result;
  result.axis_name = "modulation_variance_snu";
  result.axis_values.assign(va_grid.begin(), va_grid.end());
  for (double length : lengths_km) {
    const ChannelParams ch = channel_at_length(ch_template, length);
    for (const SweepVariant& variant : variants) {
      SweepSeries series;
      char label[96];
      std::snprintf(label, sizeof label, "%s L=%gkm", variant.label.c_str(), length);
      series.label = label;
      series.params_echo = detail::echo_params(variant.det, variant.pp, ch);
      series.points.reserve(va_grid.size());
      for (double va : va_grid) {
        ProtocolParams pp = variant.pp;
        pp.epr_variance = va + 1.0;
        series.points.push_back(detail::evaluate_point(ch, variant.det, pp));
      }
      result.series.push_back(std::move(series));
    }
  }
  return result;
}

/// Bisection on [lo, hi] with f(lo) > 0 > f(hi), stopping at |f| <= value_tol
/// or bracket width <= width_tol. Evaluations stay inside the bracket.
template <typename F>
BisectionReport bisect_sign_change(F&& f, double lo, double hi, double f_lo, double f_hi,
                                   double value_tol, double width_tol = 1e-9) {
  if (!(f_lo > 0.0) || !(f_hi < 0.0)) {
    throw std::invalid_argument("bisection bracket does not straddle a sign change");
  }
  BisectionReport report;
  double mid = lo;
  double f_mid = f_lo;
  while (hi - lo > width_tol) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    ++report.iterations;
    if (std::abs(f_mid) <= value_tol) {
      break;
    }
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  if (report.iterations == 0 || std::abs(f_mid) > value_tol) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    ++report.iterations;
  }
  report.root = mid;
  report.bracket_lo = lo;
  report.bracket_hi = hi;
  report.residual = f_mid;
  return report;
}

/// Largest excess noise with nonnegative key rate at the given length: the
/// root of eps -> R(eps). The upper bracket grows by doubling from 0.1 until
/// the rate turns negative (cap 10 SNU). Monotonicity of the probes is
/// checked; should it ever fail, the root is re-bracketed by a grid scan
/// before bisecting, so a sign change is still isolated correctly.
inline BisectionReport max_tolerable_excess_noise(const ChannelParams& ch_template,
                                                  const ModifiedDetector& det,
                                                  const ProtocolParams& pp, double length_km,
                                                  double tol = 1e-8) {
  const ChannelParams base = channel_at_length(ch_template, length_km);
  const auto rate_at = [&](double eps) {
    ChannelParams ch = base;
    ch.excess_noise = eps;
    return secret_key_rate(ch, det, pp).rate;
  };

  const double rate_zero = rate_at(0.0);
  if (!(rate_zero > 0.0)) {
    throw std::domain_error("no positive rate at zero excess noise");
  }

  constexpr double cap = 10.0;
  std::vector<std::pair<double, double>> probes{{0.0, rate_zero}};
  double hi = 0.1;
  double rate_hi = rate_at(hi);
  while (rate_hi > 0.0) {
    probes.emplace_back(hi, rate_hi);
    if (hi >= cap) {
      throw std::domain_error("excess-noise cap reached with positive rate");
    }
    hi = std::min(2.0 * hi, cap);
    rate_hi = rate_at(hi);
  }

  bool monotone = true;
  for (std::size_t i = 1; i < probes.size(); ++i) {
    if (probes[i].second > probes[i - 1].second + 1e-12) {
      monotone = false;
      break;
    }
  }

  double lo = probes.back().first;
  double f_lo = probes.back().second;
  if (!monotone) {
    // isolate the first sign change on a fine grid instead
    const int steps = 1024;
    lo = 0.0;
    f_lo = rate_zero;
    for (int i = 1; i <= steps; ++i) {
      const double eps = hi * static_cast<double>(i) / steps;
      const double r = rate_at(eps);
      if (r <= 0.0) {
        hi = eps;
        rate_hi = r;
        break;
      }
      lo = eps;
      f_lo = r;
    }
  }

  return bisect_sign_change(rate_at, lo, hi, f_lo, rate_hi, tol);
}

struct GainLadderPoint {
  double gain = 0.0;
  double rate = 0.0;
  double gap = 0.0;  // |rate - ideal-detector rate|
};

struct GainConvergence {
  double length_km = 0.0;
  double ideal_rate = 0.0;  // eta_d = 1 reference; gain is then irrelevant
  std::vector<GainLadderPoint> ladder;
  double final_gap = 0.0;
  bool monotone_decreasing = false;
};

/// How the key rate approaches the ideal-detection-efficiency reference as
/// the PSA gain climbs a ladder.
inline std::vector<GainConvergence> asymptotic_gain_check(const ChannelParams& ch_template,
                                                          const ModifiedDetector& det,
                                                          const ProtocolParams& pp,
                                                          std::span<const double> lengths_km,
                                                          std::span<const double> gain_ladder) {
  for (std::size_t i = 1; i < gain_ladder.size(); ++i) {
    if (!(gain_ladder[i] > gain_ladder[i - 1])) {
      throw std::invalid_argument("gain ladder must be increasing");
    }
  }
  std::vector<GainConvergence> out;
  out.reserve(lengths_km.size());
  for (double length : lengths_km) {
    const ChannelParams ch = channel_at_length(ch_template, length);
    GainConvergence conv;
    conv.length_km = length;

    ModifiedDetector ideal = det;
    ideal.eta_d = 1.0;
    ProtocolParams pp_ideal = pp;
    pp_ideal.gain = 1.0;
    conv.ideal_rate = secret_key_rate(ch, ideal, pp_ideal).rate;

    conv.monotone_decreasing = true;
    for (double gain : gain_ladder) {
      ProtocolParams pp_g = pp;
      pp_g.gain = gain;
      const double rate = secret_key_rate(ch, det, pp_g).rate;
      GainLadderPoint point{gain, rate, std::abs(rate - conv.ideal_rate)};
      if (!conv.ladder.empty() && point.gap > conv.ladder.back().gap) {
        conv.monotone_decreasing = false;
      }
      conv.ladder.push_back(point);
    }
    conv.final_gap = conv.ladder.empty() ? 0.0 : conv.ladder.back().gap;
    out.push_back(std::move(conv));
  }
  return out;
}

}  // namespace cvqkd
