#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/analysis.hpp"

namespace cvqkd {

/// 12 significant digits, C locale, plain decimal point. Shared by every
/// emitter so repeated runs are byte-identical.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a partial file at the destination.
inline void write_text_atomic(const std::string& path, const std::string& body) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open output file: " + tmp.string());
    }
    out << body;
    if (!out.flush()) {
      throw std::runtime_error("failed writing output file: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place: " + path);
  }
}

/// Long-format sweep rows: one per (series, axis value). Failed points keep
/// their row with empty numeric fields and the failure reason.
inline std::string sweep_csv(const SweepResult& result, bool clamp_rate = false) {
  std::string out = "axis,series_label,key_rate_bits_per_pulse,i_ab,chi_be,status,reason\n";
  for (const SweepSeries& series : result.series) {
    for (std::size_t i = 0; i < result.axis_values.size(); ++i) {
      out += format_value(result.axis_values[i]);
      out += ',';
      out += series.label;
      out += ',';
      const SweepPoint& point = series.points[i];
      if (point.value) {
        const double rate = clamp_rate ? std::max(point.value->rate, 0.0) : point.value->rate;
        out += format_value(rate);
        out += ',';
        out += format_value(point.value->i_ab);
        out += ',';
        out += format_value(point.value->chi_be);
        out += ",ok,\n";
      } else {
        out += ",,,error,";
        out += point.reason;
        out += '\n';
      }
    }
  }
  return out;
}

struct MaxNoisePoint {
  double length_km = 0.0;
  std::string label;
  std::optional<BisectionReport> report;
  std::string reason;
};

inline std::string max_noise_csv(const std::vector<MaxNoisePoint>& points) {
  std::string out = "distance_km,series_label,max_noise_snu,iterations,residual,status,reason\n";
  for (const MaxNoisePoint& point : points) {
    out += format_value(point.length_km);
    out += ',';
    out += point.label;
    out += ',';
    if (point.report) {
      out += format_value(point.report->root);
      out += ',';
      out += std::to_string(point.report->iterations);
      out += ',';
      out += format_value(point.report->residual);
      out += ",ok,\n";
    } else {
      out += ",,,error,";
      out += point.reason;
      out += '\n';
    }
  }
  return out;
}

}  // namespace cvqkd
