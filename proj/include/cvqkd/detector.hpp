#pragma once

#include <cmath>
#include <stdexcept>

namespace cvqkd {

/// Raw homodyne calibration quantities, all in detector output units:
/// amplification A, local-oscillator amplitude X_LO and the raw electronic
/// noise variance V_ele. The two shot-noise conventions derived from them
/// are u_s = A^2 X_LO^2 and u_s' = A^2 X_LO^2 + V_ele.
struct RawCalibration {
  double amplification = 1.0;        // A
  double lo_amplitude = 1.0;         // X_LO
  double raw_electronic_variance = 0.0;  // V_ele
};

/// Detection efficiency plus additive electronic noise in u_s units.
/// Its entanglement-based picture injects one mode of an EPR state of
/// variance 1 + v_el/(1 - eta_d) into the efficiency beamsplitter; only the
/// resulting output variance is used here.
struct ConventionalDetector {
  double eta_d = 1.0;
  double v_el = 0.0;
};

/// Both imperfections as beamsplitter transmittances, in u_s' units.
struct ModifiedDetector {
  double eta_d = 1.0;
  double eta_e = 1.0;
};

/// Which trusted beamsplitter the signal meets first.
enum class BsOrder { electronic_first, efficiency_first };

inline double shot_noise_unit(const RawCalibration& cal) {
  return cal.amplification * cal.amplification * cal.lo_amplitude * cal.lo_amplitude;
}

inline double modified_shot_noise_unit(const RawCalibration& cal) {
  return shot_noise_unit(cal) + cal.raw_electronic_variance;
}

inline double eta_e_from_raw(const RawCalibration& cal) {
  if (!(cal.amplification > 0.0) || !(cal.lo_amplitude > 0.0)) {
    throw std::domain_error("detector amplification and LO amplitude must be positive");
  }
  if (!(cal.raw_electronic_variance >= 0.0)) {
    throw std::domain_error("raw electronic-noise variance must be nonnegative");
  }
  const double u_s = shot_noise_unit(cal);
  return u_s / (u_s + cal.raw_electronic_variance);
}

inline double eta_e_from_vel(double v_el) {
  if (!(v_el >= 0.0)) {
    throw std::domain_error("electronic noise must be nonnegative");
  }
  return 1.0 / (1.0 + v_el);
}

inline double vel_from_eta_e(double eta_e) {
  if (!(eta_e > 0.0 && eta_e <= 1.0)) {
    throw std::domain_error("electronic-noise transmittance must lie in (0, 1]");
  }
  return 1.0 / eta_e - 1.0;
}

/// s = u_s' / u_s = 1 + v_el, the factor between the two normalizations.
inline double scaling_s(double v_el) {
  if (!(v_el >= 0.0)) {
    throw std::domain_error("electronic noise must be nonnegative");
  }
  return 1.0 + v_el;
}

inline double conventional_output_variance(const ConventionalDetector& det, double v_m) {
  return det.eta_d * v_m + (1.0 - det.eta_d) + det.v_el;
}

inline double modified_output_variance(const ModifiedDetector& det, double v_m) {
  return det.eta_e * det.eta_d * v_m - det.eta_e * det.eta_d + 1.0;
}

/// Same output variance composed beamsplitter-by-beamsplitter in the given
/// order; both orders collapse to eta_e eta_d V - eta_e eta_d + 1.
inline double modified_output_variance(const ModifiedDetector& det, double v_m, BsOrder order) {
  if (order == BsOrder::electronic_first) {
    const double after_e = det.eta_e * v_m + (1.0 - det.eta_e);
    return det.eta_d * after_e + (1.0 - det.eta_d);
  }
  const double after_d = det.eta_d * v_m + (1.0 - det.eta_d);
  return det.eta_e * after_d + (1.0 - det.eta_e);
}

/// |s * modified(eta_d, eta_e(v_el), V) - conventional(eta_d, v_el, V)|.
/// Zero up to roundoff for every valid parameter triple.
inline double equivalence_residual(double eta_d, double v_el, double v_m) {
  const ModifiedDetector modified{eta_d, eta_e_from_vel(v_el)};
  const ConventionalDetector conventional{eta_d, v_el};
  const double rescaled = scaling_s(v_el) * modified_output_variance(modified, v_m);
  return std::abs(rescaled - conventional_output_variance(conventional, v_m));
}

}  // namespace cvqkd
