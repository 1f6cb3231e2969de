#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "cvqkd/detector.hpp"
#include "cvqkd/gaussian.hpp"

namespace cvqkd {

struct ChannelParams {
  double transmittance = 1.0;
  double excess_noise = 0.0;  // SNU, channel-input referred
  double length_km = 0.0;
  double alpha_db_per_km = 0.0;

  static ChannelParams from_transmittance(double t, double eps) {
    ChannelParams ch;
    ch.transmittance = t;
    ch.excess_noise = eps;
    return ch;
  }

  static ChannelParams from_length(double length_km, double alpha_db_per_km, double eps);
};

struct ProtocolParams {
  double epr_variance = 40.0;  // V; modulation variance V_A = V - 1
  double beta = 1.0;           // reconciliation efficiency
  double gain = 1.0;           // PSA gain; 1 means no PSA
};

struct KeyRateBreakdown {
  double rate = 0.0;    // bits per pulse; negative means no key
  double i_ab = 0.0;    // bits
  double chi_be = 0.0;  // bits
  std::array<double, 5> lambdas{};
  CovarianceMatrix gamma_acb4;
};

inline double channel_transmittance(double length_km, double alpha_db_per_km) {
  if (!(length_km >= 0.0) || !(alpha_db_per_km >= 0.0)) {
    throw std::domain_error("fiber length and attenuation must be nonnegative");
  }
  return std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

inline ChannelParams ChannelParams::from_length(double length_km, double alpha_db_per_km,
                                                double eps) {
  ChannelParams ch;
  ch.transmittance = channel_transmittance(length_km, alpha_db_per_km);
  ch.excess_noise = eps;
  ch.length_km = length_km;
  ch.alpha_db_per_km = alpha_db_per_km;
  return ch;
}

inline void validate(const ChannelParams& ch) {
  if (!(ch.transmittance > 0.0 && ch.transmittance <= 1.0)) {
    throw std::domain_error("channel transmittance must lie in (0, 1]");
  }
  if (!(ch.excess_noise >= 0.0)) {
    throw std::domain_error("channel excess noise must be nonnegative");
  }
}

inline void validate(const ModifiedDetector& det) {
  if (!(det.eta_d > 0.0 && det.eta_d <= 1.0)) {
    throw std::domain_error("detection efficiency must lie in (0, 1]");
  }
  if (!(det.eta_e > 0.0 && det.eta_e <= 1.0)) {
    throw std::domain_error("electronic-noise transmittance must lie in (0, 1]");
  }
}

inline void validate(const ProtocolParams& pp) {
  if (!(pp.epr_variance > 1.0)) {
    throw std::domain_error("EPR variance must exceed 1 (positive modulation variance)");
  }
  if (!(pp.beta >= 0.0 && pp.beta <= 1.0)) {
    throw std::domain_error("reconciliation efficiency must lie in [0, 1]");
  }
  if (!(pp.gain >= 1.0)) {
    throw std::domain_error("PSA gain must be at least 1");
  }
}

/// EPR state after one arm crossed the channel:
/// [[V I, sqrt(T(V^2-1)) sigma_z], [sqrt(T(V^2-1)) sigma_z, (T(V-1+eps)+1) I]].
inline CovarianceMatrix channel_output(const ChannelParams& ch, double v) {
  validate(ch);
  if (!(v > 1.0)) {
    throw std::domain_error("EPR variance must exceed 1");
  }
  const double c = std::sqrt(ch.transmittance * (v * v - 1.0));
  const double v_b1 = ch.transmittance * (v - 1.0 + ch.excess_noise) + 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = v;
  m(2, 2) = m(3, 3) = v_b1;
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  return CovarianceMatrix(std::move(m));
}

/// Every covariance matrix the receiver chain produces, in the order they
/// are built. Mode labels follow the trusted-receiver picture:
/// B1 channel output, B2' after the electronic-noise beamsplitter (its
/// reflected partner D is unknown and discarded), B3' after the PSA, B4'
/// after the efficiency beamsplitter, C that beamsplitter's reflected mode.
struct ChainRecord {
  CovarianceMatrix ab1;    // (A, B1)
  CovarianceMatrix ab2d;   // (A, B2', D)
  CovarianceMatrix ab2;    // (A, B2')
  CovarianceMatrix ab3;    // (A, B3')
  CovarianceMatrix ab4c;   // (A, B4', C)
  CovarianceMatrix acb4;   // (A, C, B4') -- the partition order used below
};

/// Receiver chain of the trusted model: channel -> eta_e beamsplitter
/// (discard the unknown reflected mode) -> PSA -> eta_d beamsplitter (keep
/// the reflected vacuum C). Only x is later measured; the PSA amplifies x.
inline ChainRecord build_chain(const ChannelParams& ch, const ModifiedDetector& det,
                               const ProtocolParams& pp) {
  validate(det);
  validate(pp);
  CovarianceMatrix ab1 = channel_output(ch, pp.epr_variance);

  CovarianceMatrix ab2d = apply(beamsplitter(det.eta_e, 3, 1, 2), attach_vacuum(ab1));
  CovarianceMatrix ab2 = drop_mode(ab2d, 2);
  CovarianceMatrix ab3 = apply(psa(pp.gain, 2, 1), ab2);
  CovarianceMatrix ab4c = apply(beamsplitter(det.eta_d, 3, 1, 2), attach_vacuum(ab3));
  constexpr int order[] = {0, 2, 1};
  CovarianceMatrix acb4 = reorder_modes(ab4c, order);

  return ChainRecord{std::move(ab1), std::move(ab2d), std::move(ab2),
                     std::move(ab3), std::move(ab4c), std::move(acb4)};
}

/// Mutual information in bits for heterodyne detection on A and an x
/// homodyne on B4', from the x rows of gamma_ACB4'. Heterodyne halves the
/// readout variance against one shot noise: V_AM = (V_Ax + 1)/2 with the
/// covariance scaled by 1/sqrt(2), and the usual Gaussian conditional
/// variance V_AM - C^2/V_Bx closes the formula.
inline double mutual_information(const CovarianceMatrix& gamma_acb4) {
  if (gamma_acb4.modes() != 3) {
    throw std::invalid_argument("expected the three-mode receiver state (A, C, B4')");
  }
  const double v_ax = gamma_acb4(0, 0);
  const double c_x = gamma_acb4(0, 4);
  const double v_bx = gamma_acb4(4, 4);

  const double v_am = 0.5 * (v_ax + 1.0);
  const double c_het = c_x / std::sqrt(2.0);
  const double v_cond = v_am - c_het * c_het / v_bx;
  if (!(v_cond > 0.0)) {
    throw std::domain_error("conditional variance is not positive");
  }
  return 0.5 * std::log2(v_am / v_cond);
}

struct HolevoResult {
  double chi_be = 0.0;
  std::array<double, 5> lambdas{};
};

/// Eve's Holevo information under reverse reconciliation: the entropy of the
/// full (A, C, B4') state minus its entropy conditioned on the x homodyne of
/// B4'. The unknown electronic-noise partner mode is excluded from Eve's
/// purification.
inline HolevoResult holevo_bound(const CovarianceMatrix& gamma_acb4) {
  if (gamma_acb4.modes() != 3) {
    throw std::invalid_argument("expected the three-mode receiver state (A, C, B4')");
  }
  const std::vector<double> global = symplectic_eigenvalues(gamma_acb4);
  const CovarianceMatrix conditioned = homodyne_condition(gamma_acb4, 2, Quadrature::x);
  const std::vector<double> reduced = symplectic_eigenvalues(conditioned);

  HolevoResult out;
  out.lambdas = {global[0], global[1], global[2], reduced[0], reduced[1]};
  out.chi_be = entropy_from_spectrum(global) - entropy_from_spectrum(reduced);
  return out;
}

/// Asymptotic secret key rate R = beta I_AB - chi_BE in bits per pulse.
/// Negative rates are returned as-is; clamping, when wanted, is a
/// presentation decision.
inline KeyRateBreakdown secret_key_rate(const ChannelParams& ch, const ModifiedDetector& det,
                                        const ProtocolParams& pp) {
  ChainRecord chain = build_chain(ch, det, pp);
  const double i_ab = mutual_information(chain.acb4);
  HolevoResult holevo = holevo_bound(chain.acb4);
  const double rate = pp.beta * i_ab - holevo.chi_be;
  return KeyRateBreakdown{rate, i_ab, holevo.chi_be, holevo.lambdas, std::move(chain.acb4)};
}

}  // namespace cvqkd
