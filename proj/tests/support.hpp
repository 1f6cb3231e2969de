#pragma once

// Test-only reference routes. These deliberately avoid the library's
// implementation choices: conditioning goes through a generic matrix
// pseudo-inverse and symplectic spectra through an unbalanced eigensolve,
// so agreement is evidence rather than tautology.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cvqkd/detector.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/protocol.hpp"

namespace testsupport {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53);
}

/// Homodyne conditioning straight from the partitioned pseudo-inverse form:
/// gamma_rest - sigma (X gamma_meas X)^+ sigma^T.
inline Eigen::MatrixXd condition_by_pseudo_inverse(const Eigen::MatrixXd& gamma, int mode,
                                                   bool measure_p) {
  const int n = static_cast<int>(gamma.rows()) / 2;
  std::vector<int> rest_idx;
  for (int m = 0; m < n; ++m) {
    if (m == mode) continue;
    rest_idx.push_back(2 * m);
    rest_idx.push_back(2 * m + 1);
  }
  Eigen::VectorXi rest =
      Eigen::Map<Eigen::VectorXi>(rest_idx.data(), static_cast<int>(rest_idx.size()));
  Eigen::Vector2i meas(2 * mode, 2 * mode + 1);

  Eigen::MatrixXd gamma_rest = gamma(rest, rest);
  Eigen::MatrixXd sigma = gamma(rest, meas);
  Eigen::MatrixXd gamma_meas = gamma(meas, meas);

  Eigen::Matrix2d x = Eigen::Matrix2d::Zero();
  const int q = measure_p ? 1 : 0;
  x(q, q) = 1.0;
  Eigen::MatrixXd projected = x * gamma_meas * x;
  Eigen::MatrixXd pinv = projected.completeOrthogonalDecomposition().pseudoInverse();
  return gamma_rest - sigma * pinv * sigma.transpose();
}

/// Symplectic spectrum from the raw eigenvalues of Omega*gamma, no
/// balancing, no library entry point.
inline std::vector<double> spectrum_by_eigensolver(const Eigen::MatrixXd& gamma) {
  const int n = static_cast<int>(gamma.rows()) / 2;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(cvqkd::symplectic_form(n) * gamma, false);
  std::vector<double> mags(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < 2 * n; ++i) {
    mags[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()(i));
  }
  std::sort(mags.begin(), mags.end(), std::greater<>());
  std::vector<double> nus(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nus[static_cast<std::size_t>(i)] = mags[static_cast<std::size_t>(2 * i)];
  }
  return nus;
}

inline Eigen::MatrixXd tensor(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// Random physical three-mode state: either a unitary chain on
/// EPR (x) vacuum (x) vacuum (pure), or one mode of two entangled EPR pairs
/// traced out (mixed).
inline cvqkd::CovarianceMatrix random_three_mode_state(std::mt19937_64& rng) {
  cvqkd::CovarianceMatrix state = [&] {
    if (rng() % 2 == 0) {
      return cvqkd::attach_vacuum(cvqkd::epr_state(uniform(rng, 1.2, 60.0)));
    }
    Eigen::MatrixXd pair = tensor(cvqkd::epr_state(uniform(rng, 1.2, 30.0)).matrix(),
                                  cvqkd::epr_state(uniform(rng, 1.2, 30.0)).matrix());
    cvqkd::CovarianceMatrix four(std::move(pair));
    four = cvqkd::apply(cvqkd::beamsplitter(uniform(rng, 0.1, 0.9), 4, 1, 2), four);
    return cvqkd::drop_mode(four, 3);
  }();
  for (int round = 0; round < 3; ++round) {
    const int a = static_cast<int>(rng() % 3);
    int b = static_cast<int>(rng() % 3);
    while (b == a) b = static_cast<int>(rng() % 3);
    state = cvqkd::apply(cvqkd::beamsplitter(uniform(rng, 0.05, 1.0), 3, a, b), state);
    state = cvqkd::apply(cvqkd::psa(uniform(rng, 1.0, 5.0), 3, static_cast<int>(rng() % 3)), state);
  }
  return state;
}

/// Scalar closed forms for the receiver chain output, composed by hand:
/// V_B1 = T(V-1+eps)+1, after the eta_e splitter eta_e V_B1 + 1 - eta_e,
/// then the PSA scales x by g and p by 1/g, then the eta_d splitter mixes
/// in its vacuum.
struct ChainClosedForm {
  double v_b1;
  double b4_x;
  double b4_p;
  double cov_a_b4_x;  // <x_A x_B4'>
};

inline ChainClosedForm chain_closed_form(double v, double t, double eps, double eta_e,
                                         double eta_d, double gain) {
  ChainClosedForm cf{};
  cf.v_b1 = t * (v - 1.0 + eps) + 1.0;
  const double after_e = eta_e * cf.v_b1 + (1.0 - eta_e);
  cf.b4_x = eta_d * gain * after_e + (1.0 - eta_d);
  cf.b4_p = eta_d * after_e / gain + (1.0 - eta_d);
  cf.cov_a_b4_x = std::sqrt(eta_d * gain * eta_e * t * (v * v - 1.0));
  return cf;
}

/// Mutual information assembled purely from the closed-form scalars.
inline double mutual_information_closed_form(double v, double t, double eps, double eta_e,
                                             double eta_d, double gain) {
  const ChainClosedForm cf = chain_closed_form(v, t, eps, eta_e, eta_d, gain);
  const double v_am = 0.5 * (v + 1.0);
  const double c_het = cf.cov_a_b4_x / std::sqrt(2.0);
  return 0.5 * std::log2(v_am / (v_am - c_het * c_het / cf.b4_x));
}

/// chi_BE recomputed entirely through the reference routes above.
inline double holevo_by_reference(const cvqkd::CovarianceMatrix& gamma_acb4) {
  const std::vector<double> global = spectrum_by_eigensolver(gamma_acb4.matrix());
  const Eigen::MatrixXd conditioned =
      condition_by_pseudo_inverse(gamma_acb4.matrix(), 2, /*measure_p=*/false);
  const std::vector<double> reduced = spectrum_by_eigensolver(conditioned);
  const auto entropy = [](const std::vector<double>& nus) {
    double total = 0.0;
    for (double nu : nus) {
      const double x = 0.5 * (std::max(nu, 1.0) - 1.0);
      total += x == 0.0 ? 0.0 : (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
    }
    return total;
  };
  return entropy(global) - entropy(reduced);
}

}  // namespace testsupport
