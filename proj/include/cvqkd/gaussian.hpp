#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cvqkd {

/// Quadrature ordering is (x1, p1, x2, p2, ...) everywhere in this library;
/// the symplectic form below is built to match.
enum class Quadrature { x, p };

inline Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int m = 0; m < n_modes; ++m) {
    omega(2 * m, 2 * m + 1) = 1.0;
    omega(2 * m + 1, 2 * m) = -1.0;
  }
  return omega;
}

/// Second moments of a zero-mean Gaussian state in shot-noise units.
/// Symmetry is checked at construction; physicality (all symplectic
/// eigenvalues >= 1) is checkable via symplectic_eigenvalues().
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 2 || entries_.rows() % 2 != 0) {
      throw std::invalid_argument("covariance matrix must be 2n x 2n with n >= 1");
    }
    const double skew = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    if (!(skew <= 1e-12)) {
      throw std::invalid_argument("covariance matrix is not symmetric");
    }
  }

  int modes() const { return static_cast<int>(entries_.rows()) / 2; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  double variance(int mode, Quadrature q) const {
    const int i = 2 * mode + (q == Quadrature::p ? 1 : 0);
    return entries_(i, i);
  }

 private:
  Eigen::MatrixXd entries_;
};

/// Linear quadrature transform Y with Y Omega Y^T = Omega (checked at
/// construction to 1e-12). States transform as gamma -> Y gamma Y^T.
class SymplecticTransform {
 public:
  explicit SymplecticTransform(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 2 || entries_.rows() % 2 != 0) {
      throw std::invalid_argument("symplectic transform must be 2n x 2n with n >= 1");
    }
    const int n = static_cast<int>(entries_.rows()) / 2;
    const Eigen::MatrixXd omega = symplectic_form(n);
    const double defect = (entries_ * omega * entries_.transpose() - omega).cwiseAbs().maxCoeff();
    if (!(defect <= 1e-12)) {
      throw std::invalid_argument("matrix does not preserve the symplectic form");
    }
  }

  int modes() const { return static_cast<int>(entries_.rows()) / 2; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& matrix() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Two-mode squeezed vacuum with quadrature variance V:
/// [[V I, sqrt(V^2-1) sigma_z], [sqrt(V^2-1) sigma_z, V I]].
inline CovarianceMatrix epr_state(double v) {
  if (!(v >= 1.0)) {
    throw std::domain_error("unphysical EPR variance (requires V >= 1)");
  }
  const double c = std::sqrt(v * v - 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = v;
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  return CovarianceMatrix(std::move(m));
}

/// Beamsplitter of transmittance eta acting on (mode_a, mode_b), identity on
/// every other mode. The transmitted output sits on mode_a, the reflected
/// one on mode_b.
inline SymplecticTransform beamsplitter(double eta, int n_modes, int mode_a, int mode_b) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::domain_error("beamsplitter transmittance must lie in [0, 1]");
  }
  if (mode_a == mode_b) {
    throw std::invalid_argument("beamsplitter requires two distinct modes");
  }
  if (n_modes < 2 || mode_a < 0 || mode_b < 0 || mode_a >= n_modes || mode_b >= n_modes) {
    throw std::invalid_argument("beamsplitter mode index out of range");
  }
  const double t = std::sqrt(eta);
  const double r = std::sqrt(1.0 - eta);
  Eigen::MatrixXd y = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < 2; ++k) {
    y(2 * mode_a + k, 2 * mode_a + k) = t;
    y(2 * mode_a + k, 2 * mode_b + k) = r;
    y(2 * mode_b + k, 2 * mode_a + k) = -r;
    y(2 * mode_b + k, 2 * mode_b + k) = t;
  }
  return SymplecticTransform(std::move(y));
}

/// Phase-sensitive amplifier: x -> sqrt(g) x, p -> p / sqrt(g) on the target
/// mode. Gains below 1 (deamplification of the target quadrature) are
/// rejected.
inline SymplecticTransform psa(double gain, int n_modes, int mode) {
  if (!(gain >= 1.0)) {
    throw std::domain_error("deamplifying gain (requires g >= 1)");
  }
  if (n_modes < 1 || mode < 0 || mode >= n_modes) {
    throw std::invalid_argument("psa mode index out of range");
  }
  const double s = std::sqrt(gain);
  Eigen::MatrixXd y = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  y(2 * mode, 2 * mode) = s;
  y(2 * mode + 1, 2 * mode + 1) = 1.0 / s;
  return SymplecticTransform(std::move(y));
}

/// Appends one vacuum mode (identity 2x2 block, zero cross covariance).
inline CovarianceMatrix attach_vacuum(const CovarianceMatrix& gamma) {
  const int d = gamma.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d + 2, d + 2);
  m.topLeftCorner(d, d) = gamma.matrix();
  m(d, d) = 1.0;
  m(d + 1, d + 1) = 1.0;
  return CovarianceMatrix(std::move(m));
}

/// gamma -> Y gamma Y^T. The product is re-symmetrized entrywise so chained
/// applications never accumulate roundoff skew.
inline CovarianceMatrix apply(const SymplecticTransform& transform, const CovarianceMatrix& gamma) {
  if (transform.dim() != gamma.dim()) {
    throw std::invalid_argument("transform and state dimensions differ");
  }
  const Eigen::MatrixXd& y = transform.matrix();
  Eigen::MatrixXd out = y * gamma.matrix() * y.transpose();
  out = 0.5 * (out + out.transpose()).eval();
  return CovarianceMatrix(std::move(out));
}

/// Discards one mode (partial trace: delete its rows and columns).
inline CovarianceMatrix drop_mode(const CovarianceMatrix& gamma, int mode) {
  const int n = gamma.modes();
  if (n < 2 || mode < 0 || mode >= n) {
    throw std::invalid_argument("drop_mode index out of range");
  }
  std::vector<int> keep;
  keep.reserve(2 * (n - 1));
  for (int m = 0; m < n; ++m) {
    if (m == mode) continue;
    keep.push_back(2 * m);
    keep.push_back(2 * m + 1);
  }
  Eigen::VectorXi idx = Eigen::Map<Eigen::VectorXi>(keep.data(), static_cast<int>(keep.size()));
  Eigen::MatrixXd m = gamma.matrix()(idx, idx);
  return CovarianceMatrix(std::move(m));
}

/// Permutes modes: output mode i is input mode order[i].
inline CovarianceMatrix reorder_modes(const CovarianceMatrix& gamma, std::span<const int> order) {
  const int n = gamma.modes();
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument("reorder_modes needs one entry per mode");
  }
  std::vector<bool> seen(n, false);
  std::vector<int> keep;
  keep.reserve(2 * n);
  for (int m : order) {
    if (m < 0 || m >= n || seen[m]) {
      throw std::invalid_argument("reorder_modes order is not a permutation");
    }
    seen[m] = true;
    keep.push_back(2 * m);
    keep.push_back(2 * m + 1);
  }
  Eigen::VectorXi idx = Eigen::Map<Eigen::VectorXi>(keep.data(), static_cast<int>(keep.size()));
  Eigen::MatrixXd m = gamma.matrix()(idx, idx);
  return CovarianceMatrix(std::move(m));
}

/// The n positive invariants {nu_i}: the eigenvalues of i Omega gamma are
/// {+-nu_i}. Sorted descending. Computed from the spectrum of Omega gamma after a
/// per-mode symplectic rescaling that equalizes the x/p scales; without it a
/// large PSA gain would push the eigensolver's absolute error above the
/// physicality tolerances used downstream.
inline std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& gamma) {
  const Eigen::MatrixXd& g = gamma.matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("covariance matrix is not positive-definite");
  }
  const int n = gamma.modes();
  Eigen::VectorXd d(2 * n);
  for (int m = 0; m < n; ++m) {
    const double s = std::pow(g(2 * m + 1, 2 * m + 1) / g(2 * m, 2 * m), 0.25);
    d(2 * m) = s;
    d(2 * m + 1) = 1.0 / s;
  }
  const Eigen::MatrixXd balanced = d.asDiagonal() * g * d.asDiagonal();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(symplectic_form(n) * balanced, false);
  if (solver.info() != Eigen::Success) {
    throw std::domain_error("symplectic spectrum computation failed");
  }

  std::vector<double> magnitudes(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    magnitudes[i] = std::abs(solver.eigenvalues()(i));
  }
  std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());

  // Conjugate pairs are adjacent after sorting; keep one of each.
  std::vector<double> nus(n);
  for (int i = 0; i < n; ++i) {
    const double a = magnitudes[2 * i];
    const double b = magnitudes[2 * i + 1];
    if (std::abs(a - b) > 1e-8 * std::max(1.0, a)) {
      throw std::domain_error("symplectic spectrum does not pair into conjugates");
    }
    nus[i] = a;
  }
  return nus;
}

/// Bosonic entropy kernel G(x) = (x+1) log2(x+1) - x log2 x, with G(0) = 0.
inline double g_function(double x) {
  if (!(x >= 0.0)) {
    throw std::domain_error("g_function domain is x >= 0");
  }
  if (x == 0.0) {
    return 0.0;
  }
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

/// Von Neumann entropy in bits from a symplectic spectrum: sum G((nu-1)/2).
/// Eigenvalues marginally below 1 are clamped to 1 before use.
inline double entropy_from_spectrum(std::span<const double> nus) {
  double total = 0.0;
  for (double nu : nus) {
    const double clamped = std::max(nu, 1.0);
    total += g_function(0.5 * (clamped - 1.0));
  }
  return total;
}

/// Conditions on a homodyne measurement of one quadrature of one mode and
/// removes that mode. With the measured quadrature variance V_q and c the
/// covariances of the remaining quadratures with it, the survivor is
/// gamma_rest - c c^T / V_q, which is the pseudo-inverse expression
/// gamma_rest - sigma (X gamma_meas X)^+ sigma^T for X projecting onto the
/// measured quadrature.
inline CovarianceMatrix homodyne_condition(const CovarianceMatrix& gamma, int measured_mode,
                                           Quadrature quadrature) {
  const int n = gamma.modes();
  if (n < 2) {
    throw std::invalid_argument("homodyne_condition needs at least two modes");
  }
  if (measured_mode < 0 || measured_mode >= n) {
    throw std::invalid_argument("homodyne_condition mode index out of range");
  }
  const int q = 2 * measured_mode + (quadrature == Quadrature::p ? 1 : 0);
  const double v_q = gamma(q, q);
  if (!(v_q > 0.0)) {
    throw std::domain_error("measured quadrature variance is not positive");
  }

  std::vector<int> keep;
  keep.reserve(2 * (n - 1));
  for (int m = 0; m < n; ++m) {
    if (m == measured_mode) continue;
    keep.push_back(2 * m);
    keep.push_back(2 * m + 1);
  }
  Eigen::VectorXi idx = Eigen::Map<Eigen::VectorXi>(keep.data(), static_cast<int>(keep.size()));
  Eigen::VectorXd c = gamma.matrix()(idx, q);
  Eigen::MatrixXd rest = gamma.matrix()(idx, idx);
  rest -= (c * c.transpose()) / v_q;
  return CovarianceMatrix(std::move(rest));
}

}  // namespace cvqkd
