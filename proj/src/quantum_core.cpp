#include "optomech/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "optomech/errors.hpp"

namespace optomech {

namespace {

void require_non_negative_time(double t) {
  if (!(t >= 0.0)) {
    throw DomainError("time must be non-negative, got " + std::to_string(t));
  }
}

} // namespace

void CouplingParams::validate() const {
  if (!(kappa >= 0.0)) {
    throw DomainError("kappa must be non-negative");
  }
  if (!(omega_m > 0.0)) {
    throw DomainError("omega_m must be positive");
  }
}

void require_weak_displacement(const CoherentLabel &label) {
  if (!(std::abs(label.alpha) < tol::weak_displacement_limit)) {
    throw DomainError("coherent displacement |alpha| = " +
                      std::to_string(std::abs(label.alpha)) +
                      " is outside the weak-coupling regime");
  }
}

FockVector FockVector::number_state(int n, int n_trunc) {
  if (n < 0 || n > n_trunc) {
    throw DomainError("number state outside the truncated basis");
  }
  std::vector<ComplexAmplitude> c(static_cast<std::size_t>(n_trunc) + 1);
  c[static_cast<std::size_t>(n)] = 1.0;
  return FockVector(std::move(c));
}

double FockVector::norm_squared() const {
  double s = 0.0;
  for (const auto &c : amplitudes_) {
    s += std::norm(c);
  }
  return s;
}

double FockVector::leakage() const { return std::max(0.0, 1.0 - norm_squared()); }

ComplexAmplitude displacement_at(const CouplingParams &params, double t) {
  params.validate();
  require_non_negative_time(t);
  return params.kappa * (1.0 - std::polar(1.0, -params.omega_m * t));
}

double kerr_phase_at(const CouplingParams &params, double t) {
  params.validate();
  require_non_negative_time(t);
  const double theta = params.omega_m * t;
  return params.kappa * params.kappa * (theta - std::sin(theta));
}

CoherentLabel mechanical_state_at(const CouplingParams &params, double t) {
  return {displacement_at(params, t), kerr_phase_at(params, t)};
}

ComplexAmplitude coherent_overlap(const CoherentLabel &a, const CoherentLabel &b) {
  // <b|a>
  const ComplexAmplitude exponent = -0.5 * std::norm(a.alpha) - 0.5 * std::norm(b.alpha) +
                                    std::conj(b.alpha) * a.alpha;
  return std::polar(1.0, a.phase - b.phase) * std::exp(exponent);
}

FockVector fock_expand(const CoherentLabel &label, int n_trunc) {
  if (n_trunc < 0) {
    throw DomainError("n_trunc must be non-negative");
  }
  std::vector<ComplexAmplitude> c(static_cast<std::size_t>(n_trunc) + 1);
  c[0] = std::polar(std::exp(-0.5 * std::norm(label.alpha)), label.phase);
  for (int n = 1; n <= n_trunc; ++n) {
    c[static_cast<std::size_t>(n)] =
        c[static_cast<std::size_t>(n - 1)] * label.alpha / std::sqrt(static_cast<double>(n));
  }
  return FockVector(std::move(c));
}

ComplexAmplitude inner_product(const FockVector &a, const FockVector &b) {
  if (a.dimension() != b.dimension()) {
    throw ConfigError("Fock vectors have different truncation dimensions");
  }
  ComplexAmplitude s{0.0, 0.0};
  for (std::size_t n = 0; n < a.dimension(); ++n) {
    s += std::conj(a[n]) * b[n];
  }
  return s;
}

double fidelity(const FockVector &a, const FockVector &b) {
  return std::min(1.0, std::norm(inner_product(a, b)));
}

FockPropagator::FockPropagator(const CouplingParams &params, int n_trunc)
    : params_(params), n_trunc_(n_trunc) {
  params_.validate();
  if (n_trunc < 0) {
    throw DomainError("n_trunc must be non-negative");
  }
  const Eigen::Index dim = n_trunc + 1;
  const double g = params_.kappa * params_.omega_m;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    h(n, n) = params_.omega_m * static_cast<double>(n);
    if (n + 1 < dim) {
      const double off = -g * std::sqrt(static_cast<double>(n + 1));
      h(n, n + 1) = off;
      h(n + 1, n) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the truncated Hamiltonian failed");
  }
  energies_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

FockVector FockPropagator::evolve_ground_state(double t) const {
  require_non_negative_time(t);
  const Eigen::Index dim = energies_.size();
  // psi(t) = V exp(-i E t) V^T |0>
  Eigen::VectorXcd spectral(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    spectral(k) = eigenvectors_(0, k) * std::polar(1.0, -energies_(k) * t);
  }
  const Eigen::VectorXcd psi = eigenvectors_.cast<ComplexAmplitude>() * spectral;

  std::vector<ComplexAmplitude> c(psi.data(), psi.data() + dim);
  FockVector out(std::move(c));
  const double top = std::norm(out[static_cast<std::size_t>(n_trunc_)]);
  if (top > tol::truncation_leakage) {
    throw TruncationError("truncated basis too small: top level population " +
                              std::to_string(top),
                          top);
  }
  if (std::abs(out.norm_squared() - 1.0) > tol::norm_drift) {
    throw TruncationError("norm drift in truncated evolution", out.leakage());
  }
  return out;
}

FockVector evolve_fock_oracle(const CouplingParams &params, double t, int n_trunc) {
  return FockPropagator(params, n_trunc).evolve_ground_state(t);
}

} // namespace optomech
