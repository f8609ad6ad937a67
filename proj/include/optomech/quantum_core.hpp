#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "optomech/constants.hpp"

namespace optomech {

/// Complex amplitude of the state algebra; std::abs / std::arg give modulus and phase.
using ComplexAmplitude = std::complex<double>;

/// Single-photon optomechanical coupling: kappa = g / omega_m.
struct CouplingParams {
  double kappa = 0.0;   ///< dimensionless
  double omega_m = 1.0; ///< rad/s

  /// Throws DomainError unless kappa >= 0 and omega_m > 0.
  void validate() const;
};

/// Phase-carrying coherent state e^{i phase} |alpha>.
struct CoherentLabel {
  ComplexAmplitude alpha{0.0, 0.0};
  double phase = 0.0;

  static CoherentLabel vacuum() { return {}; }
  bool operator==(const CoherentLabel &) const = default;
};

/// Throws DomainError when |alpha| >= 1 (outside the weak-displacement regime).
void require_weak_displacement(const CoherentLabel &label);

/// Number-basis coefficients c_0..c_N of a mechanical state.
class FockVector {
public:
  FockVector() = default;
  explicit FockVector(std::vector<ComplexAmplitude> amplitudes)
      : amplitudes_(std::move(amplitudes)) {}

  static FockVector number_state(int n, int n_trunc);

  int n_trunc() const { return static_cast<int>(amplitudes_.size()) - 1; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<const ComplexAmplitude> amplitudes() const { return amplitudes_; }
  const ComplexAmplitude &operator[](std::size_t n) const { return amplitudes_[n]; }

  double norm_squared() const;
  /// 1 - sum |c_n|^2, clamped below at zero.
  double leakage() const;

private:
  std::vector<ComplexAmplitude> amplitudes_;
};

/// alpha(t) = kappa (1 - e^{-i omega_m t}).
ComplexAmplitude displacement_at(const CouplingParams &params, double t);

/// phi(t) = kappa^2 (omega_m t - sin omega_m t).
double kerr_phase_at(const CouplingParams &params, double t);

/// Mechanical state after a photon has spent time t in the optomechanical cavity.
CoherentLabel mechanical_state_at(const CouplingParams &params, double t);

/// <a|b> for phase-carrying coherent states.
ComplexAmplitude coherent_overlap(const CoherentLabel &a, const CoherentLabel &b);

/// Coherent state in the number basis, truncated at n_trunc.
FockVector fock_expand(const CoherentLabel &label, int n_trunc);

/// <a|b>. Throws ConfigError on dimension mismatch.
ComplexAmplitude inner_product(const FockVector &a, const FockVector &b);

/// |<a|b>|^2. Throws ConfigError on dimension mismatch.
double fidelity(const FockVector &a, const FockVector &b);

/// Brute-force propagator for the mechanical mode while one photon is in the
/// cavity: H / hbar = omega_m c^dag c - g (c + c^dag), truncated at n_trunc.
///
/// The Hamiltonian is time independent, so it is diagonalized once at
/// construction and evolve() only applies the spectral phases.
class FockPropagator {
public:
  FockPropagator(const CouplingParams &params, int n_trunc = default_n_trunc);

  /// Evolves the mechanical ground state for time t. Throws TruncationError
  /// when the top retained level holds more than tol::truncation_leakage.
  FockVector evolve_ground_state(double t) const;

  int n_trunc() const { return n_trunc_; }

private:
  CouplingParams params_;
  int n_trunc_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd eigenvectors_;
};

/// One-shot wrapper around FockPropagator.
FockVector evolve_fock_oracle(const CouplingParams &params, double t,
                              int n_trunc = default_n_trunc);

} // namespace optomech
