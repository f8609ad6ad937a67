#pragma once

#include <numbers>

namespace optomech {

/// CODATA values, SI units.
namespace phys {
inline constexpr double hbar = 1.054571817e-34;     ///< J s
inline constexpr double k_boltzmann = 1.380649e-23; ///< J / K
inline constexpr double c_light = 299792458.0;      ///< m / s
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace phys

/// Numerical tolerances shared by the state algebra and its oracle.
namespace tol {
/// Minimum fidelity between the Fock-space oracle and the analytic coherent state.
inline constexpr double oracle_fidelity_floor = 1.0 - 1e-8;
/// Allowed drift of the state-vector norm under truncated evolution.
inline constexpr double norm_drift = 1e-10;
/// Population allowed in the highest retained number state.
inline constexpr double truncation_leakage = 1e-10;
/// Normalization slack on a JointState flagged as normalized.
inline constexpr double joint_norm = 1e-10;
/// Weak-coupling guard on the coherent displacement |alpha|.
inline constexpr double weak_displacement_limit = 1.0;
/// Guard on kappa for the inner-interferometer operations.
inline constexpr double weak_kappa_limit = 0.5;
} // namespace tol

/// Default number-basis truncation for the mechanical mode.
inline constexpr int default_n_trunc = 16;

} // namespace optomech
