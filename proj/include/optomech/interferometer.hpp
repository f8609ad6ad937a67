#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "optomech/quantum_core.hpp"

namespace optomech {

/// Optical modes that can hold the single photon.
enum class OpticalMode { CavityA, CavityB, Delay1, Delay2, ShortPath, DetectorD1, DetectorD2 };

std::string_view to_string(OpticalMode mode);

/// Mechanical number state |n>.
struct NumberState {
  int n = 0;
  bool operator==(const NumberState &) const = default;
};

/// A unit-norm mechanical ket: either a coherent state or a number state.
using MechanicalKet = std::variant<CoherentLabel, NumberState>;

/// <a|b> for any pair of mechanical kets.
ComplexAmplitude ket_overlap(const MechanicalKet &a, const MechanicalKet &b);

/// One weighted branch of a mechanical superposition.
struct MechanicalBranch {
  ComplexAmplitude weight;
  MechanicalKet ket;
};

/// Unnormalized superposition sum_k w_k |ket_k>.
using MechanicalSuperposition = std::vector<MechanicalBranch>;

double norm_squared(const MechanicalSuperposition &state);

/// Component <n|state>.
ComplexAmplitude number_component(const MechanicalSuperposition &state, int n);

struct JointTerm {
  OpticalMode mode;
  ComplexAmplitude weight;
  MechanicalKet mech;
};

/// Photon (single excitation over OpticalMode) entangled with the mechanical mode.
///
/// `coherence` multiplies every density-matrix cross term between terms with
/// distinct mechanical kets; it starts at 1 and is reduced by apply_decoherence.
struct JointState {
  std::vector<JointTerm> terms;
  bool normalized = false;
  double coherence = 1.0;

  /// Merges terms sharing the same (mode, mech) pair and drops zero weights.
  JointState canonical() const;
  /// <psi|psi> of the pure-state part.
  double norm_squared() const;
  /// Sum of |weight|^2 for terms in `mode`.
  double mode_weight(OpticalMode mode) const;
};

/// Throws DomainError when the state is flagged normalized but its norm drifts.
void check_normalization(const JointState &state);

/// 50/50 beam splitter on two mode amplitudes: (a, b) -> ((a + b)/sqrt2, (a - b)/sqrt2).
struct BeamSplitterOutput {
  ComplexAmplitude plus;
  ComplexAmplitude minus;
};
BeamSplitterOutput beam_splitter(ComplexAmplitude a, ComplexAmplitude b);

/// Inner Mach-Zehnder after the photon has stayed t_c in the cavities (exact form).
JointState state_after_interaction(const CouplingParams &params, double t_c);

struct PostselectionResult {
  MechanicalSuperposition branch; ///< unnormalized mechanical state on a dark-port click
  double p_success = 0.0;
};

/// Projects the optical part onto (|A> - |B>)/sqrt2.
PostselectionResult dark_port_postselect(const JointState &state);

/// Exact dark-port probability 1/2 (1 - e^{-|alpha|^2/2} cos phi) at residence time t_c.
double dark_port_probability(const CouplingParams &params, double t_c);

/// Early time-bin component has passed the inner interferometer; the late one waits in delay 1.
JointState timebin_state_after_early_pass(const CouplingParams &params, double t_c);

enum class DecoherenceForm { Exponential };

struct DecoherenceSpec {
  double tau_dec = 1.0; ///< 1/e coherence time, s
  DecoherenceForm form = DecoherenceForm::Exponential;

  void validate() const;
  /// Coherence factor surviving a delay tau_d.
  double coherence_after(double tau_d) const;
};

struct DecoheredState {
  JointState state;
  double coherence = 1.0;
};

DecoheredState apply_decoherence(const JointState &state, const DecoherenceSpec &spec,
                                 double tau_d);

/// Per-branch loss probabilities in the outer interferometer.
struct BranchLosses {
  double early = 0.0;
  double late = 0.0;

  void validate() const;
  double mean_survival() const { return 0.5 * ((1.0 - early) + (1.0 - late)); }
  /// 2 sqrt(s_e s_l) / (s_e + s_l).
  double balance() const;
};

struct FringeOutcome {
  double p_d1 = 0.0;
  double p_d2 = 0.0;
  double visibility = 0.0;
};

/// Detection probabilities at the end of the outer interferometer.
FringeOutcome final_fringe(const CouplingParams &params, double t_c, double phase,
                           double coherence, const BranchLosses &losses);

struct VisibilityPoint {
  double tau_d = 0.0;
  double visibility = 0.0;
};

/// Visibility versus delay with delay-independent losses. Grid must be non-empty and ascending.
std::vector<VisibilityPoint> sweep_visibility(const CouplingParams &params, double t_c,
                                              const DecoherenceSpec &spec,
                                              const std::vector<double> &tau_d_grid,
                                              const BranchLosses &losses);

} // namespace optomech
