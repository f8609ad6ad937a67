#include "optomech/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>

#include "optomech/errors.hpp"

namespace optomech {

namespace {

constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

// <n|label>
ComplexAmplitude number_coherent(int n, const CoherentLabel &label) {
  ComplexAmplitude c = std::polar(std::exp(-0.5 * std::norm(label.alpha)), label.phase);
  for (int k = 1; k <= n; ++k) {
    c *= label.alpha / std::sqrt(static_cast<double>(k));
  }
  return c;
}

bool same_ket(const MechanicalKet &a, const MechanicalKet &b) { return a == b; }

// 1 - Re(e^{i psi} r) for r = |<b|a>| written to avoid cancellation when the
// overlap is close to one.
double one_minus_real_overlap(const MechanicalKet &a, const MechanicalKet &b,
                              double extra_phase) {
  const auto *ca = std::get_if<CoherentLabel>(&a);
  const auto *cb = std::get_if<CoherentLabel>(&b);
  if (ca != nullptr && cb != nullptr) {
    // ln <b|a> = i(phase_a - phase_b) - |a|^2/2 - |b|^2/2 + conj(b) a
    const ComplexAmplitude log_ov = ComplexAmplitude(0.0, ca->phase - cb->phase) -
                                    0.5 * std::norm(ca->alpha) - 0.5 * std::norm(cb->alpha) +
                                    std::conj(cb->alpha) * ca->alpha;
    const double log_r = log_ov.real();
    const double psi = log_ov.imag() + extra_phase;
    const double s = std::sin(0.5 * psi);
    return -std::expm1(log_r) + std::exp(log_r) * 2.0 * s * s;
  }
  const ComplexAmplitude ov = ket_overlap(b, a) * std::polar(1.0, extra_phase);
  return 1.0 - ov.real();
}

} // namespace

std::string_view to_string(OpticalMode mode) {
  switch (mode) {
  case OpticalMode::CavityA:
    return "cavity-A";
  case OpticalMode::CavityB:
    return "cavity-B";
  case OpticalMode::Delay1:
    return "delay-1";
  case OpticalMode::Delay2:
    return "delay-2";
  case OpticalMode::ShortPath:
    return "short-path";
  case OpticalMode::DetectorD1:
    return "detector-D1";
  case OpticalMode::DetectorD2:
    return "detector-D2";
  }
  return "unknown";
}

ComplexAmplitude ket_overlap(const MechanicalKet &a, const MechanicalKet &b) {
  return std::visit(
      [](const auto &x, const auto &y) -> ComplexAmplitude {
        using X = std::decay_t<decltype(x)>;
        using Y = std::decay_t<decltype(y)>;
        if constexpr (std::is_same_v<X, CoherentLabel> && std::is_same_v<Y, CoherentLabel>) {
          return coherent_overlap(y, x);
        } else if constexpr (std::is_same_v<X, NumberState> && std::is_same_v<Y, CoherentLabel>) {
          return number_coherent(x.n, y);
        } else if constexpr (std::is_same_v<X, CoherentLabel> && std::is_same_v<Y, NumberState>) {
          return std::conj(number_coherent(y.n, x));
        } else {
          return x.n == y.n ? 1.0 : 0.0;
        }
      },
      a, b);
}

double norm_squared(const MechanicalSuperposition &state) {
  ComplexAmplitude s{0.0, 0.0};
  for (const auto &bi : state) {
    for (const auto &bj : state) {
      s += std::conj(bi.weight) * bj.weight * ket_overlap(bi.ket, bj.ket);
    }
  }
  return std::max(0.0, s.real());
}

ComplexAmplitude number_component(const MechanicalSuperposition &state, int n) {
  const MechanicalKet fock = NumberState{n};
  ComplexAmplitude s{0.0, 0.0};
  for (const auto &b : state) {
    s += b.weight * ket_overlap(fock, b.ket);
  }
  return s;
}

JointState JointState::canonical() const {
  JointState out;
  out.normalized = normalized;
  out.coherence = coherence;
  for (const auto &term : terms) {
    auto it = std::find_if(out.terms.begin(), out.terms.end(), [&](const JointTerm &t) {
      return t.mode == term.mode && same_ket(t.mech, term.mech);
    });
    if (it == out.terms.end()) {
      out.terms.push_back(term);
    } else {
      it->weight += term.weight;
    }
  }
  std::erase_if(out.terms, [](const JointTerm &t) { return t.weight == 0.0; });
  return out;
}

double JointState::norm_squared() const {
  ComplexAmplitude s{0.0, 0.0};
  for (const auto &ti : terms) {
    for (const auto &tj : terms) {
      if (ti.mode == tj.mode) {
        s += std::conj(ti.weight) * tj.weight * ket_overlap(ti.mech, tj.mech);
      }
    }
  }
  return std::max(0.0, s.real());
}

double JointState::mode_weight(OpticalMode mode) const {
  double s = 0.0;
  for (const auto &t : terms) {
    if (t.mode == mode) {
      s += std::norm(t.weight);
    }
  }
  return s;
}

void check_normalization(const JointState &state) {
  if (state.normalized && std::abs(state.norm_squared() - 1.0) > tol::joint_norm) {
    throw DomainError("joint state flagged normalized has norm " +
                      std::to_string(state.norm_squared()));
  }
}

BeamSplitterOutput beam_splitter(ComplexAmplitude a, ComplexAmplitude b) {
  return {(a + b) * inv_sqrt2, (a - b) * inv_sqrt2};
}

JointState state_after_interaction(const CouplingParams &params, double t_c) {
  params.validate();
  if (!(params.kappa < tol::weak_kappa_limit)) {
    throw DomainError("kappa outside the weak-coupling guard");
  }
  JointState s;
  s.terms.push_back({OpticalMode::CavityA, inv_sqrt2, mechanical_state_at(params, t_c)});
  s.terms.push_back({OpticalMode::CavityB, inv_sqrt2, CoherentLabel::vacuum()});
  s.normalized = true;
  return s;
}

PostselectionResult dark_port_postselect(const JointState &state) {
  const JointTerm *arm_a = nullptr;
  const JointTerm *arm_b = nullptr;
  for (const auto &t : state.terms) {
    if (t.mode == OpticalMode::CavityA && arm_a == nullptr) {
      arm_a = &t;
    } else if (t.mode == OpticalMode::CavityB && arm_b == nullptr) {
      arm_b = &t;
    } else {
      throw ConfigError("dark-port postselection expects one cavity-A and one cavity-B term");
    }
  }
  if (arm_a == nullptr || arm_b == nullptr) {
    throw ConfigError("dark-port postselection expects one cavity-A and one cavity-B term");
  }
  for (const auto *arm : {arm_a, arm_b}) {
    if (const auto *c = std::get_if<CoherentLabel>(&arm->mech)) {
      require_weak_displacement(*c);
    }
  }

  PostselectionResult r;
  r.branch = {{arm_a->weight * inv_sqrt2, arm_a->mech}, {-arm_b->weight * inv_sqrt2, arm_b->mech}};

  // |w_a|^2/2 + |w_b|^2/2 - Re(conj(w_b) w_a <b|a>)
  const double wa = std::abs(arm_a->weight);
  const double wb = std::abs(arm_b->weight);
  const double rel = std::arg(arm_a->weight) - std::arg(arm_b->weight);
  const double diff = wa - wb;
  r.p_success = 0.5 * diff * diff + wa * wb * one_minus_real_overlap(arm_a->mech, arm_b->mech, rel);
  return r;
}

double dark_port_probability(const CouplingParams &params, double t_c) {
  const CoherentLabel label = mechanical_state_at(params, t_c);
  const double half_alpha2 = 0.5 * std::norm(label.alpha);
  const double s = std::sin(0.5 * label.phase);
  // 1 - e^{-x} cos phi = (1 - e^{-x}) + e^{-x} 2 sin^2(phi/2)
  return 0.5 * (-std::expm1(-half_alpha2) + std::exp(-half_alpha2) * 2.0 * s * s);
}

JointState timebin_state_after_early_pass(const CouplingParams &params, double t_c) {
  const CoherentLabel label = mechanical_state_at(params, t_c);
  const ComplexAmplitude one_phonon =
      0.5 * label.alpha * std::polar(std::exp(-0.5 * std::norm(label.alpha)), label.phase);

  JointState s;
  s.terms.push_back({OpticalMode::Delay1, inv_sqrt2, NumberState{0}});
  s.terms.push_back({OpticalMode::Delay2, one_phonon * inv_sqrt2, NumberState{1}});
  s.normalized = false;
  return s.canonical();
}

void DecoherenceSpec::validate() const {
  if (!(tau_dec > 0.0)) {
    throw DomainError("tau_dec must be positive");
  }
}

double DecoherenceSpec::coherence_after(double tau_d) const {
  validate();
  if (!(tau_d >= 0.0)) {
    throw DomainError("delay must be non-negative");
  }
  switch (form) {
  case DecoherenceForm::Exponential:
    return std::exp(-tau_d / tau_dec);
  }
  return 1.0;
}

DecoheredState apply_decoherence(const JointState &state, const DecoherenceSpec &spec,
                                 double tau_d) {
  const double d = spec.coherence_after(tau_d);
  DecoheredState out{state, d};
  out.state.coherence *= d;
  return out;
}

void BranchLosses::validate() const {
  for (double loss : {early, late}) {
    if (!(loss >= 0.0 && loss < 1.0)) {
      throw DomainError("branch loss must lie in [0, 1)");
    }
  }
}

double BranchLosses::balance() const {
  const double se = 1.0 - early;
  const double sl = 1.0 - late;
  return 2.0 * std::sqrt(se * sl) / (se + sl);
}

FringeOutcome final_fringe(const CouplingParams &params, double t_c, double phase,
                           double coherence, const BranchLosses &losses) {
  if (!(coherence >= 0.0 && coherence <= 1.0)) {
    throw DomainError("coherence must lie in [0, 1]");
  }
  losses.validate();
  const double w = dark_port_probability(params, t_c) * losses.mean_survival();
  const double contrast = losses.balance() * coherence;
  FringeOutcome f;
  f.p_d1 = 0.5 * w * (1.0 + contrast * std::cos(phase));
  f.p_d2 = 0.5 * w * (1.0 - contrast * std::cos(phase));
  f.visibility = contrast;
  return f;
}

std::vector<VisibilityPoint> sweep_visibility(const CouplingParams &params, double t_c,
                                              const DecoherenceSpec &spec,
                                              const std::vector<double> &tau_d_grid,
                                              const BranchLosses &losses) {
  if (tau_d_grid.empty()) {
    throw DomainError("delay grid is empty");
  }
  if (!std::is_sorted(tau_d_grid.begin(), tau_d_grid.end())) {
    throw DomainError("delay grid must be ascending");
  }
  std::vector<VisibilityPoint> out;
  out.reserve(tau_d_grid.size());
  for (double tau_d : tau_d_grid) {
    const double d = spec.coherence_after(tau_d);
    const double hi = final_fringe(params, t_c, 0.0, d, losses).p_d1;
    const double lo = final_fringe(params, t_c, std::numbers::pi, d, losses).p_d1;
    const double v = (hi + lo) > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
    out.push_back({tau_d, v});
  }
  return out;
}

} // namespace optomech
