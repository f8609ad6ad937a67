#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "optomech/errors.hpp"
#include "optomech/interferometer.hpp"
#include "oracles.hpp"

using namespace optomech;
using std::numbers::pi;

namespace {
constexpr double omega = 2.0 * pi * 4.5e3;
double at_angle(double theta) { return theta / omega; }
} // namespace

TEST_CASE("state_after_interaction") {
  SUBCASE("no coupling reproduces the input superposition") {
    const JointState s = state_after_interaction({0.0, omega}, 3.3e-4);
    REQUIRE(s.terms.size() == 2);
    for (const auto &t : s.terms) {
      CHECK(std::get<CoherentLabel>(t.mech) == CoherentLabel::vacuum());
      CHECK(std::abs(t.weight) == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    CHECK(s.normalized);
    CHECK_NOTHROW(check_normalization(s));
  }
  SUBCASE("half period carries alpha = 2 kappa") {
    const JointState s = state_after_interaction({0.005, omega}, at_angle(pi));
    const auto &a = std::get<CoherentLabel>(s.terms[0].mech);
    CHECK(s.terms[0].mode == OpticalMode::CavityA);
    CHECK(a.alpha.real() == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(s.norm_squared() == doctest::Approx(1.0).epsilon(1e-14));

    // One-phonon amplitude of the cavity-A term.
    MechanicalSuperposition arm{{s.terms[0].weight, s.terms[0].mech}};
    const ComplexAmplitude expected =
        std::polar(1.0, a.phase) * std::exp(-0.5 * 0.01 * 0.01) * 0.01 / std::sqrt(2.0);
    const auto coeffs = oracle::coherent_coefficients(a.alpha, a.phase, 3);
    CHECK(std::abs(number_component(arm, 1) - expected) < 1e-15);
    CHECK(std::abs(number_component(arm, 1) - coeffs[1] / std::sqrt(2.0)) < 1e-15);
  }
  CHECK_THROWS_AS(state_after_interaction({0.5, omega}, 1e-4), DomainError);
  CHECK_THROWS_AS(state_after_interaction({0.01, omega}, -1e-4), DomainError);
}

TEST_CASE("dark_port_postselect examples") {
  SUBCASE("perfect dark port without coupling") {
    const auto r = dark_port_postselect(state_after_interaction({0.0, omega}, 1e-4));
    CHECK(r.p_success == 0.0);
  }
  SUBCASE("weak coupling approaches |alpha|^2 / 4") {
    const auto r = dark_port_postselect(state_after_interaction({0.005, omega}, at_angle(pi)));
    CHECK(r.p_success == doctest::Approx(2.5e-5).epsilon(1e-4));
    CHECK(std::abs(r.p_success - 2.5e-5) / 2.5e-5 < 1e-4);
    CHECK(norm_squared(r.branch) == doctest::Approx(r.p_success).epsilon(1e-6));
  }
  SUBCASE("moderate coupling against the beam-splitter matrix oracle") {
    const CouplingParams p{0.2, omega};
    const double t = at_angle(pi);
    const auto r = dark_port_postselect(state_after_interaction(p, t));
    const double closed = 0.5 * (1.0 - std::exp(-0.08) * std::cos(kerr_phase_at(p, t)));
    CHECK(r.p_success == doctest::Approx(closed).epsilon(1e-13));
    CHECK(std::abs(r.p_success - oracle::dark_port_matrix(p, t)) < 1e-10);
    CHECK(std::abs(dark_port_probability(p, t) - closed) < 1e-15);
  }
  SUBCASE("postselected branch is (e^{i phi}|alpha> - |0>)/2") {
    const CouplingParams p{0.05, omega};
    const double t = at_angle(1.3);
    const auto r = dark_port_postselect(state_after_interaction(p, t));
    const CoherentLabel lab = mechanical_state_at(p, t);
    const auto c = oracle::coherent_coefficients(lab.alpha, lab.phase, 3);
    CHECK(std::abs(number_component(r.branch, 0) - 0.5 * (c[0] - 1.0)) < 1e-15);
    CHECK(std::abs(number_component(r.branch, 1) - 0.5 * c[1]) < 1e-15);
  }
  SUBCASE("malformed states are rejected") {
    JointState s = state_after_interaction({0.01, omega}, 1e-4);
    s.terms.pop_back();
    CHECK_THROWS_AS(dark_port_postselect(s), ConfigError);
    JointState three = state_after_interaction({0.01, omega}, 1e-4);
    three.terms.push_back({OpticalMode::Delay1, 0.1, NumberState{0}});
    CHECK_THROWS_AS(dark_port_postselect(three), ConfigError);
  }
}

TEST_CASE("dark-port closed form matches the matrix oracle on random cases") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> k(0.0, 0.3);
  std::uniform_real_distribution<double> th(0.0, 4 * pi);
  for (int i = 0; i < 40; ++i) {
    const CouplingParams p{k(gen), omega};
    const double t = at_angle(th(gen));
    const double via_state = dark_port_postselect(state_after_interaction(p, t)).p_success;
    const double oracle_p = oracle::dark_port_matrix(p, t);
    CHECK(std::abs(via_state - oracle_p) < 1e-10);
    CHECK(std::abs(dark_port_probability(p, t) - oracle_p) < 1e-10);
  }
}

TEST_CASE("leading-order error shrinks quadratically in kappa") {
  const double theta = 2.2;
  double prev = 0.0;
  for (double kappa : {1e-2, 1e-3, 1e-4}) {
    const CouplingParams p{kappa, omega};
    const double t = at_angle(theta);
    const double exact = dark_port_probability(p, t);
    const double approx = std::norm(displacement_at(p, t)) / 4.0;
    const double rel = std::abs(exact - approx) / exact;
    if (prev > 0.0) {
      CHECK(rel <= prev / 100.0 * 1.01);
    }
    prev = rel;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("beam splitter is unitary") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const ComplexAmplitude a{n(gen), n(gen)}, b{n(gen), n(gen)};
    const auto o = beam_splitter(a, b);
    CHECK(std::norm(o.plus) + std::norm(o.minus) ==
          doctest::Approx(std::norm(a) + std::norm(b)).epsilon(1e-12));
  }
}

TEST_CASE("timebin_state_after_early_pass") {
  SUBCASE("no coupling leaves only the delay-1 term") {
    const JointState s = timebin_state_after_early_pass({0.0, omega}, 1e-4);
    REQUIRE(s.terms.size() == 1);
    CHECK(s.terms[0].mode == OpticalMode::Delay1);
  }
  SUBCASE("small-alpha weight") {
    const JointState s = timebin_state_after_early_pass({0.005, omega}, at_angle(pi));
    REQUIRE(s.terms.size() == 2);
    CHECK(s.terms[1].mode == OpticalMode::Delay2);
    CHECK(std::get<NumberState>(s.terms[1].mech).n == 1);
    CHECK(std::abs(s.terms[1].weight) == doctest::Approx(3.54e-3).epsilon(1e-3));
  }
  SUBCASE("weight ratio equals the postselected one-phonon component") {
    const CouplingParams p{0.04, omega};
    const double t = at_angle(2.0);
    const JointState s = timebin_state_after_early_pass(p, t);
    const auto post = dark_port_postselect(state_after_interaction(p, t));
    const ComplexAmplitude one = number_component(post.branch, 1);
    const double ratio = std::abs(s.terms[1].weight / s.terms[0].weight);
    const double alpha = std::abs(displacement_at(p, t));
    CHECK(ratio == doctest::Approx(std::abs(one)).epsilon(1e-13));
    CHECK(ratio == doctest::Approx(0.5 * alpha * std::exp(-0.5 * alpha * alpha)).epsilon(1e-13));
  }
}

TEST_CASE("canonical merges duplicate terms") {
  JointState s;
  s.terms = {{OpticalMode::Delay1, 0.5, NumberState{0}},
             {OpticalMode::Delay1, 0.25, NumberState{0}},
             {OpticalMode::Delay2, 0.3, NumberState{0}},
             {OpticalMode::Delay2, -0.3, NumberState{1}},
             {OpticalMode::Delay2, 0.3, NumberState{1}}};
  const JointState c = s.canonical();
  REQUIRE(c.terms.size() == 2);
  CHECK(c.terms[0].weight == ComplexAmplitude(0.75));
  CHECK(c.terms[1].mode == OpticalMode::Delay2);
}

TEST_CASE("apply_decoherence") {
  const JointState s = timebin_state_after_early_pass({0.01, omega}, at_angle(pi));
  const DecoherenceSpec spec{15e-3};
  const auto zero = apply_decoherence(s, spec, 0.0);
  CHECK(zero.coherence == 1.0);
  CHECK(zero.state.coherence == 1.0);
  CHECK(zero.state.mode_weight(OpticalMode::Delay2) == s.mode_weight(OpticalMode::Delay2));

  const auto one = apply_decoherence(s, spec, 15e-3);
  CHECK(one.coherence == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(one.coherence == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(one.state.mode_weight(OpticalMode::Delay1) == s.mode_weight(OpticalMode::Delay1));

  CHECK(apply_decoherence(s, {150e-6}, 150e-6).coherence == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(apply_decoherence(s, spec, -1.0), DomainError);
  CHECK_THROWS_AS(apply_decoherence(s, {0.0}, 1.0), DomainError);
}

TEST_CASE("final_fringe") {
  const CouplingParams p{0.005, omega};
  const double t = at_angle(pi);
  SUBCASE("perfect visibility when coherent and balanced") {
    const auto f0 = final_fringe(p, t, 0.0, 1.0, {0.1, 0.1});
    const auto fpi = final_fringe(p, t, pi, 1.0, {0.1, 0.1});
    CHECK((f0.p_d1 - fpi.p_d1) / (f0.p_d1 + fpi.p_d1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f0.visibility == doctest::Approx(1.0));
    CHECK(f0.p_d1 + f0.p_d2 <= 1.0);
  }
  SUBCASE("fully decohered") {
    for (double ph : {0.0, 0.7, pi}) {
      const auto f = final_fringe(p, t, ph, 0.0, {});
      CHECK(f.p_d1 == doctest::Approx(f.p_d2).epsilon(1e-15));
      CHECK(f.visibility == 0.0);
    }
  }
  SUBCASE("amplitude imbalance") {
    const BranchLosses losses{0.0, 0.75};
    CHECK(losses.balance() == doctest::Approx(0.8).epsilon(1e-15));
    const auto f0 = final_fringe(p, t, 0.0, 1.0, losses);
    const auto fpi = final_fringe(p, t, pi, 1.0, losses);
    CHECK((f0.p_d1 - fpi.p_d1) / (f0.p_d1 + fpi.p_d1) == doctest::Approx(0.8).epsilon(1e-13));

    // Explicit 2x2 beam-splitter density-matrix check, scaled by the dark-port weight.
    const double w = dark_port_probability(p, t);
    for (double ph : {0.0, 0.4, 2.0, pi}) {
      const auto ref = oracle::two_path_fringe(1.0, 0.25, 0.6, ph);
      const auto f = final_fringe(p, t, ph, 0.6, losses);
      CHECK(f.p_d1 == doctest::Approx(w * ref.p_d1).epsilon(1e-13));
      CHECK(f.p_d2 == doctest::Approx(w * ref.p_d2).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(final_fringe(p, t, 0.0, 1.1, {}), DomainError);
  CHECK_THROWS_AS(final_fringe(p, t, 0.0, 0.5, {1.0, 0.0}), DomainError);
}

TEST_CASE("balance factor is at most one, equal only for equal survival") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 0.99);
  for (int i = 0; i < 200; ++i) {
    const BranchLosses l{u(gen), u(gen)};
    CHECK(l.balance() <= 1.0);
    if (l.early != l.late) {
      CHECK(l.balance() < 1.0);
    }
  }
  CHECK(BranchLosses{0.3, 0.3}.balance() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("visibility does not depend on arrival time") {
  const CouplingParams p{0.003, omega};
  const DecoherenceSpec spec{1e-3};
  const BranchLosses losses{0.2, 0.35};
  const double ref =
      sweep_visibility(p, at_angle(0.9), spec, {4e-4}, losses).front().visibility;
  for (double th : {0.3, 1.0, 2.5, 3.1, 5.0, 11.0}) {
    const double v = sweep_visibility(p, at_angle(th), spec, {4e-4}, losses).front().visibility;
    CHECK(std::abs(v - ref) < 1e-12);
  }
}

TEST_CASE("sweep_visibility") {
  const CouplingParams p{0.005, omega};
  const double t = at_angle(pi);
  const auto lossless = sweep_visibility(p, t, {15e-3}, {0.0, 15e-3, 30e-3}, {});
  CHECK(lossless[0].visibility == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lossless[1].visibility == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(lossless[2].visibility / lossless[1].visibility ==
        doctest::Approx(lossless[1].visibility / lossless[0].visibility).epsilon(1e-12));

  const auto eid = sweep_visibility(p, t, {150e-6}, {150e-6}, {});
  CHECK(eid[0].visibility == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));

  std::vector<double> grid;
  for (int k = 0; k < 30; ++k) {
    grid.push_back(1e-4 * k);
  }
  const auto curve = sweep_visibility(p, t, {7e-4}, grid, {0.1, 0.4});
  for (std::size_t k = 1; k < curve.size(); ++k) {
    CHECK(curve[k].visibility <= curve[k - 1].visibility);
  }
  CHECK_THROWS_AS(sweep_visibility(p, t, {1e-3}, {}, {}), DomainError);
  CHECK_THROWS_AS(sweep_visibility(p, t, {1e-3}, {2e-3, 1e-3}, {}), DomainError);
}
