#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "optomech/device.hpp"
#include "optomech/errors.hpp"
#include "optomech/montecarlo.hpp"

using namespace optomech;
using std::numbers::pi;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig c;
  for (const auto &d : reference_devices()) {
    if (d.params.name == "proposed-1") {
      c.device = d.params;
    }
  }
  c.injection_rate = derive(c.device).gamma_c / 10.0;
  c.phase_settings = uniform_phases(8);
  c.decoherence.tau_dec = 1.0;
  c.n_photons = 1000;
  c.seed = 42;
  return c;
}

void push_counts(std::vector<TrialRecord> &out, double phase, int n, Detector det) {
  for (int k = 0; k < n; ++k) {
    out.push_back({out.size(), 1e-6, det, phase, Origin::Signal});
  }
}

/// Offsets drawn from e^{-gamma t} sin^2(omega t / 2) by rejection.
std::vector<TrialRecord> analytic_arrivals(const CavityParams &p, double tau_d, std::size_t n,
                                           std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> env(p.gamma_c);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrialRecord> out;
  while (out.size() < n) {
    const double t = env(gen);
    const double s = std::sin(0.5 * p.omega_m * t);
    if (u(gen) < s * s) {
      out.push_back({out.size(), tau_d + t, Detector::D1, 0.0, Origin::Signal});
    }
  }
  return out;
}

} // namespace

TEST_CASE("configuration validation") {
  ExperimentConfig c = base_config();
  CHECK_NOTHROW(c.validate());
  c.injection_rate *= 1.01;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config();
  c.phase_settings.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config();
  c.n_photons = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config();
  c.detector_efficiency = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config();
  c.kappa_override = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("uniform_phases") {
  const auto p = uniform_phases(4);
  REQUIRE(p.size() == 4);
  CHECK(p[0] == 0.0);
  CHECK(p[2] == doctest::Approx(pi));
}

TEST_CASE("zero coupling yields no signal photons") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.0;
  c.n_photons = 100000;
  const RunResult r = simulate_run(c);
  CHECK(r.summary.success_count == 0);
  CHECK(r.summary.signal_count == 0);
  CHECK(r.records.empty());
  CHECK_FALSE(r.summary.visibility.has_value());
}

TEST_CASE("success fraction follows 9 kappa^2 / 20 at the sideband ratio 3") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.05;
  c.sideband_override = 3.0;
  c.injection_rate = c.derived().gamma_c / 10.0;
  c.n_photons = 400000;
  const RunResult r = simulate_run(c);
  const double p = 9.0 * 0.05 * 0.05 / 20.0;
  const double n = static_cast<double>(c.n_photons);
  const double sigma = std::sqrt(n * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(r.summary.success_count) - n * p) < 5.0 * sigma);
  // Lossless, unit efficiency: every success is detected.
  CHECK(r.summary.signal_count == r.summary.success_count);
}

TEST_CASE("signal arrivals never precede the delay") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.1;
  c.tau_d = 2e-5;
  c.n_photons = 50000;
  const RunResult r = simulate_run(c);
  REQUIRE_FALSE(r.records.empty());
  for (const auto &rec : r.records) {
    CHECK(rec.arrival_time >= c.tau_d);
  }
}

TEST_CASE("runs are deterministic in seed and thread count") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.1;
  c.dark_rate = 1e3;
  c.n_photons = 60000;
  const RunResult a = simulate_run(c);
  const RunResult b = simulate_run(c);
  CHECK(a.records == b.records);

  c.threads = 4;
  const RunResult t4 = simulate_run(c);
  CHECK(a.records == t4.records);
  CHECK(summary_to_json(a.summary) == summary_to_json(t4.summary));

  c.seed = 43;
  CHECK_FALSE(simulate_run(c).records == a.records);
}

TEST_CASE("dark counts") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.0;
  const double gamma = c.derived().gamma_c;
  c.dark_rate = 0.05 * gamma;
  c.tau_d = 1e-5;
  c.n_photons = 200000;
  const RunResult r = simulate_run(c);
  const double mean = 0.05 * static_cast<double>(c.n_photons);
  CHECK(std::abs(static_cast<double>(r.summary.dark_count) - mean) < 5.0 * std::sqrt(mean));
  CHECK(r.summary.signal_count == 0);
  std::size_t d1 = 0;
  for (const auto &rec : r.records) {
    CHECK(rec.origin == Origin::Dark);
    CHECK(rec.arrival_time >= c.tau_d);
    CHECK(rec.arrival_time <= c.tau_d + 1.0 / gamma);
    d1 += rec.detector == Detector::D1;
  }
  const double half = 0.5 * static_cast<double>(r.records.size());
  CHECK(std::abs(static_cast<double>(d1) - half) < 5.0 * std::sqrt(half / 2.0));
}

TEST_CASE("histograms conserve counts") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.1;
  c.dark_rate = 5e3;
  c.n_photons = 40000;
  const RunResult r = simulate_run(c);
  std::uint64_t total = 0;
  REQUIRE(r.summary.histograms.size() == c.phase_settings.size());
  for (const auto &h : r.summary.histograms) {
    total += h.total();
  }
  CHECK(total == r.summary.wall_events);
  CHECK(r.summary.wall_events == r.summary.signal_count + r.summary.dark_count);
}

TEST_CASE("estimate_visibility examples") {
  const auto phases = uniform_phases(8);
  std::vector<TrialRecord> exact;
  std::vector<TrialRecord> flat;
  for (double ph : phases) {
    push_counts(exact, ph, static_cast<int>(std::lround(1000.0 * (1.0 + std::cos(ph)))),
                Detector::D1);
    push_counts(flat, ph, 500, Detector::D1);
    push_counts(flat, ph, 300, Detector::D2);
  }
  const auto e = estimate_visibility(exact, phases);
  CHECK(e.visibility == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(e.phase_offset) < 1e-3);

  const auto f = estimate_visibility(flat, phases);
  CHECK(f.visibility < 1e-12);
  CHECK(f.standard_error > 0.0);

  // Poisson data with known contrast and offset.
  std::mt19937_64 gen(17);
  int hits = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<TrialRecord> recs;
    for (double ph : phases) {
      std::poisson_distribution<int> pd(2000.0 * (1.0 + 0.37 * std::cos(ph + 0.4)));
      push_counts(recs, ph, pd(gen), Detector::D1);
    }
    const auto v = estimate_visibility(recs, phases);
    CHECK(v.standard_error > 0.0);
    CHECK(std::abs(v.visibility - 0.37) < 5.0 * v.standard_error);
    CHECK(v.phase_offset == doctest::Approx(0.4).epsilon(0.2));
    hits += std::abs(v.visibility - 0.37) < v.standard_error;
  }
  // Roughly 68% inside one standard error.
  CHECK(hits >= 8);

  // Two settings fall back to the cosine-only model.
  const std::vector<double> two{0.0, pi};
  std::vector<TrialRecord> pair;
  push_counts(pair, 0.0, 150, Detector::D1);
  push_counts(pair, pi, 50, Detector::D1);
  CHECK(estimate_visibility(pair, two).visibility == doctest::Approx(0.5));
}

TEST_CASE("estimate_visibility rejects degenerate data") {
  const auto phases = uniform_phases(8);
  std::vector<TrialRecord> one;
  push_counts(one, phases[3], 100, Detector::D1);
  CHECK_THROWS_AS(estimate_visibility(one, phases), EstimationError);
  CHECK_THROWS_AS(estimate_visibility({}, phases), EstimationError);
  const std::vector<double> single{0.0};
  CHECK_THROWS_AS(estimate_visibility(one, single), EstimationError);
  const std::vector<double> repeated{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(estimate_visibility(one, repeated), EstimationError);
}

TEST_CASE("arrival_oscillation_check") {
  const CavityParams p{6.28e5, 3.0 * 6.28e5, 0.001};
  const double tau_d = 3e-5;

  const auto signal = analytic_arrivals(p, tau_d, 100000, 1);
  const OscillationResult hit = arrival_oscillation_check(signal, p, tau_d);
  CHECK(hit.detected);
  CHECK(hit.counts_used > 99000);

  // Pure exponential release: the statistic is ~Exp(1), so false alarms are rare.
  int false_alarms = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> e(p.gamma_c);
    std::vector<TrialRecord> recs;
    for (int k = 0; k < 2000; ++k) {
      recs.push_back({static_cast<std::uint64_t>(k), tau_d + e(gen), Detector::D1, 0.0,
                      Origin::Signal});
    }
    false_alarms += arrival_oscillation_check(recs, p, tau_d).detected;
  }
  CHECK(false_alarms <= 5);

  ExperimentConfig c = base_config();
  c.kappa_override = 0.0;
  c.dark_rate = 0.02 * c.derived().gamma_c;
  c.tau_d = tau_d;
  c.n_photons = 100000;
  const RunResult dark_only = simulate_run(c);
  REQUIRE(dark_only.records.size() >= 100);
  CHECK_FALSE(arrival_oscillation_check(dark_only.records, c.derived().cavity(), tau_d).detected);

  const std::vector<TrialRecord> few(signal.begin(), signal.begin() + 99);
  CHECK_THROWS_AS(arrival_oscillation_check(few, p, tau_d), EstimationError);
}

TEST_CASE("data_collection_estimate") {
  ExperimentConfig c = base_config();
  const DerivedDevice d = c.derived();
  const CollectionEstimate e = data_collection_estimate(c, 1e4);
  CHECK(e.attainable);
  CHECK(e.seconds == doctest::Approx(1e4 / (d.gamma_c / 10.0 * d.p_success)));
  CHECK(e.seconds > 1e4);
  CHECK(e.seconds < 1e6);
  CHECK(e.dominating_factor == "success_probability");

  c.delay_line = DelayLineSpec::fiber();
  c.tau_d = 100e-6;
  const CollectionEstimate lossy = data_collection_estimate(c, 1e4);
  CHECK(lossy.delay_survival == doctest::Approx(0.390).epsilon(0.005));
  CHECK(lossy.seconds == doctest::Approx(e.seconds / lossy.delay_survival));

  c = base_config();
  c.kappa_override = 0.0;
  const CollectionEstimate never = data_collection_estimate(c, 1e4);
  CHECK_FALSE(never.attainable);
  CHECK(std::isinf(never.seconds));
  CHECK_THROWS_AS(data_collection_estimate(base_config(), 0.0), ConfigError);
}

TEST_CASE("record CSV round trip") {
  ExperimentConfig c = base_config();
  c.kappa_override = 0.1;
  c.dark_rate = 2e3;
  c.n_photons = 20000;
  const RunResult r = simulate_run(c);
  REQUIRE_FALSE(r.records.empty());
  std::stringstream ss;
  write_records_csv(ss, r.records);
  const auto back = read_records_csv(ss);
  CHECK(back == r.records);

  std::istringstream bad_header("a,b,c\n");
  CHECK_THROWS_AS(read_records_csv(bad_header), ConfigError);
  std::istringstream bad_row("trial_index,arrival_time_s,detector,phase_rad,origin\n1,0.5,D3,0,signal\n");
  CHECK_THROWS_AS(read_records_csv(bad_row), ConfigError);
}
