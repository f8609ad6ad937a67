#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optomech/arrival.hpp"
#include "optomech/device.hpp"
#include "optomech/interferometer.hpp"

namespace optomech {

/// Full description of a simulated experimental run.
struct ExperimentConfig {
  DeviceParams device;
  std::optional<double> kappa_override;
  std::optional<double> sideband_override;
  DecoherenceSpec decoherence;
  double tau_d = 0.0; ///< s
  DelayLineSpec delay_line = DelayLineSpec::lossless();
  std::vector<double> phase_settings;
  double injection_rate = 0.0;       ///< photons/s; <= gamma_c / 10
  double dark_rate = 0.0;            ///< 1/s, both detectors combined
  double detector_jitter = 1e-7;     ///< s, Gaussian sigma
  double detector_efficiency = 1.0;
  std::uint64_t n_photons = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;   ///< 0 = hardware concurrency
  double bin_width = 0.0; ///< 0 = twenty bins per mechanical period

  DerivedDevice derived() const;
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// `count` phases evenly spaced over [0, 2 pi).
std::vector<double> uniform_phases(std::size_t count);

enum class Detector { D1, D2 };
enum class Origin { Signal, Dark };

std::string_view to_string(Detector d);
std::string_view to_string(Origin o);

struct TrialRecord {
  std::uint64_t trial_index = 0;
  double arrival_time = 0.0; ///< s after injection, tau_d + t_c for signal photons
  Detector detector = Detector::D1;
  double phase = 0.0;
  Origin origin = Origin::Signal;

  bool operator==(const TrialRecord &) const = default;
};

struct VisibilityEstimate {
  double visibility = 0.0;
  double standard_error = 0.0;
  double phase_offset = 0.0;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t n_photons = 0;
  std::vector<double> phase_settings;
  std::vector<ArrivalHistogram> histograms; ///< one per phase setting
  std::uint64_t success_count = 0;          ///< dark-port postselections
  std::uint64_t signal_count = 0;           ///< detected signal photons
  std::uint64_t dark_count = 0;
  std::uint64_t wall_events = 0;            ///< all detector clicks
  double coherence = 1.0;
  std::optional<VisibilityEstimate> visibility;
};

struct RunResult {
  RunSummary summary;
  std::vector<TrialRecord> records; ///< ordered by trial index
};

/// Simulates config.n_photons injected photons. Output is a deterministic
/// function of the config, independent of config.threads.
RunResult simulate_run(const ExperimentConfig &config);

/// Least-squares fit of D1 counts versus phase to A (1 + V cos(phase + phi0)).
/// Needs at least two distinct phase settings with counts; throws EstimationError
/// when the data cannot constrain the fit.
VisibilityEstimate estimate_visibility(std::span<const TrialRecord> records,
                                       std::span<const double> phase_settings);

struct OscillationResult {
  double statistic = 0.0; ///< power at omega_m relative to the null background, mean ~1 without oscillation
  bool detected = false;
  std::size_t counts_used = 0;
};

inline constexpr double default_oscillation_threshold = 5.0;

/// Tests binned arrival offsets (t - tau_d) for a component at omega_m riding on
/// the cavity envelope. The background model is an exponential release
/// envelope plus a flat dark-count window of width 1/gamma_c; the statistic is
/// half the chi-square improvement from adding envelope-modulated cos/sin terms
/// at omega_m. Throws EstimationError with fewer than 100 records.
OscillationResult arrival_oscillation_check(std::span<const TrialRecord> records,
                                            const CavityParams &cavity, double tau_d,
                                            double threshold = default_oscillation_threshold);

struct CollectionEstimate {
  double seconds = 0.0; ///< infinity when unattainable
  bool attainable = true;
  double success_probability = 0.0;
  double delay_survival = 1.0;
  double detector_efficiency = 1.0;
  std::string dominating_factor;
};

/// Wall time to accumulate `target` detected postselections.
CollectionEstimate data_collection_estimate(const ExperimentConfig &config, double target = 1e4);

void write_records_csv(std::ostream &out, std::span<const TrialRecord> records);
std::vector<TrialRecord> read_records_csv(std::istream &in);
std::string summary_to_json(const RunSummary &summary);

} // namespace optomech
