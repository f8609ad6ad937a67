#include "optomech/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"
#include "optomech/rng.hpp"

namespace optomech {

namespace {

struct ChunkResult {
  std::vector<TrialRecord> records;
  std::uint64_t successes = 0;
};

struct TrialPhysics {
  CouplingParams coupling;
  double gamma_c = 1.0;
  double tau_d = 0.0;
  double mean_survival = 1.0;
  double contrast = 1.0; ///< balance * coherence
  double efficiency = 1.0;
  double jitter = 0.0;
  double dark_mean = 0.0; ///< expected dark counts per detection window
  std::span<const double> phases;
  std::uint64_t seed = 0;
};

void run_chunk(const TrialPhysics &phys_in, std::uint64_t begin, std::uint64_t end,
               ChunkResult &out) {
  const TrialPhysics &ph = phys_in;
  std::exponential_distribution<double> residence(ph.gamma_c);
  std::poisson_distribution<int> dark(ph.dark_mean > 0.0 ? ph.dark_mean : 1.0);
  const double window = 1.0 / ph.gamma_c;

  for (std::uint64_t i = begin; i < end; ++i) {
    CounterRng rng(ph.seed, i);
    const double phase = ph.phases[i % ph.phases.size()];

    residence.reset();
    const double t_c = residence(rng);
    const double p_dark_port = dark_port_probability(ph.coupling, t_c);
    if (rng.uniform() < p_dark_port) {
      ++out.successes;
      if (rng.uniform() < ph.mean_survival && rng.uniform() < ph.efficiency) {
        const double p_d1 = 0.5 * (1.0 + ph.contrast * std::cos(phase));
        const Detector det = rng.uniform() < p_d1 ? Detector::D1 : Detector::D2;
        double offset = t_c;
        if (ph.jitter > 0.0) {
          std::normal_distribution<double> jitter(0.0, ph.jitter);
          offset = std::abs(t_c + jitter(rng));
        }
        out.records.push_back({i, ph.tau_d + offset, det, phase, Origin::Signal});
      }
    }

    if (ph.dark_mean > 0.0) {
      dark.reset();
      const int n_dark = dark(rng);
      for (int k = 0; k < n_dark; ++k) {
        const double t = ph.tau_d + window * rng.uniform();
        const Detector det = rng.uniform() < 0.5 ? Detector::D1 : Detector::D2;
        out.records.push_back({i, t, det, phase, Origin::Dark});
      }
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

DerivedDevice ExperimentConfig::derived() const {
  return with_overrides(derive(device), kappa_override, sideband_override);
}

void ExperimentConfig::validate() const {
  const DerivedDevice d = derived();
  if (n_photons < 1) {
    throw ConfigError("n_photons must be at least 1");
  }
  if (phase_settings.empty()) {
    throw ConfigError("at least one phase setting is required");
  }
  if (!(injection_rate > 0.0)) {
    throw ConfigError("injection rate must be positive");
  }
  if (injection_rate > d.gamma_c / 10.0 * (1.0 + 1e-12)) {
    throw ConfigError("injection rate exceeds gamma_c / 10 (one photon at a time)");
  }
  if (!(dark_rate >= 0.0)) {
    throw ConfigError("dark rate must be non-negative");
  }
  if (!(detector_jitter >= 0.0)) {
    throw ConfigError("detector jitter must be non-negative");
  }
  if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0)) {
    throw ConfigError("detector efficiency must lie in (0, 1]");
  }
  if (!(tau_d >= 0.0)) {
    throw ConfigError("tau_d must be non-negative");
  }
  if (!(bin_width >= 0.0)) {
    throw ConfigError("bin width must be non-negative");
  }
  if (d.kappa >= tol::weak_kappa_limit) {
    throw ConfigError("kappa outside the weak-coupling guard");
  }
  decoherence.validate();
  delay_line.validate();
}

std::vector<double> uniform_phases(std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = phys::two_pi * static_cast<double>(k) / static_cast<double>(count);
  }
  return out;
}

std::string_view to_string(Detector d) { return d == Detector::D1 ? "D1" : "D2"; }
std::string_view to_string(Origin o) { return o == Origin::Signal ? "signal" : "dark"; }

RunResult simulate_run(const ExperimentConfig &config) {
  config.validate();
  const DerivedDevice dev = config.derived();
  const double survival = delay_line_survival(config.delay_line, config.tau_d).survival;
  const BranchLosses losses{1.0 - survival, 1.0 - survival};
  const double coherence = config.decoherence.coherence_after(config.tau_d);

  TrialPhysics ph;
  ph.coupling = dev.coupling();
  ph.gamma_c = dev.gamma_c;
  ph.tau_d = config.tau_d;
  ph.mean_survival = survival;
  ph.contrast = (survival > 0.0 ? losses.balance() : 0.0) * coherence;
  ph.efficiency = config.detector_efficiency;
  ph.jitter = config.detector_jitter;
  ph.dark_mean = config.dark_rate / dev.gamma_c;
  ph.phases = config.phase_settings;
  ph.seed = config.seed;

  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : config.threads;
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, config.n_photons)));

  std::vector<ChunkResult> chunks(threads);
  const std::uint64_t n = config.n_photons;
  const auto bounds = [&](unsigned k) { return n * k / threads; };
  if (threads == 1) {
    run_chunk(ph, 0, n, chunks[0]);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&, k] { run_chunk(ph, bounds(k), bounds(k + 1), chunks[k]); });
    }
  }

  RunResult result;
  RunSummary &s = result.summary;
  s.seed = config.seed;
  s.n_photons = config.n_photons;
  s.phase_settings = config.phase_settings;
  s.coherence = coherence;
  for (auto &c : chunks) {
    s.success_count += c.successes;
    result.records.insert(result.records.end(), std::make_move_iterator(c.records.begin()),
                          std::make_move_iterator(c.records.end()));
  }
  for (const auto &r : result.records) {
    (r.origin == Origin::Signal ? s.signal_count : s.dark_count) += 1;
  }
  s.wall_events = result.records.size();

  const double bw = config.bin_width > 0.0 ? config.bin_width : default_bin_width(dev.cavity());
  const std::size_t n_phases = config.phase_settings.size();
  std::vector<std::vector<double>> per_phase(n_phases);
  for (const auto &r : result.records) {
    per_phase[r.trial_index % n_phases].push_back(r.arrival_time);
  }
  for (const auto &times : per_phase) {
    s.histograms.push_back(bin_arrivals(times, bw, config.tau_d));
  }

  try {
    s.visibility = estimate_visibility(result.records, config.phase_settings);
  } catch (const EstimationError &) {
    s.visibility.reset();
  }
  return result;
}

VisibilityEstimate estimate_visibility(std::span<const TrialRecord> records,
                                       std::span<const double> phase_settings) {
  std::vector<double> phases(phase_settings.begin(), phase_settings.end());
  std::sort(phases.begin(), phases.end());
  phases.erase(std::unique(phases.begin(), phases.end()), phases.end());
  if (phases.size() < 2) {
    throw EstimationError("visibility fit needs at least two distinct phase settings");
  }
  if (records.empty()) {
    throw EstimationError("visibility fit needs at least one count");
  }

  std::vector<double> counts(phases.size(), 0.0);
  for (const auto &r : records) {
    if (r.detector != Detector::D1) {
      continue;
    }
    const auto it = std::lower_bound(phases.begin(), phases.end(), r.phase - 1e-12);
    if (it != phases.end() && std::abs(*it - r.phase) <= 1e-12) {
      counts[static_cast<std::size_t>(it - phases.begin())] += 1.0;
    }
  }
  const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
  if (nonzero < 2) {
    throw EstimationError("degenerate visibility fit: counts confined to one phase setting");
  }

  const bool full = phases.size() >= 3;
  const Eigen::Index m = static_cast<Eigen::Index>(phases.size());
  const Eigen::Index p = full ? 3 : 2;
  Eigen::MatrixXd x(m, p);
  Eigen::VectorXd y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double ph = phases[static_cast<std::size_t>(k)];
    x(k, 0) = 1.0;
    x(k, 1) = std::cos(ph);
    if (full) {
      x(k, 2) = std::sin(ph);
    }
    y(k) = counts[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd xtx = x.transpose() * x;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  if (!lu.isInvertible()) {
    throw EstimationError("phase settings do not constrain the fringe fit");
  }
  const Eigen::MatrixXd xtx_inv = lu.inverse();
  const Eigen::VectorXd beta = xtx_inv * x.transpose() * y;
  const double a = beta(0);
  if (!(a > 0.0)) {
    throw EstimationError("fitted mean count is not positive");
  }

  // Poisson variances taken from the data.
  const Eigen::MatrixXd sandwich = xtx_inv * x.transpose() * y.asDiagonal() * x * xtx_inv;

  const double b = beta(1);
  const double c = full ? beta(2) : 0.0;
  const double r = std::hypot(b, c);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
  double se = 0.0;
  if (r > 0.0) {
    grad(0) = -r / (a * a);
    grad(1) = b / (r * a);
    if (full) {
      grad(2) = c / (r * a);
    }
    se = std::sqrt(std::max(0.0, grad.dot(sandwich * grad)));
  } else {
    double var = sandwich(1, 1) + (full ? sandwich(2, 2) : 0.0);
    se = std::sqrt(std::max(0.0, var / (full ? 2.0 : 1.0))) / a;
  }

  VisibilityEstimate est;
  est.visibility = std::clamp(r / a, 0.0, 1.0);
  est.standard_error = se;
  est.phase_offset = r > 0.0 ? std::atan2(-c, b) : 0.0;
  return est;
}

OscillationResult arrival_oscillation_check(std::span<const TrialRecord> records,
                                            const CavityParams &cavity, double tau_d,
                                            double threshold) {
  cavity.validate();
  if (records.size() < 100) {
    throw EstimationError("oscillation check needs at least 100 counts");
  }
  const double period = cavity.mechanical_period();
  const double bw = default_bin_width(cavity);
  const double horizon = std::max(10.0 / cavity.gamma_c, 2.0 * period);
  const auto n_bins = static_cast<Eigen::Index>(std::ceil(horizon / bw));
  const double window = 1.0 / cavity.gamma_c;

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_bins);
  std::size_t used = 0;
  for (const auto &r : records) {
    const double u = r.arrival_time - tau_d;
    if (u < 0.0) {
      continue;
    }
    const auto k = static_cast<Eigen::Index>(std::floor(u / bw));
    if (k < n_bins) {
      y(k) += 1.0;
      ++used;
    }
  }

  // Columns: release envelope, dark-count window (bin-averaged), and the
  // envelope-modulated quadratures at omega_m.
  Eigen::MatrixXd basis(n_bins, 4);
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    const double lo = static_cast<double>(k) * bw;
    const double t = lo + 0.5 * bw;
    const double env = std::exp(-cavity.gamma_c * t);
    basis(k, 0) = env;
    basis(k, 1) = std::clamp((window - lo) / bw, 0.0, 1.0);
    basis(k, 2) = env * std::cos(cavity.omega_m * t);
    basis(k, 3) = env * std::sin(cavity.omega_m * t);
  }

  const Eigen::MatrixXd null_basis = basis.leftCols(2);
  const Eigen::VectorXd null_fit =
      null_basis * null_basis.colPivHouseholderQr().solve(y);
  // Pearson weights from the null fit, floored at one count per bin.
  Eigen::VectorXd w(n_bins);
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    w(k) = 1.0 / std::sqrt(std::max(1.0, null_fit(k)));
  }
  const auto weighted_chi2 = [&](const Eigen::MatrixXd &cols) {
    const Eigen::MatrixXd a = w.asDiagonal() * cols;
    const Eigen::VectorXd b = w.asDiagonal() * y;
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    return (a * beta - b).squaredNorm();
  };
  const double chi2_null = weighted_chi2(null_basis);
  const double chi2_full = weighted_chi2(basis);

  OscillationResult out;
  out.statistic = std::max(0.0, 0.5 * (chi2_null - chi2_full));
  out.detected = out.statistic > threshold;
  out.counts_used = used;
  return out;
}

CollectionEstimate data_collection_estimate(const ExperimentConfig &config, double target) {
  if (!(target > 0.0)) {
    throw ConfigError("target count must be positive");
  }
  config.validate();
  const DerivedDevice dev = config.derived();
  CollectionEstimate est;
  est.success_probability = dev.p_success;
  est.delay_survival = delay_line_survival(config.delay_line, config.tau_d).survival;
  est.detector_efficiency = config.detector_efficiency;

  const std::pair<const char *, double> factors[] = {
      {"success_probability", est.success_probability},
      {"delay_survival", est.delay_survival},
      {"detector_efficiency", est.detector_efficiency}};
  const auto *smallest = std::min_element(std::begin(factors), std::end(factors),
                                          [](const auto &l, const auto &r) { return l.second < r.second; });
  est.dominating_factor = smallest->first;

  const double rate = config.injection_rate * est.success_probability * est.delay_survival *
                      est.detector_efficiency;
  if (!(rate > 0.0)) {
    est.attainable = false;
    est.seconds = std::numeric_limits<double>::infinity();
  } else {
    est.seconds = target / rate;
  }
  return est;
}

void write_records_csv(std::ostream &out, std::span<const TrialRecord> records) {
  out << "trial_index,arrival_time_s,detector,phase_rad,origin\n";
  for (const auto &r : records) {
    out << r.trial_index << ',' << format_double(r.arrival_time) << ',' << to_string(r.detector)
        << ',' << format_double(r.phase) << ',' << to_string(r.origin) << '\n';
  }
}

std::vector<TrialRecord> read_records_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != "trial_index,arrival_time_s,detector,phase_rad,origin") {
    throw ConfigError("record CSV has an unexpected header");
  }
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string idx, t, det, ph, org;
    if (!std::getline(row, idx, ',') || !std::getline(row, t, ',') ||
        !std::getline(row, det, ',') || !std::getline(row, ph, ',') || !std::getline(row, org)) {
      throw ConfigError("malformed record row: " + line);
    }
    TrialRecord r;
    try {
      r.trial_index = std::stoull(idx);
      r.arrival_time = std::stod(t);
      r.phase = std::stod(ph);
    } catch (const std::exception &) {
      throw ConfigError("malformed number in record row: " + line);
    }
    if (det == "D1" || det == "D2") {
      r.detector = det == "D1" ? Detector::D1 : Detector::D2;
    } else {
      throw ConfigError("unknown detector '" + det + "'");
    }
    if (org == "signal" || org == "dark") {
      r.origin = org == "signal" ? Origin::Signal : Origin::Dark;
    } else {
      throw ConfigError("unknown origin '" + org + "'");
    }
    out.push_back(r);
  }
  return out;
}

std::string summary_to_json(const RunSummary &s) {
  using nlohmann::json;
  json j;
  j["seed"] = s.seed;
  j["n_photons"] = s.n_photons;
  j["success_count"] = s.success_count;
  j["signal_count"] = s.signal_count;
  j["dark_count"] = s.dark_count;
  j["wall_events"] = s.wall_events;
  j["coherence"] = s.coherence;
  j["phase_settings_rad"] = s.phase_settings;
  if (s.visibility) {
    j["visibility"] = {{"value", s.visibility->visibility},
                       {"standard_error", s.visibility->standard_error},
                       {"phase_offset_rad", s.visibility->phase_offset}};
  } else {
    j["visibility"] = nullptr;
  }
  json hists = json::array();
  for (std::size_t k = 0; k < s.histograms.size(); ++k) {
    const auto &h = s.histograms[k];
    hists.push_back({{"phase_rad", s.phase_settings[k]},
                     {"t0_s", h.t0},
                     {"bin_width_s", h.bin_width},
                     {"counts", h.counts}});
  }
  j["histograms"] = std::move(hists);
  return j.dump(2);
}

} // namespace optomech
