#include "optomech/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "optomech/arrival.hpp"
#include "optomech/constants.hpp"
#include "optomech/device.hpp"
#include "optomech/errors.hpp"
#include "optomech/interferometer.hpp"
#include "optomech/montecarlo.hpp"

#ifndef OPTOMECH_DEFAULT_DEVICE_FILE
#define OPTOMECH_DEFAULT_DEVICE_FILE "data/devices.json"
#endif

namespace optomech::cli {

namespace {

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string exact(double v) { return num(v, 17); }

DeviceParams load_device(const CliConfig &cfg) {
  const auto devices = load_devices(cfg.device_file);
  DeviceParams p = find_device(devices, cfg.device_name);
  if (cfg.wavelength) {
    p.wavelength = *cfg.wavelength;
  }
  return p;
}

DerivedDevice load_derived(const CliConfig &cfg) {
  return with_overrides(derive(load_device(cfg)), cfg.kappa, cfg.sideband_ratio);
}

DelayLineSpec delay_line_from(const CliConfig &cfg) {
  DelayLineSpec spec;
  if (cfg.delay_line == "lossless") {
    spec = DelayLineSpec::lossless();
  } else if (cfg.delay_line == "fiber") {
    spec = DelayLineSpec::fiber();
  } else if (cfg.delay_line == "herriott") {
    spec = DelayLineSpec::herriott();
  } else {
    throw ConfigError("unknown delay line '" + cfg.delay_line + "'");
  }
  if (cfg.loss_db_per_km) {
    spec.loss_db_per_km = *cfg.loss_db_per_km;
  }
  return spec;
}

double tau_dec_from(const CliConfig &cfg) {
  if (cfg.tau_dec) {
    return *cfg.tau_dec;
  }
  return eid_time(load_device(cfg).q_m, cfg.temperature);
}

// Runs `body` against the --out file when given, otherwise against `out`.
void with_output(const CliConfig &cfg, std::ostream &out,
                 const std::function<void(std::ostream &)> &body) {
  if (!cfg.output_path) {
    body(out);
    return;
  }
  std::ofstream file(*cfg.output_path, std::ios::binary);
  if (!file) {
    throw ConfigError("cannot open output file " + cfg.output_path->string());
  }
  body(file);
}

nlohmann::json derived_json(const DerivedDevice &d) {
  return {{"name", d.name},
          {"omega_m_rad_s", d.omega_m},
          {"x_zp_m", d.x_zp},
          {"g_rad_s", d.g},
          {"kappa", d.kappa},
          {"gamma_c_per_s", d.gamma_c},
          {"sideband_ratio", d.sideband_ratio},
          {"t_eid_k", d.t_eid},
          {"p_success", d.p_success},
          {"dark_count_bound_per_s", d.dark_count_bound}};
}

ExperimentConfig experiment_from(const CliConfig &cfg) {
  ExperimentConfig ec;
  ec.device = load_device(cfg);
  ec.kappa_override = cfg.kappa;
  ec.sideband_override = cfg.sideband_ratio;
  ec.decoherence.tau_dec = tau_dec_from(cfg);
  ec.tau_d = cfg.tau_d;
  ec.delay_line = delay_line_from(cfg);
  if (cfg.phases < 1) {
    throw ConfigError("--phases must be at least 1");
  }
  ec.phase_settings = uniform_phases(static_cast<std::size_t>(cfg.phases));
  const DerivedDevice d = ec.derived();
  ec.injection_rate = cfg.injection_rate.value_or(d.gamma_c / 10.0);
  ec.dark_rate = cfg.dark_rate;
  ec.detector_jitter = cfg.jitter;
  ec.detector_efficiency = cfg.efficiency;
  ec.n_photons = cfg.n_photons;
  ec.seed = cfg.seed;
  ec.threads = cfg.threads;
  if (cfg.bins > 0) {
    ec.bin_width = d.cavity().mechanical_period() / cfg.bins;
  }
  return ec;
}

} // namespace

std::filesystem::path bundled_device_file() { return OPTOMECH_DEFAULT_DEVICE_FILE; }

int cmd_feasibility(const CliConfig &cfg, std::ostream &out) {
  const DerivedDevice d = load_derived(cfg);
  const FeasibilityReport report = feasibility_report(d, cfg.dark_rate, cfg.temperature);

  out << "device " << d.name << '\n'
      << "  omega_m        " << num(d.omega_m) << " rad/s\n"
      << "  x_zp           " << num(d.x_zp) << " m\n"
      << "  g              " << num(d.g) << " rad/s\n"
      << "  kappa          " << num(d.kappa) << '\n'
      << "  gamma_c        " << num(d.gamma_c) << " 1/s\n"
      << "  omega_m/gamma  " << num(d.sideband_ratio) << '\n'
      << "  T_EID          " << num(d.t_eid) << " K\n"
      << "  p_success      " << num(d.p_success) << '\n'
      << "  dark bound     " << num(d.dark_count_bound) << " 1/s\n";
  for (const auto &c : report.checks) {
    out << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": value " << num(c.value)
        << ", threshold " << num(c.threshold) << ", margin " << num(c.margin) << '\n';
  }
  out << (report.all_passed() ? "feasible\n" : "not feasible\n");

  if (cfg.output_path) {
    nlohmann::json j;
    j["device"] = derived_json(d);
    j["dark_rate_per_s"] = cfg.dark_rate;
    j["base_temperature_k"] = cfg.temperature;
    j["feasible"] = report.all_passed();
    auto checks = nlohmann::json::array();
    for (const auto &c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"value", c.value},
                        {"threshold", c.threshold},
                        {"margin", std::isfinite(c.margin) ? nlohmann::json(c.margin)
                                                           : nlohmann::json("inf")}});
    }
    j["checks"] = std::move(checks);
    with_output(cfg, out, [&](std::ostream &o) { o << j.dump(2) << '\n'; });
  }
  return report.all_passed() ? exit_ok : exit_infeasible;
}

int cmd_arrival(const CliConfig &cfg, std::ostream &out) {
  const DerivedDevice d = load_derived(cfg);
  const CavityParams cav = d.cavity();
  if (!(d.sideband_ratio > 0.0) || !(d.kappa > 0.0)) {
    throw ConfigError("arrival curve needs positive kappa and sideband ratio");
  }
  const int per_period = cfg.bins == 0 ? 200 : cfg.bins;
  if (per_period < 20) {
    throw ConfigError("--bins must give at least 20 points per mechanical period");
  }
  // Resolve both the mechanical period and the cavity lifetime.
  const double step = std::min(cav.mechanical_period() / per_period, 1.0 / (50.0 * cav.gamma_c));
  const double horizon = 60.0 / cav.gamma_c;
  const auto n_steps = static_cast<long long>(std::ceil(horizon / step));

  with_output(cfg, out, [&](std::ostream &o) {
    o << "t_seconds,density_per_second\n";
    for (long long k = 0; k <= n_steps; ++k) {
      const double t = std::min(horizon, static_cast<double>(k) * step);
      o << exact(t) << ',' << exact(arrival_density(cav, t, true)) << '\n';
    }
  });
  return exit_ok;
}

int cmd_visibility(const CliConfig &cfg, std::ostream &out) {
  const DerivedDevice d = load_derived(cfg);
  DecoherenceSpec spec;
  spec.tau_dec = tau_dec_from(cfg);
  std::vector<double> grid = cfg.tau_d_grid;
  if (grid.empty()) {
    for (int k = 0; k <= 12; ++k) {
      grid.push_back(spec.tau_dec * 0.25 * k);
    }
  }
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ConfigError("--tau-d-grid must be ascending");
  }
  const DelayLineSpec line = delay_line_from(cfg);
  const double t_c = phys::pi / d.omega_m;

  with_output(cfg, out, [&](std::ostream &o) {
    o << "tau_d_s,visibility,relative_rate\n";
    for (double tau_d : grid) {
      const double s = delay_line_survival(line, tau_d).survival;
      const BranchLosses losses{1.0 - s, 1.0 - s};
      const auto point = sweep_visibility(d.coupling(), t_c, spec, {tau_d}, losses).front();
      o << exact(tau_d) << ',' << exact(point.visibility) << ',' << exact(s) << '\n';
    }
  });
  return exit_ok;
}

int cmd_simulate(const CliConfig &cfg, std::ostream &out) {
  if (!cfg.output_path) {
    throw ConfigError("simulate needs --out for the record CSV");
  }
  const ExperimentConfig ec = experiment_from(cfg);
  const RunResult run = simulate_run(ec);

  with_output(cfg, out, [&](std::ostream &o) { write_records_csv(o, run.records); });
  const std::filesystem::path summary_path =
      cfg.summary_path.value_or(std::filesystem::path(cfg.output_path->string() + ".summary.json"));
  std::ofstream summary(summary_path, std::ios::binary);
  if (!summary) {
    throw ConfigError("cannot open summary file " + summary_path.string());
  }
  summary << summary_to_json(run.summary) << '\n';

  const CollectionEstimate est = data_collection_estimate(ec);
  out << "seed " << ec.seed << ", photons " << ec.n_photons << ", postselections "
      << run.summary.success_count << ", signal " << run.summary.signal_count << ", dark "
      << run.summary.dark_count << '\n';
  if (run.summary.visibility) {
    out << "visibility " << num(run.summary.visibility->visibility) << " +/- "
        << num(run.summary.visibility->standard_error) << '\n';
  }
  out << "time to 1e4 detections: "
      << (est.attainable ? num(est.seconds) + " s" : std::string("unattainable"))
      << " (limited by " << est.dominating_factor << ")\n";
  return exit_ok;
}

int cmd_table(const CliConfig &cfg, std::ostream &out) {
  const auto devices = load_devices(cfg.device_file);
  const auto pct = [](double computed, double published) {
    return num(100.0 * (computed - published) / published, 3) + "%";
  };
  with_output(cfg, out, [&](std::ostream &o) {
    o << "device,kappa,kappa_published,kappa_dev,ratio,ratio_published,ratio_dev,"
         "t_eid_k,t_eid_published_k,t_eid_dev\n";
    for (const auto &p : devices) {
      DeviceParams dp = p;
      if (cfg.wavelength) {
        dp.wavelength = *cfg.wavelength;
      }
      const DerivedDevice d = derive(dp);
      const auto &refs = reference_devices();
      const auto ref = std::find_if(refs.begin(), refs.end(),
                                    [&](const CatalogDevice &c) { return c.params.name == p.name; });
      o << d.name << ',' << num(d.kappa, 4);
      if (ref != refs.end()) {
        const PublishedValues &pv = ref->published;
        o << ',' << num(pv.kappa) << ',' << pct(d.kappa, pv.kappa) << ',' << num(d.sideband_ratio, 4)
          << ',' << num(pv.sideband_ratio) << ',' << pct(d.sideband_ratio, pv.sideband_ratio) << ','
          << num(d.t_eid, 4) << ',' << num(pv.t_eid) << ',' << pct(d.t_eid, pv.t_eid) << '\n';
      } else {
        o << ",,," << num(d.sideband_ratio, 4) << ",,," << num(d.t_eid, 4) << ",,\n";
      }
    }
  });
  return exit_ok;
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Nested-interferometer optomechanics simulator"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string device_file;
  std::string out_path;
  std::string summary_path;
  std::string grid_text;

  app.add_option("--device-file", device_file, "Device JSON file")->envname(device_file_env);
  app.add_option("--device", cfg.device_name, "Device name");
  app.add_option("--out", out_path, "Output file");
  app.add_option("--summary", summary_path, "Run summary JSON (simulate)");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--n-photons", cfg.n_photons, "Injected photons (simulate)");
  app.add_option("--tau-d", cfg.tau_d, "Delay-line time, s");
  app.add_option("--tau-dec", cfg.tau_dec, "Decoherence time, s (default: environmental)");
  app.add_option("--tau-d-grid", grid_text, "Comma-separated delays, s (visibility)");
  app.add_option("--bins", cfg.bins, "Bins or samples per mechanical period")->check(CLI::NonNegativeNumber);
  app.add_option("--wavelength", cfg.wavelength, "Optical wavelength, m");
  app.add_option("--temperature", cfg.temperature, "Bath temperature, K");
  app.add_option("--dark-rate", cfg.dark_rate, "Detector dark-count rate, Hz");
  app.add_option("--kappa", cfg.kappa, "Override kappa = g / omega_m");
  app.add_option("--sideband-ratio", cfg.sideband_ratio, "Override omega_m / gamma_c");
  app.add_option("--delay-line", cfg.delay_line, "lossless | fiber | herriott")
      ->check(CLI::IsMember({"lossless", "fiber", "herriott"}));
  app.add_option("--loss-db-per-km", cfg.loss_db_per_km, "Delay-line loss, dB/km");
  app.add_option("--phases", cfg.phases, "Number of phase settings (simulate)");
  app.add_option("--injection-rate", cfg.injection_rate, "Photon injection rate, 1/s");
  app.add_option("--jitter", cfg.jitter, "Detector timing jitter, s");
  app.add_option("--efficiency", cfg.efficiency, "Detector efficiency");
  app.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");

  const auto add = [&](const char *name, const char *help, Command c) {
    app.add_subcommand(name, help)->fallthrough()->callback([&cfg, c] { cfg.command = c; });
  };
  add("feasibility", "Derived parameters and feasibility checks", Command::Feasibility);
  add("arrival", "Normalized arrival-time density curve (CSV)", Command::Arrival);
  add("visibility", "Visibility versus delay (CSV)", Command::Visibility);
  add("simulate", "Monte Carlo run: record CSV and summary JSON", Command::Simulate);
  add("table", "Derived device table against published values", Command::Table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  cfg.device_file = device_file.empty() ? bundled_device_file() : std::filesystem::path(device_file);
  if (!out_path.empty()) {
    cfg.output_path = out_path;
  }
  if (!summary_path.empty()) {
    cfg.summary_path = summary_path;
  }

  try {
    if (!grid_text.empty()) {
      std::stringstream ss(grid_text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        cfg.tau_d_grid.push_back(std::stod(item));
      }
    }
    const bool needs_device = cfg.command != Command::Table;
    if (needs_device && cfg.device_name.empty()) {
      throw ConfigError("--device is required");
    }
    switch (cfg.command) {
    case Command::Feasibility:
      return cmd_feasibility(cfg, out);
    case Command::Arrival:
      return cmd_arrival(cfg, out);
    case Command::Visibility:
      return cmd_visibility(cfg, out);
    case Command::Simulate:
      return cmd_simulate(cfg, out);
    case Command::Table:
      return cmd_table(cfg, out);
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  std::vector<const char *> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("optomech");
  for (const auto &a : args) {
    argv.push_back(a.c_str());
  }
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace optomech::cli
