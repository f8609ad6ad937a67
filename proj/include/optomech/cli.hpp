#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace optomech::cli {

/// Stable exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_infeasible = 2;

/// Environment variable consulted when --device-file is absent.
inline constexpr const char *device_file_env = "OPTOMECH_DEVICE_FILE";

/// Device file shipped with the project.
std::filesystem::path bundled_device_file();

enum class Command { Feasibility, Arrival, Visibility, Simulate, Table };

struct CliConfig {
  Command command = Command::Table;
  std::filesystem::path device_file;
  std::string device_name;
  std::optional<std::filesystem::path> output_path;
  std::optional<std::filesystem::path> summary_path;

  // overrides
  std::optional<double> wavelength;
  double temperature = 1e-3;
  double dark_rate = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t n_photons = 1'000'000;
  double tau_d = 0.0;
  std::optional<double> tau_dec;
  int bins = 0; ///< per mechanical period; 0 = command default
  std::optional<double> kappa;
  std::optional<double> sideband_ratio;
  std::vector<double> tau_d_grid;
  std::string delay_line = "lossless";
  std::optional<double> loss_db_per_km;
  int phases = 8;
  std::optional<double> injection_rate;
  double jitter = 1e-7;
  double efficiency = 1.0;
  unsigned threads = 1;
};

/// Parses argv (argv[0] is the program name) and runs the selected command.
/// Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// Convenience overload for tests.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int cmd_feasibility(const CliConfig &cfg, std::ostream &out);
int cmd_arrival(const CliConfig &cfg, std::ostream &out);
int cmd_visibility(const CliConfig &cfg, std::ostream &out);
int cmd_simulate(const CliConfig &cfg, std::ostream &out);
int cmd_table(const CliConfig &cfg, std::ostream &out);

} // namespace optomech::cli
