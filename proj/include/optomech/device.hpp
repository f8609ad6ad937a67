#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optomech/arrival.hpp"
#include "optomech/quantum_core.hpp"

namespace optomech {

/// Raw device description, SI units.
struct DeviceParams {
  std::string name;
  double mass = 0.0;          ///< effective mass, kg
  double f_m = 0.0;           ///< mechanical frequency, Hz
  double cavity_length = 0.0; ///< m
  double finesse = 0.0;
  double q_m = 0.0;              ///< mechanical quality factor
  double wavelength = 1.064e-6;  ///< optical wavelength, m

  /// Throws ConfigError unless every numeric field is strictly positive.
  void validate() const;
};

/// Quantities derived from DeviceParams.
struct DerivedDevice {
  std::string name;
  double omega_m = 0.0;          ///< rad/s
  double x_zp = 0.0;             ///< m
  double g = 0.0;                ///< rad/s
  double kappa = 0.0;            ///< g / omega_m
  double gamma_c = 0.0;          ///< 1/s, pi c / (L F)
  double sideband_ratio = 0.0;   ///< omega_m / gamma_c
  double t_eid = 0.0;            ///< K, hbar omega_m Q_m / k_B
  double p_success = 0.0;        ///< total dark-port success probability per photon
  double dark_count_bound = 0.0; ///< 1/s, 9 kappa^2 gamma_c / 20

  CavityParams cavity() const { return {gamma_c, omega_m, kappa}; }
  CouplingParams coupling() const { return {kappa, omega_m}; }
};

DerivedDevice derive(const DeviceParams &d);

/// Replaces kappa and/or the sideband ratio (by moving gamma_c) and refreshes
/// every dependent field.
DerivedDevice with_overrides(DerivedDevice d, std::optional<double> kappa,
                             std::optional<double> sideband_ratio);

/// Environmental decoherence time hbar Q_m / (k_B T), s.
double eid_time(double q_m, double temperature);

struct FeasibilityCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  double margin = 0.0; ///< > 1 means the requirement is met with room to spare
};

struct FeasibilityReport {
  std::string device_name;
  std::vector<FeasibilityCheck> checks;

  bool all_passed() const;
  const FeasibilityCheck &check(std::string_view name) const;
};

/// Required sideband ratio for resolving the arrival-rate oscillation.
inline constexpr double required_sideband_ratio = 3.0;
/// base_temp <= t_eid / eid_temperature_margin.
inline constexpr double eid_temperature_margin = 10.0;

/// Sideband resolution, dark-count and bath-temperature checks.
FeasibilityReport feasibility_report(const DerivedDevice &d, double dark_rate, double base_temp);

enum class DelayLineKind { Fiber, Herriott };

struct DelayLineSpec {
  DelayLineKind kind = DelayLineKind::Fiber;
  double loss_db_per_km = 0.2;
  double refractive_index = 1.468;

  static DelayLineSpec fiber() { return {}; }
  static DelayLineSpec herriott(double loss_db_per_km = 0.0) {
    return {DelayLineKind::Herriott, loss_db_per_km, 1.0};
  }
  static DelayLineSpec lossless() { return herriott(0.0); }

  void validate() const;
};

struct DelayLineSurvival {
  double length = 0.0;   ///< m
  double survival = 1.0; ///< transmission probability
};

DelayLineSurvival delay_line_survival(const DelayLineSpec &spec, double tau_d);

enum class DecoherenceMechanism {
  Environmental,
  QuantumGravityCollapse,
  ContinuousSpontaneousLocalization,
  GravitationalZeroPointSize,
  GravitationalNuclearSize,
};

enum class Provenance { Computed, Quoted };

std::string_view to_string(DecoherenceMechanism m);
std::string_view to_string(Provenance p);

struct DecoherenceCatalogEntry {
  DecoherenceMechanism mechanism;
  std::string device_name;
  double tau = 0.0; ///< s
  Provenance provenance = Provenance::Quoted;
};

/// Decoherence timescales for the proposed devices. The environmental entry is
/// computed at `temperature`; the other mechanisms are order-of-magnitude
/// literature values. Throws ConfigError for an unknown device.
std::vector<DecoherenceCatalogEntry> decoherence_catalog(std::string_view device_name,
                                                         double temperature = 1e-3);

/// Published coupling, sideband ratio and EID temperature for a catalog device.
struct PublishedValues {
  double kappa = 0.0;
  double sideband_ratio = 0.0;
  double t_eid = 0.0;
};

struct CatalogDevice {
  DeviceParams params;
  PublishedValues published;
};

/// Two demonstrated trampoline resonators and two proposed devices.
const std::vector<CatalogDevice> &reference_devices();

/// Parses a JSON array of device records
/// (name, mass_kg, f_m_hz, cavity_length_m, finesse, q_m, wavelength_m?).
std::vector<DeviceParams> parse_devices(std::string_view json_text);
std::vector<DeviceParams> load_devices(const std::filesystem::path &path);
std::string devices_to_json(const std::vector<DeviceParams> &devices);

/// Throws ConfigError when `name` is not present.
const DeviceParams &find_device(const std::vector<DeviceParams> &devices, std::string_view name);

} // namespace optomech
