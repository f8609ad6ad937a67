#include "optomech/device.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

using nlohmann::json;

void refresh_dependent(DerivedDevice &d) {
  d.sideband_ratio = d.omega_m / d.gamma_c;
  d.p_success = total_success_probability(d.cavity());
  d.dark_count_bound = 9.0 * d.kappa * d.kappa * d.gamma_c / 20.0;
}

double positive_field(const json &j, const char *key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("device record missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

} // namespace

void DeviceParams::validate() const {
  const std::pair<const char *, double> fields[] = {
      {"mass", mass}, {"f_m", f_m}, {"cavity_length", cavity_length},
      {"finesse", finesse}, {"q_m", q_m}, {"wavelength", wavelength}};
  for (const auto &[key, value] : fields) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ConfigError("device '" + name + "': " + key + " must be strictly positive");
    }
  }
}

DerivedDevice derive(const DeviceParams &p) {
  p.validate();
  DerivedDevice d;
  d.name = p.name;
  d.omega_m = phys::two_pi * p.f_m;
  d.x_zp = std::sqrt(phys::hbar / (2.0 * p.mass * d.omega_m));
  const double omega_o = phys::two_pi * phys::c_light / p.wavelength;
  d.g = omega_o / p.cavity_length * d.x_zp;
  d.kappa = d.g / d.omega_m;
  d.gamma_c = phys::pi * phys::c_light / (p.cavity_length * p.finesse);
  d.t_eid = phys::hbar * d.omega_m * p.q_m / phys::k_boltzmann;
  refresh_dependent(d);
  return d;
}

DerivedDevice with_overrides(DerivedDevice d, std::optional<double> kappa,
                             std::optional<double> sideband_ratio) {
  if (kappa) {
    if (!(*kappa >= 0.0)) {
      throw ConfigError("kappa override must be non-negative");
    }
    d.kappa = *kappa;
    d.g = d.kappa * d.omega_m;
  }
  if (sideband_ratio) {
    if (!(*sideband_ratio > 0.0)) {
      throw ConfigError("sideband ratio override must be positive");
    }
    d.gamma_c = d.omega_m / *sideband_ratio;
  }
  refresh_dependent(d);
  return d;
}

double eid_time(double q_m, double temperature) {
  if (!(temperature > 0.0)) {
    throw DomainError("temperature must be positive");
  }
  if (!(q_m > 0.0)) {
    throw DomainError("quality factor must be positive");
  }
  return phys::hbar * q_m / (phys::k_boltzmann * temperature);
}

bool FeasibilityReport::all_passed() const {
  for (const auto &c : checks) {
    if (!c.passed) {
      return false;
    }
  }
  return true;
}

const FeasibilityCheck &FeasibilityReport::check(std::string_view name) const {
  for (const auto &c : checks) {
    if (c.name == name) {
      return c;
    }
  }
  throw ConfigError("no feasibility check named " + std::string(name));
}

FeasibilityReport feasibility_report(const DerivedDevice &d, double dark_rate, double base_temp) {
  if (!(dark_rate >= 0.0)) {
    throw ConfigError("dark rate must be non-negative");
  }
  if (!(base_temp > 0.0)) {
    throw ConfigError("base temperature must be positive");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  FeasibilityReport r;
  r.device_name = d.name;

  r.checks.push_back({"sideband", d.sideband_ratio >= required_sideband_ratio, d.sideband_ratio,
                      required_sideband_ratio, d.sideband_ratio / required_sideband_ratio});

  // Strict: a dark rate equal to the bound fails.
  r.checks.push_back({"dark_counts", dark_rate < d.dark_count_bound, dark_rate,
                      d.dark_count_bound, dark_rate > 0.0 ? d.dark_count_bound / dark_rate : inf});

  const double t_max = d.t_eid / eid_temperature_margin;
  r.checks.push_back({"temperature", base_temp <= t_max, base_temp, t_max, t_max / base_temp});
  return r;
}

void DelayLineSpec::validate() const {
  if (!(loss_db_per_km >= 0.0)) {
    throw ConfigError("delay-line loss must be non-negative");
  }
  if (!(refractive_index >= 1.0)) {
    throw ConfigError("refractive index must be at least 1");
  }
}

DelayLineSurvival delay_line_survival(const DelayLineSpec &spec, double tau_d) {
  spec.validate();
  if (!(tau_d >= 0.0)) {
    throw DomainError("delay must be non-negative");
  }
  DelayLineSurvival s;
  s.length = phys::c_light * tau_d / spec.refractive_index;
  const double loss_db = spec.loss_db_per_km * s.length / 1000.0;
  s.survival = std::pow(10.0, -loss_db / 10.0);
  return s;
}

std::string_view to_string(DecoherenceMechanism m) {
  switch (m) {
  case DecoherenceMechanism::Environmental:
    return "environmental";
  case DecoherenceMechanism::QuantumGravityCollapse:
    return "quantum-gravity-collapse";
  case DecoherenceMechanism::ContinuousSpontaneousLocalization:
    return "CSL";
  case DecoherenceMechanism::GravitationalZeroPointSize:
    return "gravitational-Penrose-Diosi-zpm";
  case DecoherenceMechanism::GravitationalNuclearSize:
    return "gravitational-Penrose-Diosi-nuclear";
  }
  return "unknown";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::Computed ? "computed" : "quoted";
}

const std::vector<CatalogDevice> &reference_devices() {
  static const std::vector<CatalogDevice> devices = {
      {{"trampoline-1", 60e-12, 158e3, 0.05, 38000.0, 43000.0, 1.064e-6}, {0.000034, 2.0, 0.3}},
      {{"trampoline-2", 110e-12, 9.71e3, 0.05, 29000.0, 940000.0, 1.064e-6}, {0.0016, 0.09, 0.4}},
      {{"proposed-1", 1e-12, 300e3, 0.005, 300000.0, 20000.0, 1.064e-6}, {0.001, 3.0, 0.3}},
      {{"proposed-2", 100e-12, 4.5e3, 0.05, 2e6, 2e6, 1.064e-6}, {0.005, 3.0, 0.4}},
  };
  return devices;
}

std::vector<DecoherenceCatalogEntry> decoherence_catalog(std::string_view device_name,
                                                         double temperature) {
  struct Quoted {
    double gravity_collapse, csl, zero_point, nuclear;
  };
  Quoted q{};
  if (device_name == "proposed-1") {
    q = {10.0, 1e7, 1e6, 10e-3};
  } else if (device_name == "proposed-2") {
    q = {1e-3, 1e5, 1e4, 100e-6};
  } else {
    throw ConfigError("no decoherence catalog for device '" + std::string(device_name) + "'");
  }
  const DeviceParams *params = nullptr;
  for (const auto &dev : reference_devices()) {
    if (dev.params.name == device_name) {
      params = &dev.params;
    }
  }
  const std::string name(device_name);
  return {
      {DecoherenceMechanism::Environmental, name, eid_time(params->q_m, temperature),
       Provenance::Computed},
      {DecoherenceMechanism::QuantumGravityCollapse, name, q.gravity_collapse, Provenance::Quoted},
      {DecoherenceMechanism::ContinuousSpontaneousLocalization, name, q.csl, Provenance::Quoted},
      {DecoherenceMechanism::GravitationalZeroPointSize, name, q.zero_point, Provenance::Quoted},
      {DecoherenceMechanism::GravitationalNuclearSize, name, q.nuclear, Provenance::Quoted},
  };
}

std::vector<DeviceParams> parse_devices(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("device file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw ConfigError("device file must contain a JSON array");
  }
  std::vector<DeviceParams> out;
  for (const auto &rec : doc) {
    if (!rec.is_object() || !rec.contains("name") || !rec.at("name").is_string()) {
      throw ConfigError("device record must be an object with a string 'name'");
    }
    DeviceParams p;
    p.name = rec.at("name").get<std::string>();
    p.mass = positive_field(rec, "mass_kg");
    p.f_m = positive_field(rec, "f_m_hz");
    p.cavity_length = positive_field(rec, "cavity_length_m");
    p.finesse = positive_field(rec, "finesse");
    p.q_m = positive_field(rec, "q_m");
    if (rec.contains("wavelength_m")) {
      p.wavelength = positive_field(rec, "wavelength_m");
    }
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<DeviceParams> load_devices(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open device file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_devices(buf.str());
}

std::string devices_to_json(const std::vector<DeviceParams> &devices) {
  json doc = json::array();
  for (const auto &d : devices) {
    doc.push_back({{"name", d.name},
                   {"mass_kg", d.mass},
                   {"f_m_hz", d.f_m},
                   {"cavity_length_m", d.cavity_length},
                   {"finesse", d.finesse},
                   {"q_m", d.q_m},
                   {"wavelength_m", d.wavelength}});
  }
  return doc.dump(2);
}

const DeviceParams &find_device(const std::vector<DeviceParams> &devices, std::string_view name) {
  for (const auto &d : devices) {
    if (d.name == name) {
      return d;
    }
  }
  throw ConfigError("unknown device '" + std::string(name) + "'");
}

} // namespace optomech
