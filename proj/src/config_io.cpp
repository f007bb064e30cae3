#include "tpd/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace tpd {

namespace {

double get_number(const Json& object, const char* key, const std::string& where,
                  std::optional<double> fallback = std::nullopt) {
  if (!object.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing required key '" + key + "'");
  }
  const Json& value = object.at(key);
  if (!value.is_number())
    throw ConfigError(where + "." + key + ": expected a number");
  return value.get<double>();
}

int get_integer(const Json& object, const char* key, const std::string& where,
                std::optional<int> fallback = std::nullopt) {
  if (!object.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing required key '" + key + "'");
  }
  const Json& value = object.at(key);
  if (!value.is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return value.get<int>();
}

bool get_bool(const Json& object, const char* key, const std::string& where,
              bool fallback) {
  if (!object.contains(key)) return fallback;
  const Json& value = object.at(key);
  if (!value.is_boolean()) throw ConfigError(where + "." + key + ": expected a bool");
  return value.get<bool>();
}

const Json& get_object(const Json& object, const char* key, const std::string& where) {
  if (!object.contains(key))
    throw ConfigError(where + ": missing required key '" + key + "'");
  const Json& value = object.at(key);
  if (!value.is_object())
    throw ConfigError(where + "." + key + ": expected an object");
  return value;
}

}  // namespace

Json load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& err) {
    throw ConfigError("config parse error in " + file.string() + ": " + err.what());
  }
}

void reject_unknown_keys(const Json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

ResonatorSpec parse_resonator(const Json& object, const std::string& where) {
  reject_unknown_keys(object, {"capacitance_pf", "inductance_nh", "loss_khz"}, where);
  ResonatorSpec spec;
  spec.capacitance = get_number(object, "capacitance_pf", where) * 1e-12;
  spec.inductance = get_number(object, "inductance_nh", where) * 1e-9;
  spec.loss_rate = get_number(object, "loss_khz", where, 0.0) * 1e3 * kTwoPi;
  return spec;
}

CouplerSpec parse_coupler(const Json& object, const std::string& where) {
  reject_unknown_keys(object,
                      {"type", "critical_current_na", "asymmetry",
                       "junction_capacitance_ff", "alpha_junction_capacitance_ff",
                       "flux", "flux_prime"},
                      where);
  CouplerSpec spec;
  if (!object.contains("type")) throw ConfigError(where + ": missing required key 'type'");
  const std::string type = object.at("type").get<std::string>();
  if (type == "asymmetric_squid") {
    spec.kind = CouplerKind::AsymmetricSquid;
  } else if (type == "bisquid") {
    spec.kind = CouplerKind::BiSquid;
  } else {
    throw ConfigError(where + ".type: expected 'asymmetric_squid' or 'bisquid'");
  }
  spec.critical_current = get_number(object, "critical_current_na", where) * 1e-9;
  spec.asymmetry = get_number(object, "asymmetry", where);
  spec.junction_capacitance = get_number(object, "junction_capacitance_ff", where, 0.0) * 1e-15;
  spec.alpha_junction_capacitance =
      get_number(object, "alpha_junction_capacitance_ff", where, 0.0) * 1e-15;
  spec.flux = get_number(object, "flux", where, 0.0);
  spec.flux_prime = get_number(object, "flux_prime", where, 0.0);
  return spec;
}

JpmSpec parse_jpm(const Json& object, const std::string& where) {
  reject_unknown_keys(object,
                      {"critical_current_ua", "loop_inductance_ph", "capacitance_ff",
                       "coupling_capacitance_ff", "drive_capacitance_ff",
                       "waveguide_capacitance_ff", "bias_flux",
                       "waveguide_impedance_ohm", "drive_voltage_uv"},
                      where);
  JpmSpec spec;
  spec.critical_current = get_number(object, "critical_current_ua", where) * 1e-6;
  spec.loop_inductance = get_number(object, "loop_inductance_ph", where) * 1e-12;
  spec.capacitance = get_number(object, "capacitance_ff", where) * 1e-15;
  spec.coupling_capacitance = get_number(object, "coupling_capacitance_ff", where, 0.0) * 1e-15;
  spec.drive_capacitance = get_number(object, "drive_capacitance_ff", where, 0.0) * 1e-15;
  spec.waveguide_capacitance =
      get_number(object, "waveguide_capacitance_ff", where, 0.0) * 1e-15;
  spec.bias_flux = get_number(object, "bias_flux", where);
  spec.waveguide_impedance = get_number(object, "waveguide_impedance_ohm", where, 50.0);
  spec.drive_voltage = get_number(object, "drive_voltage_uv", where, 0.0) * 1e-6;
  return spec;
}

HilbertSpace parse_space(const Json& object, const std::string& where) {
  reject_unknown_keys(object, {"storage", "buffer", "filter"}, where);
  HilbertSpace space;
  space.n_storage = get_integer(object, "storage", where, space.n_storage);
  space.n_buffer = get_integer(object, "buffer", where, space.n_buffer);
  space.n_filter = get_integer(object, "filter", where, space.n_filter);
  return space;
}

ModelParams parse_model(const Json& object, const std::string& where) {
  reject_unknown_keys(
      object,
      {"omega1_ghz", "omega2_ghz", "omega_ge_ghz", "omega_drive_ghz", "omega_gf_ghz",
       "omega_filter_ghz", "kerr1_khz", "kerr2_khz", "two_photon_mhz", "coupling_mhz",
       "drive_mhz", "loss1_khz", "loss2_khz", "rate_eg_mhz", "kappa_eg_mhz", "ratios",
       "dephasing_e_mhz", "dephasing_f_mhz", "efficiency", "capture_time_ns"},
      where);
  ModelParams params;
  params.omega1 = from_ghz(get_number(object, "omega1_ghz", where));
  params.omega2 = from_ghz(get_number(object, "omega2_ghz", where, 2.0 * to_ghz(params.omega1)));
  params.omega_ge = from_ghz(get_number(object, "omega_ge_ghz", where, to_ghz(params.omega2)));
  params.omega_drive = from_ghz(get_number(object, "omega_drive_ghz", where));
  params.omega_gf = from_ghz(get_number(
      object, "omega_gf_ghz", where, to_ghz(params.omega_ge + params.omega_drive)));
  params.omega_filter =
      from_ghz(get_number(object, "omega_filter_ghz", where, to_ghz(params.omega_ge)));
  params.kerr1 = kTwoPi * 1e3 * get_number(object, "kerr1_khz", where, 0.0);
  params.kerr2 = kTwoPi * 1e3 * get_number(object, "kerr2_khz", where, 0.0);
  params.two_photon = from_mhz(get_number(object, "two_photon_mhz", where, 0.0));
  params.coupling = from_mhz(get_number(object, "coupling_mhz", where, 0.0));
  params.drive = from_mhz(get_number(object, "drive_mhz", where, 0.0));
  params.loss1 = kTwoPi * 1e3 * get_number(object, "loss1_khz", where, 0.0);
  params.loss2 = kTwoPi * 1e3 * get_number(object, "loss2_khz", where, 0.0);

  RateRatios ratios;
  if (object.contains("ratios")) {
    const Json& r = get_object(object, "ratios", where);
    reject_unknown_keys(
        r, {"fg", "fe", "sink_f", "sink_e", "sink_g", "filter_linewidth_factor"},
        where + ".ratios");
    ratios.fg = get_number(r, "fg", where + ".ratios", ratios.fg);
    ratios.fe = get_number(r, "fe", where + ".ratios", ratios.fe);
    ratios.sink_f = get_number(r, "sink_f", where + ".ratios", ratios.sink_f);
    ratios.sink_e = get_number(r, "sink_e", where + ".ratios", ratios.sink_e);
    ratios.sink_g = get_number(r, "sink_g", where + ".ratios", ratios.sink_g);
    ratios.filter_linewidth_factor =
        get_number(r, "filter_linewidth_factor", where + ".ratios",
                   ratios.filter_linewidth_factor);
  }
  apply_rate_anchors(params, from_mhz(get_number(object, "rate_eg_mhz", where, 0.0)),
                     from_mhz(get_number(object, "kappa_eg_mhz", where, 0.0)), ratios);

  params.dephasing_e = from_mhz(get_number(object, "dephasing_e_mhz", where, 0.0));
  params.dephasing_f = from_mhz(get_number(object, "dephasing_f_mhz", where, 0.0));
  params.efficiency = get_number(object, "efficiency", where, 1.0);
  params.capture_time = get_number(object, "capture_time_ns", where, 50.0) * 1e-9;
  params.validate();
  return params;
}

namespace {

SweepAxis parse_axis(const Json& object, const std::string& where, bool scale_units) {
  reject_unknown_keys(object, {"parameter", "min", "max", "points", "log"}, where);
  SweepAxis axis;
  if (!object.contains("parameter"))
    throw ConfigError(where + ": missing required key 'parameter'");
  axis.parameter = object.at("parameter").get<std::string>();
  axis.lower = get_number(object, "min", where);
  axis.upper = get_number(object, "max", where);
  axis.points = get_integer(object, "points", where);
  axis.log_scale = get_bool(object, "log", where, false);
  if (scale_units) {
    // Axis bounds arrive in natural units: MHz for couplings/rates,
    // nanoseconds for the capture time.
    if (axis.parameter == "capture_time" || axis.parameter == "t_cpt") {
      axis.lower *= 1e-9;
      axis.upper *= 1e-9;
    } else {
      axis.lower = from_mhz(axis.lower);
      axis.upper = from_mhz(axis.upper);
    }
  }
  return axis;
}

}  // namespace

SweepSpec parse_sweep_config(const Json& root) {
  reject_unknown_keys(root, {"model", "space", "input_photons", "axes", "inner_max", "guards"},
                      "sweep");
  SweepSpec spec;
  spec.baseline = parse_model(get_object(root, "model", "sweep"), "sweep.model");
  if (root.contains("space"))
    spec.sim.space = parse_space(root.at("space"), "sweep.space");
  spec.sim.input_photons = get_integer(root, "input_photons", "sweep", 2);
  if (!root.contains("axes") || !root.at("axes").is_array() || root.at("axes").empty())
    throw ConfigError("sweep: 'axes' must be a non-empty array");
  int index = 0;
  for (const Json& axis : root.at("axes")) {
    spec.axes.push_back(parse_axis(axis, "sweep.axes[" + std::to_string(index) + "]", true));
    ++index;
  }
  if (root.contains("inner_max")) {
    const Json& inner = get_object(root, "inner_max", "sweep");
    reject_unknown_keys(inner, {"two_photon", "drive"}, "sweep.inner_max");
    SweepSpec::InnerMax inner_max;
    inner_max.two_photon =
        parse_axis(get_object(inner, "two_photon", "sweep.inner_max"),
                   "sweep.inner_max.two_photon", true);
    inner_max.two_photon.parameter = "two_photon";
    inner_max.drive = parse_axis(get_object(inner, "drive", "sweep.inner_max"),
                                 "sweep.inner_max.drive", true);
    inner_max.drive.parameter = "drive";
    spec.inner_max = inner_max;
  }
  if (root.contains("guards")) {
    const Json& guards = get_object(root, "guards", "sweep");
    reject_unknown_keys(guards, {"two_photon_fraction", "drive_fraction"}, "sweep.guards");
    spec.guards.two_photon_fraction = get_number(guards, "two_photon_fraction", "sweep.guards",
                                                 spec.guards.two_photon_fraction);
    spec.guards.drive_fraction =
        get_number(guards, "drive_fraction", "sweep.guards", spec.guards.drive_fraction);
  }
  return spec;
}

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

}  // namespace tpd
