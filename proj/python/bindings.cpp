#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tpd/config_io.hpp"

namespace py = pybind11;

namespace {

// Bindings speak the same JSON dialect as the CLI configs; dicts are
// converted through nlohmann::json both ways.
tpd::Json to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<long long>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::dict>(obj)) {
    tpd::Json out = tpd::Json::object();
    for (const auto& item : obj.cast<py::dict>())
      out[item.first.cast<std::string>()] = to_json(item.second);
    return out;
  }
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    tpd::Json out = tpd::Json::array();
    for (const auto& item : obj.cast<py::sequence>()) out.push_back(to_json(item));
    return out;
  }
  throw py::type_error("unsupported config value type");
}

py::object from_json(const tpd::Json& value) {
  switch (value.type()) {
    case tpd::Json::value_t::null:
      return py::none();
    case tpd::Json::value_t::boolean:
      return py::bool_(value.get<bool>());
    case tpd::Json::value_t::number_integer:
    case tpd::Json::value_t::number_unsigned:
      return py::int_(value.get<long long>());
    case tpd::Json::value_t::number_float:
      return py::float_(value.get<double>());
    case tpd::Json::value_t::string:
      return py::str(value.get<std::string>());
    case tpd::Json::value_t::array: {
      py::list out;
      for (const auto& item : value) out.append(from_json(item));
      return out;
    }
    case tpd::Json::value_t::object: {
      py::dict out;
      for (const auto& [key, item] : value.items())
        out[py::str(key)] = from_json(item);
      return out;
    }
    default:
      return py::none();
  }
}

py::dict derive_circuit_py(const py::dict& resonator1, const py::dict& resonator2,
                           const py::dict& coupler, int k_max) {
  const std::array<tpd::ResonatorSpec, 2> resonators = {
      tpd::parse_resonator(to_json(resonator1), "resonator1"),
      tpd::parse_resonator(to_json(resonator2), "resonator2")};
  const tpd::CouplerSpec spec = tpd::parse_coupler(to_json(coupler), "coupler");
  const tpd::CircuitModel model = tpd::derive_circuit(resonators, spec, k_max);
  py::dict out;
  out["effective_energy_ghz"] = tpd::to_ghz(model.coupler.effective_energy);
  out["phase_shift"] = model.coupler.phase_shift;
  out["delta"] = model.coupler.delta;
  out["two_photon_mhz"] = tpd::to_mhz(model.couplings.two_photon);
  out["linear_mhz"] = tpd::to_mhz(model.couplings.linear);
  out["capacitive_mhz"] = tpd::to_mhz(model.couplings.capacitive);
  py::list kerr, frequency, phi_zpf, n_zpf;
  for (const auto& r : model.resonators) {
    kerr.append(tpd::to_mhz(r.self_kerr) * 1e3);
    frequency.append(tpd::to_ghz(r.frequency));
    phi_zpf.append(r.phi_zpf);
    n_zpf.append(r.n_zpf);
  }
  out["self_kerr_khz"] = kerr;
  out["frequency_ghz"] = frequency;
  out["phi_zpf"] = phi_zpf;
  out["n_zpf"] = n_zpf;
  return out;
}

py::dict solve_jpm_py(const py::dict& jpm, int grid_points) {
  const tpd::JpmSpec spec = tpd::parse_jpm(to_json(jpm), "jpm");
  tpd::SpectrumOptions options;
  options.grid_points = grid_points;
  const tpd::JpmSpectrum spectrum = tpd::solve_spectrum(spec, options);
  const tpd::ChargeMatrix charge = tpd::charge_matrix(spectrum);
  const tpd::RateTable table = tpd::rate_table(charge, spectrum);
  py::dict out;
  out["shallow_below_barrier"] =
      spectrum.count_below_barrier(tpd::WellLabel::LeftWell);
  out["deep_below_barrier"] = spectrum.count_below_barrier(tpd::WellLabel::RightWell);
  out["index_g"] = spectrum.index_g + 1;
  out["index_e"] = spectrum.index_e + 1;
  out["index_f"] = spectrum.index_f + 1;
  out["omega_ge_ghz"] = tpd::to_ghz(spectrum.omega_ge());
  out["omega_ef_ghz"] = tpd::to_ghz(spectrum.omega_ef());
  py::dict ratios;
  ratios["fg"] = table.fg;
  ratios["fe"] = table.fe;
  ratios["sink_f"] = table.sink_f;
  ratios["sink_e"] = table.sink_e;
  ratios["sink_g"] = table.sink_g;
  out["rate_ratios"] = ratios;
  return out;
}

py::dict simulate_py(const py::dict& model, const py::dict& space_dict,
                     int input_photons, int samples) {
  const tpd::ModelParams params = tpd::parse_model(to_json(model), "model");
  tpd::HilbertSpace space;
  if (py::len(space_dict) > 0) space = tpd::parse_space(to_json(space_dict), "space");
  const tpd::MasterEquation equation = tpd::build_model(space, params);
  const Eigen::MatrixXcd rho0 =
      tpd::fock_state(space, input_photons, 0, tpd::kGround, 0);
  std::vector<double> times(samples);
  for (int i = 0; i < samples; ++i)
    times[i] = params.capture_time * i / (samples - 1);
  const tpd::EvolutionResult result = tpd::evolve(equation, rho0, times);

  py::dict out;
  py::list time_ns, pop_g, pop_e, pop_f, pop_s, n1, n2, nf;
  for (int k = 0; k < samples; ++k) {
    time_ns.append(times[k] * 1e9);
    pop_g.append(result.population(k, tpd::kGround));
    pop_e.append(result.population(k, tpd::kExcited));
    pop_f.append(result.population(k, tpd::kUpper));
    pop_s.append(result.population(k, tpd::kSink));
    n1.append(result.photons_storage(k));
    n2.append(result.photons_buffer(k));
    nf.append(result.photons_filter(k));
  }
  out["time_ns"] = time_ns;
  out["pop_g"] = pop_g;
  out["pop_e"] = pop_e;
  out["pop_f"] = pop_f;
  out["pop_s"] = pop_s;
  out["n_storage"] = n1;
  out["n_buffer"] = n2;
  out["n_filter"] = nf;
  out["trace_drift"] = result.max_trace_drift;
  out["dark_count"] = tpd::false_click_probability(params.sink_g, params.capture_time,
                                                   params.efficiency);
  if (input_photons >= 2) {
    const double click =
        tpd::click_probability(space, result.final_state, params.efficiency);
    out["click_probability"] = click;
    out["fidelity"] = 0.5 * (1.0 + click - out["dark_count"].cast<double>());
  }
  return out;
}

py::dict fidelity_py(const py::dict& model, const py::dict& space_dict) {
  const tpd::ModelParams params = tpd::parse_model(to_json(model), "model");
  tpd::SimOptions options;
  if (py::len(space_dict) > 0)
    options.space = tpd::parse_space(to_json(space_dict), "space");
  const tpd::FidelityPoint point = tpd::fidelity(params, options);
  py::dict out;
  out["click_probability"] = point.click_two;
  out["dark_count"] = point.click_dark;
  out["fidelity"] = point.fidelity;
  return out;
}

py::dict reference_set_py(const std::string& name) {
  if (name != "A" && name != "B") throw py::value_error("reference set must be A or B");
  const tpd::ModelParams p =
      tpd::reference_params(name == "A" ? tpd::ReferenceSet::A : tpd::ReferenceSet::B);
  py::dict out;
  out["omega1_ghz"] = tpd::to_ghz(p.omega1);
  out["omega2_ghz"] = tpd::to_ghz(p.omega2);
  out["omega_ge_ghz"] = tpd::to_ghz(p.omega_ge);
  out["omega_drive_ghz"] = tpd::to_ghz(p.omega_drive);
  out["kerr1_khz"] = tpd::to_mhz(p.kerr1) * 1e3;
  out["kerr2_khz"] = tpd::to_mhz(p.kerr2) * 1e3;
  out["two_photon_mhz"] = tpd::to_mhz(p.two_photon);
  out["coupling_mhz"] = tpd::to_mhz(p.coupling);
  out["drive_mhz"] = tpd::to_mhz(p.drive);
  out["loss1_khz"] = tpd::to_mhz(p.loss1) * 1e3;
  out["loss2_khz"] = tpd::to_mhz(p.loss2) * 1e3;
  out["rate_eg_mhz"] = tpd::to_mhz(p.rate_eg);
  out["kappa_eg_mhz"] = tpd::to_mhz(p.kappa_eg);
  out["dephasing_e_mhz"] = tpd::to_mhz(p.dephasing_e);
  out["dephasing_f_mhz"] = tpd::to_mhz(p.dephasing_f);
  out["efficiency"] = p.efficiency;
  out["capture_time_ns"] = p.capture_time * 1e9;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "two-photon microwave detector simulation engine";

  py::register_exception<tpd::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<tpd::PreconditionError>(m, "PreconditionError",
                                                 PyExc_ValueError);

  m.def("derive_circuit", &derive_circuit_py, py::arg("resonator1"),
        py::arg("resonator2"), py::arg("coupler"), py::arg("k_max") = 6,
        "Derived couplings of the SQUID-bridged resonator pair.");
  m.def("solve_jpm", &solve_jpm_py, py::arg("jpm"), py::arg("grid_points") = 8001,
        "Detector spectrum summary and relaxation-rate ratios.");
  m.def("simulate", &simulate_py, py::arg("model"), py::arg("space") = py::dict(),
        py::arg("input_photons") = 2, py::arg("samples") = 101,
        "Evolve the composite model and return population traces.");
  m.def("fidelity", &fidelity_py, py::arg("model"), py::arg("space") = py::dict(),
        "Detection fidelity of a model configuration.");
  m.def("false_click_probability", &tpd::false_click_probability, py::arg("sink_g"),
        py::arg("capture_time"), py::arg("efficiency"),
        "Closed-form dark-count probability (rates in rad/s, time in s).");
  m.def("reference_set", &reference_set_py, py::arg("name"),
        "Model dictionary for reference operating point A or B.");
}
