#include <cmath>
#include <fstream>

#include "tpd/config_io.hpp"

namespace tpd::cli {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open output file " + file.string());
  return out;
}

void write_json(const fs::path& file, const Json& payload) {
  auto out = open_out(file);
  out << payload.dump(2) << "\n";
}

// Distance of the equilibrium phase difference from the nearest odd multiple
// of pi/2 (zero exactly in the even-order-free regime).
double parity_residual(double delta) {
  return std::abs(std::remainder(delta - std::numbers::pi / 2, std::numbers::pi));
}

Json resonator_json(const ResonatorDerived& r) {
  return Json{{"charging_energy_mhz", to_mhz(r.charging_energy)},
              {"inductive_energy_ghz", to_ghz(r.inductive_energy)},
              {"loaded_charging_energy_mhz", to_mhz(r.loaded_charging_energy)},
              {"renorm_inductive_energy_ghz", to_ghz(r.renorm_inductive_energy)},
              {"bare_frequency_ghz", to_ghz(r.bare_frequency)},
              {"frequency_ghz", to_ghz(r.frequency)},
              {"phi_zpf", r.phi_zpf},
              {"n_zpf", r.n_zpf},
              {"cubic_strength_mhz", to_mhz(r.cubic_strength)},
              {"self_kerr_khz", to_mhz(r.self_kerr) * 1e3},
              {"sw_parameter", r.sw_parameter},
              {"sw_parameter_large", r.sw_parameter_large}};
}

Json model_json(const CircuitModel& model) {
  Json inductive = Json::array();
  for (const auto& g : model.couplings.inductive) {
    inductive.push_back(Json{{"storage_order", g.storage_order},
                             {"buffer_order", g.buffer_order},
                             {"strength_mhz", to_mhz(g.strength)}});
  }
  return Json{
      {"resonator1", resonator_json(model.resonators[0])},
      {"resonator2", resonator_json(model.resonators[1])},
      {"coupler",
       Json{{"josephson_energy_ghz", to_ghz(model.coupler.josephson_energy)},
            {"effective_energy_ghz", to_ghz(model.coupler.effective_energy)},
            {"xi", model.coupler.xi},
            {"phase_shift", model.coupler.phase_shift},
            {"phi1_min", model.coupler.phi1_min},
            {"phi2_min", model.coupler.phi2_min},
            {"delta", model.coupler.delta},
            {"equilibrium_residual", model.coupler.equilibrium_residual},
            {"taylor_u", model.coupler.taylor_u},
            {"total_capacitance_ff", model.coupler.total_capacitance * 1e15},
            {"coupling_charging_energy_mhz",
             to_mhz(model.coupler.coupling_charging_energy)}}},
      {"couplings", Json{{"capacitive_mhz", to_mhz(model.couplings.capacitive)},
                         {"linear_mhz", to_mhz(model.couplings.linear)},
                         {"two_photon_mhz", to_mhz(model.couplings.two_photon)},
                         {"inductive", inductive}}}};
}

struct GridSpec {
  double lower = 0.0, upper = 0.0;
  int points = 1;
  std::vector<double> values() const {
    std::vector<double> out(points);
    for (int i = 0; i < points; ++i)
      out[i] = points == 1 ? lower : lower + (upper - lower) * i / (points - 1);
    return out;
  }
};

GridSpec parse_grid(const Json& object, const std::string& where) {
  reject_unknown_keys(object, {"min", "max", "points"}, where);
  GridSpec grid;
  grid.lower = object.at("min").get<double>();
  grid.upper = object.at("max").get<double>();
  grid.points = object.at("points").get<int>();
  if (grid.points < 1) throw ConfigError(where + ".points: must be >= 1");
  return grid;
}

}  // namespace

void run_coupler(const RunOptions& options) {
  const Json root = load_config(options.config);
  reject_unknown_keys(root, {"resonators", "coupler", "k_max", "flux_grid", "flux_prime_grid"},
                      "coupler");
  if (!root.contains("resonators") || !root.at("resonators").is_array() ||
      root.at("resonators").size() != 2)
    throw ConfigError("coupler: 'resonators' must be an array of two objects");
  const std::array<ResonatorSpec, 2> resonators = {
      parse_resonator(root.at("resonators")[0], "coupler.resonators[0]"),
      parse_resonator(root.at("resonators")[1], "coupler.resonators[1]")};
  CouplerSpec coupler = parse_coupler(root.at("coupler"), "coupler.coupler");
  const int k_max = root.contains("k_max") ? root.at("k_max").get<int>() : 6;
  GridSpec flux_grid{coupler.flux, coupler.flux, 1};
  if (root.contains("flux_grid")) flux_grid = parse_grid(root.at("flux_grid"), "coupler.flux_grid");
  GridSpec prime_grid{coupler.flux_prime, coupler.flux_prime, 1};
  if (root.contains("flux_prime_grid")) {
    if (coupler.kind != CouplerKind::BiSquid)
      throw ConfigError("coupler.flux_prime_grid: only valid for the bisquid type");
    prime_grid = parse_grid(root.at("flux_prime_grid"), "coupler.flux_prime_grid");
  }

  ensure_dir(options.out_dir);
  {
    auto csv = open_out(options.out_dir / "map.csv");
    csv << "phi_c,phi_c_prime,E_eff_GHz,g21_MHz,parity_residual\n";
    for (double prime : prime_grid.values()) {
      for (double flux : flux_grid.values()) {
        CouplerSpec at = coupler;
        at.flux = flux;
        at.flux_prime = prime;
        const CircuitModel model = derive_circuit(resonators, at, k_max);
        csv << format_number(flux) << ',' << format_number(prime) << ','
            << format_number(to_ghz(model.coupler.effective_energy)) << ','
            << format_number(to_mhz(model.couplings.two_photon)) << ','
            << format_number(parity_residual(model.coupler.delta)) << '\n';
      }
    }
  }
  {
    const CircuitModel model = derive_circuit(resonators, coupler, k_max);
    write_json(options.out_dir / "derived.json", model_json(model));
  }
  {
    Json payload;
    try {
      const OddParityPoint point = find_odd_parity_flux(coupler, resonators);
      payload["odd_parity"] = Json{{"flux", point.flux},
                                   {"delta", point.delta},
                                   {"effective_energy_ghz", to_ghz(point.effective_energy)},
                                   {"two_photon_mhz", to_mhz(point.two_photon)},
                                   {"coupling_vanishes", point.coupling_vanishes}};
    } catch (const NoRootError& err) {
      payload["odd_parity"] = Json{{"error", err.what()}};
    }
    if (coupler.kind == CouplerKind::BiSquid && coupler.asymmetry <= 1.0) {
      const CouplerOffPoint off = coupler_off_point(coupler);
      payload["switch_off"] = Json{{"flux", off.flux},
                                   {"flux_prime", off.flux_prime},
                                   {"residual_energy_ghz", to_ghz(off.residual_energy)}};
    }
    write_json(options.out_dir / "operating_points.json", payload);
  }
}

void run_jpm(const RunOptions& options) {
  const Json root = load_config(options.config);
  reject_unknown_keys(root,
                      {"jpm", "grid_points", "range_margin", "check_convergence",
                       "noise", "buffer"},
                      "jpm");
  const JpmSpec spec = parse_jpm(root.at("jpm"), "jpm.jpm");
  SpectrumOptions solver;
  if (root.contains("grid_points")) solver.grid_points = root.at("grid_points").get<int>();
  if (root.contains("range_margin"))
    solver.range_margin = root.at("range_margin").get<double>();
  if (root.contains("check_convergence"))
    solver.check_convergence = root.at("check_convergence").get<bool>();

  ensure_dir(options.out_dir);

  const JpmSpectrum spectrum = solve_spectrum(spec, solver);
  if (!spectrum.shape.double_well) {
    // Single-well bias: report the potential profile and note the condition.
    Json levels = Json::array();
    for (double energy : spectrum.energies) levels.push_back(to_ghz(energy));
    Json payload{{"double_well", false},
                 {"note", "no interwell barrier at this bias"},
                 {"levels_ghz", levels}};
    write_json(options.out_dir / "spectrum.json", payload);
    auto csv = open_out(options.out_dir / "wavefunctions.csv");
    csv << "phi,potential_ghz\n";
    const double center = kTwoPi * spec.bias_flux;
    for (int i = 0; i <= 400; ++i) {
      const double phi = center - 6.0 + 12.0 * i / 400;
      csv << format_number(phi) << ',' << format_number(to_ghz(jpm_potential(phi, spec)))
          << '\n';
    }
    return;
  }

  const ChargeMatrix charge = charge_matrix(spectrum);
  const RateTable table = rate_table(charge, spectrum);

  {
    Json energies = Json::array();
    for (std::size_t i = 0; i < spectrum.energies.size(); ++i) {
      const char* label = spectrum.labels[i] == WellLabel::LeftWell ? "left"
                          : spectrum.labels[i] == WellLabel::RightWell ? "right"
                                                                       : "superbarrier";
      energies.push_back(Json{{"index", static_cast<int>(i) + 1},
                              {"energy_ghz", to_ghz(spectrum.energies[i])},
                              {"label", label}});
    }
    Json payload{
        {"double_well", true},
        {"charging_energy_mhz", to_mhz(spectrum.charging_energy)},
        {"left_below_barrier", spectrum.count_below_barrier(WellLabel::LeftWell)},
        {"right_below_barrier", spectrum.count_below_barrier(WellLabel::RightWell)},
        {"superbarrier", spectrum.superbarrier_count()},
        {"index_g", spectrum.index_g + 1},
        {"index_e", spectrum.index_e + 1},
        {"index_f", spectrum.index_f + 1},
        {"omega_ge_ghz", to_ghz(spectrum.omega_ge())},
        {"omega_ef_ghz", to_ghz(spectrum.omega_ef())},
        {"omega_gf_ghz", to_ghz(spectrum.omega_gf())},
        {"barrier",
         Json{{"left_minimum", spectrum.shape.left_minimum},
              {"barrier_top", spectrum.shape.barrier_top},
              {"right_minimum", spectrum.shape.right_minimum},
              {"u_left_ghz", to_ghz(spectrum.shape.u_left)},
              {"u_top_ghz", to_ghz(spectrum.shape.u_top)},
              {"u_right_ghz", to_ghz(spectrum.shape.u_right)}}},
        {"levels", energies}};
    write_json(options.out_dir / "spectrum.json", payload);
  }
  {
    auto csv = open_out(options.out_dir / "wavefunctions.csv");
    csv << "phi,potential_ghz,psi_g,psi_e,psi_f\n";
    const int stride = std::max<int>(1, static_cast<int>(spectrum.grid.size()) / 800);
    for (std::size_t i = 0; i < spectrum.grid.size(); i += stride) {
      csv << format_number(spectrum.grid[i]) << ','
          << format_number(to_ghz(jpm_potential(spectrum.grid[i], spec))) << ','
          << format_number(spectrum.wavefunctions(i, spectrum.index_g)) << ','
          << format_number(spectrum.wavefunctions(i, spectrum.index_e)) << ','
          << format_number(spectrum.wavefunctions(i, spectrum.index_f)) << '\n';
    }
  }
  {
    auto csv = open_out(options.out_dir / "charge.csv");
    csv << "upper,lower,magnitude\n";
    const int m = static_cast<int>(charge.elements.rows());
    for (int a = 1; a < m; ++a)
      for (int b = 0; b < a; ++b)
        csv << a + 1 << ',' << b + 1 << ','
            << format_number(std::abs(charge.elements(a, b))) << '\n';
  }
  {
    Json payload{{"fg", table.fg},
                 {"fe", table.fe},
                 {"sink_f", table.sink_f},
                 {"sink_e", table.sink_e},
                 {"sink_g", table.sink_g},
                 {"charge_asymmetry", charge.max_asymmetry}};
    if (root.contains("noise")) {
      const Json& noise = root.at("noise");
      reject_unknown_keys(noise, {"amplitude_phi0", "cutoff_hz"}, "jpm.noise");
      const double amplitude = noise.at("amplitude_phi0").get<double>();
      const double cutoff = kTwoPi * noise.at("cutoff_hz").get<double>();
      const DephasingRates rates = dephasing_rates(spec, amplitude, cutoff, solver);
      payload["dephasing"] = Json{{"rate_e_mhz", to_mhz(rates.rate_e)},
                                  {"rate_f_mhz", to_mhz(rates.rate_f)},
                                  {"zeta_e", rates.zeta_e},
                                  {"zeta_f", rates.zeta_f},
                                  {"slope_e_ghz_per_phi0", to_ghz(rates.slope_e)},
                                  {"slope_f_ghz_per_phi0", to_ghz(rates.slope_f)}};
    }
    if (root.contains("buffer")) {
      const Json& buffer = root.at("buffer");
      reject_unknown_keys(buffer, {"n_zpf", "loaded_capacitance_pf"}, "jpm.buffer");
      const double n_zpf = buffer.at("n_zpf").get<double>();
      const double cap = buffer.at("loaded_capacitance_pf").get<double>() * 1e-12;
      const DriveCoupling dc = drive_and_coupling(spec, charge, spectrum, n_zpf, cap);
      payload["drive_coupling"] = Json{{"drive_mhz", to_mhz(dc.drive_strength)},
                                       {"coupling_mhz", to_mhz(dc.coupling_strength)},
                                       {"coupling_energy_mhz", to_mhz(dc.coupling_energy)}};
    }
    write_json(options.out_dir / "rates.json", payload);
  }
}

void run_simulate(const RunOptions& options) {
  const Json root = load_config(options.config);
  reject_unknown_keys(root, {"model", "space", "input_photons", "samples"}, "simulate");
  const ModelParams params = parse_model(root.at("model"), "simulate.model");
  HilbertSpace space;
  if (root.contains("space")) space = parse_space(root.at("space"), "simulate.space");
  const int input_photons =
      root.contains("input_photons") ? root.at("input_photons").get<int>() : 2;
  const int samples = root.contains("samples") ? root.at("samples").get<int>() : 101;
  if (input_photons < 0 || input_photons >= space.n_storage)
    throw ConfigError("simulate.input_photons: outside the storage truncation");
  if (samples < 2) throw ConfigError("simulate.samples: need at least 2");

  ensure_dir(options.out_dir);

  EvolveOptions ode;
  ode.rtol = options.tol_rel;
  ode.atol = options.tol_abs;
  const MasterEquation equation = build_model(space, params);
  const Eigen::MatrixXcd rho0 = fock_state(space, input_photons, 0, kGround, 0);
  std::vector<double> times(samples);
  for (int i = 0; i < samples; ++i)
    times[i] = params.capture_time * i / (samples - 1);
  const EvolutionResult result = evolve(equation, rho0, times, ode);

  {
    auto csv = open_out(options.out_dir / "trajectory.csv");
    csv << "time_ns,pop_g,pop_e,pop_f,pop_s,n_storage,n_buffer,n_filter\n";
    for (int k = 0; k < samples; ++k) {
      csv << format_number(times[k] * 1e9);
      for (int col = 0; col < 7; ++col) csv << ',' << format_number(result.observables(k, col));
      csv << '\n';
    }
  }
  {
    const double dark =
        false_click_probability(params.sink_g, params.capture_time, params.efficiency);
    Json payload{{"input_photons", input_photons},
                 {"capture_time_ns", params.capture_time * 1e9},
                 {"dark_count", dark},
                 {"final_sink_population", result.population(samples - 1, kSink)},
                 {"trace_drift", result.max_trace_drift},
                 {"hermiticity_defect", result.max_hermiticity_defect}};
    if (input_photons >= 2) {
      const double click = click_probability(space, result.final_state, params.efficiency);
      payload["click_probability"] = click;
      payload["fidelity"] = 0.5 * (1.0 + click - dark);
    }
    write_json(options.out_dir / "summary.json", payload);
  }
}

void run_sweep(const RunOptions& options) {
  const Json root = load_config(options.config);
  SweepSpec spec = parse_sweep_config(root);
  spec.sim.ode.rtol = options.tol_rel;
  spec.sim.ode.atol = options.tol_abs;

  ensure_dir(options.out_dir);
  const FidelityMap map = sweep(spec, options.threads);

  auto natural_units = [](const std::string& parameter, double value) {
    if (parameter == "capture_time" || parameter == "t_cpt") return value * 1e9;
    return to_mhz(value);
  };

  {
    auto csv = open_out(options.out_dir / "sweep.csv");
    csv << "axis1,axis2,P_clk2,P_dark,F\n";
    for (const auto& cell : map.cells) {
      csv << format_number(natural_units(map.axes[0].parameter, cell.axis1)) << ','
          << format_number(map.axes.size() == 2
                               ? natural_units(map.axes[1].parameter, cell.axis2)
                               : 0.0)
          << ',';
      if (cell.failed) {
        csv << "nan,nan,nan\n";
      } else {
        csv << format_number(cell.point.click_two) << ','
            << format_number(cell.point.click_dark) << ','
            << format_number(cell.point.fidelity) << '\n';
      }
    }
  }
  {
    Json payload{{"cells", static_cast<int>(map.cells.size())},
                 {"best_fidelity", map.best_fidelity}};
    if (map.argmax >= 0) {
      const auto& best = map.cells[map.argmax];
      payload["argmax"] = Json{
          {"index", map.argmax},
          {map.axes[0].parameter, natural_units(map.axes[0].parameter, best.axis1)}};
      if (map.axes.size() == 2)
        payload["argmax"][map.axes[1].parameter] =
            natural_units(map.axes[1].parameter, best.axis2);
    }
    write_json(options.out_dir / "argmax.json", payload);
  }
  {
    int failures = 0;
    for (const auto& cell : map.cells)
      if (cell.failed) ++failures;
    if (failures > 0) {
      auto log = open_out(options.out_dir / "failures.log");
      for (std::size_t i = 0; i < map.cells.size(); ++i)
        if (map.cells[i].failed)
          log << "cell " << i << ": " << map.cells[i].error << '\n';
    }
  }
}

void run_tables(const RunOptions& options) {
  // Reference reproduction recipe: circuit energies, detector spectrum at the
  // calibrated operating point, relaxation ratios, dephasing estimates and
  // the two quoted fidelity points.
  ensure_dir(options.out_dir);
  Json payload;

  {
    const std::array<ResonatorSpec, 2> resonators = {
        ResonatorSpec{1e-12, 1e-9, 0.0}, ResonatorSpec{0.5e-12, 0.5e-9, 0.0}};
    CouplerSpec coupler;
    coupler.critical_current = 50e-9;
    coupler.asymmetry = 0.4;
    coupler.flux = 0.1;
    const CircuitModel model = derive_circuit(resonators, coupler);
    payload["circuit"] =
        Json{{"josephson_energy_ghz", to_ghz(model.coupler.josephson_energy)},
             {"charging_energy1_mhz", to_mhz(model.resonators[0].charging_energy)},
             {"inductive_energy1_ghz", to_ghz(model.resonators[0].inductive_energy)},
             {"charging_energy2_mhz", to_mhz(model.resonators[1].charging_energy)},
             {"inductive_energy2_ghz", to_ghz(model.resonators[1].inductive_energy)}};
  }
  {
    JpmSpec spec;
    spec.critical_current = 2.5e-6;
    spec.loop_inductance = 300e-12;
    spec.capacitance = 405e-15;
    spec.bias_flux = 0.6316;
    payload["jpm_energies"] =
        Json{{"josephson_energy_ghz", to_ghz(josephson_energy(spec.critical_current))},
             {"inductive_energy_ghz", to_ghz(inductive_energy(spec.loop_inductance))},
             {"charging_energy_mhz", to_mhz(charging_energy(spec.capacitance))}};

    SpectrumOptions quick;
    quick.grid_points = 4001;
    const double calibrated =
        drive_resonant_flux(spec, from_ghz(3.566), 0.63155, 0.63165, quick);
    spec.bias_flux = calibrated;
    const JpmSpectrum spectrum = solve_spectrum(spec);
    const ChargeMatrix charge = charge_matrix(spectrum);
    const RateTable table = rate_table(charge, spectrum);
    const DephasingRates dephasing = dephasing_rates(spec, 1e-6, kTwoPi * 1.0);
    payload["operating_point"] =
        Json{{"bias_flux", calibrated},
             {"left_below_barrier", spectrum.count_below_barrier(WellLabel::LeftWell)},
             {"right_below_barrier", spectrum.count_below_barrier(WellLabel::RightWell)},
             {"omega_ge_ghz", to_ghz(spectrum.omega_ge())},
             {"omega_ef_ghz", to_ghz(spectrum.omega_ef())}};
    payload["rate_ratios"] = Json{{"fg", table.fg},
                                  {"fe", table.fe},
                                  {"sink_f", table.sink_f},
                                  {"sink_e", table.sink_e},
                                  {"sink_g", table.sink_g}};
    payload["dephasing"] = Json{{"rate_e_mhz", to_mhz(dephasing.rate_e)},
                                {"rate_f_mhz", to_mhz(dephasing.rate_f)}};
  }
  for (const auto set : {ReferenceSet::A, ReferenceSet::B}) {
    SimOptions sim;
    sim.ode.rtol = options.tol_rel;
    sim.ode.atol = options.tol_abs;
    const ModelParams params = reference_params(set);
    const FidelityPoint point = fidelity(params, sim);
    payload[set == ReferenceSet::A ? "set_a" : "set_b"] =
        Json{{"click_probability", point.click_two},
             {"dark_count", point.click_dark},
             {"fidelity_percent", 100.0 * point.fidelity},
             {"capture_time_ns", params.capture_time * 1e9}};
  }
  write_json(options.out_dir / "tables.json", payload);
}

}  // namespace tpd::cli
