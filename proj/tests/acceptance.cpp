// Acceptance suite: every release criterion, one pass/fail line each.
// Run with no arguments for the full suite, or with a criterion number 1-8.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "tpd/circuit.hpp"
#include "tpd/jpm.hpp"
#include "tpd/lindblad.hpp"
#include "tpd/metrics.hpp"

using namespace tpd;

namespace {

int g_failures = 0;

void report(bool pass, const std::string& label, const std::string& detail) {
  std::printf("[%s] %s  (%s)\n", pass ? "PASS" : "FAIL", label.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

std::string versus(double value, double target) {
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "measured %.6g vs %.6g, %+.2f%%", value, target,
                (value / target - 1.0) * 100.0);
  return buffer;
}

JpmSpec reference_jpm() {
  JpmSpec spec;
  spec.critical_current = 2.5e-6;
  spec.loop_inductance = 300e-12;
  spec.capacitance = 405e-15;
  spec.bias_flux = 0.6316;
  return spec;
}

// The printed bias flux is rounded to four decimals while the e-f gap moves
// by ~0.6 GHz per 1e-5 of flux; the drive-resonant flux inside the rounding
// band reconstructs the unrounded operating point.
double calibrated_flux() {
  SpectrumOptions quick;
  quick.grid_points = 4001;
  return drive_resonant_flux(reference_jpm(), from_ghz(3.566), 0.63155, 0.63165, quick);
}

std::vector<double> linspace(double end, int samples) {
  std::vector<double> t(samples);
  for (int i = 0; i < samples; ++i) t[i] = end * i / (samples - 1);
  return t;
}

void criterion_1() {
  report(within(to_ghz(josephson_energy(50e-9)), 24.8, 0.005),
         "1a coupler junction energy 24.8 GHz",
         versus(to_ghz(josephson_energy(50e-9)), 24.8));
  report(within(to_mhz(charging_energy(1e-12)), 19.4, 0.005),
         "1b storage charging energy 19.4 MHz",
         versus(to_mhz(charging_energy(1e-12)), 19.4));
  report(within(to_ghz(inductive_energy(1e-9)), 163.2, 0.005),
         "1c storage inductive energy 163.2 GHz",
         versus(to_ghz(inductive_energy(1e-9)), 163.2));
  report(within(to_ghz(josephson_energy(2.5e-6)), 1243.4, 0.005),
         "1d detector junction energy 1243.4 GHz",
         versus(to_ghz(josephson_energy(2.5e-6)), 1243.4));
  report(within(to_ghz(inductive_energy(300e-12)), 544.0, 0.005),
         "1e detector inductive energy 544.0 GHz",
         versus(to_ghz(inductive_energy(300e-12)), 544.0));
  report(within(to_mhz(charging_energy(405e-15)), 47.9, 0.005),
         "1f detector charging energy 47.9 MHz",
         versus(to_mhz(charging_energy(405e-15)), 47.9));
}

void criterion_2() {
  const JpmSpectrum printed = solve_spectrum(reference_jpm());
  report(printed.count_below_barrier(WellLabel::LeftWell) == 2 &&
             printed.count_below_barrier(WellLabel::RightWell) == 94,
         "2a well counts (2, 94) at the printed bias",
         "shallow " + std::to_string(printed.count_below_barrier(WellLabel::LeftWell)) +
             ", deep " + std::to_string(printed.count_below_barrier(WellLabel::RightWell)));
  report(printed.index_g + 1 == 93 && printed.index_e + 1 == 95 &&
             printed.index_f + 1 == 96,
         "2b role indices 93/95/96 in the energy ladder",
         std::to_string(printed.index_g + 1) + "/" + std::to_string(printed.index_e + 1) +
             "/" + std::to_string(printed.index_f + 1));
  report(within(to_ghz(printed.omega_ge()), 10.758, 0.01),
         "2c g-e transition 10.758 GHz at the printed bias",
         versus(to_ghz(printed.omega_ge()), 10.758));

  const double flux = calibrated_flux();
  JpmSpec at = reference_jpm();
  at.bias_flux = flux;
  const JpmSpectrum calibrated = solve_spectrum(at);
  report(std::abs(flux - 0.6316) < 5e-5 &&
             calibrated.count_below_barrier(WellLabel::LeftWell) == 2 &&
             calibrated.count_below_barrier(WellLabel::RightWell) == 94,
         "2d calibrated operating flux rounds to the printed value",
         "flux " + std::to_string(flux));
  report(within(to_ghz(calibrated.omega_ef()), 3.566, 0.01),
         "2e e-f transition 3.566 GHz at the calibrated flux",
         versus(to_ghz(calibrated.omega_ef()), 3.566));
  report(within(to_ghz(calibrated.omega_ge()), 10.758, 0.01),
         "2f g-e transition within 1% at the calibrated flux",
         versus(to_ghz(calibrated.omega_ge()), 10.758));
}

void criterion_3() {
  JpmSpec at = reference_jpm();
  at.bias_flux = calibrated_flux();
  const JpmSpectrum spectrum = solve_spectrum(at);
  const RateTable table = rate_table(charge_matrix(spectrum), spectrum);
  report(within(table.fg, 0.0184, 0.01), "3a f->g ratio 0.0184", versus(table.fg, 0.0184));
  report(within(table.fe, 0.0458, 0.01), "3b f->e ratio 0.0458", versus(table.fe, 0.0458));
  report(within(table.sink_f, 121.56, 0.01), "3c f cascade 121.56",
         versus(table.sink_f, 121.56));
  report(within(table.sink_e, 0.4817, 0.01), "3d e cascade 0.4817",
         versus(table.sink_e, 0.4817));
  report(within(table.sink_g, 0.0007, 0.01), "3e g cascade 0.0007",
         versus(table.sink_g, 0.0007));
}

void criterion_4() {
  const DephasingRates rates = dephasing_rates(reference_jpm(), 1e-6, kTwoPi * 1.0);
  report(within(to_mhz(rates.rate_e), 1.3, 0.10), "4a e dephasing 1.3 MHz",
         versus(to_mhz(rates.rate_e), 1.3));
  report(within(to_mhz(rates.rate_f), 30.0, 0.10), "4b f dephasing 30 MHz",
         versus(to_mhz(rates.rate_f), 30.0));
}

void criterion_5() {
  for (const auto set : {ReferenceSet::A, ReferenceSet::B}) {
    const char tag = set == ReferenceSet::A ? 'A' : 'B';
    const double target = set == ReferenceSet::A ? 0.9924 : 0.9979;
    const ModelParams params = reference_params(set);

    SimOptions sim;  // default truncations 5/3/3
    const FidelityPoint base = fidelity(params, sim);
    report(std::abs(base.fidelity - target) <= 0.003,
           std::string("5.") + tag + "1 fidelity at default truncations",
           versus(100 * base.fidelity, 100 * target) + " pp tol 0.3");

    bool converged = true;
    std::string drifts;
    for (int axis = 0; axis < 3; ++axis) {
      SimOptions bumped = sim;
      if (axis == 0) bumped.space.n_storage += 1;
      if (axis == 1) bumped.space.n_buffer += 1;
      if (axis == 2) bumped.space.n_filter += 1;
      const double delta =
          std::abs(fidelity(params, bumped).click_two - base.click_two);
      converged = converged && delta < 1e-4;
      drifts += (drifts.empty() ? "" : ", ") + std::to_string(delta);
    }
    report(converged, std::string("5.") + tag + "2 click probability truncation-stable",
           "increment drifts " + drifts);

    SimOptions refined;
    refined.space.n_storage = 6;
    refined.space.n_buffer = 4;
    refined.space.n_filter = 4;
    const FidelityPoint fine = fidelity(params, refined);
    report(std::abs(fine.fidelity - target) <= 0.001,
           std::string("5.") + tag + "3 fidelity after truncation refinement",
           versus(100 * fine.fidelity, 100 * target) + " pp tol 0.1");
  }
}

void criterion_6() {
  HilbertSpace small;
  small.n_storage = 3;
  small.n_buffer = 2;
  small.n_filter = 2;
  EvolveOptions tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-13;

  {
    ModelParams p;
    p.omega1 = from_ghz(5.379);
    p.omega2 = 2.0 * p.omega1;
    p.omega_ge = p.omega2;
    p.omega_drive = from_ghz(3.566);
    p.omega_gf = p.omega_ge + p.omega_drive;
    p.omega_filter = p.omega_ge;
    p.two_photon = from_mhz(20.4);
    const MasterEquation equation = build_model(small, p);
    const auto rho0 = fock_state(small, 2, 0, kGround, 0);
    const auto times = linspace(60e-9, 41);
    const EvolutionResult result = evolve(equation, rho0, times, tight);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double expected =
          std::pow(std::cos(std::sqrt(2.0) * p.two_photon * times[k]), 2);
      worst = std::max(worst, std::abs(0.5 * result.photons_storage(k) - expected));
    }
    report(worst < 1e-6, "6a pair-exchange oscillation matches the analytic block",
           "max deviation " + std::to_string(worst));
  }
  {
    ModelParams p;
    p.omega1 = from_ghz(5.379);
    p.omega2 = 2.0 * p.omega1;
    p.omega_ge = p.omega2;
    p.omega_drive = from_ghz(3.566);
    p.omega_gf = p.omega_ge + p.omega_drive;
    p.omega_filter = p.omega_ge;
    p.sink_g = 0.0007 * from_mhz(5.0);
    const MasterEquation equation = build_model(small, p);
    const auto rho0 = fock_state(small, 0, 0, kGround, 0);
    const auto times = linspace(100e-9, 11);
    const EvolutionResult result = evolve(equation, rho0, times, tight);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double expected = false_click_probability(p.sink_g, times[k], 1.0);
      worst = std::max(worst, std::abs(result.population(k, kSink) - expected));
    }
    report(worst < 1e-8, "6b vacuum dark counts match the closed form",
           "max deviation " + std::to_string(worst));
  }
}

void criterion_7() {
  EvolveOptions tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-13;

  {
    HilbertSpace space;
    const ModelParams params = reference_params(ReferenceSet::A);
    const MasterEquation equation = build_model(space, params);
    const auto rho0 = fock_state(space, 2, 0, kGround, 0);
    const EvolutionResult result =
        evolve(equation, rho0, linspace(params.capture_time, 26));
    report(result.max_trace_drift < 1e-7, "7a trace drift below 1e-7",
           std::to_string(result.max_trace_drift));
    report(result.max_hermiticity_defect < 1e-9, "7b hermiticity defect below 1e-9",
           std::to_string(result.max_hermiticity_defect));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(result.final_state);
    report(es.eigenvalues().minCoeff() > -1e-8, "7c positivity floor above -1e-8",
           std::to_string(es.eigenvalues().minCoeff()));
  }
  {
    HilbertSpace small;
    small.n_storage = 3;
    small.n_buffer = 2;
    small.n_filter = 2;
    ModelParams p = reference_params(ReferenceSet::A);
    p.loss1 = p.loss2 = p.rate_eg = p.kappa_eg = p.kappa_filter = 0.0;
    p.rate_fe = p.rate_fg = p.kappa_fe = p.kappa_fg = 0.0;
    p.sink_g = p.sink_e = p.sink_f = 0.0;
    p.dephasing_e = p.dephasing_f = 0.0;
    const MasterEquation equation = build_model(small, p);
    const auto rho0 = fock_state(small, 2, 0, kGround, 0);
    const EvolutionResult result = evolve(equation, rho0, linspace(50e-9, 11), tight);
    double purity_drift = 0.0;
    const Eigen::MatrixXcd rho = result.final_state;
    purity_drift = std::abs((rho * rho).trace().real() - 1.0);
    report(purity_drift < 1e-8, "7d unitary-limit purity drift below 1e-8",
           std::to_string(purity_drift));
  }
  {
    HilbertSpace space;
    ModelParams p = reference_params(ReferenceSet::A);
    p.drive = 0.0;
    p.loss1 = p.loss2 = p.rate_eg = p.kappa_eg = p.kappa_filter = 0.0;
    p.rate_fe = p.rate_fg = p.kappa_fe = p.kappa_fg = 0.0;
    p.sink_g = p.sink_e = p.sink_f = 0.0;
    p.dephasing_e = p.dephasing_f = 0.0;
    const MasterEquation equation = build_model(space, p);
    const auto rho0 = fock_state(space, 2, 0, kGround, 0);
    const EvolutionResult result = evolve(equation, rho0, linspace(80e-9, 17), tight);
    double worst = 0.0;
    for (std::size_t k = 0; k < result.times.size(); ++k) {
      const double weighted = result.photons_storage(k) +
                              2.0 * result.photons_buffer(k) +
                              2.0 * result.population(k, kExcited);
      worst = std::max(worst, std::abs(weighted - 2.0));
    }
    report(worst < 1e-8, "7e weighted excitation number conserved to 1e-8",
           "max deviation " + std::to_string(worst));
  }
  {
    HilbertSpace space;
    ModelParams p = reference_params(ReferenceSet::A);
    p.sink_g = 0.0;
    const MasterEquation equation = build_model(space, p);
    const auto rho0 = fock_state(space, 1, 0, kGround, 0);
    const EvolutionResult result = evolve(equation, rho0, linspace(50e-9, 11));
    double worst = 0.0;
    for (std::size_t k = 0; k < result.times.size(); ++k)
      worst = std::max(worst, result.population(k, kSink));
    report(worst < 1e-10, "7f single-photon input stays blind to 1e-10",
           "max sink population " + std::to_string(worst));
  }
}

void criterion_8() {
  SimOptions sim;
  sim.space.n_storage = 4;
  sim.space.n_buffer = 2;
  sim.space.n_filter = 2;

  {
    // Coupling-drive map at equal anchor rates: the maximum sits strictly
    // inside the grid.
    ModelParams base = reference_params(ReferenceSet::A);
    apply_rate_anchors(base, from_mhz(1.0), from_mhz(1.0), reference_ratios());
    SweepSpec spec;
    spec.baseline = base;
    spec.sim = sim;
    spec.axes = {SweepAxis{"two_photon", from_mhz(6.0), from_mhz(45.0), 9, false},
                 SweepAxis{"drive", from_mhz(60.0), from_mhz(480.0), 9, false}};
    const FidelityMap map = sweep(spec, 0);
    const int n1 = 9, n2 = 9;
    const int i = map.argmax / n2, j = map.argmax % n2;
    bool interior = i > 0 && i < n1 - 1 && j > 0 && j < n2 - 1;
    bool strict = true;
    for (int a = 0; a < n1 && strict; ++a) {
      for (int b = 0; b < n2 && strict; ++b) {
        if (a == 0 || a == n1 - 1 || b == 0 || b == n2 - 1) {
          strict = map.cells[a * n2 + b].point.fidelity < map.best_fidelity;
        }
      }
    }
    report(interior && strict, "8a coupling-drive map has a strict interior maximum",
           "argmax cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  {
    // Internal-loss trend flips sign between slow and fast engineered decay.
    auto fmax_at = [&](double rate_eg, double kappa_eg) {
      ModelParams base = reference_params(ReferenceSet::A);
      apply_rate_anchors(base, rate_eg, kappa_eg, reference_ratios());
      SweepSpec spec;
      spec.baseline = base;
      spec.sim = sim;
      spec.axes = {SweepAxis{"two_photon", base.two_photon, base.two_photon, 1, false}};
      spec.inner_max =
          SweepSpec::InnerMax{SweepAxis{"two_photon", from_mhz(8.0), from_mhz(40.0), 5, false},
                              SweepAxis{"drive", from_mhz(80.0), from_mhz(400.0), 5, false}};
      return sweep(spec, 0).best_fidelity;
    };
    const double slow_lo = fmax_at(from_mhz(0.25), from_mhz(0.25));
    const double slow_hi = fmax_at(from_mhz(1.0), from_mhz(0.25));
    const double fast_lo = fmax_at(from_mhz(0.25), from_mhz(8.0));
    const double fast_hi = fmax_at(from_mhz(1.0), from_mhz(8.0));
    report(slow_hi > slow_lo, "8b1 internal losses help at slow engineered decay",
           std::to_string(slow_lo) + " -> " + std::to_string(slow_hi));
    report(fast_hi < fast_lo, "8b2 internal losses hurt at fast engineered decay",
           std::to_string(fast_lo) + " -> " + std::to_string(fast_hi));
  }
  {
    // Best fidelity against the capture window rises, peaks once, then falls.
    ModelParams base = reference_params(ReferenceSet::A);
    apply_rate_anchors(base, from_mhz(1.0), from_mhz(3.0), reference_ratios());
    base.capture_time = 100e-9;
    SweepSpec spec;
    spec.baseline = base;
    spec.sim = sim;
    spec.axes = {SweepAxis{"capture_time", 5e-9, 100e-9, 12, false}};
    // The inner grid needs enough resolution that the discrete maximization
    // does not carve spurious dips into the envelope.
    spec.inner_max =
        SweepSpec::InnerMax{SweepAxis{"two_photon", from_mhz(8.0), from_mhz(40.0), 7, false},
                            SweepAxis{"drive", from_mhz(80.0), from_mhz(400.0), 7, false}};
    const FidelityMap map = sweep(spec, 0);
    int sign_changes = 0;
    int previous = 0;
    std::string profile;
    for (std::size_t k = 1; k < map.cells.size(); ++k) {
      const double diff =
          map.cells[k].point.fidelity - map.cells[k - 1].point.fidelity;
      const int sign = diff > 0 ? 1 : -1;
      if (previous != 0 && sign != previous) ++sign_changes;
      previous = sign;
      profile += sign > 0 ? '+' : '-';
    }
    report(sign_changes == 1 && profile.front() == '+' && profile.back() == '-',
           "8c capture-time curve rises then declines once", profile);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const int which = argc > 1 ? std::atoi(argv[1]) : 0;
  using Criterion = void (*)();
  const Criterion criteria[8] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                 criterion_5, criterion_6, criterion_7, criterion_8};
  if (which < 0 || which > 8) {
    std::fprintf(stderr, "usage: %s [criterion 1-8]\n", argv[0]);
    return 64;
  }
  if (which == 0) {
    for (const auto criterion : criteria) criterion();
  } else {
    criteria[which - 1]();
  }
  std::printf("%s: %d failing check(s)\n", g_failures == 0 ? "OK" : "FAILURES",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
