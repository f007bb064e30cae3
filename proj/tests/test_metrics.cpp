#include "doctest.h"

#include <cmath>

#include "tpd/metrics.hpp"

using namespace tpd;

namespace {

// Compact space keeps the exploratory sweeps cheap; the golden runs use the
// default truncations.
SimOptions quick_sim() {
  SimOptions sim;
  sim.space.n_storage = 4;
  sim.space.n_buffer = 2;
  sim.space.n_filter = 2;
  return sim;
}

}  // namespace

TEST_CASE("anchored rates expand through the ratios") {
  ModelParams p = reference_params(ReferenceSet::A);
  apply_rate_anchors(p, from_mhz(2.0), from_mhz(6.0), reference_ratios());
  CHECK(p.rate_eg == doctest::Approx(from_mhz(2.0)));
  CHECK(p.kappa_eg == doctest::Approx(from_mhz(6.0)));
  CHECK(p.kappa_filter == doctest::Approx(from_mhz(600.0)));
  CHECK(p.rate_fg == doctest::Approx(0.0184 * from_mhz(2.0)));
  CHECK(p.kappa_fe == doctest::Approx(0.0458 * from_mhz(6.0)));
  CHECK(p.sink_g == doctest::Approx(0.0007 * from_mhz(8.0)));
  CHECK(p.sink_f == doctest::Approx(121.56 * from_mhz(8.0)));
}

TEST_CASE("reference operating points reach their quoted fidelities") {
  // Full default truncations; these are the headline numbers.
  const FidelityPoint a = fidelity(reference_params(ReferenceSet::A));
  CHECK(a.fidelity == doctest::Approx(0.9924).epsilon(0.003));
  const FidelityPoint b = fidelity(reference_params(ReferenceSet::B));
  CHECK(b.fidelity == doctest::Approx(0.9979).epsilon(0.003));
  CHECK(a.click_dark ==
        doctest::Approx(false_click_probability(
            reference_params(ReferenceSet::A).sink_g, 50e-9, 0.995)));
}

TEST_CASE("zero efficiency means a coin toss") {
  ModelParams p = reference_params(ReferenceSet::A);
  p.efficiency = 0.0;
  const FidelityPoint point = fidelity(p, quick_sim());
  CHECK(point.click_two == 0.0);
  CHECK(point.click_dark == 0.0);
  CHECK(point.fidelity == doctest::Approx(0.5));
}

TEST_CASE("fidelity is blind to the sign of the pair coupling") {
  const SimOptions sim = quick_sim();
  for (double scale : {0.6, 0.8, 1.0, 1.2, 1.4}) {
    ModelParams p = reference_params(ReferenceSet::A);
    p.two_photon *= scale;
    ModelParams m = p;
    m.two_photon = -p.two_photon;
    const double plus = fidelity(p, sim).fidelity;
    const double minus = fidelity(m, sim).fidelity;
    CHECK(std::abs(plus - minus) < 1e-8);
  }
}

TEST_CASE("dark counts degrade fidelity monotonically") {
  // With the two-photon click held fixed, the closed forms compose to a
  // strictly decreasing fidelity in sink_g * t.
  const double click_two = 0.98;
  double previous = 1.0;
  for (double exponent : {0.0, 0.01, 0.1, 0.5, 1.0, 3.0}) {
    const double dark = 0.995 * (1.0 - std::exp(-exponent));
    const double f = 0.5 * (1.0 + click_two - dark);
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("sweep axes") {
  SweepAxis axis{"two_photon", 1.0, 3.0, 5, false};
  const auto lin = axis.values();
  REQUIRE(lin.size() == 5);
  CHECK(lin[0] == doctest::Approx(1.0));
  CHECK(lin[2] == doctest::Approx(2.0));
  CHECK(lin[4] == doctest::Approx(3.0));

  axis.log_scale = true;
  axis.lower = 1.0;
  axis.upper = 100.0;
  axis.points = 3;
  const auto log = axis.values();
  CHECK(log[1] == doctest::Approx(10.0));

  axis.lower = -1.0;
  CHECK_THROWS_AS(axis.values(), PreconditionError);
}

TEST_CASE("single-cell sweep equals a direct evaluation") {
  const ModelParams base = reference_params(ReferenceSet::A);
  SweepSpec spec;
  spec.baseline = base;
  spec.sim = quick_sim();
  spec.axes = {SweepAxis{"two_photon", base.two_photon, base.two_photon, 1, false}};
  const FidelityMap map = sweep(spec, 1);
  REQUIRE(map.cells.size() == 1);
  CHECK(!map.cells[0].failed);
  const FidelityPoint direct = fidelity(base, spec.sim);
  CHECK(map.cells[0].point.fidelity == doctest::Approx(direct.fidelity).epsilon(1e-12));
  CHECK(map.argmax == 0);
}

TEST_CASE("sweeps are deterministic across thread counts") {
  SweepSpec spec;
  spec.baseline = reference_params(ReferenceSet::A);
  spec.sim = quick_sim();
  spec.axes = {SweepAxis{"two_photon", from_mhz(10.0), from_mhz(30.0), 3, false},
               SweepAxis{"drive", from_mhz(120.0), from_mhz(320.0), 3, false}};
  const FidelityMap serial = sweep(spec, 1);
  const FidelityMap parallel = sweep(spec, 2);
  REQUIRE(serial.cells.size() == parallel.cells.size());
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    CHECK(serial.cells[i].point.fidelity == parallel.cells[i].point.fidelity);
    CHECK(serial.cells[i].axis1 == parallel.cells[i].axis1);
  }
  CHECK(serial.argmax == parallel.argmax);
}

TEST_CASE("capture-time sweeps reuse one evolution per setting") {
  SweepSpec spec;
  spec.baseline = reference_params(ReferenceSet::A);
  spec.sim = quick_sim();
  spec.axes = {SweepAxis{"capture_time", 10e-9, 50e-9, 5, false}};
  const FidelityMap map = sweep(spec, 2);
  REQUIRE(map.cells.size() == 5);
  // Spot-check against independent single-point runs.
  for (std::size_t k : {std::size_t{0}, std::size_t{4}}) {
    ModelParams p = spec.baseline;
    p.capture_time = map.cells[k].axis1;
    const FidelityPoint direct = fidelity(p, spec.sim);
    CHECK(map.cells[k].point.fidelity ==
          doctest::Approx(direct.fidelity).epsilon(1e-7));
  }
}

TEST_CASE("anchor-rate sweeps rescale the cascade rates") {
  SweepSpec spec;
  spec.baseline = reference_params(ReferenceSet::A);
  spec.sim = quick_sim();
  spec.axes = {SweepAxis{"kappa_eg", from_mhz(2.0), from_mhz(8.0), 2, false}};
  const FidelityMap map = sweep(spec, 2);
  REQUIRE(map.cells.size() == 2);
  // Dark counts scale with sink_g = ratio * (rate_eg + kappa_eg).
  for (const auto& cell : map.cells) {
    const double unit = spec.baseline.rate_eg + cell.axis1;
    const double expected =
        false_click_probability(reference_ratios().sink_g * unit, 50e-9, 0.995);
    CHECK(cell.point.click_dark == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("guards reject out-of-validity axes") {
  SweepSpec spec;
  spec.baseline = reference_params(ReferenceSet::A);
  spec.sim = quick_sim();
  spec.axes = {SweepAxis{"two_photon", 0.0, spec.baseline.omega1, 3, false}};
  CHECK_THROWS_AS(sweep(spec, 1), PreconditionError);
  spec.axes = {SweepAxis{"drive", 0.0, from_ghz(3.0), 3, false}};
  CHECK_THROWS_AS(sweep(spec, 1), PreconditionError);
  spec.axes = {SweepAxis{"unknown_knob", 0.0, 1.0, 3, false}};
  CHECK_THROWS_AS(sweep(spec, 1), PreconditionError);
}

TEST_CASE("optimizer finds an interior optimum on a smooth landscape") {
  ModelParams base = reference_params(ReferenceSet::A);
  SimOptions sim = quick_sim();
  OptimizeBox box;
  box.two_photon_lower = from_mhz(8.0);
  box.two_photon_upper = from_mhz(36.0);
  box.drive_lower = from_mhz(100.0);
  box.drive_upper = from_mhz(380.0);
  box.coarse_points = 4;
  const Optimum best = optimize(base, sim, box, 2);
  CHECK(best.point.fidelity > 0.985);
  CHECK(!best.on_boundary);
  // The returned point beats its own coarse surroundings.
  for (double dg : {-from_mhz(3.0), from_mhz(3.0)}) {
    ModelParams probe = base;
    probe.two_photon = best.two_photon + dg;
    probe.drive = best.drive;
    CHECK(fidelity(probe, sim).fidelity <= best.point.fidelity + 1e-4);
  }
}

TEST_CASE("optimizer recovers the published operating couplings") {
  // The quoted two-photon/drive pairs maximize fidelity at their anchors;
  // the landscape is 1e-4-flat along the drive axis near the top.
  SimOptions sim = quick_sim();
  OptimizeBox box;
  box.two_photon_lower = from_mhz(8.0);
  box.two_photon_upper = from_mhz(40.0);
  box.drive_lower = from_mhz(80.0);
  box.drive_upper = from_mhz(400.0);
  const Optimum a = optimize(reference_params(ReferenceSet::A), sim, box, 2);
  CHECK(to_mhz(a.two_photon) == doctest::Approx(20.4).epsilon(0.10));
  CHECK(to_mhz(a.drive) == doctest::Approx(220.6).epsilon(0.15));
  const Optimum b = optimize(reference_params(ReferenceSet::B), sim, box, 2);
  CHECK(to_mhz(b.two_photon) == doctest::Approx(24.4).epsilon(0.10));
  CHECK(to_mhz(b.drive) == doctest::Approx(188.2).epsilon(0.15));
}

TEST_CASE("sweep maximum sits within one cell of the refined optimum") {
  const ModelParams base = reference_params(ReferenceSet::A);
  SimOptions sim;
  sim.space.n_storage = 3;
  sim.space.n_buffer = 2;
  sim.space.n_filter = 2;

  SweepSpec spec;
  spec.baseline = base;
  spec.sim = sim;
  spec.axes = {SweepAxis{"two_photon", from_mhz(10.0), from_mhz(34.0), 5, false},
               SweepAxis{"drive", from_mhz(100.0), from_mhz(340.0), 5, false}};
  const FidelityMap map = sweep(spec, 2);
  REQUIRE(map.argmax >= 0);

  OptimizeBox box;
  box.two_photon_lower = from_mhz(10.0);
  box.two_photon_upper = from_mhz(34.0);
  box.drive_lower = from_mhz(100.0);
  box.drive_upper = from_mhz(340.0);
  box.coarse_points = 5;
  const Optimum best = optimize(base, sim, box, 2);

  const double cell_g = from_mhz(24.0) / 4.0;
  const double cell_d = from_mhz(240.0) / 4.0;
  CHECK(std::abs(map.cells[map.argmax].axis1 - best.two_photon) <= cell_g + 1e-6);
  CHECK(std::abs(map.cells[map.argmax].axis2 - best.drive) <= cell_d + 1e-6);
}

TEST_CASE("flat landscape reports the boundary") {
  ModelParams base = reference_params(ReferenceSet::A);
  base.efficiency = 0.0;  // fidelity pinned at 1/2 everywhere
  SimOptions sim = quick_sim();
  OptimizeBox box;
  box.two_photon_lower = from_mhz(10.0);
  box.two_photon_upper = from_mhz(20.0);
  box.drive_lower = from_mhz(150.0);
  box.drive_upper = from_mhz(250.0);
  box.coarse_points = 3;
  const Optimum best = optimize(base, sim, box, 2);
  CHECK(best.point.fidelity == doctest::Approx(0.5));
  CHECK(best.on_boundary);
}
