#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpd/lindblad.hpp"

namespace tpd {

// Relaxation-rate ratios tying every cascade rate to the two anchor rates
// (internal and engineered e->g relaxation). Defaults are the reference
// device values; the JPM solver reproduces them from first principles.
struct RateRatios {
  double fg = 0.0184;
  double fe = 0.0458;
  double sink_f = 121.56;
  double sink_e = 0.4817;
  double sink_g = 0.0007;
  double filter_linewidth_factor = 100.0;  // filter linewidth over kappa_eg
};

// Fill the dependent rates of params from the anchors and ratios.
void apply_rate_anchors(ModelParams& params, double rate_eg, double kappa_eg,
                        const RateRatios& ratios);

// Two quoted operating points of the detector.
enum class ReferenceSet { A, B };
ModelParams reference_params(ReferenceSet set);
RateRatios reference_ratios();

struct SimOptions {
  HilbertSpace space;
  EvolveOptions ode;
  int input_photons = 2;
};

struct FidelityPoint {
  double click_two = 0.0;   // click probability for the two-photon input
  double click_dark = 0.0;  // closed-form dark-count probability
  double fidelity = 0.5;
  double trace_drift = 0.0;
};

// One full-model evolution for the multi-photon input; the sub-two-photon
// branch uses the closed form.
FidelityPoint fidelity(const ModelParams& params, const SimOptions& options = {});

// One evolution, a fidelity point per capture time (nondecreasing).
std::vector<FidelityPoint> fidelity_curve(const ModelParams& params,
                                          const SimOptions& options,
                                          std::span<const double> capture_times);

// Guards keeping sweep axes inside the validity of the rotating-frame model.
struct SweepGuards {
  double two_photon_fraction = 1.0 / 20.0;  // |g21| < omega1 * fraction
  double drive_fraction = 1.0 / 5.0;        // drive < omega_ef * fraction
};

struct SweepAxis {
  std::string parameter;  // two_photon | drive | rate_eg | kappa_eg | capture_time
  double lower = 0.0;
  double upper = 0.0;
  int points = 1;
  bool log_scale = false;

  std::vector<double> values() const;
};

struct SweepCell {
  double axis1 = 0.0;
  double axis2 = 0.0;  // zero for 1-axis sweeps
  FidelityPoint point;
  bool failed = false;
  std::string error;
};

struct FidelityMap {
  std::vector<SweepAxis> axes;
  std::vector<SweepCell> cells;  // row-major, first axis outermost
  int argmax = -1;
  double best_fidelity = 0.0;
};

struct SweepSpec {
  ModelParams baseline;
  SimOptions sim;
  std::vector<SweepAxis> axes;  // one or two
  RateRatios ratios;            // reapplied whenever an anchor rate is swept
  SweepGuards guards;
  // Optional inner maximization over the coupling/drive plane at every cell,
  // turning each cell value into a best-achievable fidelity.
  struct InnerMax {
    SweepAxis two_photon;
    SweepAxis drive;
  };
  std::optional<InnerMax> inner_max;
};

// Evaluates the grid (threaded, deterministic cell order); failures are
// recorded per cell and never abort the map. Ties in the maximum break
// toward the lexicographically smallest axis values.
FidelityMap sweep(const SweepSpec& spec, int threads = 0);

struct OptimizeBox {
  double two_photon_lower = 0.0, two_photon_upper = 0.0;
  double drive_lower = 0.0, drive_upper = 0.0;
  int coarse_points = 5;
};

struct Optimum {
  double two_photon = 0.0;
  double drive = 0.0;
  FidelityPoint point;
  bool on_boundary = false;
  int evaluations = 0;
};

// Coarse grid followed by coordinate descent with shrinking steps, stopping
// once a full cycle improves fidelity by less than 1e-4.
Optimum optimize(const ModelParams& baseline, const SimOptions& options,
                 const OptimizeBox& box, int threads = 0);

}  // namespace tpd
