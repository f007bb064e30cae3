#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <span>
#include <vector>

#include "tpd/constants.hpp"
#include "tpd/errors.hpp"

namespace tpd {

using SparseOp = Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>;

// Truncated composite space: storage and buffer Fock ladders, the four
// detector levels {g, e, f, s}, and the filter Fock ladder, in that tensor
// order (filter index fastest).
struct HilbertSpace {
  int n_storage = 5;
  int n_buffer = 3;
  int n_filter = 3;
  static constexpr int kJpmLevels = 4;

  void validate() const;
  int dim() const { return n_storage * n_buffer * kJpmLevels * n_filter; }
  int index(int storage, int buffer, int jpm, int filter) const {
    return ((storage * n_buffer + buffer) * kJpmLevels + jpm) * n_filter + filter;
  }
};

enum JpmLevel : int { kGround = 0, kExcited = 1, kUpper = 2, kSink = 3 };

// Rotating-frame model parameters, everything in rad/s and seconds.
struct ModelParams {
  double omega1 = 0.0;        // storage frequency
  double omega2 = 0.0;        // buffer frequency
  double omega_ge = 0.0;      // detector g-e transition
  double omega_gf = 0.0;      // detector g-f transition
  double omega_drive = 0.0;   // drive tone
  double omega_filter = 0.0;  // filter resonator
  double kerr1 = 0.0, kerr2 = 0.0;
  double two_photon = 0.0;    // storage-pair <-> buffer-photon conversion
  double coupling = 0.0;      // buffer <-> g-e exchange
  double drive = 0.0;         // e <-> f drive strength (half amplitude)
  double loss1 = 0.0, loss2 = 0.0;
  double rate_eg = 0.0;       // internal e->g relaxation
  double kappa_eg = 0.0;      // engineered e->g relaxation
  double kappa_filter = 0.0;  // filter linewidth
  double rate_fe = 0.0, rate_fg = 0.0;    // internal f relaxation
  double kappa_fe = 0.0, kappa_fg = 0.0;  // engineered f relaxation
  double sink_g = 0.0, sink_e = 0.0, sink_f = 0.0;  // deep-well cascade rates
  double dephasing_e = 0.0, dephasing_f = 0.0;      // Gaussian 1/f scale rates
  double efficiency = 1.0;    // flux-readout efficiency
  double capture_time = 50e-9;

  void validate() const;
};

// One collapse channel: either a constant rate, or a rate growing linearly in
// time (rate_slope * t) as required for Gaussian-decay dephasing.
struct CollapseChannel {
  SparseOp op;
  double rate = 0.0;
  double rate_slope = 0.0;
};

struct MasterEquation {
  HilbertSpace space;
  SparseOp hamiltonian;                   // rad/s, Hermitian
  std::vector<CollapseChannel> channels;
};

// Elementary operators on the composite space.
SparseOp storage_annihilation(const HilbertSpace& space);
SparseOp buffer_annihilation(const HilbertSpace& space);
SparseOp filter_annihilation(const HilbertSpace& space);
SparseOp jpm_transfer(const HilbertSpace& space, int to, int from);  // |to><from|

// Time-independent rotating-frame Hamiltonian (storage photons at omega1,
// buffer/e/filter at 2*omega1, f at 2*omega1 + drive frequency).
SparseOp build_hamiltonian(const HilbertSpace& space, const ModelParams& params);

// All collapse channels: resonator losses, internal e->g relaxation, the
// filter-interference channel, f relaxation, deep-well cascade into the sink
// level, and the linear-in-time dephasing channels.
std::vector<CollapseChannel> build_dissipators(const HilbertSpace& space,
                                               const ModelParams& params);

MasterEquation build_model(const HilbertSpace& space, const ModelParams& params);

// Density-operator evolution.
struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  long max_steps = 50'000'000;
};

struct EvolutionResult {
  std::vector<double> times;
  // Row per sample: populations of g/e/f/s, then photon numbers of storage,
  // buffer and filter modes.
  Eigen::MatrixXd observables;
  Eigen::MatrixXcd final_state;
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;

  double population(int sample, int level) const { return observables(sample, level); }
  double photons_storage(int sample) const { return observables(sample, 4); }
  double photons_buffer(int sample) const { return observables(sample, 5); }
  double photons_filter(int sample) const { return observables(sample, 6); }
};

// Integrates the master equation from rho0 through every requested output
// time (nondecreasing, starting at t >= 0).
EvolutionResult evolve(const MasterEquation& equation, const Eigen::MatrixXcd& rho0,
                       std::span<const double> output_times,
                       const EvolveOptions& options = {});

// Product state |n1> x |n2> x |level> x |nf> as a density operator.
Eigen::MatrixXcd fock_state(const HilbertSpace& space, int storage, int buffer,
                            int jpm, int filter);

// Readout-efficiency-weighted sink population of a final state.
double click_probability(const HilbertSpace& space, const Eigen::MatrixXcd& rho,
                         double efficiency);

// Closed-form dark-count probability for sub-two-photon inputs.
double false_click_probability(double sink_g, double capture_time, double efficiency);

}  // namespace tpd
