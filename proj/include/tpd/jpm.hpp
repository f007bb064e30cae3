#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "tpd/constants.hpp"
#include "tpd/errors.hpp"

namespace tpd {

// Flux-biased, capacitively shunted rf-SQUID photomultiplier. SI inputs;
// bias flux in units of the flux quantum.
struct JpmSpec {
  double critical_current = 0.0;        // A
  double loop_inductance = 0.0;         // H
  double capacitance = 0.0;             // shunt + junction, F
  double coupling_capacitance = 0.0;    // to the buffer resonator, F
  double drive_capacitance = 0.0;       // to the drive line, F
  double waveguide_capacitance = 0.0;   // to the exhaust waveguide, F
  double bias_flux = 0.0;               // Phi_b / Phi0
  double waveguide_impedance = 50.0;    // ohm
  double drive_voltage = 0.0;           // V

  void validate() const;
  double loaded_capacitance() const;    // total including coupling capacitances
};

enum class WellLabel { LeftWell, RightWell, Superbarrier };

// Extrema of the double-well potential at the configured bias.
struct PotentialShape {
  bool double_well = false;
  double left_minimum = 0.0;   // phi of the shallow-well bottom
  double barrier_top = 0.0;    // phi of the interwell maximum
  double right_minimum = 0.0;  // phi of the deep-well bottom
  double u_left = 0.0;         // potential at the shallow bottom, rad/s
  double u_top = 0.0;          // potential at the barrier top, rad/s
  double u_right = 0.0;        // potential at the deep bottom, rad/s
  double plasma_left = 0.0;    // harmonic frequency of the shallow well, rad/s
};

struct SpectrumOptions {
  int grid_points = 8001;        // base grid; eigenvalues are h^2-extrapolated
                                 // from this grid and its doubling
  double range_margin = 6.0;     // phi window half-width around the bias point
  double retention_margin = 10.0;  // x plasma quanta kept above the barrier
  int min_superbarrier = 2;
  bool check_convergence = false;  // extra doubling, gate on the tolerance below
  double convergence_tol = 1e-8;   // relative eigenvalue drift under doubling
  double boundary_tol = 1e-12;     // max |psi|^2 allowed at the window edge
};

struct JpmSpectrum {
  std::vector<double> grid;        // phi values carrying the wavefunctions
  Eigen::MatrixXd wavefunctions;   // grid.size() x n_states, trapezoid-normalized
  std::vector<double> grid_base;   // half-resolution companion solve, used to
  Eigen::MatrixXd wavefunctions_base;  // extrapolate matrix-element errors
  std::vector<double> eigenvalues; // dimensionless, units of 8*E_C (loaded)
  std::vector<double> energies;    // rad/s
  std::vector<double> doubling_drift;  // |eps_fine - eps_coarse| / |eps| per state
  std::vector<WellLabel> labels;
  PotentialShape shape;
  double charging_energy = 0.0;    // loaded E_C, rad/s
  int index_g = -1, index_e = -1, index_f = -1;

  int count_below_barrier(WellLabel which) const;
  int superbarrier_count() const;
  double transition(int upper, int lower) const;  // |E_u - E_l|, rad/s
  double omega_ge() const { return transition(index_e, index_g); }
  double omega_ef() const { return transition(index_f, index_e); }
  double omega_gf() const { return transition(index_f, index_g); }
};

// Potential energy of the device at phase phi, in rad/s.
double jpm_potential(double phi, const JpmSpec& spec);

// Locations and heights of the potential extrema. Throws NoBarrierError when
// the bias gives a single well.
PotentialShape analyze_potential(const JpmSpec& spec);

// Eigenpairs of the discretized phase Hamiltonian with Dirichlet boundaries.
// Retains every state below the barrier plus a margin of superbarrier states,
// classifies them by well, and resolves the g/e/f roles.
JpmSpectrum solve_spectrum(const JpmSpec& spec, const SpectrumOptions& options = {});

// Matrix elements of the reduced charge operator -i d/dphi over the retained
// window, symmetrized; the pre-symmetrization asymmetry is reported.
struct ChargeMatrix {
  Eigen::MatrixXcd elements;
  double max_asymmetry = 0.0;
};

ChargeMatrix charge_matrix(const JpmSpectrum& spectrum);

// Relaxation-rate ratios for an Ohmic bath, everything in units of the e->g
// rate. The engineered-bath ratios are identical by construction.
struct RateTable {
  double fg = 0.0;      // f->g over e->g
  double fe = 0.0;      // f->e over e->g
  double sink_f = 0.0;  // total f -> deep-well cascade
  double sink_e = 0.0;  // total e -> deep-well cascade
  double sink_g = 0.0;  // total g -> deep-well cascade

  // Absolute sink rates gamma_lambda = (internal + engineered) cascade rate
  // once the two anchor rates are supplied (rad/s).
  double gamma_g(double rate_eg, double kappa_eg) const { return sink_g * (rate_eg + kappa_eg); }
  double gamma_e(double rate_eg, double kappa_eg) const { return sink_e * (rate_eg + kappa_eg); }
  double gamma_f(double rate_eg, double kappa_eg) const { return sink_f * (rate_eg + kappa_eg); }
};

RateTable rate_table(const ChargeMatrix& charge, const JpmSpectrum& spectrum);

// Drive amplitude of the e<->f transition and charge coupling of g<->e to the
// buffer mode, in the paper-free shorthand convention Omega = |Omega_ef|/2,
// G = |G_ge|.
struct DriveCoupling {
  double drive_strength = 0.0;     // rad/s
  double coupling_strength = 0.0;  // rad/s
  double coupling_energy = 0.0;    // capacitive JPM-resonator energy, rad/s
};

DriveCoupling drive_and_coupling(const JpmSpec& spec, const ChargeMatrix& charge,
                                 const JpmSpectrum& spectrum, double buffer_n_zpf,
                                 double buffer_loaded_capacitance);

// Inversions used to size hardware for target strengths. Both treat the
// charge matrix element as fixed (the coupling capacitances perturb the
// spectrum only at second order).
double coupling_capacitance_for(const JpmSpec& spec, const ChargeMatrix& charge,
                                const JpmSpectrum& spectrum, double buffer_n_zpf,
                                double buffer_loaded_capacitance, double target_coupling);
double drive_voltage_for(const JpmSpec& spec, const ChargeMatrix& charge,
                         const JpmSpectrum& spectrum, double target_drive);

// Bias flux inside [flux_lo, flux_hi] at which the e-f transition matches the
// requested drive frequency. The transition falls steeply and monotonically
// with flux across any interval this narrow, so a bracketed search suffices.
double drive_resonant_flux(const JpmSpec& spec, double target_omega_ef,
                           double flux_lo, double flux_hi,
                           const SpectrumOptions& options = {});

// Pure-dephasing rates from Gaussian 1/f flux noise, with the logarithmic
// factor solved self-consistently.
struct DephasingRates {
  double rate_e = 0.0;   // rad/s
  double rate_f = 0.0;   // rad/s
  double zeta_e = 0.0;
  double zeta_f = 0.0;
  double slope_e = 0.0;  // |d omega_eg / d (Phi_b/Phi0)|, rad/s
  double slope_f = 0.0;  // |d omega_fg / d (Phi_b/Phi0)|, rad/s
};

DephasingRates dephasing_rates(const JpmSpec& spec, double noise_amplitude,
                               double cutoff, const SpectrumOptions& options = {},
                               double flux_step = 1e-4);

}  // namespace tpd
