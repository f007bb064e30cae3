#pragma once

#include <array>
#include <vector>

#include "tpd/constants.hpp"
#include "tpd/errors.hpp"

namespace tpd {

// Lumped-element resonator. SI inputs; loss_rate is the single-photon loss
// rate in rad/s.
struct ResonatorSpec {
  double capacitance = 0.0;  // F
  double inductance = 0.0;   // H
  double loss_rate = 0.0;    // rad/s

  void validate() const;
};

struct ResonatorDerived {
  double charging_energy = 0.0;         // e^2/2C_j (bare), rad/s
  double inductive_energy = 0.0;        // (Phi0/2pi)^2/L_j (bare), rad/s
  double loaded_charging_energy = 0.0;  // with coupler-loaded capacitance, rad/s
  double renorm_inductive_energy = 0.0; // inductive energy shifted by the coupler, rad/s
  double loaded_capacitance = 0.0;      // F
  double bare_frequency = 0.0;          // omega_osc, rad/s
  double frequency = 0.0;               // Kerr-shifted omega, rad/s
  double phi_zpf = 0.0;                 // zero-point phase spread
  double n_zpf = 0.0;                   // zero-point charge spread
  double cubic_strength = 0.0;          // third-order nonlinearity, rad/s
  double self_kerr = 0.0;               // K_j >= 0, rad/s
  double sw_parameter = 0.0;            // cubic_strength / frequency
  bool sw_parameter_large = false;      // |sw_parameter| >= 0.1
};

enum class CouplerKind { AsymmetricSquid, BiSquid };

// Inductive coupler bridging the two resonators: an asymmetric dc SQUID, or
// a BiSQUID where the larger junction is replaced by a flux-tunable
// symmetric sub-SQUID. Fluxes are given in units of the flux quantum.
struct CouplerSpec {
  CouplerKind kind = CouplerKind::AsymmetricSquid;
  double critical_current = 0.0;           // I0, A
  double asymmetry = 0.0;                  // alpha >= 0
  double junction_capacitance = 0.0;       // C_JJ, F
  double alpha_junction_capacitance = 0.0; // C_alphaJJ, F
  double flux = 0.0;                       // Phi_c / Phi0
  double flux_prime = 0.0;                 // Phi'_c / Phi0, 0 for AsymmetricSquid

  void validate() const;
};

struct CouplerDerived {
  double josephson_energy = 0.0;   // E_J of the reference junction, rad/s
  double effective_energy = 0.0;   // flux-dependent effective Josephson energy >= 0, rad/s
  double xi = 0.0;                 // junction asymmetry factor
  double phase_shift = 0.0;        // continuous-branch coupler phase shift
  double phi1_min = 0.0;           // equilibrium phase of resonator 1
  double phi2_min = 0.0;           // equilibrium phase of resonator 2
  double delta = 0.0;              // phi1_min - phi2_min - phase_shift
  double equilibrium_residual = 0.0;  // max |current-balance residual| / E_L1
  std::vector<double> taylor_u;    // u_k for k = 2..k_max; taylor_u[k-2]
  double total_capacitance = 0.0;  // C_c, F
  double coupling_charging_energy = 0.0;  // capacitive coupling energy, rad/s
};

// One inductive interaction term: converts storage_order photons of the
// storage mode into buffer_order photons of the buffer mode (and back).
struct InductiveCoupling {
  int storage_order = 0;
  int buffer_order = 0;
  double strength = 0.0;  // rad/s, signed
};

struct CouplingSet {
  double capacitive = 0.0;   // rad/s
  double linear = 0.0;       // single-photon exchange, rad/s
  double two_photon = 0.0;   // two-to-one photon conversion, rad/s, signed
  std::vector<InductiveCoupling> inductive;  // all orders k = 2..k_max
};

struct CircuitModel {
  std::array<ResonatorDerived, 2> resonators;
  CouplerDerived coupler;
  CouplingSet couplings;
};

// Effective flux-dependent Josephson energy of the coupler (>= 0).
double effective_josephson_energy(const CouplerSpec& coupler);

// Coupler phase shift on the continuous branch: zero at zero flux (for a
// dominant reference junction) and continuous across half-flux points.
double phase_shift(const CouplerSpec& coupler);

// Equilibrium phases of the two-mode circuit potential, from the
// current-balance system. Energies in rad/s; requires
// effective_energy < min(e_l1, e_l2) so the potential has a single minimum.
std::array<double, 2> solve_equilibrium_phases(double e_l1, double e_l2,
                                               double effective_energy,
                                               double theta);

// Full derived chain: loaded capacitances, renormalized energies, zero-point
// spreads, Taylor coefficients and every coupling strength up to k_max.
CircuitModel derive_circuit(const std::array<ResonatorSpec, 2>& resonators,
                            const CouplerSpec& coupler, int k_max = 6);

struct OddParityPoint {
  double flux = 0.0;              // Phi_c / Phi0
  double delta = 0.0;
  double effective_energy = 0.0;  // rad/s
  double two_photon = 0.0;        // g21 at the point, rad/s
  bool coupling_vanishes = false; // effective energy ~ 0 at the root
};

// Smallest flux in [0, 1) where the equilibrium phase difference reaches an
// odd multiple of pi/2, killing all even-order inductive couplings. The
// coupler's own flux field is ignored (it is the free variable).
OddParityPoint find_odd_parity_flux(const CouplerSpec& family,
                                    const std::array<ResonatorSpec, 2>& resonators);

struct CouplerOffPoint {
  double flux = 0.0;        // Phi_c / Phi0
  double flux_prime = 0.0;  // Phi'_c / Phi0
  double residual_energy = 0.0;  // effective energy at the point, rad/s
};

// BiSQUID flux pair that zeroes the effective Josephson energy, switching
// off every inductive coupling.
CouplerOffPoint coupler_off_point(const CouplerSpec& bisquid);

}  // namespace tpd
