#pragma once

#include <numbers>

namespace tpd {

// CODATA 2018 exact values.
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);  // Wb
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// All energies are carried internally in angular-frequency units (rad/s),
// i.e. E/hbar. Constructors accept SI circuit values and convert once.

// Josephson energy of a junction with critical current I0 (A), in rad/s.
inline double josephson_energy(double critical_current) {
  return critical_current * kFluxQuantum / (kTwoPi * kHbar);
}

// Charging energy e^2/2C of a capacitance (F), in rad/s.
inline double charging_energy(double capacitance) {
  return kElementaryCharge * kElementaryCharge / (2.0 * capacitance * kHbar);
}

// Inductive energy (Phi0/2pi)^2 / L of an inductance (H), in rad/s.
inline double inductive_energy(double inductance) {
  const double phi0_red = kFluxQuantum / kTwoPi;
  return phi0_red * phi0_red / (inductance * kHbar);
}

// rad/s -> ordinary frequency in GHz (value of E/h).
inline double to_ghz(double angular) { return angular / kTwoPi * 1e-9; }
inline double to_mhz(double angular) { return angular / kTwoPi * 1e-6; }
inline double from_ghz(double f) { return f * 1e9 * kTwoPi; }
inline double from_mhz(double f) { return f * 1e6 * kTwoPi; }

}  // namespace tpd
