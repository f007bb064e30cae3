#include "tpd/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace tpd {

namespace {

constexpr double kPi = std::numbers::pi;

// Amplitude/phase of the two-junction combination
//   alpha*cos(x) + c*cos(x - 2t)  =  |u| * cos(x - t - arg_c(u)),
// with u = (c + alpha)cos t + i (c - alpha)sin t and arg_c the continuous
// branch of the argument along t. For the asymmetric SQUID c = 1; for the
// BiSQUID the sub-SQUID contributes c = cos(pi * flux_prime) and
// t = pi * (flux + flux_prime / 2).
struct JunctionSum {
  double magnitude;  // in units of the reference Josephson energy
  double phase;      // continuous theta
};

JunctionSum junction_sum(double c, double alpha, double t) {
  const double a = c + alpha;
  const double b = c - alpha;
  const double re = a * std::cos(t);
  const double im = b * std::sin(t);
  const double mag = std::hypot(re, im);
  if (a == 0.0 && b == 0.0) return {0.0, t};
  // The principal argument of u deviates from the reference s*t + phi0 by
  // less than pi, so a single round() recovers the continuous branch.
  const double s = (a * b > 0.0) ? 1.0 : (a * b < 0.0 ? -1.0 : 0.0);
  const double phi0 = (a >= 0.0) ? 0.0 : kPi;
  const double principal = std::atan2(im, re);
  const double ref = s * t + phi0;
  const double arg = principal + kTwoPi * std::round((ref - principal) / kTwoPi);
  return {mag, t + arg};
}

JunctionSum coupler_sum(const CouplerSpec& cpl) {
  const double c =
      cpl.kind == CouplerKind::BiSquid ? std::cos(kPi * cpl.flux_prime) : 1.0;
  const double half_prime = cpl.kind == CouplerKind::BiSquid ? 0.5 * cpl.flux_prime : 0.0;
  const double t = kPi * (cpl.flux + half_prime);
  return junction_sum(c, cpl.asymmetry, t);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// u_k selects cos/sin of the equilibrium phase difference by parity of k,
// with sign (-1)^ceil(k/2).
double taylor_u_k(int k, double delta) {
  const int half_up = (k + 1) / 2;
  const double sign = (half_up % 2 == 0) ? 1.0 : -1.0;
  return sign * (k % 2 == 0 ? std::cos(delta) : std::sin(delta));
}

}  // namespace

void ResonatorSpec::validate() const {
  if (!(capacitance > 0.0)) throw PreconditionError("resonator capacitance must be > 0");
  if (!(inductance > 0.0)) throw PreconditionError("resonator inductance must be > 0");
  if (loss_rate < 0.0) throw PreconditionError("resonator loss rate must be >= 0");
}

void CouplerSpec::validate() const {
  if (!(critical_current > 0.0)) throw PreconditionError("coupler critical current must be > 0");
  if (asymmetry < 0.0) throw PreconditionError("coupler asymmetry must be >= 0");
  if (junction_capacitance < 0.0 || alpha_junction_capacitance < 0.0)
    throw PreconditionError("coupler junction capacitances must be >= 0");
  if (kind == CouplerKind::AsymmetricSquid && flux_prime != 0.0)
    throw PreconditionError("flux_prime must be 0 for an asymmetric SQUID coupler");
}

double effective_josephson_energy(const CouplerSpec& coupler) {
  coupler.validate();
  return josephson_energy(coupler.critical_current) * coupler_sum(coupler).magnitude;
}

double phase_shift(const CouplerSpec& coupler) {
  coupler.validate();
  return coupler_sum(coupler).phase;
}

std::array<double, 2> solve_equilibrium_phases(double e_l1, double e_l2,
                                               double effective_energy,
                                               double theta) {
  if (!(e_l1 > 0.0) || !(e_l2 > 0.0))
    throw PreconditionError("inductive energies must be > 0");
  if (effective_energy < 0.0)
    throw PreconditionError("effective Josephson energy must be >= 0");
  if (effective_energy >= std::min(e_l1, e_l2))
    throw PreconditionError(
        "effective Josephson energy must be below both inductive energies "
        "(single-minimum regime)");
  if (effective_energy == 0.0) return {0.0, 0.0};

  // Stationarity of U = E_L1 p1^2/2 + E_L2 p2^2/2 - E cos(p1 - p2 - theta).
  const double tol = 1e-12 * e_l1;
  double p1 = 0.0, p2 = 0.0;
  auto residual = [&](double a, double b, double& r1, double& r2) {
    const double s = effective_energy * std::sin(a - b - theta);
    r1 = e_l1 * a + s;
    r2 = e_l2 * b - s;
    return std::max(std::abs(r1), std::abs(r2));
  };
  double r1, r2;
  double rnorm = residual(p1, p2, r1, r2);
  for (int it = 0; it < 100 && rnorm >= tol; ++it) {
    const double c = effective_energy * std::cos(p1 - p2 - theta);
    const double j11 = e_l1 + c, j12 = -c;
    const double j21 = -c, j22 = e_l2 + c;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0) throw ConvergenceError("singular Jacobian in equilibrium-phase solve");
    double d1 = (-r1 * j22 + r2 * j12) / det;
    double d2 = (-r2 * j11 + r1 * j21) / det;
    // Damped update: halve the step until the residual decreases.
    double step = 1.0;
    double n1, n2, t1, t2, rnew;
    for (int k = 0; k < 40; ++k) {
      n1 = p1 + step * d1;
      n2 = p2 + step * d2;
      rnew = residual(n1, n2, t1, t2);
      if (rnew < rnorm || rnew < tol) break;
      step *= 0.5;
    }
    p1 = n1;
    p2 = n2;
    r1 = t1;
    r2 = t2;
    rnorm = rnew;
  }
  if (!(rnorm < tol))
    throw ConvergenceError("equilibrium-phase Newton iteration did not converge");
  return {p1, p2};
}

CircuitModel derive_circuit(const std::array<ResonatorSpec, 2>& resonators,
                            const CouplerSpec& coupler, int k_max) {
  for (const auto& r : resonators) r.validate();
  coupler.validate();
  if (k_max < 3) throw PreconditionError("k_max must be >= 3");

  CircuitModel model;
  auto& cpl = model.coupler;

  cpl.josephson_energy = josephson_energy(coupler.critical_current);
  const JunctionSum sum = coupler_sum(coupler);
  cpl.effective_energy = cpl.josephson_energy * sum.magnitude;
  cpl.phase_shift = sum.phase;
  {
    const double c = coupler.kind == CouplerKind::BiSquid
                         ? std::cos(kPi * coupler.flux_prime)
                         : 1.0;
    cpl.xi = (c + coupler.asymmetry) != 0.0
                 ? (c - coupler.asymmetry) / (c + coupler.asymmetry)
                 : std::numeric_limits<double>::infinity();
  }

  // Coupler capacitance loads both resonators; the junction count depends on
  // the coupler type (the BiSQUID sub-SQUID carries two junctions).
  const int junctions = coupler.kind == CouplerKind::BiSquid ? 2 : 1;
  const double c_cpl =
      coupler.alpha_junction_capacitance + junctions * coupler.junction_capacitance;
  cpl.total_capacitance = c_cpl;

  const double c1 = resonators[0].capacitance;
  const double c2 = resonators[1].capacitance;
  const double loaded1 = c1 + (c_cpl > 0.0 ? c2 * c_cpl / (c2 + c_cpl) : 0.0);
  const double loaded2 = c2 + (c_cpl > 0.0 ? c1 * c_cpl / (c1 + c_cpl) : 0.0);
  cpl.coupling_charging_energy =
      c_cpl > 0.0 ? 4.0 * kElementaryCharge * kElementaryCharge /
                        (c1 * c2 * (1.0 / c1 + 1.0 / c2 + 1.0 / c_cpl) * kHbar)
                  : 0.0;

  const double e_l1 = inductive_energy(resonators[0].inductance);
  const double e_l2 = inductive_energy(resonators[1].inductance);

  const auto [p1, p2] =
      solve_equilibrium_phases(e_l1, e_l2, cpl.effective_energy, cpl.phase_shift);
  cpl.phi1_min = p1;
  cpl.phi2_min = p2;
  cpl.delta = p1 - p2 - cpl.phase_shift;
  {
    const double s = cpl.effective_energy * std::sin(cpl.delta);
    cpl.equilibrium_residual =
        std::max(std::abs(e_l1 * p1 + s), std::abs(e_l2 * p2 - s)) / e_l1;
  }

  cpl.taylor_u.resize(k_max - 1);
  for (int k = 2; k <= k_max; ++k) cpl.taylor_u[k - 2] = taylor_u_k(k, cpl.delta);
  const double u2 = cpl.taylor_u[0];
  const double u3 = cpl.taylor_u[1];

  const std::array<double, 2> bare_c = {charging_energy(c1), charging_energy(c2)};
  const std::array<double, 2> loaded_c = {charging_energy(loaded1), charging_energy(loaded2)};
  const std::array<double, 2> bare_l = {e_l1, e_l2};
  const std::array<double, 2> loaded_cap = {loaded1, loaded2};

  for (int j = 0; j < 2; ++j) {
    auto& r = model.resonators[j];
    r.charging_energy = bare_c[j];
    r.inductive_energy = bare_l[j];
    r.loaded_charging_energy = loaded_c[j];
    r.loaded_capacitance = loaded_cap[j];
    r.renorm_inductive_energy = bare_l[j] - cpl.effective_energy * u2;
    r.phi_zpf = std::pow(2.0 * r.loaded_charging_energy / r.renorm_inductive_energy, 0.25);
    r.n_zpf = std::pow(r.renorm_inductive_energy / (32.0 * r.loaded_charging_energy), 0.25);
    r.bare_frequency = std::sqrt(8.0 * r.loaded_charging_energy * r.renorm_inductive_energy);
    r.cubic_strength = cpl.effective_energy * std::pow(r.phi_zpf, 3) * u3 / 6.0;
    r.self_kerr = 30.0 * r.cubic_strength * r.cubic_strength / r.bare_frequency;
    r.frequency = r.bare_frequency - 2.0 * r.self_kerr;
    r.sw_parameter = r.cubic_strength / r.frequency;
    r.sw_parameter_large = std::abs(r.sw_parameter) >= 0.1;
  }

  auto& cs = model.couplings;
  cs.capacitive =
      cpl.coupling_charging_energy * model.resonators[0].n_zpf * model.resonators[1].n_zpf;
  cs.inductive.clear();
  for (int k = 2; k <= k_max; ++k) {
    const double uk = cpl.taylor_u[k - 2];
    for (int l = 1; l <= k - 1; ++l) {
      const double sign = (l % 2 == 0) ? -1.0 : 1.0;
      const double g = sign * cpl.effective_energy *
                       std::pow(model.resonators[0].phi_zpf, k - l) *
                       std::pow(model.resonators[1].phi_zpf, l) * uk /
                       (factorial(k - l) * factorial(l));
      cs.inductive.push_back({k - l, l, g});
      if (k == 2 && l == 1) cs.linear = g;
      if (k == 3 && l == 1) cs.two_photon = g;
    }
  }
  return model;
}

OddParityPoint find_odd_parity_flux(const CouplerSpec& family,
                                    const std::array<ResonatorSpec, 2>& resonators) {
  CouplerSpec probe = family;
  probe.validate();
  for (const auto& r : resonators) r.validate();
  if (probe.kind == CouplerKind::AsymmetricSquid && probe.asymmetry > 1.0)
    throw PreconditionError(
        "asymmetric SQUID with asymmetry > 1 has no odd-parity flux");

  const double e_l1 = inductive_energy(resonators[0].inductance);
  const double e_l2 = inductive_energy(resonators[1].inductance);
  const double e_j = josephson_energy(probe.critical_current);

  auto delta_at = [&](double flux) {
    probe.flux = flux;
    const JunctionSum sum = coupler_sum(probe);
    const auto [p1, p2] =
        solve_equilibrium_phases(e_l1, e_l2, e_j * sum.magnitude, sum.phase);
    return p1 - p2 - sum.phase;
  };
  auto gap = [&](double flux) {
    // Signed distance to the nearest odd multiple of pi/2; continuous in
    // flux wherever delta is, and crosses zero exactly at the targets.
    const double d = delta_at(flux);
    return std::remainder(d - 0.5 * kPi, kPi);
  };

  const int scan = 4096;
  double prev_flux = 0.0;
  double prev_gap = gap(0.0);
  for (int i = 1; i <= scan; ++i) {
    const double flux = static_cast<double>(i) / scan;
    const double g = gap(flux);
    if (prev_gap == 0.0 || (prev_gap < 0.0) != (g < 0.0)) {
      double lo = prev_flux, hi = flux, glo = prev_gap;
      if (glo == 0.0) {
        hi = lo;
      } else {
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double gm = gap(mid);
          if (gm == 0.0) { lo = hi = mid; break; }
          if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
          if (hi - lo < 1e-17) break;
        }
      }
      const double root = 0.5 * (lo + hi);
      OddParityPoint point;
      point.flux = root;
      point.delta = delta_at(root);
      if (std::abs(std::remainder(point.delta - 0.5 * kPi, kPi)) > 1e-10) {
        // The wrapped gap changed sign at a delta = n*pi crossing, not at a
        // genuine root; resume scanning past it.
        prev_flux = flux;
        prev_gap = g;
        continue;
      }
      CouplerSpec at = family;
      at.flux = root;
      const CircuitModel model = derive_circuit(resonators, at);
      point.effective_energy = model.coupler.effective_energy;
      point.two_photon = model.couplings.two_photon;
      point.coupling_vanishes = point.effective_energy <= 1e-8 * e_j;
      return point;
    }
    prev_flux = flux;
    prev_gap = g;
  }
  throw NoRootError("equilibrium phase difference never reaches an odd multiple of pi/2");
}

CouplerOffPoint coupler_off_point(const CouplerSpec& bisquid) {
  bisquid.validate();
  if (bisquid.kind != CouplerKind::BiSquid)
    throw PreconditionError("coupler-off point requires a BiSQUID coupler");
  if (bisquid.asymmetry > 1.0)
    throw PreconditionError("BiSQUID off point requires asymmetry <= 1");

  CouplerOffPoint point;
  point.flux_prime = std::acos(bisquid.asymmetry) / kPi;
  point.flux = 0.5 - 0.5 * point.flux_prime;
  CouplerSpec at = bisquid;
  at.flux = point.flux;
  at.flux_prime = point.flux_prime;
  point.residual_energy = effective_josephson_energy(at);
  return point;
}

}  // namespace tpd
