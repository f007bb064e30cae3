#include "tpd/jpm.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tpd {

namespace {

constexpr double kPi = std::numbers::pi;

// Eigenpairs of the Dirichlet central-difference Hamiltonian
//   -(1/2) psi'' + u(phi) psi = eps psi
// on the interior points of [lo, hi] with n_total grid points, restricted to
// eps <= vu. Eigenvalues are always computed; vectors only on request.
struct GridSolve {
  std::vector<double> grid;  // interior points
  std::vector<double> eps;
  Eigen::MatrixXd vectors;   // trapezoid-normalized wavefunctions
};

template <typename Potential>
GridSolve solve_on_grid(int n_total, double lo, double hi, double vu,
                        bool want_vectors, Potential&& u) {
  const int dim = n_total - 2;
  const double h = (hi - lo) / (n_total - 1);
  std::vector<double> diag(dim), off(std::max(dim - 1, 1));
  std::vector<double> grid(dim);
  double u_min = std::numeric_limits<double>::max();
  for (int i = 0; i < dim; ++i) {
    grid[i] = lo + (i + 1) * h;
    const double ui = u(grid[i]);
    u_min = std::min(u_min, ui);
    diag[i] = 1.0 / (h * h) + ui;
  }
  std::fill(off.begin(), off.end(), -0.5 / (h * h));

  const double abstol = LAPACKE_dlamch('S');
  const double vl = u_min - 1.0;  // every eigenvalue sits above the potential floor

  lapack_int found = 0;
  std::vector<double> w(dim);
  std::vector<lapack_int> isuppz(2 * std::max(dim, 1));
  {
    std::vector<double> d(diag), e(off);
    const lapack_int info = LAPACKE_dstevr(
        LAPACK_COL_MAJOR, 'N', 'V', dim, d.data(), e.data(), vl, vu, 0, 0,
        abstol, &found, w.data(), nullptr, 1, isuppz.data());
    if (info != 0) throw ConvergenceError("tridiagonal eigenvalue count failed");
  }
  GridSolve out;
  out.grid = std::move(grid);
  if (found == 0) return out;

  if (!want_vectors) {
    out.eps.assign(w.begin(), w.begin() + found);
    return out;
  }

  Eigen::MatrixXd z(dim, found);
  {
    std::vector<double> d(diag), e(off);
    const lapack_int info = LAPACKE_dstevr(
        LAPACK_COL_MAJOR, 'V', 'V', dim, d.data(), e.data(), vl, vu, 0, 0,
        abstol, &found, w.data(), z.data(), dim, isuppz.data());
    if (info != 0) throw ConvergenceError("tridiagonal eigenvector solve failed");
  }
  out.eps.assign(w.begin(), w.begin() + found);
  // l2-normalized eigenvectors -> wavefunctions normalized under the
  // trapezoid rule (interior sum, Dirichlet ends).
  out.vectors = z / std::sqrt((hi - lo) / (n_total - 1));
  // Deterministic sign: largest-magnitude sample positive.
  for (int j = 0; j < out.vectors.cols(); ++j) {
    int imax = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, j) < 0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

}  // namespace

void JpmSpec::validate() const {
  // A zero critical current is admitted as the exactly harmonic limit.
  if (critical_current < 0.0) throw PreconditionError("JPM critical current must be >= 0");
  if (!(loop_inductance > 0.0)) throw PreconditionError("JPM loop inductance must be > 0");
  if (!(capacitance > 0.0)) throw PreconditionError("JPM capacitance must be > 0");
  if (coupling_capacitance < 0.0 || drive_capacitance < 0.0 || waveguide_capacitance < 0.0)
    throw PreconditionError("JPM coupling capacitances must be >= 0");
}

double JpmSpec::loaded_capacitance() const {
  return capacitance + coupling_capacitance + drive_capacitance + waveguide_capacitance;
}

double jpm_potential(double phi, const JpmSpec& spec) {
  const double e_l = inductive_energy(spec.loop_inductance);
  const double e_j = josephson_energy(spec.critical_current);
  const double detuned = phi - kTwoPi * spec.bias_flux;
  return 0.5 * e_l * detuned * detuned - e_j * std::cos(phi);
}

PotentialShape analyze_potential(const JpmSpec& spec) {
  spec.validate();
  const double e_l = inductive_energy(spec.loop_inductance);
  const double e_j = josephson_energy(spec.critical_current);
  const double center = kTwoPi * spec.bias_flux;
  auto du = [&](double phi) { return e_l * (phi - center) + e_j * std::sin(phi); };
  auto ddu = [&](double phi) { return e_l + e_j * std::cos(phi); };

  // The linear term confines all extrema to |phi - center| <= E_J/E_L + pi.
  const double half_width = e_j / e_l + kPi;
  const double lo = center - half_width, hi = center + half_width;
  const int samples = 40000;
  std::vector<double> minima, maxima;
  double prev_phi = lo, prev_du = du(lo);
  for (int i = 1; i <= samples; ++i) {
    const double phi = lo + (hi - lo) * i / samples;
    const double cur = du(phi);
    if ((prev_du < 0.0) != (cur < 0.0)) {
      double a = prev_phi, b = phi, fa = prev_du;
      for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = du(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      (ddu(root) > 0.0 ? minima : maxima).push_back(root);
    }
    prev_phi = phi;
    prev_du = cur;
  }

  PotentialShape shape;
  if (minima.size() < 2 || maxima.empty()) {
    shape.double_well = false;
    shape.left_minimum = shape.right_minimum = minima.empty() ? center : minima.front();
    shape.u_left = shape.u_right = jpm_potential(shape.left_minimum, spec);
    shape.u_top = std::numeric_limits<double>::infinity();
    shape.barrier_top = std::numeric_limits<double>::quiet_NaN();
    shape.plasma_left = std::sqrt(
        8.0 * charging_energy(spec.loaded_capacitance()) * ddu(shape.left_minimum));
    return shape;
  }

  // With two minima, the barrier is the maximum between them.
  std::sort(minima.begin(), minima.end());
  shape.left_minimum = minima.front();
  shape.right_minimum = minima.back();
  double top = maxima.front();
  for (double m : maxima) {
    if (m > shape.left_minimum && m < shape.right_minimum) top = m;
  }
  shape.double_well = true;
  shape.barrier_top = top;
  shape.u_left = jpm_potential(shape.left_minimum, spec);
  shape.u_right = jpm_potential(shape.right_minimum, spec);
  shape.u_top = jpm_potential(shape.barrier_top, spec);
  shape.plasma_left = std::sqrt(
      8.0 * charging_energy(spec.loaded_capacitance()) * ddu(shape.left_minimum));
  return shape;
}

int JpmSpectrum::count_below_barrier(WellLabel which) const {
  int count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == which && energies[i] < shape.u_top) ++count;
  }
  return count;
}

int JpmSpectrum::superbarrier_count() const {
  int count = 0;
  for (const auto label : labels) {
    if (label == WellLabel::Superbarrier) ++count;
  }
  return count;
}

double JpmSpectrum::transition(int upper, int lower) const {
  if (upper < 0 || lower < 0)
    throw ClassificationError("transition requested between unresolved roles");
  return std::abs(energies.at(upper) - energies.at(lower));
}

JpmSpectrum solve_spectrum(const JpmSpec& spec, const SpectrumOptions& options) {
  spec.validate();
  if (options.grid_points < 1001)
    throw PreconditionError("spectrum grid needs at least 1001 points");

  const PotentialShape shape = analyze_potential(spec);

  const double e_c = charging_energy(spec.loaded_capacitance());
  const double scale = 8.0 * e_c;
  auto u_dimless = [&](double phi) { return jpm_potential(phi, spec) / scale; };

  const double center = kTwoPi * spec.bias_flux;
  const double lo = center - options.range_margin;
  const double hi = center + options.range_margin;
  const double plasma_quantum = shape.plasma_left / scale;
  const double u_top = shape.u_top / scale;

  double vu = shape.double_well
                  ? u_top + options.retention_margin * plasma_quantum
                  : shape.u_left / scale +
                        std::max(options.retention_margin, 2.0) * plasma_quantum;
  const int n = options.grid_points;
  const int n_fine = 2 * n - 1;
  const int n_finer = 2 * n_fine - 1;

  GridSolve coarse, fine, finer;
  for (int attempt = 0;; ++attempt) {
    coarse = solve_on_grid(n, lo, hi, vu, true, u_dimless);
    fine = solve_on_grid(n_fine, lo, hi, vu, true, u_dimless);
    finer = solve_on_grid(n_finer, lo, hi, vu, false, u_dimless);
    if (!shape.double_well) break;
    const auto above = std::count_if(fine.eps.begin(), fine.eps.end(),
                                     [&](double e) { return e > u_top; });
    if (above >= options.min_superbarrier) break;
    if (attempt >= 8)
      throw ConvergenceError("could not retain the requested superbarrier states");
    vu += 5.0 * plasma_quantum;
  }

  JpmSpectrum spectrum;
  spectrum.shape = shape;
  spectrum.charging_energy = e_c;
  spectrum.grid = fine.grid;
  spectrum.wavefunctions = std::move(fine.vectors);
  spectrum.grid_base = coarse.grid;
  spectrum.wavefunctions_base = std::move(coarse.vectors);
  // Align companion-solve signs with the fine solve (base interior point i
  // sits at fine interior index 2i + 1).
  {
    const int cols = static_cast<int>(
        std::min(spectrum.wavefunctions_base.cols(), spectrum.wavefunctions.cols()));
    for (int j = 0; j < cols; ++j) {
      double dot = 0.0;
      for (int i = 0; i < spectrum.wavefunctions_base.rows(); ++i)
        dot += spectrum.wavefunctions_base(i, j) * spectrum.wavefunctions(2 * i + 1, j);
      if (dot < 0.0) spectrum.wavefunctions_base.col(j) *= -1.0;
    }
  }

  // Near-barrier states need the h^2 and h^4 errors extrapolated away; the
  // raw doubled-pair drift is reported against the retained spectral span.
  const std::size_t retained = fine.eps.size();
  const std::size_t matched =
      std::min({retained, coarse.eps.size(), finer.eps.size()});
  const double span = std::max(
      fine.eps.empty() ? 1.0 : fine.eps.back() - fine.eps.front(), 1e-12);
  spectrum.eigenvalues.resize(retained);
  spectrum.doubling_drift.assign(retained, 0.0);
  for (std::size_t i = 0; i < retained; ++i) {
    double value = fine.eps[i];
    if (i < matched) {
      const double r12 = fine.eps[i] + (fine.eps[i] - coarse.eps[i]) / 3.0;
      const double r23 = finer.eps[i] + (finer.eps[i] - fine.eps[i]) / 3.0;
      value = r23 + (r23 - r12) / 15.0;
      spectrum.doubling_drift[i] = std::abs(fine.eps[i] - coarse.eps[i]) / span;
    }
    spectrum.eigenvalues[i] = value;
  }
  spectrum.energies.resize(retained);
  for (std::size_t i = 0; i < retained; ++i)
    spectrum.energies[i] = spectrum.eigenvalues[i] * scale;

  if (options.check_convergence) {
    const GridSolve finest = solve_on_grid(2 * n_finer - 1, lo, hi, vu, false, u_dimless);
    const std::size_t k = std::min(finest.eps.size(), matched);
    for (std::size_t i = 0; i < k; ++i) {
      const double r23 = finer.eps[i] + (finer.eps[i] - fine.eps[i]) / 3.0;
      const double r34 = finest.eps[i] + (finest.eps[i] - finer.eps[i]) / 3.0;
      const double refined = r34 + (r34 - r23) / 15.0;
      const double drift = std::abs(refined - spectrum.eigenvalues[i]) / span;
      if (drift > options.convergence_tol)
        throw ConvergenceError("eigenvalue " + std::to_string(i) +
                               " drifts under grid doubling beyond tolerance");
    }
  }

  // Boundary-leak gate: every retained wavefunction must have died out at the
  // window edge.
  const int last = static_cast<int>(spectrum.grid.size()) - 1;
  for (std::size_t j = 0; j < retained; ++j) {
    const double edge = std::max(std::abs(spectrum.wavefunctions(0, j)),
                                 std::abs(spectrum.wavefunctions(last, j)));
    if (edge * edge > options.boundary_tol)
      throw PreconditionError("wavefunction mass at the window boundary; widen the phi range");
  }

  if (!shape.double_well) {
    // No barrier, no role map: every bound state belongs to the only well.
    spectrum.labels.assign(retained, WellLabel::LeftWell);
    return spectrum;
  }

  // Classification: superbarrier above the barrier top (with a tie-break
  // band), deep well below the shallow bottom, mean phase in between.
  const double u_left = shape.u_left / scale;
  const double u_right = shape.u_right / scale;
  const bool left_is_shallow = shape.u_left >= shape.u_right;
  const double u_shallow = left_is_shallow ? u_left : u_right;
  const double h_fine = spectrum.grid[1] - spectrum.grid[0];
  spectrum.labels.resize(retained);
  std::vector<int> shallow_states, deep_states;
  for (std::size_t j = 0; j < retained; ++j) {
    const double eps = spectrum.eigenvalues[j];
    WellLabel label;
    if (eps > u_top - 1e-6) {
      label = WellLabel::Superbarrier;
    } else if (eps < u_shallow) {
      label = left_is_shallow ? WellLabel::RightWell : WellLabel::LeftWell;
    } else {
      double mean_phi = 0.0;
      for (int i = 0; i <= last; ++i) {
        const double psi = spectrum.wavefunctions(i, j);
        mean_phi += spectrum.grid[i] * psi * psi;
      }
      mean_phi *= h_fine;
      label = mean_phi < shape.barrier_top ? WellLabel::LeftWell : WellLabel::RightWell;
    }
    spectrum.labels[j] = label;
    const bool shallow_side =
        label == (left_is_shallow ? WellLabel::LeftWell : WellLabel::RightWell);
    const bool deep_side =
        label == (left_is_shallow ? WellLabel::RightWell : WellLabel::LeftWell);
    if (shallow_side) shallow_states.push_back(static_cast<int>(j));
    if (deep_side) deep_states.push_back(static_cast<int>(j));
  }

  if (shallow_states.size() < 2)
    throw ClassificationError("fewer than two shallow-well states below the barrier");
  if (deep_states.empty())
    throw ClassificationError("no deep-well state below the barrier");
  spectrum.index_g = shallow_states[0];
  spectrum.index_e = shallow_states[1];
  spectrum.index_f = deep_states.back();
  return spectrum;
}

namespace {

// Quadrature of psi_a * d/dphi psi_b with centered differences; the Dirichlet
// boundary supplies the missing neighbors at the window edges.
Eigen::MatrixXd derivative_overlap(const Eigen::MatrixXd& psi, double h) {
  const int n = static_cast<int>(psi.rows());
  const int m = static_cast<int>(psi.cols());
  Eigen::MatrixXd dpsi(n, m);
  dpsi.middleRows(1, n - 2) = (psi.bottomRows(n - 2) - psi.topRows(n - 2)) / (2.0 * h);
  dpsi.row(0) = psi.row(1) / (2.0 * h);
  dpsi.row(n - 1) = -psi.row(n - 2) / (2.0 * h);
  return h * psi.transpose() * dpsi;
}

}  // namespace

ChargeMatrix charge_matrix(const JpmSpectrum& spectrum) {
  const int m = static_cast<int>(spectrum.wavefunctions.cols());
  Eigen::MatrixXd overlap = derivative_overlap(
      spectrum.wavefunctions, spectrum.grid[1] - spectrum.grid[0]);

  // The fast-oscillating deep states converge at h^2 in the element values;
  // the half-resolution companion solve extrapolates that error away.
  if (spectrum.wavefunctions_base.cols() > 0) {
    const Eigen::MatrixXd base = derivative_overlap(
        spectrum.wavefunctions_base, spectrum.grid_base[1] - spectrum.grid_base[0]);
    const int k = static_cast<int>(std::min(base.cols(), overlap.cols()));
    overlap.topLeftCorner(k, k) += (overlap.topLeftCorner(k, k) - base.topLeftCorner(k, k)) / 3.0;
  }

  ChargeMatrix charge;
  charge.max_asymmetry = 0.0;
  charge.elements.resize(m, m);
  const std::complex<double> minus_i(0.0, -1.0);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      charge.elements(a, b) = minus_i * 0.5 * (overlap(a, b) - overlap(b, a));
    }
    for (int b = a; b < m; ++b) {
      charge.max_asymmetry =
          std::max(charge.max_asymmetry, 0.5 * std::abs(overlap(a, b) + overlap(b, a)));
    }
  }
  return charge;
}

RateTable rate_table(const ChargeMatrix& charge, const JpmSpectrum& spectrum) {
  if (spectrum.index_g < 0 || spectrum.index_e < 0 || spectrum.index_f < 0)
    throw ClassificationError("rate table requires resolved g/e/f roles");
  const int g = spectrum.index_g, e = spectrum.index_e, f = spectrum.index_f;
  const double anchor = std::abs(charge.elements(g, e));
  double max_element = 0.0;
  for (int a = 0; a < charge.elements.rows(); ++a)
    for (int b = 0; b < charge.elements.cols(); ++b)
      max_element = std::max(max_element, std::abs(charge.elements(a, b)));
  if (anchor < 1e-12 * max_element)
    throw ClassificationError("degenerate anchor: g-e charge matrix element vanishes");

  const double omega_ge = spectrum.omega_ge();
  auto ratio = [&](int upper, int lower) {
    const double omega = spectrum.transition(upper, lower);
    const double element = std::abs(charge.elements(upper, lower)) / anchor;
    return omega / omega_ge * element * element;
  };

  const bool left_is_shallow = spectrum.shape.u_left >= spectrum.shape.u_right;
  const WellLabel deep = left_is_shallow ? WellLabel::RightWell : WellLabel::LeftWell;
  auto sink = [&](int state) {
    double total = 0.0;
    for (std::size_t b = 0; b < spectrum.labels.size(); ++b) {
      if (spectrum.labels[b] != deep) continue;
      if (spectrum.energies[b] >= spectrum.energies[state]) continue;
      total += ratio(state, static_cast<int>(b));
    }
    return total;
  };

  RateTable table;
  table.fg = ratio(f, g);
  table.fe = ratio(f, e);
  table.sink_f = sink(f);
  table.sink_e = sink(e);
  table.sink_g = sink(g);
  return table;
}

DriveCoupling drive_and_coupling(const JpmSpec& spec, const ChargeMatrix& charge,
                                 const JpmSpectrum& spectrum, double buffer_n_zpf,
                                 double buffer_loaded_capacitance) {
  DriveCoupling out;
  const double c_loaded = spec.loaded_capacitance();
  const double m_ef = std::abs(charge.elements(spectrum.index_e, spectrum.index_f));
  const double m_ge = std::abs(charge.elements(spectrum.index_g, spectrum.index_e));
  out.drive_strength = 0.5 * kTwoPi * m_ef * (spec.drive_capacitance / c_loaded) *
                       (spec.drive_voltage / kFluxQuantum);
  const double c2_prime = buffer_loaded_capacitance + spec.coupling_capacitance;
  out.coupling_energy = 4.0 * kElementaryCharge * kElementaryCharge *
                        spec.coupling_capacitance / (c2_prime * c_loaded * kHbar);
  out.coupling_strength = buffer_n_zpf * m_ge * out.coupling_energy;
  return out;
}

double coupling_capacitance_for(const JpmSpec& spec, const ChargeMatrix& charge,
                                const JpmSpectrum& spectrum, double buffer_n_zpf,
                                double buffer_loaded_capacitance, double target_coupling) {
  if (!(target_coupling > 0.0)) throw PreconditionError("target coupling must be > 0");
  auto value = [&](double c_g) {
    JpmSpec probe = spec;
    probe.coupling_capacitance = c_g;
    return drive_and_coupling(probe, charge, spectrum, buffer_n_zpf,
                              buffer_loaded_capacitance)
        .coupling_strength;
  };
  double lo = 0.0, hi = 1e-12;
  while (value(hi) < target_coupling) {
    hi *= 2.0;
    if (hi > 1e-6) throw NoRootError("no coupling capacitance reaches the target");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) < target_coupling ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double drive_voltage_for(const JpmSpec& spec, const ChargeMatrix& charge,
                         const JpmSpectrum& spectrum, double target_drive) {
  if (!(spec.drive_capacitance > 0.0))
    throw PreconditionError("drive capacitance must be > 0 to size the drive voltage");
  const double m_ef = std::abs(charge.elements(spectrum.index_e, spectrum.index_f));
  return target_drive * 2.0 * kFluxQuantum * spec.loaded_capacitance() /
         (kTwoPi * m_ef * spec.drive_capacitance);
}

double drive_resonant_flux(const JpmSpec& spec, double target_omega_ef,
                           double flux_lo, double flux_hi,
                           const SpectrumOptions& options) {
  if (!(flux_lo < flux_hi)) throw PreconditionError("empty flux bracket");
  auto omega_ef_at = [&](double flux) {
    JpmSpec probe = spec;
    probe.bias_flux = flux;
    return solve_spectrum(probe, options).omega_ef();
  };
  double a = flux_lo, b = flux_hi;
  double fa = omega_ef_at(a) - target_omega_ef;
  double fb = omega_ef_at(b) - target_omega_ef;
  if ((fa < 0.0) == (fb < 0.0))
    throw NoRootError("drive resonance not bracketed by the flux interval");
  // Regula falsi with a bisection fallback.
  for (int it = 0; it < 80; ++it) {
    double mid = (a * fb - b * fa) / (fb - fa);
    if (!(mid > a && mid < b)) mid = 0.5 * (a + b);
    const double fm = omega_ef_at(mid) - target_omega_ef;
    if (std::abs(fm) < 1e-5 * target_omega_ef || b - a < 1e-10)
      return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  return 0.5 * (a + b);
}

DephasingRates dephasing_rates(const JpmSpec& spec, double noise_amplitude,
                               double cutoff, const SpectrumOptions& options,
                               double flux_step) {
  if (noise_amplitude < 0.0) throw PreconditionError("noise amplitude must be >= 0");
  if (!(cutoff > 0.0)) throw PreconditionError("noise cutoff must be > 0");

  JpmSpec plus = spec, minus = spec;
  plus.bias_flux += flux_step;
  minus.bias_flux -= flux_step;
  const JpmSpectrum sp = solve_spectrum(plus, options);
  const JpmSpectrum sm = solve_spectrum(minus, options);

  DephasingRates out;
  out.slope_e = std::abs(sp.omega_ge() - sm.omega_ge()) / (2.0 * flux_step);
  out.slope_f = std::abs(sp.omega_gf() - sm.omega_gf()) / (2.0 * flux_step);

  auto solve_rate = [&](double slope, double& zeta_out) {
    if (noise_amplitude == 0.0 || slope == 0.0) {
      zeta_out = 0.0;
      return 0.0;
    }
    double zeta = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double rate = std::sqrt(zeta) * noise_amplitude * slope;
      const double next = std::log(2.516 * rate / cutoff);
      if (!std::isfinite(next) || next <= 0.0)
        throw ConvergenceError("dephasing fixed point diverged (zeta = " +
                               std::to_string(next) + ")");
      const double drift = std::abs(next - zeta);
      zeta = next;
      if (drift < 1e-6) {
        zeta_out = zeta;
        return std::sqrt(zeta) * noise_amplitude * slope;
      }
    }
    throw ConvergenceError("dephasing fixed point did not converge");
  };
  out.rate_e = solve_rate(out.slope_e, out.zeta_e);
  out.rate_f = solve_rate(out.slope_f, out.zeta_f);
  return out;
}

}  // namespace tpd
