#include "tpd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

namespace tpd {

void apply_rate_anchors(ModelParams& params, double rate_eg, double kappa_eg,
                        const RateRatios& ratios) {
  if (rate_eg < 0.0 || kappa_eg < 0.0)
    throw PreconditionError("anchor rates must be >= 0");
  params.rate_eg = rate_eg;
  params.kappa_eg = kappa_eg;
  params.kappa_filter = ratios.filter_linewidth_factor * kappa_eg;
  params.rate_fg = ratios.fg * rate_eg;
  params.kappa_fg = ratios.fg * kappa_eg;
  params.rate_fe = ratios.fe * rate_eg;
  params.kappa_fe = ratios.fe * kappa_eg;
  const double unit = rate_eg + kappa_eg;
  params.sink_f = ratios.sink_f * unit;
  params.sink_e = ratios.sink_e * unit;
  params.sink_g = ratios.sink_g * unit;
}

RateRatios reference_ratios() { return RateRatios{}; }

ModelParams reference_params(ReferenceSet set) {
  ModelParams p;
  p.omega1 = from_ghz(5.379);
  p.omega2 = from_ghz(10.758);
  p.omega_ge = from_ghz(10.758);
  p.omega_drive = from_ghz(3.566);
  p.omega_gf = p.omega_ge + p.omega_drive;
  p.omega_filter = from_ghz(10.758);
  p.dephasing_e = from_mhz(1.3);
  p.dephasing_f = from_mhz(30.0);
  if (set == ReferenceSet::A) {
    p.two_photon = from_mhz(20.4);
    p.coupling = from_mhz(50.0);
    p.drive = from_mhz(220.6);
    p.kerr1 = from_mhz(0.2774);
    p.kerr2 = from_mhz(0.1387);
    p.loss1 = from_mhz(0.010);
    p.loss2 = from_mhz(0.100);
    apply_rate_anchors(p, from_mhz(1.0), from_mhz(4.0), reference_ratios());
    p.efficiency = 0.995;
    p.capture_time = 50e-9;
  } else {
    p.two_photon = from_mhz(24.4);
    p.coupling = from_mhz(60.0);
    p.drive = from_mhz(188.2);
    p.kerr1 = from_mhz(0.3969);
    p.kerr2 = from_mhz(0.1985);
    p.loss1 = from_mhz(0.002);
    p.loss2 = from_mhz(0.020);
    apply_rate_anchors(p, from_mhz(0.1), from_mhz(5.0), reference_ratios());
    p.efficiency = 0.999;
    p.capture_time = 30e-9;
  }
  return p;
}

std::vector<FidelityPoint> fidelity_curve(const ModelParams& params,
                                          const SimOptions& options,
                                          std::span<const double> capture_times) {
  params.validate();
  if (options.input_photons < 2)
    throw PreconditionError("fidelity requires at least a two-photon input");
  if (options.input_photons >= options.space.n_storage)
    throw PreconditionError("input photon number exceeds the storage truncation");
  if (capture_times.empty()) throw PreconditionError("no capture times requested");

  const MasterEquation equation = build_model(options.space, params);
  const Eigen::MatrixXcd rho0 =
      fock_state(options.space, options.input_photons, 0, kGround, 0);
  const EvolutionResult result = evolve(equation, rho0, capture_times, options.ode);

  std::vector<FidelityPoint> points(capture_times.size());
  for (std::size_t k = 0; k < capture_times.size(); ++k) {
    FidelityPoint& point = points[k];
    point.click_two = params.efficiency * result.population(k, kSink);
    point.click_dark =
        false_click_probability(params.sink_g, capture_times[k], params.efficiency);
    point.fidelity = 0.5 * (1.0 + point.click_two - point.click_dark);
    point.trace_drift = result.max_trace_drift;
  }
  return points;
}

FidelityPoint fidelity(const ModelParams& params, const SimOptions& options) {
  const double times[] = {params.capture_time};
  return fidelity_curve(params, options, times).front();
}

std::vector<double> SweepAxis::values() const {
  if (points < 1) throw PreconditionError("sweep axis needs at least one point");
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lower;
    return out;
  }
  if (log_scale) {
    if (!(lower > 0.0) || !(upper > 0.0))
      throw PreconditionError("log-scale axis requires positive bounds");
    const double ratio = std::log(upper / lower);
    for (int i = 0; i < points; ++i)
      out[i] = lower * std::exp(ratio * i / (points - 1));
  } else {
    for (int i = 0; i < points; ++i)
      out[i] = lower + (upper - lower) * i / (points - 1);
  }
  return out;
}

namespace {

enum class Parameter { TwoPhoton, Drive, RateEg, KappaEg, CaptureTime };

Parameter parse_parameter(const std::string& name) {
  if (name == "two_photon" || name == "g21") return Parameter::TwoPhoton;
  if (name == "drive" || name == "Omega") return Parameter::Drive;
  if (name == "rate_eg" || name == "Gamma_eg") return Parameter::RateEg;
  if (name == "kappa_eg") return Parameter::KappaEg;
  if (name == "capture_time" || name == "t_cpt") return Parameter::CaptureTime;
  throw PreconditionError("unknown sweep parameter: " + name);
}

void apply_parameter(ModelParams& params, const RateRatios& ratios, Parameter which,
                     double value) {
  switch (which) {
    case Parameter::TwoPhoton:
      params.two_photon = value;
      break;
    case Parameter::Drive:
      params.drive = value;
      break;
    case Parameter::RateEg:
      apply_rate_anchors(params, value, params.kappa_eg, ratios);
      break;
    case Parameter::KappaEg:
      apply_rate_anchors(params, params.rate_eg, value, ratios);
      break;
    case Parameter::CaptureTime:
      params.capture_time = value;
      break;
  }
}

void check_guards(const ModelParams& baseline, const SweepGuards& guards,
                  Parameter which, const SweepAxis& axis) {
  if (which == Parameter::TwoPhoton) {
    const double cap = guards.two_photon_fraction * baseline.omega1;
    if (std::abs(axis.lower) > cap || std::abs(axis.upper) > cap)
      throw PreconditionError("two-photon axis exceeds the rotating-frame guard");
  }
  if (which == Parameter::Drive) {
    const double omega_ef = baseline.omega_gf - baseline.omega_ge;
    const double cap = guards.drive_fraction * omega_ef;
    if (std::abs(axis.lower) > cap || std::abs(axis.upper) > cap)
      throw PreconditionError("drive axis exceeds the rotating-frame guard");
  }
}

// One threaded batch of independent evolutions; results land in
// caller-provided slots so completion order never matters.
void run_parallel(std::vector<std::function<void()>>& tasks, int threads) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= tasks.size()) return;
        tasks[k]();
      }
    });
  }
  for (auto& worker : pool) worker.join();
}

}  // namespace

FidelityMap sweep(const SweepSpec& spec, int threads) {
  if (spec.axes.empty() || spec.axes.size() > 2)
    throw PreconditionError("sweep needs one or two axes");

  FidelityMap map;
  map.axes = spec.axes;

  std::vector<Parameter> which;
  for (const auto& axis : spec.axes) {
    which.push_back(parse_parameter(axis.parameter));
    check_guards(spec.baseline, spec.guards, which.back(), axis);
  }
  if (spec.inner_max) {
    check_guards(spec.baseline, spec.guards, Parameter::TwoPhoton,
                 spec.inner_max->two_photon);
    check_guards(spec.baseline, spec.guards, Parameter::Drive, spec.inner_max->drive);
  }

  const auto values1 = spec.axes[0].values();
  const auto values2 =
      spec.axes.size() == 2 ? spec.axes[1].values() : std::vector<double>{0.0};
  const std::size_t n_cells = values1.size() * values2.size();
  map.cells.resize(n_cells);
  for (std::size_t i = 0; i < values1.size(); ++i) {
    for (std::size_t j = 0; j < values2.size(); ++j) {
      auto& cell = map.cells[i * values2.size() + j];
      cell.axis1 = values1[i];
      cell.axis2 = spec.axes.size() == 2 ? values2[j] : 0.0;
    }
  }

  // A capture-time axis is sampled from a single evolution per remaining
  // parameter combination; group cells accordingly.
  int time_axis = -1;
  for (std::size_t k = 0; k < which.size(); ++k)
    if (which[k] == Parameter::CaptureTime) time_axis = static_cast<int>(k);

  struct Group {
    std::vector<std::size_t> cell_indices;  // in capture-time order
    std::vector<double> times;
    ModelParams params;
  };
  std::vector<Group> groups;
  if (time_axis < 0) {
    for (std::size_t c = 0; c < n_cells; ++c) {
      Group group;
      group.cell_indices = {c};
      group.params = spec.baseline;
      apply_parameter(group.params, spec.ratios, which[0], map.cells[c].axis1);
      if (which.size() == 2)
        apply_parameter(group.params, spec.ratios, which[1], map.cells[c].axis2);
      group.times = {group.params.capture_time};
      groups.push_back(std::move(group));
    }
  } else {
    const int other_axis = 1 - time_axis;
    const auto& time_values = time_axis == 0 ? values1 : values2;
    const auto& other_values = time_axis == 0 ? values2 : values1;
    const bool has_other = spec.axes.size() == 2;
    for (std::size_t o = 0; o < (has_other ? other_values.size() : 1); ++o) {
      Group group;
      group.params = spec.baseline;
      if (has_other)
        apply_parameter(group.params, spec.ratios, which[other_axis], other_values[o]);
      for (std::size_t ti = 0; ti < time_values.size(); ++ti) {
        const std::size_t i = time_axis == 0 ? ti : o;
        const std::size_t j = time_axis == 0 ? o : ti;
        group.cell_indices.push_back(i * values2.size() + j);
        group.times.push_back(time_values[ti]);
      }
      groups.push_back(std::move(group));
    }
  }

  // Expand the optional inner grid; each task is one evolution over the
  // group's capture times for one (two-photon, drive) combination.
  std::vector<std::pair<double, double>> inner_points{{0.0, 0.0}};
  if (spec.inner_max) {
    inner_points.clear();
    for (double g : spec.inner_max->two_photon.values())
      for (double d : spec.inner_max->drive.values()) inner_points.emplace_back(g, d);
  }

  struct TaskResult {
    std::vector<FidelityPoint> points;
    bool failed = false;
    std::string error;
  };
  std::vector<TaskResult> results(groups.size() * inner_points.size());
  std::vector<std::function<void()>> tasks;
  tasks.reserve(results.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t pi = 0; pi < inner_points.size(); ++pi) {
      tasks.push_back([&, gi, pi] {
        TaskResult& out = results[gi * inner_points.size() + pi];
        try {
          ModelParams params = groups[gi].params;
          if (spec.inner_max) {
            params.two_photon = inner_points[pi].first;
            params.drive = inner_points[pi].second;
          }
          out.points = fidelity_curve(params, spec.sim, groups[gi].times);
        } catch (const std::exception& err) {
          out.failed = true;
          out.error = err.what();
        }
      });
    }
  }
  run_parallel(tasks, threads);

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& group = groups[gi];
    for (std::size_t k = 0; k < group.cell_indices.size(); ++k) {
      SweepCell& cell = map.cells[group.cell_indices[k]];
      bool any = false;
      for (std::size_t pi = 0; pi < inner_points.size(); ++pi) {
        const TaskResult& res = results[gi * inner_points.size() + pi];
        if (res.failed) {
          if (!any) {
            cell.failed = true;
            cell.error = res.error;
          }
          continue;
        }
        const FidelityPoint& point = res.points[k];
        if (!any || point.fidelity > cell.point.fidelity) {
          cell.point = point;
          cell.failed = false;
          cell.error.clear();
          any = true;
        }
      }
    }
  }

  for (std::size_t c = 0; c < map.cells.size(); ++c) {
    const auto& cell = map.cells[c];
    if (cell.failed) continue;
    if (map.argmax < 0 || cell.point.fidelity > map.best_fidelity) {
      map.argmax = static_cast<int>(c);
      map.best_fidelity = cell.point.fidelity;
    }
  }
  return map;
}

Optimum optimize(const ModelParams& baseline, const SimOptions& options,
                 const OptimizeBox& box, int threads) {
  if (!(box.two_photon_upper >= box.two_photon_lower) ||
      !(box.drive_upper >= box.drive_lower))
    throw PreconditionError("empty optimization box");

  Optimum best;
  best.point.fidelity = -1.0;
  int evaluations = 0;

  auto evaluate = [&](double g, double d) {
    ModelParams params = baseline;
    params.two_photon = g;
    params.drive = d;
    ++evaluations;
    return fidelity(params, options);
  };

  // Coarse grid through the sweep machinery (threaded), then local descent.
  {
    SweepSpec coarse;
    coarse.baseline = baseline;
    coarse.sim = options;
    coarse.axes = {SweepAxis{"two_photon", box.two_photon_lower, box.two_photon_upper,
                             box.coarse_points, false},
                   SweepAxis{"drive", box.drive_lower, box.drive_upper,
                             box.coarse_points, false}};
    const FidelityMap map = sweep(coarse, threads);
    if (map.argmax < 0) throw ConvergenceError("coarse optimization grid failed everywhere");
    const auto& cell = map.cells[map.argmax];
    best.two_photon = cell.axis1;
    best.drive = cell.axis2;
    best.point = cell.point;
    evaluations += static_cast<int>(map.cells.size());
  }

  double step_g = (box.two_photon_upper - box.two_photon_lower) /
                  std::max(1, box.coarse_points - 1);
  double step_d = (box.drive_upper - box.drive_lower) / std::max(1, box.coarse_points - 1);
  for (int round = 0; round < 60; ++round) {
    double gained = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      const double step = axis == 0 ? step_g : step_d;
      if (step == 0.0) continue;
      for (double sign : {1.0, -1.0}) {
        const double g = best.two_photon + (axis == 0 ? sign * step : 0.0);
        const double d = best.drive + (axis == 1 ? sign * step : 0.0);
        if (g < box.two_photon_lower || g > box.two_photon_upper ||
            d < box.drive_lower || d > box.drive_upper)
          continue;
        const FidelityPoint trial = evaluate(g, d);
        if (trial.fidelity > best.point.fidelity) {
          gained = std::max(gained, trial.fidelity - best.point.fidelity);
          best.two_photon = g;
          best.drive = d;
          best.point = trial;
        }
      }
    }
    if (gained < 1e-4) {
      if (step_g <= (box.two_photon_upper - box.two_photon_lower) * 1e-3 &&
          step_d <= (box.drive_upper - box.drive_lower) * 1e-3)
        break;
      step_g *= 0.5;
      step_d *= 0.5;
    }
  }

  const double edge_g = 1e-9 * std::max(std::abs(box.two_photon_lower),
                                        std::abs(box.two_photon_upper));
  const double edge_d =
      1e-9 * std::max(std::abs(box.drive_lower), std::abs(box.drive_upper));
  best.on_boundary = std::abs(best.two_photon - box.two_photon_lower) <= edge_g ||
                     std::abs(best.two_photon - box.two_photon_upper) <= edge_g ||
                     std::abs(best.drive - box.drive_lower) <= edge_d ||
                     std::abs(best.drive - box.drive_upper) <= edge_d;
  best.evaluations = evaluations;
  return best;
}

}  // namespace tpd
