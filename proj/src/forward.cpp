#include "mfc/forward.hpp"

#include "mfc/csv.hpp"
#include "mfc/ode.hpp"
#include "mfc/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

namespace mfc {

TimeGrid make_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) {
    throw std::invalid_argument("time grid needs t_end > 0 and dt > 0");
  }
  const double ratio = t_end / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio) || steps < 1.0) {
    throw std::invalid_argument("t_end must be an integer multiple of dt");
  }
  return TimeGrid{t_end, dt, static_cast<std::size_t>(steps)};
}

ControlGrid constant_control(const TimeGrid& grid, double value,
                             double alpha_min, double alpha_max) {
  return ControlGrid{std::vector<double>(grid.n_steps, value), alpha_min,
                     alpha_max};
}

void validate(const ControlGrid& ctrl, const TimeGrid& grid) {
  if (!(ctrl.alpha_min <= ctrl.alpha_max)) {
    throw std::invalid_argument("control box has alpha_min > alpha_max");
  }
  if (ctrl.values.size() != grid.n_steps) {
    throw std::invalid_argument(
        "control has " + std::to_string(ctrl.values.size()) +
        " values, grid has " + std::to_string(grid.n_steps) + " steps");
  }
  for (std::size_t k = 0; k < ctrl.values.size(); ++k) {
    const double a = ctrl.values[k];
    if (!(a >= ctrl.alpha_min && a <= ctrl.alpha_max)) {
      throw std::invalid_argument("control value at step " +
                                  std::to_string(k) + " outside the box");
    }
  }
}

InitialLaw InitialLaw::point(const State& x) {
  InitialLaw law;
  law.kind = Kind::point;
  law.anchor = x;
  return law;
}

InitialLaw InitialLaw::custom(std::vector<State> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("custom initial law needs samples");
  }
  InitialLaw law;
  law.kind = Kind::custom_samples;
  law.samples = std::move(samples);
  return law;
}

InitialLaw make_orbit_law(const ModelParams& p, const State& anchor,
                          const OrbitOptions& opts) {
  ModelParams det = p;
  det.sigma_ext = 0.0;
  det.sigma_J = 0.0;
  const auto zero = [](std::size_t) { return 0.0; };

  const auto n_search =
      static_cast<std::size_t>(std::ceil(opts.search_horizon / opts.max_step));
  const auto path =
      rk4_path(det, anchor, opts.max_step, n_search, zero, Coupling::self);

  std::vector<double> crossings;
  const double level = anchor[kV];
  for (std::size_t k = 1; k < path.size() && crossings.size() < 2; ++k) {
    const double v0 = path[k - 1][kV];
    const double v1 = path[k][kV];
    if (v0 < level && v1 >= level) {
      const double frac = (level - v0) / (v1 - v0);
      crossings.push_back((static_cast<double>(k - 1) + frac) * opts.max_step);
    }
  }

  InitialLaw law;
  law.kind = InitialLaw::Kind::orbit_uniform;
  law.anchor = anchor;
  double window = opts.fallback_window;
  if (crossings.size() == 2 && crossings[1] - crossings[0] > opts.max_step) {
    law.orbit_period = crossings[1] - crossings[0];
    window = law.orbit_period;
  }

  const std::size_t m = opts.n_samples;
  const double spacing = window / static_cast<double>(m);
  const auto sub =
      static_cast<std::size_t>(std::max(1.0, std::ceil(spacing / opts.max_step)));
  const auto dense = rk4_path(det, anchor, spacing / static_cast<double>(sub),
                              m * sub, zero, Coupling::self);
  law.samples.reserve(m);
  for (std::size_t j = 0; j < m; ++j) law.samples.push_back(dense[j * sub]);
  return law;
}

State initial_state(const InitialLaw& law, std::uint64_t seed,
                    std::size_t particle) {
  switch (law.kind) {
    case InitialLaw::Kind::point:
      return law.anchor;
    case InitialLaw::Kind::custom_samples:
      return law.samples[particle % law.samples.size()];
    case InitialLaw::Kind::orbit_uniform: {
      const double u = rng::uniform(rng::key(seed, rng::kInitialStream,
                                             particle, 0));
      auto j = static_cast<std::size_t>(
          u * static_cast<double>(law.samples.size()));
      return law.samples[std::min(j, law.samples.size() - 1)];
    }
  }
  return law.anchor;
}

namespace {

// Solves x = x_prev + dt * b(x, m, alpha) + xi by damped Newton.
bool implicit_step(const ModelParams& p, const State& x_prev,
                   const MeasureSummary& m, double alpha, double dt,
                   const State& xi, const SimOptions& opts, State& x) {
  const auto residual = [&](const State& z) {
    return State(z - x_prev - dt * drift(0.0, z, m, alpha, p) - xi);
  };
  x = x_prev + xi;
  State r = residual(x);
  double norm = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (norm <= opts.newton_tol) return true;
    const Eigen::Matrix3d jac =
        Eigen::Matrix3d::Identity() - dt * drift_jac_x(0.0, x, m, alpha, p);
    const State delta = jac.partialPivLu().solve(r);
    double damping = 1.0;
    State trial = x - delta;
    State r_trial = residual(trial);
    double n_trial = r_trial.lpNorm<Eigen::Infinity>();
    for (int h = 0; h < 30 && !(n_trial < norm); ++h) {
      damping *= 0.5;
      trial = x - damping * delta;
      r_trial = residual(trial);
      n_trial = r_trial.lpNorm<Eigen::Infinity>();
    }
    x = trial;
    r = r_trial;
    norm = n_trial;
  }
  return norm <= opts.newton_tol;
}

}  // namespace

TrajectoryBundle simulate(const ModelParams& p, const TimeGrid& grid,
                          const ControlGrid& ctrl, const InitialLaw& init,
                          std::size_t n_particles, std::uint64_t seed,
                          const SimOptions& opts) {
  validate(p);
  validate(ctrl, grid);
  if (n_particles < 1) throw std::invalid_argument("need at least 1 particle");

  TrajectoryBundle traj;
  traj.n_particles = n_particles;
  traj.n_steps = grid.n_steps;
  traj.noise_dim = noise_dim(p);
  traj.dt = grid.dt;
  traj.seed = seed;
  traj.control = ctrl.values;
  traj.paths.resize((grid.n_steps + 1) * n_particles);
  traj.noise.resize(grid.n_steps * n_particles *
                    static_cast<std::size_t>(traj.noise_dim));
  traj.summary.resize(grid.n_steps + 1);

  for (std::size_t i = 0; i < n_particles; ++i) {
    traj.state(i, 0) = initial_state(init, seed, i);
  }
  traj.summary[0] = summarize(traj.slice(0));

  const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const auto nd = static_cast<std::size_t>(traj.noise_dim);
  const auto n_signed = static_cast<long long>(n_particles);

  std::vector<std::exception_ptr> errors(n_particles);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const MeasureSummary m = traj.summary[k];
    const double alpha = ctrl.values[k];
    bool failed = false;

#pragma omp parallel for schedule(static) num_threads(threads) reduction(|| : failed)
    for (long long ii = 0; ii < n_signed; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      try {
        const State& x_prev = traj.state(i, k);
        const NoiseMatrix sigma = diffusion(grid.time(k), x_prev, m, alpha, p);
        double* dw = &traj.noise[(k * n_particles + i) * nd];
        for (std::size_t c = 0; c < nd; ++c) {
          dw[c] = sqrt_dt * rng::normal(seed, i, k, c);
        }
        if (nd == 3 && sigma(kY, 2) > 0.0) {
          // Explicit gating noise may not carry y out of [0, 1]; the
          // implicit gating drift then keeps y_{k+1} inside as well.
          const double lo = -x_prev[kY] / sigma(kY, 2);
          const double hi = (1.0 - x_prev[kY]) / sigma(kY, 2);
          dw[2] = std::clamp(dw[2], lo, hi);
        }
        State xi = State::Zero();
        for (std::size_t c = 0; c < nd; ++c) {
          xi += sigma.col(static_cast<Eigen::Index>(c)) * dw[c];
        }

        State x;
        if (!implicit_step(p, x_prev, m, alpha, dt, xi, opts, x)) {
          throw std::runtime_error("Newton did not converge for particle " +
                                   std::to_string(i) + " at step " +
                                   std::to_string(k));
        }
        // The gating equation is linear in y given v; solving it in closed
        // form keeps y exactly inside [0, 1].
        const double s = sigmoid_S(x[kV], p);
        x[kY] = (x_prev[kY] + xi[kY] + dt * p.a_r * s) /
                (1.0 + dt * (p.a_r * s + p.a_d));
        traj.state(i, k + 1) = x;
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
    if (failed) {
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    traj.summary[k + 1] = summarize(traj.slice(k + 1));
  }
  return traj;
}

std::vector<double> local_field_potential(const TrajectoryBundle& traj) {
  std::vector<double> lfp;
  lfp.reserve(traj.summary.size());
  for (const auto& m : traj.summary) lfp.push_back(m.mean_v);
  return lfp;
}

ConstraintReport constraint_report(const TrajectoryBundle& traj, double tol) {
  ConstraintReport report;
  for (const auto& x : traj.paths) {
    const double pi = constraint_pi(x);
    if (pi > tol) ++report.violations;
    report.max_excess = std::max(report.max_excess, pi);
  }
  return report;
}

double moment_report(const TrajectoryBundle& traj, int p_order) {
  if (p_order != 2 && p_order != 4 && p_order != 6) {
    throw std::invalid_argument("moment order must be 2, 4 or 6");
  }
  double sup = 0.0;
  for (std::size_t k = 0; k <= traj.n_steps; ++k) {
    double acc = 0.0;
    for (const auto& x : traj.slice(k)) {
      acc += std::pow(x.squaredNorm(), p_order / 2);
    }
    sup = std::max(sup, acc / static_cast<double>(traj.n_particles));
  }
  return sup;
}

namespace {

// Linear interpolation between order statistics; values must be sorted.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void write_trajectory_csv(const TrajectoryBundle& traj,
                          const std::filesystem::path& path) {
  auto out = csv::open(path);
  out << "t,mean_v,mean_w,mean_y,std_v,q05_v,q95_v\n";
  std::vector<double> v(traj.n_particles);
  for (std::size_t k = 0; k <= traj.n_steps; ++k) {
    const auto& m = traj.summary[k];
    double var = 0.0;
    for (std::size_t i = 0; i < traj.n_particles; ++i) {
      v[i] = traj.state(i, k)[kV];
      var += (v[i] - m.mean_v) * (v[i] - m.mean_v);
    }
    var /= static_cast<double>(traj.n_particles);
    std::sort(v.begin(), v.end());
    out << csv::format_double(traj.time(k)) << ','
        << csv::format_double(m.mean_v) << ','
        << csv::format_double(m.mean_w) << ','
        << csv::format_double(m.mean_y) << ','
        << csv::format_double(std::sqrt(var)) << ','
        << csv::format_double(quantile_sorted(v, 0.05)) << ','
        << csv::format_double(quantile_sorted(v, 0.95)) << '\n';
  }
}

void write_trajectory_binary(const TrajectoryBundle& traj,
                             const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little,
                "binary dump assumes a little-endian host");
  auto out = csv::open(path);
  for (std::size_t k = 0; k <= traj.n_steps; ++k) {
    for (std::size_t i = 0; i < traj.n_particles; ++i) {
      const State& x = traj.state(i, k);
      const double rec[5] = {static_cast<double>(k), static_cast<double>(i),
                             x[kV], x[kW], x[kY]};
      out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
  }
}

}  // namespace mfc
