#pragma once

// N-particle approximation of the controlled McKean-Vlasov dynamics.
//
// One step of the scheme, for every particle i:
//
//   X_{k+1} = X_k + dt * b(X_{k+1}, m_k, alpha_k) + sigma(X_k, m_k) dW_k
//
// where m_k summarizes the empirical law at step k. The own-state drift is
// implicit (damped Newton on the 3x3 system), the mean-field coupling and the
// noise are explicit. Particles are independent within a step.

#include "mfc/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mfc {

struct TimeGrid {
  double t_end = 200.0;
  double dt = 0.1;
  std::size_t n_steps = 2000;

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

// Throws std::invalid_argument unless dt > 0 and t_end is a multiple of dt.
TimeGrid make_grid(double t_end, double dt);

// Piecewise-constant control: values[k] acts on [t_k, t_{k+1}).
struct ControlGrid {
  std::vector<double> values;
  double alpha_min = -1.0;
  double alpha_max = 1.0;
};

ControlGrid constant_control(const TimeGrid& grid, double value,
                             double alpha_min, double alpha_max);

// Size must match the grid and every value must lie in the box.
void validate(const ControlGrid& ctrl, const TimeGrid& grid);

struct InitialLaw {
  enum class Kind { orbit_uniform, point, custom_samples };

  Kind kind = Kind::point;
  State anchor = State(-0.828, -0.139, 0.589);
  // orbit_uniform: equally time-spaced points along one period of the orbit.
  // custom_samples: particle i starts at samples[i % samples.size()].
  std::vector<State> samples;
  double orbit_period = 0.0;  // 0 when no period was detected

  static InitialLaw point(const State& x);
  static InitialLaw custom(std::vector<State> samples);
};

struct OrbitOptions {
  std::size_t n_samples = 4096;
  double search_horizon = 1000.0;
  double fallback_window = 100.0;
  double max_step = 0.01;
};

// Orbit of the deterministic identical-particle system (alpha = 0, no noise)
// through the anchor. The period is the spacing of the first two upward
// crossings of v through the anchor's v; without a detectable period the
// first fallback_window time units are used instead.
InitialLaw make_orbit_law(const ModelParams& p, const State& anchor,
                          const OrbitOptions& opts = {});

State initial_state(const InitialLaw& law, std::uint64_t seed,
                    std::size_t particle);

struct TrajectoryBundle {
  std::size_t n_particles = 0;
  std::size_t n_steps = 0;
  int noise_dim = 1;
  double dt = 0.0;
  std::uint64_t seed = 0;

  // Step-major: paths[k * n_particles + i].
  std::vector<State> paths;
  // Applied Brownian increments: noise[(k * n_particles + i) * noise_dim + c].
  std::vector<double> noise;
  // Empirical summary of each step, n_steps + 1 entries.
  std::vector<MeasureSummary> summary;
  // Control values the bundle was generated with, n_steps entries.
  std::vector<double> control;

  const State& state(std::size_t i, std::size_t k) const {
    return paths[k * n_particles + i];
  }
  State& state(std::size_t i, std::size_t k) {
    return paths[k * n_particles + i];
  }
  std::span<const State> slice(std::size_t k) const {
    return {paths.data() + k * n_particles, n_particles};
  }
  double increment(std::size_t i, std::size_t k, int c) const {
    return noise[(k * n_particles + i) * static_cast<std::size_t>(noise_dim) +
                 static_cast<std::size_t>(c)];
  }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

struct SimOptions {
  int threads = 0;  // 0: OpenMP default
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
};

// Throws std::runtime_error naming particle and step on Newton failure.
TrajectoryBundle simulate(const ModelParams& p, const TimeGrid& grid,
                          const ControlGrid& ctrl, const InitialLaw& init,
                          std::size_t n_particles, std::uint64_t seed,
                          const SimOptions& opts = {});

// Per-step mean membrane potential.
std::vector<double> local_field_potential(const TrajectoryBundle& traj);

struct ConstraintReport {
  std::size_t violations = 0;
  double max_excess = 0.0;  // largest positive pi(x), 0 if none
};

ConstraintReport constraint_report(const TrajectoryBundle& traj,
                                   double tol = 1e-9);

// sup_k (1/N) sum_i |X_k^i|^p for p in {2, 4, 6}.
double moment_report(const TrajectoryBundle& traj, int p_order);

// CSV: t,mean_v,mean_w,mean_y,std_v,q05_v,q95_v
void write_trajectory_csv(const TrajectoryBundle& traj,
                          const std::filesystem::path& path);

// Little-endian records of five float64 values: step, particle, v, w, y.
void write_trajectory_binary(const TrajectoryBundle& traj,
                             const std::filesystem::path& path);

}  // namespace mfc
