#pragma once

// Tracking cost, Hamiltonian, adjoint-based gradient and box projection.
//
// All time integrals are left-endpoint Riemann sums on the control grid so
// that the adjoint gradient is the exact derivative of the discrete cost.

#include "mfc/adjoint.hpp"
#include "mfc/forward.hpp"
#include "mfc/model.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace mfc {

struct CostSpec {
  // vbar per step, n_steps + 1 entries.
  std::vector<double> reference;
  // Optional weight on sum_k dt alpha_k^2.
  double control_penalty = 0.0;
};

// sum_{k < n} dt (mean_v(k) - vbar_k)^2 + penalty; the terminal cost is zero.
double cost(const TrajectoryBundle& traj, const CostSpec& spec,
            const ControlGrid& ctrl);

// Running cost f(mu, alpha) for the tracking problem.
double running_cost(double mean_v, double vbar, double alpha,
                    const CostSpec& spec);

// H = <b, P> + <sigma, Q> + f
double hamiltonian(double t, const State& x, const MeasureSummary& m,
                   const State& P, const NoiseMatrix& Q, double alpha,
                   double vbar, const ModelParams& p, const CostSpec& spec);

using GradientGrid = std::vector<double>;

// Per-step L2 gradient density: mean_i P_1(i, k) (+ 2 * penalty * alpha_k).
GradientGrid gradient(const TrajectoryBundle& traj, const AdjointBundle& adj,
                      const CostSpec& spec, const ModelParams& p);

// sqrt(sum_k dt g_k^2)
double l2_norm(std::span<const double> g, double dt);

// Componentwise clamp into [alpha_min, alpha_max].
ControlGrid project(const ControlGrid& ctrl);

// CSV: t,grad
void write_gradient_csv(const GradientGrid& g, double dt,
                        const std::filesystem::path& path);

}  // namespace mfc
