#include "mfc/control.hpp"

#include "mfc/csv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfc {

double running_cost(double mean_v, double vbar, double alpha,
                    const CostSpec& spec) {
  const double e = mean_v - vbar;
  return e * e + spec.control_penalty * alpha * alpha;
}

double cost(const TrajectoryBundle& traj, const CostSpec& spec,
            const ControlGrid& ctrl) {
  if (spec.reference.size() < traj.n_steps ||
      ctrl.values.size() != traj.n_steps) {
    throw std::invalid_argument("cost: grid mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < traj.n_steps; ++k) {
    total += traj.dt * running_cost(traj.summary[k].mean_v, spec.reference[k],
                                    ctrl.values[k], spec);
  }
  return total;
}

double hamiltonian(double t, const State& x, const MeasureSummary& m,
                   const State& P, const NoiseMatrix& Q, double alpha,
                   double vbar, const ModelParams& p, const CostSpec& spec) {
  double h = drift(t, x, m, alpha, p).dot(P) +
             running_cost(m.mean_v, vbar, alpha, spec);
  if (Q.size() > 0) {
    const NoiseMatrix sigma = diffusion(t, x, m, alpha, p);
    if (sigma.cols() != Q.cols()) {
      throw std::invalid_argument("hamiltonian: Q has the wrong shape");
    }
    h += (sigma.array() * Q.array()).sum();
  }
  return h;
}

GradientGrid gradient(const TrajectoryBundle& traj, const AdjointBundle& adj,
                      const CostSpec& spec, const ModelParams& /*p*/) {
  if (adj.n_steps != traj.n_steps || adj.n_particles != traj.n_particles) {
    throw std::invalid_argument("gradient: adjoint and trajectory grids differ");
  }
  // b_alpha = e_1 and sigma_alpha = 0, so H_alpha = P_1 + f_alpha.
  GradientGrid g(traj.n_steps, 0.0);
  for (std::size_t k = 0; k < traj.n_steps; ++k) {
    double acc = 0.0;
    for (const auto& pk : adj.slice(k)) acc += pk[kV];
    g[k] = acc / static_cast<double>(traj.n_particles) +
           2.0 * spec.control_penalty * traj.control[k];
  }
  return g;
}

double l2_norm(std::span<const double> g, double dt) {
  double acc = 0.0;
  for (double x : g) acc += x * x;
  return std::sqrt(dt * acc);
}

ControlGrid project(const ControlGrid& ctrl) {
  ControlGrid out = ctrl;
  for (auto& a : out.values) a = std::clamp(a, ctrl.alpha_min, ctrl.alpha_max);
  return out;
}

void write_gradient_csv(const GradientGrid& g, double dt,
                        const std::filesystem::path& path) {
  std::vector<double> t(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) t[k] = static_cast<double>(k) * dt;
  csv::write_columns(path, {"t", "grad"}, {t, g});
}

}  // namespace mfc
