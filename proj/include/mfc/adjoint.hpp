#pragma once

// Backward costate equation along a frozen forward bundle.
//
//   dP = -{ b_x^T P + (mean-field coupling) + (cost drive) } dt + Q dW
//
// For the local-field-potential tracking cost the drive is the L-derivative
// of f, 2 (mean_v - vbar_t) e_1, identical for every particle. The coupling
// comes from b_mu; with b depending on the law only through mean_y it feeds
// the y-component of the costate.

#include "mfc/forward.hpp"
#include "mfc/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mfc {

enum class MeanFieldConvention {
  // particle i receives e_3 * mean_j [ -J (v^j - V_rev) P^j_1 ]
  swapped,
  // particle i receives e_3 * [ -J (v^i - V_rev) ] * mean_j P^j_1
  literal,
};

enum class AdjointStepping {
  // Exact transpose of the linearized forward step: solves
  // (I - dt b_x^T) P_k = P_{k+1} + dt (drive + coupling).
  consistent,
  // P_k = P_{k+1} + dt * adjoint_drift(...)
  explicit_euler,
};

enum class AdjointMode { pathwise, rbf_regression };

struct AdjointBundle {
  AdjointMode mode = AdjointMode::pathwise;
  std::size_t n_particles = 0;
  std::size_t n_steps = 0;
  int noise_dim = 1;
  double dt = 0.0;

  // Step-major: P[k * n_particles + i], n_steps + 1 steps.
  std::vector<State> P;
  // Regression mode only, n_steps steps.
  std::vector<NoiseMatrix> Q;

  const State& costate(std::size_t i, std::size_t k) const {
    return P[k * n_particles + i];
  }
  std::span<const State> slice(std::size_t k) const {
    return {P.data() + k * n_particles, n_particles};
  }
  std::vector<State> mean_P() const;
};

// Inputs of one backward step, at forward step k + 1.
struct AdjointStep {
  std::span<const State> jac_states;       // X_{k+1}: where b_x is taken
  double jac_mean_y = 0.0;                 // mean_y lagged to step k
  std::span<const State> coupling_states;  // X_{k+2}; empty: no coupling
  std::span<const State> costates;         // P_{k+1}
  State drive = State::Zero();
};

// Cost drive of the tracking cost |mean_v - vbar|^2.
State tracking_drive(double mean_v, double vbar);

// Per-particle costate rate b_x^T P + coupling + drive.
std::vector<State> adjoint_drift(const AdjointStep& step, const ModelParams& p,
                                 MeanFieldConvention convention);

struct PathwiseOptions {
  MeanFieldConvention convention = MeanFieldConvention::swapped;
  AdjointStepping stepping = AdjointStepping::consistent;
  // Per-particle terminal costate; zero when absent.
  std::optional<std::vector<State>> terminal;
};

// Drive per step (n_steps + 1 entries, the last is ignored). Deterministic
// given the bundle; external_only noise only.
AdjointBundle solve_pathwise_with_drive(const TrajectoryBundle& traj,
                                        std::span<const State> drive,
                                        const ModelParams& p,
                                        const PathwiseOptions& opts = {});

// ref_profile holds vbar per step (at least n_steps entries).
AdjointBundle solve_pathwise(const TrajectoryBundle& traj,
                             std::span<const double> ref_profile,
                             const ModelParams& p,
                             const PathwiseOptions& opts = {});

struct RegressionOptions {
  std::size_t n_nodes = 64;
  double delta = 0.0;         // 0: median heuristic, recomputed every step
  double ridge_rel = 1e-8;    // ridge = ridge_rel * trace(A^T A) / L
  MeanFieldConvention convention = MeanFieldConvention::swapped;
  std::uint64_t seed = 0;     // node selection
};

// Least-squares Monte Carlo backward scheme: conditional expectations of the
// next costate given the current state are Gaussian-RBF ridge fits.
AdjointBundle solve_regression(const TrajectoryBundle& traj,
                               std::span<const double> ref_profile,
                               const ModelParams& p,
                               const RegressionOptions& opts = {});

// Gradient of a terminal cost sum_i g(X_T^i, mu_T)/N, assembled as
// g_x(X^i) + mean_j g_mu(X^j)(X^i).
template <typename GradX, typename LionsDeriv>
std::vector<State> terminal_condition(const TrajectoryBundle& traj,
                                      GradX&& g_x, LionsDeriv&& g_mu) {
  const auto last = traj.slice(traj.n_steps);
  const auto& m = traj.summary[traj.n_steps];
  std::vector<State> out(last.size(), State::Zero());
  for (std::size_t i = 0; i < last.size(); ++i) {
    State acc = State::Zero();
    for (const auto& xj : last) acc += g_mu(xj, m, last[i]);
    out[i] = g_x(last[i], m) + acc / static_cast<double>(last.size());
  }
  return out;
}

// CSV: t,mean_P1,mean_P2,mean_P3
void write_adjoint_csv(const AdjointBundle& adj,
                       const std::filesystem::path& path);

// CSV: t,p1_0,...,p1_{count-1}; first-component sample paths.
void write_adjoint_samples_csv(const AdjointBundle& adj, std::size_t count,
                               const std::filesystem::path& path);

}  // namespace mfc
