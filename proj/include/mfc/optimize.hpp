#pragma once

// Projected steepest descent with step halving:
//
//   candidate = project(alpha_n - s_n grad J(alpha_n))
//
// accepted iff its cost is below the current cost, otherwise s_n is halved
// and the candidate recomputed. Stops once |grad J|_{L2} < eps.

#include "mfc/adjoint.hpp"
#include "mfc/control.hpp"
#include "mfc/forward.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfc {

enum class SeedPolicy {
  frozen,    // the same noise for every iteration
  per_iter,  // seed + iteration; current cost is re-evaluated each iteration
};

enum class OptimizerStatus { converged, max_iters, stalled };

std::string to_string(OptimizerStatus s);

struct OptimizerConfig {
  double s0 = 1.0;
  std::optional<double> eps;  // default 1e-3 * sqrt(t_end)
  std::size_t max_iters = 100;
  std::size_t max_backtracks = 30;
  std::size_t n_particles = 1000;
  std::uint64_t seed = 1;
  SeedPolicy seed_policy = SeedPolicy::frozen;
};

struct IterationRecord {
  std::size_t iter = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  bool accepted = false;
};

struct OptimizerState {
  ControlGrid control;
  double cost = 0.0;
  GradientGrid gradient;
  double step = 0.0;
  std::size_t iteration = 0;
  OptimizerStatus status = OptimizerStatus::max_iters;
  std::vector<IterationRecord> history;
};

// Cost and gradient as functions of the control; iter selects the noise.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double cost(const ControlGrid& ctrl, std::size_t iter) = 0;
  virtual GradientGrid gradient(const ControlGrid& ctrl, std::size_t iter) = 0;
};

OptimizerState projected_descent(Objective& objective, ControlGrid initial,
                                 double dt, double eps,
                                 const OptimizerConfig& cfg);

struct ProblemSetup {
  ModelParams model;
  TimeGrid grid;
  CostSpec cost;
  InitialLaw init;
  SimOptions sim;
  PathwiseOptions adjoint;
};

// Particle simulation + pathwise adjoint. Keeps the last trajectory so a
// cost followed by a gradient at the same control simulates once.
class McKeanVlasovObjective final : public Objective {
 public:
  McKeanVlasovObjective(ProblemSetup setup, std::size_t n_particles,
                        std::uint64_t seed, SeedPolicy policy);

  double cost(const ControlGrid& ctrl, std::size_t iter) override;
  GradientGrid gradient(const ControlGrid& ctrl, std::size_t iter) override;

  const TrajectoryBundle& trajectory(const ControlGrid& ctrl, std::size_t iter);
  AdjointBundle adjoint(const ControlGrid& ctrl, std::size_t iter);
  std::uint64_t seed_for(std::size_t iter) const;

 private:
  ProblemSetup setup_;
  std::size_t n_particles_;
  std::uint64_t seed_;
  SeedPolicy policy_;
  std::optional<TrajectoryBundle> cached_;
  std::vector<double> cached_control_;
};

OptimizerState descend(const ProblemSetup& setup, const ControlGrid& initial,
                       const OptimizerConfig& cfg);

// CSV: iter,cost,grad_norm,step,accepted
void write_convergence_csv(const OptimizerState& state,
                           const std::filesystem::path& path);

// CSV: t,alpha
void write_control_csv(const ControlGrid& ctrl, double dt,
                       const std::filesystem::path& path);

}  // namespace mfc
