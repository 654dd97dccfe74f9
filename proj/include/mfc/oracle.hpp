#pragma once

// Reference computations that do not share code paths with the solvers they
// check: RK4 integration, the forward variation process, central finite
// differences, 1-D optimal transport and the randomized assumption audit.

#include "mfc/control.hpp"
#include "mfc/forward.hpp"
#include "mfc/model.hpp"
#include "mfc/ode.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mfc::oracle {

struct OdeSolution {
  double dt_fine = 0.0;
  std::size_t refine = 16;
  std::vector<State> fine;  // n_steps * refine + 1 states

  const State& at_step(std::size_t k) const { return fine[k * refine]; }
  std::vector<State> on_grid() const;
};

// Deterministic single neuron with noise disabled; dt_fine = dt / refine.
OdeSolution integrate_reference(const ModelParams& p, const TimeGrid& grid,
                                const ControlGrid& ctrl, const State& x0,
                                Coupling coupling = Coupling::none,
                                std::size_t refine = 16);

// Stationary point of the isolated neuron under constant input alpha.
State rest_point(const ModelParams& p, double alpha = 0.0);

// max - min of v over grid times in [t0, t1].
double peak_to_peak_v(const OdeSolution& sol, double dt, double t0, double t1);

struct VariationResult {
  std::vector<State> Z;  // step-major, (n_steps + 1) * N
  double directional_derivative = 0.0;
};

// Linearization of the particle scheme along traj in the control direction
// beta, with the tracking cost's derivative dJ(alpha) . beta.
VariationResult variation_solve(const TrajectoryBundle& traj,
                                std::span<const double> beta,
                                const CostSpec& spec, const ModelParams& p);

// Central differences (J(alpha + h e_k) - J(alpha - h e_k)) / (2 h dt) with
// common random numbers; e_k is the indicator of control step k. h defaults
// to 1e-4 (1 + |alpha_k|). The box is ignored for the perturbed runs.
GradientGrid fd_gradient(const ModelParams& p, const TimeGrid& grid,
                         const CostSpec& spec, const InitialLaw& init,
                         const ControlGrid& ctrl, std::size_t n_particles,
                         std::uint64_t seed, double h = 0.0,
                         const SimOptions& sim = {});

// Exact empirical W_p on the line via the sorted (quantile) coupling.
double wasserstein1d(std::vector<double> a, std::vector<double> b,
                     double p_order = 2.0);

struct AssumptionCheck {
  std::string name;
  double analytic = 0.0;  // constant derived from the parameters
  double fitted = 0.0;    // smallest constant consistent with the samples
  std::size_t violations = 0;
};

struct AssumptionReport {
  std::size_t n_samples = 0;
  std::vector<AssumptionCheck> checks;
  // Constrained-dynamics identities for y outside [0, 1].
  std::size_t constraint_violations = 0;

  std::size_t total_violations() const;
  const AssumptionCheck& get(const std::string& name) const;
};

struct AuditBox {
  double v_max = 3.0;
  double w_max = 3.0;
  double alpha_min = -1.0;
  double alpha_max = 1.0;
};

AssumptionReport check_assumptions(const ModelParams& p, std::size_t n_samples,
                                   std::uint64_t seed = 7,
                                   const AuditBox& box = {});

void print_report(const AssumptionReport& report, std::ostream& out);

}  // namespace mfc::oracle
