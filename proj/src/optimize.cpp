#include "mfc/optimize.hpp"

#include "mfc/csv.hpp"

#include <cmath>
#include <stdexcept>

namespace mfc {

std::string to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::converged: return "converged";
    case OptimizerStatus::max_iters: return "max_iters";
    case OptimizerStatus::stalled: return "stalled";
  }
  return "unknown";
}

OptimizerState projected_descent(Objective& objective, ControlGrid initial,
                                 double dt, double eps,
                                 const OptimizerConfig& cfg) {
  if (!(cfg.s0 > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("optimizer needs s0 > 0 and eps > 0");
  }
  OptimizerState st;
  st.control = project(initial);
  st.step = cfg.s0;
  st.cost = objective.cost(st.control, 0);

  for (std::size_t n = 0;; ++n) {
    st.iteration = n;
    if (n > 0 && cfg.seed_policy == SeedPolicy::per_iter) {
      st.cost = objective.cost(st.control, n);
    }
    st.gradient = objective.gradient(st.control, n);
    const double gnorm = l2_norm(st.gradient, dt);
    if (n == 0) st.history.push_back({0, st.cost, gnorm, 0.0, true});
    if (gnorm < eps) {
      st.status = OptimizerStatus::converged;
      return st;
    }
    if (n >= cfg.max_iters) {
      st.status = OptimizerStatus::max_iters;
      return st;
    }

    bool accepted = false;
    for (std::size_t b = 0; b <= cfg.max_backtracks; ++b) {
      ControlGrid cand = st.control;
      for (std::size_t k = 0; k < cand.values.size(); ++k) {
        cand.values[k] -= st.step * st.gradient[k];
      }
      cand = project(cand);
      const double c = objective.cost(cand, n);
      accepted = c < st.cost;
      st.history.push_back({n + 1, c, gnorm, st.step, accepted});
      if (accepted) {
        st.control = std::move(cand);
        st.cost = c;
        break;
      }
      st.step *= 0.5;
    }
    if (!accepted) {
      st.status = OptimizerStatus::stalled;
      return st;
    }
  }
}

McKeanVlasovObjective::McKeanVlasovObjective(ProblemSetup setup,
                                             std::size_t n_particles,
                                             std::uint64_t seed,
                                             SeedPolicy policy)
    : setup_(std::move(setup)),
      n_particles_(n_particles),
      seed_(seed),
      policy_(policy) {}

std::uint64_t McKeanVlasovObjective::seed_for(std::size_t iter) const {
  return policy_ == SeedPolicy::frozen ? seed_ : seed_ + iter;
}

const TrajectoryBundle& McKeanVlasovObjective::trajectory(
    const ControlGrid& ctrl, std::size_t iter) {
  const std::uint64_t seed = seed_for(iter);
  if (!cached_ || cached_->seed != seed || cached_control_ != ctrl.values) {
    cached_ = simulate(setup_.model, setup_.grid, ctrl, setup_.init,
                       n_particles_, seed, setup_.sim);
    cached_control_ = ctrl.values;
  }
  return *cached_;
}

double McKeanVlasovObjective::cost(const ControlGrid& ctrl, std::size_t iter) {
  return mfc::cost(trajectory(ctrl, iter), setup_.cost, ctrl);
}

AdjointBundle McKeanVlasovObjective::adjoint(const ControlGrid& ctrl,
                                             std::size_t iter) {
  return solve_pathwise(trajectory(ctrl, iter), setup_.cost.reference,
                        setup_.model, setup_.adjoint);
}

GradientGrid McKeanVlasovObjective::gradient(const ControlGrid& ctrl,
                                             std::size_t iter) {
  const AdjointBundle adj = adjoint(ctrl, iter);
  return mfc::gradient(trajectory(ctrl, iter), adj, setup_.cost, setup_.model);
}

OptimizerState descend(const ProblemSetup& setup, const ControlGrid& initial,
                       const OptimizerConfig& cfg) {
  McKeanVlasovObjective objective(setup, cfg.n_particles, cfg.seed,
                                  cfg.seed_policy);
  const double eps = cfg.eps.value_or(1e-3 * std::sqrt(setup.grid.t_end));
  return projected_descent(objective, initial, setup.grid.dt, eps, cfg);
}

void write_convergence_csv(const OptimizerState& state,
                           const std::filesystem::path& path) {
  auto out = csv::open(path);
  out << "iter,cost,grad_norm,step,accepted\n";
  for (const auto& r : state.history) {
    out << r.iter << ',' << csv::format_double(r.cost) << ','
        << csv::format_double(r.grad_norm) << ','
        << csv::format_double(r.step) << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

void write_control_csv(const ControlGrid& ctrl, double dt,
                       const std::filesystem::path& path) {
  std::vector<double> t(ctrl.values.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * dt;
  csv::write_columns(path, {"t", "alpha"}, {t, ctrl.values});
}

}  // namespace mfc
