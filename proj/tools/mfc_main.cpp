// Command line front end: simulate | optimize | gradient-check | adjoint |
// reference | check-assumptions

#include "mfc/config.hpp"
#include "mfc/csv.hpp"
#include "mfc/experiment.hpp"
#include "mfc/oracle.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <iostream>
#include <optional>

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> n_particles;
  bool no_noise = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "noise seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--n-particles", c.n_particles, "number of particles")
      ->check(CLI::PositiveNumber);
  app->add_flag("--no-noise", c.no_noise, "set sigma_ext and sigma_J to zero");
}

mfc::ExperimentConfig resolve(const Common& c) {
  mfc::ExperimentConfig cfg =
      c.config.empty() ? mfc::ExperimentConfig{} : mfc::load_config(c.config);
  if (c.seed) cfg.run.seed = *c.seed;
  if (c.n_particles) cfg.run.n_particles = *c.n_particles;
  if (!c.out.empty()) cfg.run.out = c.out;
  if (c.no_noise) mfc::disable_noise(cfg);
  if (cfg.run.out.empty()) {
    cfg.run.out = mfc::default_output_root() / fmt::format("run-{}", cfg.run.seed);
  }
  mfc::validate(cfg);
  return cfg;
}

mfc::TrajectoryBundle simulate_initial(const mfc::ExperimentConfig& cfg) {
  mfc::SimOptions sim;
  sim.threads = cfg.run.threads;
  return mfc::simulate(cfg.model, cfg.grid(), mfc::initial_control(cfg),
                       mfc::make_initial_law(cfg, cfg.model),
                       cfg.run.n_particles, cfg.run.seed, sim);
}

int cmd_simulate(const mfc::ExperimentConfig& cfg, bool binary) {
  const auto traj = simulate_initial(cfg);
  mfc::write_trajectory_csv(traj, cfg.run.out / "trajectory.csv");
  if (binary) mfc::write_trajectory_binary(traj, cfg.run.out / "trajectory.bin");
  const auto rep = mfc::constraint_report(traj);
  fmt::print("particles {}  steps {}  final lfp {}  constraint violations {}\n",
             traj.n_particles, traj.n_steps, traj.summary.back().mean_v,
             rep.violations);
  return 0;
}

int cmd_optimize(const mfc::ExperimentConfig& cfg) {
  const auto res = mfc::run_experiment(cfg, cfg.run.out);
  fmt::print("iter,cost,grad_norm,step_size\n");
  for (const auto& r : res.state.history) {
    if (!r.accepted) continue;
    fmt::print("{},{},{},{}\n", r.iter, r.cost, r.grad_norm, r.step);
  }
  fmt::print(stderr, "status {}  cost {} -> {}  artifacts in {}\n",
             mfc::to_string(res.state.status), res.baseline_cost, res.state.cost,
             cfg.run.out.string());
  return 0;
}

int cmd_gradient_check(const mfc::ExperimentConfig& cfg, double tol,
                       std::size_t stride) {
  const auto ref = mfc::make_reference(cfg);
  const auto setup = mfc::make_setup(cfg, ref);
  const auto ctrl = mfc::initial_control(cfg);
  mfc::McKeanVlasovObjective obj(setup, cfg.run.n_particles, cfg.run.seed,
                                 mfc::SeedPolicy::frozen);
  const auto g = obj.gradient(ctrl, 0);
  const auto fd = mfc::oracle::fd_gradient(cfg.model, setup.grid, setup.cost,
                                           setup.init, ctrl, cfg.run.n_particles,
                                           cfg.run.seed, 0.0, setup.sim);
  double num = 0.0;
  double den = 0.0;
  std::vector<double> t;
  std::vector<double> ga;
  std::vector<double> gf;
  for (std::size_t k = 0; k < g.size(); k += stride) {
    num += (g[k] - fd[k]) * (g[k] - fd[k]);
    den += fd[k] * fd[k];
    t.push_back(setup.grid.time(k));
    ga.push_back(g[k]);
    gf.push_back(fd[k]);
  }
  const double rel = std::sqrt(num / std::max(den, 1e-300));
  mfc::csv::write_columns(cfg.run.out / "gradient_check.csv",
                          {"t", "adjoint", "finite_difference"}, {t, ga, gf});
  fmt::print("relative l2 error {:.3e} (tolerance {:.1e})\n", rel, tol);
  return rel <= tol ? 0 : 2;
}

int cmd_adjoint(const mfc::ExperimentConfig& cfg, bool regression,
                std::size_t nodes, std::size_t samples) {
  const auto ref = mfc::make_reference(cfg);
  const auto traj = simulate_initial(cfg);
  mfc::AdjointBundle adj;
  if (regression) {
    mfc::RegressionOptions ro;
    ro.n_nodes = nodes;
    ro.convention = cfg.adjoint.convention;
    ro.seed = cfg.run.seed;
    adj = mfc::solve_regression(traj, ref.values, cfg.model, ro);
  } else {
    adj = mfc::solve_pathwise(traj, ref.values, cfg.model, cfg.adjoint);
  }
  mfc::write_adjoint_csv(adj, cfg.run.out / "adjoint_mean.csv");
  mfc::write_adjoint_samples_csv(adj, std::min(samples, traj.n_particles),
                                 cfg.run.out / "adjoint_samples.csv");
  const mfc::CostSpec spec{ref.values, cfg.control_penalty};
  mfc::write_gradient_csv(mfc::gradient(traj, adj, spec, cfg.model),
                          traj.dt, cfg.run.out / "gradient.csv");
  fmt::print("mean P1 at t=0: {}\n", adj.mean_P().front()[mfc::kV]);
  return 0;
}

int cmd_reference(const mfc::ExperimentConfig& cfg) {
  const auto ref = mfc::make_reference(cfg);
  mfc::write_reference_csv(ref, cfg.dt, cfg.run.out / "reference.csv");
  fmt::print("{}\n", ref.provenance);
  return 0;
}

int cmd_check_assumptions(const mfc::ExperimentConfig& cfg, std::size_t samples) {
  mfc::oracle::AuditBox box;
  box.alpha_min = cfg.alpha_min;
  box.alpha_max = cfg.alpha_max;
  const auto rep =
      mfc::oracle::check_assumptions(cfg.model, samples, cfg.run.seed, box);
  mfc::oracle::print_report(rep, std::cout);
  return rep.total_violations() == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled FitzHugh-Nagumo mean-field networks"};
  app.require_subcommand(1);

  Common c;
  auto* sim = app.add_subcommand("simulate", "particle simulation at the initial control");
  add_common(sim, c);
  bool binary = false;
  sim->add_flag("--binary", binary, "also write trajectory.bin");

  auto* opt = app.add_subcommand("optimize", "projected gradient descent");
  add_common(opt, c);

  auto* gc = app.add_subcommand("gradient-check", "adjoint vs finite differences");
  add_common(gc, c);
  double tol = 1e-3;
  std::size_t stride = 1;
  gc->add_option("--tol", tol, "relative l2 tolerance");
  gc->add_option("--stride", stride, "compare every stride-th step")
      ->check(CLI::PositiveNumber);

  auto* adj = app.add_subcommand("adjoint", "costate along the initial control");
  add_common(adj, c);
  bool regression = false;
  std::size_t nodes = 64;
  std::size_t samples = 10;
  adj->add_flag("--regression", regression, "RBF regression scheme");
  adj->add_option("--nodes", nodes, "RBF nodes")->check(CLI::PositiveNumber);
  adj->add_option("--samples", samples, "costate sample paths to export");

  auto* ref = app.add_subcommand("reference", "reference profile");
  add_common(ref, c);

  auto* ca = app.add_subcommand("check-assumptions", "randomized audit of the model bounds");
  add_common(ca, c);
  std::size_t audit_samples = 100000;
  ca->add_option("--samples", audit_samples, "number of random samples");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(c);
    if (*sim) return cmd_simulate(cfg, binary);
    if (*opt) return cmd_optimize(cfg);
    if (*gc) return cmd_gradient_check(cfg, tol, stride);
    if (*adj) return cmd_adjoint(cfg, regression, nodes, samples);
    if (*ref) return cmd_reference(cfg);
    if (*ca) return cmd_check_assumptions(cfg, audit_samples);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
