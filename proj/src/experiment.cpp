#include "mfc/experiment.hpp"

#include "mfc/csv.hpp"
#include "mfc/oracle.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace mfc {

InitialLaw make_initial_law(const ExperimentConfig& cfg, const ModelParams& p) {
  if (cfg.init.kind == InitConfig::Kind::point) {
    return InitialLaw::point(cfg.init.anchor);
  }
  OrbitOptions opts;
  opts.n_samples = cfg.init.orbit_samples;
  return make_orbit_law(p, cfg.init.anchor, opts);
}

ReferenceProfile make_reference(const ExperimentConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto& rc = cfg.reference;
  const double v_rest = oracle::rest_point(cfg.model, 0.0)[kV];
  ReferenceProfile ref;
  ref.values.assign(grid.n_steps + 1, v_rest);

  switch (rc.kind) {
    case ReferenceKind::resting:
      ref.provenance = fmt::format("resting v = {}", v_rest);
      break;

    case ReferenceKind::constant_alpha: {
      const ControlGrid ctrl = constant_control(
          grid, rc.alpha, std::min(rc.alpha, cfg.alpha_min),
          std::max(rc.alpha, cfg.alpha_max));
      const auto sol =
          oracle::integrate_reference(cfg.model, grid, ctrl, cfg.init.anchor);
      for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        ref.values[k] = sol.at_step(k)[kV];
      }
      ref.provenance = fmt::format("single neuron, alpha = {}, RK4 dt/{}",
                                   rc.alpha, sol.refine);
      break;
    }

    case ReferenceKind::pulse_lfp: {
      ModelParams net = cfg.model;
      net.J = rc.coupling_J;
      ControlGrid pulse = constant_control(grid, 0.0, 0.0, 0.0);
      pulse.alpha_min = std::min(0.0, rc.pulse_amplitude);
      pulse.alpha_max = std::max(0.0, rc.pulse_amplitude);
      for (std::size_t k = 0; k < grid.n_steps; ++k) {
        if (grid.time(k) < rc.pulse_duration - 1e-9 * grid.dt) {
          pulse.values[k] = rc.pulse_amplitude;
        }
      }
      const std::size_t n =
          rc.n_particles > 0 ? rc.n_particles : cfg.run.n_particles;
      SimOptions sim;
      sim.threads = cfg.run.threads;
      const auto traj = simulate(net, grid, pulse, make_initial_law(cfg, net), n,
                                 cfg.run.seed, sim);
      const auto lfp = local_field_potential(traj);
      for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        if (grid.time(k) <= rc.switch_time + 1e-9 * grid.dt) ref.values[k] = lfp[k];
      }
      ref.provenance = fmt::format(
          "LFP, J = {}, N = {}, seed = {}, pulse {} on [0, {}), rest v = {} "
          "after t = {}",
          net.J, n, cfg.run.seed, rc.pulse_amplitude, rc.pulse_duration, v_rest,
          rc.switch_time);
      break;
    }
  }
  return ref;
}

ControlGrid initial_control(const ExperimentConfig& cfg) {
  return constant_control(cfg.grid(), cfg.alpha_initial, cfg.alpha_min,
                          cfg.alpha_max);
}

ProblemSetup make_setup(const ExperimentConfig& cfg,
                        const ReferenceProfile& reference) {
  ProblemSetup s;
  s.model = cfg.model;
  s.grid = cfg.grid();
  s.cost.reference = reference.values;
  s.cost.control_penalty = cfg.control_penalty;
  s.init = make_initial_law(cfg, cfg.model);
  s.sim.threads = cfg.run.threads;
  s.adjoint = cfg.adjoint;
  return s;
}

OptimizerConfig optimizer_config(const ExperimentConfig& cfg) {
  OptimizerConfig oc = cfg.optimizer;
  oc.n_particles = cfg.run.n_particles;
  oc.seed = cfg.run.seed;
  return oc;
}

std::string git_blob_hash(const std::string& text) {
  const std::string header = fmt::format("blob {}", text.size());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size() + 1) != 1 ||
      EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_reference_csv(const ReferenceProfile& ref, double dt,
                         const std::filesystem::path& path) {
  std::vector<double> t(ref.values.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * dt;
  csv::write_columns(path, {"t", "vbar"}, {t, ref.values});
}

void write_lfp_csv(const TrajectoryBundle& traj, const ReferenceProfile& ref,
                   const std::filesystem::path& path) {
  const auto lfp = local_field_potential(traj);
  std::vector<double> t(lfp.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = traj.time(k);
  std::vector<double> vbar(ref.values.begin(),
                           ref.values.begin() + static_cast<long>(lfp.size()));
  csv::write_columns(path, {"t", "lfp", "vbar"}, {t, lfp, vbar});
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
  validate(cfg);
  ExperimentResult res;
  res.out_dir = out_dir;
  res.reference = make_reference(cfg);
  const ProblemSetup setup = make_setup(cfg, res.reference);
  const OptimizerConfig oc = optimizer_config(cfg);

  McKeanVlasovObjective objective(setup, oc.n_particles, oc.seed, oc.seed_policy);
  const double eps = oc.eps.value_or(1e-3 * std::sqrt(setup.grid.t_end));
  res.state = projected_descent(objective, initial_control(cfg), setup.grid.dt,
                                eps, oc);
  res.baseline_cost = res.state.history.front().cost;

  const std::size_t iter = res.state.iteration;
  const auto& traj = objective.trajectory(res.state.control, iter);
  const AdjointBundle adj = objective.adjoint(res.state.control, iter);

  write_control_csv(res.state.control, setup.grid.dt, out_dir / "control.csv");
  write_lfp_csv(traj, res.reference, out_dir / "lfp.csv");
  write_reference_csv(res.reference, setup.grid.dt, out_dir / "reference.csv");
  write_convergence_csv(res.state, out_dir / "convergence.csv");
  write_adjoint_csv(adj, out_dir / "adjoint_mean.csv");

  const std::string ini = to_ini(cfg);
  auto out = csv::open(out_dir / "manifest.txt");
  out << "seed = " << cfg.run.seed << '\n'
      << "n_particles = " << cfg.run.n_particles << '\n'
      << "config_hash = " << git_blob_hash(ini) << '\n'
      << "reference = " << res.reference.provenance << '\n'
      << "status = " << to_string(res.state.status) << '\n'
      << "iterations = " << res.state.iteration << '\n'
      << "initial_cost = " << csv::format_double(res.baseline_cost) << '\n'
      << "final_cost = " << csv::format_double(res.state.cost) << '\n'
      << "\n# configuration\n"
      << ini;
  return res;
}

}  // namespace mfc
