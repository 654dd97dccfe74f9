#include "mfc/adjoint.hpp"

#include "mfc/csv.hpp"
#include "mfc/rbf.hpp"
#include "mfc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mfc {

std::vector<State> AdjointBundle::mean_P() const {
  std::vector<State> out(n_steps + 1, State::Zero());
  for (std::size_t k = 0; k <= n_steps; ++k) {
    for (const auto& pk : slice(k)) out[k] += pk;
    out[k] /= static_cast<double>(n_particles);
  }
  return out;
}

State tracking_drive(double mean_v, double vbar) {
  return State(2.0 * (mean_v - vbar), 0.0, 0.0);
}

namespace {

// Coupling contribution (drive excluded) for every particle.
std::vector<State> coupling_terms(std::span<const State> coupling_states,
                                  std::span<const State> costates,
                                  const ModelParams& p,
                                  MeanFieldConvention convention) {
  const std::size_t n = costates.size();
  std::vector<State> out(n, State::Zero());
  if (coupling_states.empty() || p.J == 0.0) return out;

  if (convention == MeanFieldConvention::swapped) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += -p.J * (coupling_states[j][kV] - p.V_rev) * costates[j][kV];
    }
    const double shared = acc / static_cast<double>(n);
    for (auto& o : out) o[kY] = shared;
  } else {
    double mean_p1 = 0.0;
    for (const auto& pj : costates) mean_p1 += pj[kV];
    mean_p1 /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i][kY] = -p.J * (coupling_states[i][kV] - p.V_rev) * mean_p1;
    }
  }
  return out;
}

Eigen::Matrix3d step_jacobian(const State& x, double mean_y,
                              const ModelParams& p) {
  MeasureSummary m;
  m.mean_y = mean_y;
  return drift_jac_x(0.0, x, m, 0.0, p);
}

std::vector<State> drive_from_reference(const TrajectoryBundle& traj,
                                        std::span<const double> ref_profile) {
  if (ref_profile.size() < traj.n_steps) {
    throw std::invalid_argument("reference profile shorter than the grid");
  }
  std::vector<State> drive(traj.n_steps + 1, State::Zero());
  for (std::size_t k = 0; k < traj.n_steps; ++k) {
    drive[k] = tracking_drive(traj.summary[k].mean_v, ref_profile[k]);
  }
  return drive;
}

}  // namespace

std::vector<State> adjoint_drift(const AdjointStep& step, const ModelParams& p,
                                 MeanFieldConvention convention) {
  std::vector<State> rate =
      coupling_terms(step.coupling_states, step.costates, p, convention);
  for (std::size_t i = 0; i < rate.size(); ++i) {
    const Eigen::Matrix3d jac =
        step_jacobian(step.jac_states[i], step.jac_mean_y, p);
    rate[i] += jac.transpose() * step.costates[i] + step.drive;
  }
  return rate;
}

AdjointBundle solve_pathwise_with_drive(const TrajectoryBundle& traj,
                                        std::span<const State> drive,
                                        const ModelParams& p,
                                        const PathwiseOptions& opts) {
  if (p.noise_mode != NoiseMode::external_only) {
    throw std::invalid_argument(
        "pathwise adjoint requires noise_mode = external_only");
  }
  if (drive.size() < traj.n_steps) {
    throw std::invalid_argument("drive shorter than the grid");
  }
  const std::size_t n = traj.n_particles;
  const std::size_t steps = traj.n_steps;

  AdjointBundle adj;
  adj.mode = AdjointMode::pathwise;
  adj.n_particles = n;
  adj.n_steps = steps;
  adj.noise_dim = traj.noise_dim;
  adj.dt = traj.dt;
  adj.P.assign((steps + 1) * n, State::Zero());
  if (opts.terminal) {
    if (opts.terminal->size() != n) {
      throw std::invalid_argument("terminal condition size mismatch");
    }
    std::copy(opts.terminal->begin(), opts.terminal->end(),
              adj.P.begin() + static_cast<std::ptrdiff_t>(steps * n));
  }

  const double dt = traj.dt;
  const auto n_signed = static_cast<long long>(n);
  for (std::size_t k1 = steps; k1-- > 0;) {
    // P_k from P_{k+1}, with k = k1 and forward step k + 1.
    const std::size_t next = k1 + 1;
    AdjointStep step;
    step.jac_states = traj.slice(next);
    step.jac_mean_y = traj.summary[k1].mean_y;
    step.costates = adj.slice(next);
    if (next < steps) {
      step.coupling_states = traj.slice(next + 1);
      step.drive = drive[next];
    }
    const std::vector<State> coupling =
        coupling_terms(step.coupling_states, step.costates, p, opts.convention);

    State* out = adj.P.data() + k1 * n;
    std::vector<char> singular(n, 0);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < n_signed; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const Eigen::Matrix3d jac =
          step_jacobian(step.jac_states[i], step.jac_mean_y, p);
      const State forcing = step.drive + coupling[i];
      if (opts.stepping == AdjointStepping::explicit_euler) {
        out[i] = step.costates[i] +
                 dt * (jac.transpose() * step.costates[i] + forcing);
      } else {
        const Eigen::Matrix3d m =
            Eigen::Matrix3d::Identity() - dt * jac.transpose();
        const auto lu = m.partialPivLu();
        if (std::abs(lu.determinant()) < 1e-14) {
          singular[i] = 1;
          continue;
        }
        out[i] = lu.solve(State(step.costates[i] + dt * forcing));
      }
    }
    if (std::any_of(singular.begin(), singular.end(),
                    [](char s) { return s != 0; })) {
      throw std::runtime_error("singular adjoint step matrix at step " +
                               std::to_string(k1));
    }
  }
  return adj;
}

AdjointBundle solve_pathwise(const TrajectoryBundle& traj,
                             std::span<const double> ref_profile,
                             const ModelParams& p,
                             const PathwiseOptions& opts) {
  const auto drive = drive_from_reference(traj, ref_profile);
  return solve_pathwise_with_drive(traj, drive, p, opts);
}

namespace {

// L distinct particle indices, fresh for every step.
std::vector<std::size_t> pick_nodes(std::size_t n, std::size_t l,
                                    std::uint64_t seed, std::size_t step) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (l >= n) return idx;
  for (std::size_t j = 0; j < l; ++j) {
    const double u =
        rng::uniform(rng::key(seed, rng::kRegressionStream, step, j));
    const std::size_t pick =
        j + std::min(static_cast<std::size_t>(u * static_cast<double>(n - j)),
                     n - j - 1);
    std::swap(idx[j], idx[pick]);
  }
  idx.resize(l);
  return idx;
}

}  // namespace

AdjointBundle solve_regression(const TrajectoryBundle& traj,
                               std::span<const double> ref_profile,
                               const ModelParams& p,
                               const RegressionOptions& opts) {
  if (opts.n_nodes < 1) throw std::invalid_argument("need at least one node");
  const auto drive = drive_from_reference(traj, ref_profile);
  const std::size_t n = traj.n_particles;
  const std::size_t steps = traj.n_steps;
  const int nd = traj.noise_dim;
  const double dt = traj.dt;

  AdjointBundle adj;
  adj.mode = AdjointMode::rbf_regression;
  adj.n_particles = n;
  adj.n_steps = steps;
  adj.noise_dim = nd;
  adj.dt = dt;
  adj.P.assign((steps + 1) * n, State::Zero());
  adj.Q.assign(steps * n, NoiseMatrix::Zero(3, nd));

  const Eigen::Index n_out = 3 + 3 * nd;
  for (std::size_t k = steps; k-- > 0;) {
    const auto xs = traj.slice(k);
    const auto y_next = adj.slice(k + 1);

    Eigen::MatrixXd targets(static_cast<Eigen::Index>(n), n_out);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for (int a = 0; a < 3; ++a) {
        targets(r, a) = y_next[i][a];
        for (int c = 0; c < nd; ++c) {
          targets(r, 3 + a * nd + c) = y_next[i][a] * traj.increment(i, k, c);
        }
      }
    }

    std::vector<State> nodes;
    for (std::size_t j : pick_nodes(n, opts.n_nodes, opts.seed, k)) {
      nodes.push_back(xs[j]);
    }
    const double delta =
        opts.delta > 0.0 ? opts.delta : median_bandwidth(nodes);
    double ridge = 0.0;
    if (opts.ridge_rel > 0.0) {
      const Eigen::MatrixXd a = rbf_design(xs, nodes, delta);
      ridge = opts.ridge_rel * a.squaredNorm() /
              static_cast<double>(nodes.size());
    }
    const RbfModel model = rbf_fit(xs, targets, std::move(nodes), delta, ridge);

    // Forcing evaluated at step k + 1 (law of the next forward/backward pair).
    std::vector<State> forcing(n, State::Zero());
    if (k + 1 < steps) {
      const auto x_next = traj.slice(k + 1);
      if (opts.convention == MeanFieldConvention::swapped) {
        forcing = coupling_terms(x_next, y_next, p, opts.convention);
      } else {
        forcing = coupling_terms(xs, y_next, p, opts.convention);
      }
      if (p.noise_mode == NoiseMode::full) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          acc += diffusion_mean_y_pairing(x_next[j], adj.Q[(k + 1) * n + j], p);
        }
        for (auto& f : forcing) f[kY] += acc / static_cast<double>(n);
      }
      for (auto& f : forcing) f += drive[k + 1];
    }

    const auto& m = traj.summary[k];
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::RowVectorXd fit = model.predict(xs[i]);
      const State cond(fit(0), fit(1), fit(2));
      NoiseMatrix q(3, nd);
      for (int a = 0; a < 3; ++a) {
        for (int c = 0; c < nd; ++c) q(a, c) = fit(3 + a * nd + c) / dt;
      }
      adj.Q[k * n + i] = q;

      const Eigen::Matrix3d jac = drift_jac_x(0.0, xs[i], m, 0.0, p);
      const State rhs =
          cond + dt * (forcing[i] + diffusion_x_pairing(xs[i], m, q, p));
      const Eigen::Matrix3d lhs =
          Eigen::Matrix3d::Identity() - dt * jac.transpose();
      adj.P[k * n + i] = lhs.partialPivLu().solve(rhs);
    }
  }
  return adj;
}

void write_adjoint_csv(const AdjointBundle& adj,
                       const std::filesystem::path& path) {
  const auto mean = adj.mean_P();
  std::vector<double> t, p1, p2, p3;
  for (std::size_t k = 0; k <= adj.n_steps; ++k) {
    t.push_back(static_cast<double>(k) * adj.dt);
    p1.push_back(mean[k][0]);
    p2.push_back(mean[k][1]);
    p3.push_back(mean[k][2]);
  }
  csv::write_columns(path, {"t", "mean_P1", "mean_P2", "mean_P3"},
                     {t, p1, p2, p3});
}

void write_adjoint_samples_csv(const AdjointBundle& adj, std::size_t count,
                               const std::filesystem::path& path) {
  count = std::min(count, adj.n_particles);
  std::vector<std::string> header{"t"};
  std::vector<std::vector<double>> cols(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    header.push_back("p1_" + std::to_string(i));
  }
  for (std::size_t k = 0; k <= adj.n_steps; ++k) {
    cols[0].push_back(static_cast<double>(k) * adj.dt);
    for (std::size_t i = 0; i < count; ++i) {
      cols[i + 1].push_back(adj.costate(i, k)[0]);
    }
  }
  csv::write_columns(path, header, cols);
}

}  // namespace mfc
