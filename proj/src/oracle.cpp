#include "mfc/oracle.hpp"

#include "mfc/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfc::oracle {

std::vector<State> OdeSolution::on_grid() const {
  std::vector<State> out;
  for (std::size_t j = 0; j < fine.size(); j += refine) out.push_back(fine[j]);
  return out;
}

OdeSolution integrate_reference(const ModelParams& p, const TimeGrid& grid,
                                const ControlGrid& ctrl, const State& x0,
                                Coupling coupling, std::size_t refine) {
  if (ctrl.values.size() != grid.n_steps) {
    throw std::invalid_argument("integrate_reference: control/grid mismatch");
  }
  OdeSolution sol;
  sol.refine = refine;
  sol.dt_fine = grid.dt / static_cast<double>(refine);
  sol.fine = rk4_path(
      p, x0, sol.dt_fine, grid.n_steps * refine,
      [&](std::size_t j) { return ctrl.values[j / refine]; }, coupling);
  return sol;
}

State rest_point(const ModelParams& p, double alpha) {
  // v solves v - v^3/3 - (v + a)/b + alpha = 0; w and y follow.
  const auto g = [&](double v) {
    return v - v * v * v / 3.0 - (v + p.a) / p.b + alpha;
  };
  const auto dg = [&](double v) { return 1.0 - v * v - 1.0 / p.b; };
  double v = -1.0;
  for (int it = 0; it < 100; ++it) {
    const double step = g(v) / dg(v);
    v -= step;
    if (std::abs(step) < 1e-15) break;
  }
  const double s = sigmoid_S(v, p);
  return State(v, (v + p.a) / p.b, p.a_r * s / (p.a_r * s + p.a_d));
}

double peak_to_peak_v(const OdeSolution& sol, double dt, double t0,
                      double t1) {
  double lo = INFINITY;
  double hi = -INFINITY;
  const auto grid = sol.on_grid();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    lo = std::min(lo, grid[k][kV]);
    hi = std::max(hi, grid[k][kV]);
  }
  return hi - lo;
}

VariationResult variation_solve(const TrajectoryBundle& traj,
                                std::span<const double> beta,
                                const CostSpec& spec, const ModelParams& p) {
  if (beta.size() != traj.n_steps || spec.reference.size() < traj.n_steps) {
    throw std::invalid_argument("variation_solve: grid mismatch");
  }
  const std::size_t n = traj.n_particles;
  const double dt = traj.dt;
  VariationResult res;
  res.Z.assign((traj.n_steps + 1) * n, State::Zero());

  for (std::size_t k = 0; k < traj.n_steps; ++k) {
    double mean_z3 = 0.0;
    double mean_z1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean_z3 += res.Z[k * n + i][kY];
      mean_z1 += res.Z[k * n + i][kV];
    }
    mean_z3 /= static_cast<double>(n);
    mean_z1 /= static_cast<double>(n);

    const double err = traj.summary[k].mean_v - spec.reference[k];
    res.directional_derivative +=
        dt * (2.0 * err * mean_z1 +
              2.0 * spec.control_penalty * traj.control[k] * beta[k]);

    MeasureSummary lagged;
    lagged.mean_y = traj.summary[k].mean_y;
    for (std::size_t i = 0; i < n; ++i) {
      const State& x1 = traj.state(i, k + 1);
      const Eigen::Matrix3d m =
          Eigen::Matrix3d::Identity() - dt * drift_jac_x(0.0, x1, lagged, 0.0, p);
      const State h(0.0, 0.0, mean_z3);
      const State rhs = res.Z[k * n + i] + dt * (State(beta[k], 0.0, 0.0) +
                                                 drift_lions_deriv(0.0, x1, p) * h);
      res.Z[(k + 1) * n + i] = m.partialPivLu().solve(rhs);
    }
  }
  return res;
}

GradientGrid fd_gradient(const ModelParams& p, const TimeGrid& grid,
                         const CostSpec& spec, const InitialLaw& init,
                         const ControlGrid& ctrl, std::size_t n_particles,
                         std::uint64_t seed, double h, const SimOptions& sim) {
  GradientGrid g(grid.n_steps, 0.0);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double hk = h > 0.0 ? h : 1e-4 * (1.0 + std::abs(ctrl.values[k]));
    ControlGrid plus = ctrl;
    plus.alpha_min = std::min(ctrl.alpha_min, ctrl.values[k] - hk);
    plus.alpha_max = std::max(ctrl.alpha_max, ctrl.values[k] + hk);
    ControlGrid minus = plus;
    plus.values[k] += hk;
    minus.values[k] -= hk;
    const double jp =
        cost(simulate(p, grid, plus, init, n_particles, seed, sim), spec, plus);
    const double jm = cost(simulate(p, grid, minus, init, n_particles, seed, sim),
                           spec, minus);
    g[k] = (jp - jm) / (2.0 * hk * grid.dt);
  }
  return g;
}

double wasserstein1d(std::vector<double> a, std::vector<double> b,
                     double p_order) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein1d needs nonempty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Both quantile functions are step functions; integrate |Fa^-1 - Fb^-1|^p
  // exactly over the merged breakpoints i/na and j/nb.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    acc += (next - u) * std::pow(std::abs(a[i] - b[j]), p_order);
    u = next;
    // Advance by exact rational comparison to stay in lockstep.
    const auto lhs = (i + 1) * b.size();
    const auto rhs = (j + 1) * a.size();
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return std::pow(acc, 1.0 / p_order);
}

// ---------------------------------------------------------------------------
// Assumption audit

std::size_t AssumptionReport::total_violations() const {
  std::size_t n = constraint_violations;
  for (const auto& c : checks) n += c.violations;
  return n;
}

const AssumptionCheck& AssumptionReport::get(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no assumption check named " + name);
}

namespace {

// max |d chi / d y| by a dense scan of the bump, padded by 0.1%.
double chi_slope_bound(const ModelParams& p) {
  double best = 0.0;
  constexpr int kScan = 200000;
  for (int j = 0; j <= kScan; ++j) {
    const double y = static_cast<double>(j) / kScan;
    best = std::max(best, std::abs(cutoff_chi_deriv(y, p)));
  }
  return 1.001 * best;
}

struct Tracker {
  AssumptionCheck check;
  void add(double lhs, double factor) {
    if (!(factor > 0.0)) return;
    check.fitted = std::max(check.fitted, lhs / factor);
    const double bound = check.analytic * factor;
    if (lhs > bound + 1e-12 * (1.0 + std::abs(bound))) ++check.violations;
  }
};

double frob2(const NoiseMatrix& m) { return m.squaredNorm(); }

}  // namespace

AssumptionReport check_assumptions(const ModelParams& p, std::size_t n_samples,
                                   std::uint64_t seed, const AuditBox& box) {
  validate(p);
  const double sj = p.coupling_noise();
  const bool full = p.noise_mode == NoiseMode::full;
  const double rise = p.gate_noise_rise();
  const double decay = p.gate_noise_decay();
  const double s_slope = p.T_max * p.lambda / 4.0;
  const double rad_max = std::max(rise * p.T_max, decay);
  const double rad_min = decay * p.cutoff_margin;
  const double vr = std::max(1.0, std::abs(p.V_rev));
  const double one_c = std::abs(1.0 - p.c);

  // Lipschitz bound of chi(y) sqrt(abar S(v)(1-y) + bbar y).
  const double g_v = rise * s_slope / (2.0 * std::sqrt(rad_min));
  const double g_y = chi_slope_bound(p) * std::sqrt(rad_max) +
                     (decay + rise * p.T_max) / (2.0 * std::sqrt(rad_min));
  const double lip_g2 = full ? g_v * g_v + g_y * g_y : 0.0;

  Tracker sigma1{{"L1_sigma_growth",
                  std::max(p.sigma_ext * p.sigma_ext + 2.0 * sj * sj * p.V_rev * p.V_rev +
                               (full ? rad_max : 0.0),
                           2.0 * sj * sj)}};
  Tracker sigma2{{"L1_sigma_lipschitz", sj * sj + lip_g2}};
  Tracker wass_sigma{{"L1_sigma_measure", 2.0 * sj * sj * vr * vr}};
  Tracker wass_b{{"L2_drift_measure", 2.0 * p.J * p.J * vr * vr}};
  Tracker mono1{{"L3_drift_growth",
                 std::max({0.75 + p.J * std::abs(p.V_rev) / 2.0 +
                               p.c * p.a / 2.0 + p.a_r * p.T_max / 4.0,
                           one_c / 2.0 + 0.5 + p.J * std::abs(p.V_rev) / 2.0,
                           one_c / 2.0 + p.c * p.a / 2.0, 0.5})}};
  Tracker mono2{{"L3_drift_monotone",
                 std::max({1.5 + one_c / 2.0 + p.a_r * s_slope / 2.0,
                           one_c / 2.0, p.a_r * s_slope / 2.0, 0.5})}};
  Tracker a1_mono{{"A1_jacobian_monotone",
                   std::max({1.0 + one_c / 2.0 + p.a_r * s_slope / 2.0,
                             one_c / 2.0, p.a_r * s_slope / 2.0})}};
  const double k_rest = std::sqrt(1.0 + p.c * p.c + p.c * p.c * p.b * p.b +
                                  std::pow(p.a_r * s_slope, 2) +
                                  std::pow(p.a_r * p.T_max + p.a_d, 2));
  Tracker a1_growth{{"A1_jacobian_growth", 1.0 + p.J + k_rest}};
  Tracker a1_alpha{{"A1_control_derivative", 1.0}};
  Tracker a1_lions{{"A1_lions_derivative", p.J * vr}};
  Tracker a2_x{{"A2_diffusion_jacobian", std::sqrt(sj * sj + lip_g2)}};
  Tracker a2_lions{{"A2_diffusion_lions", sj * vr}};

  const auto uni = [&](std::size_t idx, std::uint64_t field, double lo,
                       double hi) {
    return lo + (hi - lo) * rng::uniform(rng::key(seed, idx, field, 0));
  };

  AssumptionReport report;
  report.n_samples = n_samples;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const State x(uni(s, 0, -box.v_max, box.v_max),
                  uni(s, 1, -box.w_max, box.w_max), uni(s, 2, 0.0, 1.0));
    const State x2(uni(s, 3, -box.v_max, box.v_max),
                   uni(s, 4, -box.w_max, box.w_max), uni(s, 5, 0.0, 1.0));
    const double al = uni(s, 6, box.alpha_min, box.alpha_max);
    const double al2 = uni(s, 7, box.alpha_min, box.alpha_max);
    MeasureSummary m;
    m.mean_y = uni(s, 8, 0.0, 1.0);
    MeasureSummary m2;
    m2.mean_y = uni(s, 9, 0.0, 1.0);
    const State z(uni(s, 10, -1.0, 1.0), uni(s, 11, -1.0, 1.0),
                  uni(s, 12, -1.0, 1.0));

    const double dx2 = (x - x2).squaredNorm();
    const double da2 = (al - al2) * (al - al2);
    const double dmu2 = (m.mean_y - m2.mean_y) * (m.mean_y - m2.mean_y);
    const double growth = 1.0 + al * al + x.squaredNorm();

    const NoiseMatrix sig = diffusion(0.0, x, m, al, p);
    sigma1.add(frob2(sig), growth);
    sigma2.add(frob2(sig - diffusion(0.0, x2, m, al2, p)), dx2 + da2);
    wass_sigma.add(frob2(sig - diffusion(0.0, x, m2, al, p)),
                   (1.0 + x.squaredNorm()) * dmu2);

    const State b = drift(0.0, x, m, al, p);
    wass_b.add((b - drift(0.0, x, m2, al, p)).squaredNorm(),
               (1.0 + x.squaredNorm()) * dmu2);
    mono1.add(x.dot(b), growth);
    mono2.add((x - x2).dot(b - drift(0.0, x2, m, al2, p)), dx2 + da2);

    const Eigen::Matrix3d jac = drift_jac_x(0.0, x, m, al, p);
    a1_mono.add(z.dot(jac * z), z.squaredNorm());
    a1_growth.add(jac.norm(), 1.0 + x.squaredNorm());
    a1_alpha.add(1.0, 1.0);
    a1_lions.add(drift_lions_deriv(0.0, x, p).norm(), 1.0 + x.norm());

    if (full) {
      // Tensor norm of sigma_x from the pairing with unit matrices.
      double s2 = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 3; ++c) {
          NoiseMatrix e = NoiseMatrix::Zero(3, 3);
          e(i, c) = 1.0;
          s2 += diffusion_x_pairing(x, m, e, p).squaredNorm();
        }
      }
      a2_x.add(std::sqrt(s2), 1.0);
    } else {
      a2_x.add(0.0, 1.0);
    }
    a2_lions.add(sj * std::abs(x[kV] - p.V_rev), 1.0 + x.norm());

    // Constrained dynamics outside [0, 1], full noise switched on.
    ModelParams pf = p;
    pf.noise_mode = NoiseMode::full;
    const double y_out = uni(s, 13, 0.0, 1.0) < 0.5 ? uni(s, 14, -1.0, -1e-9)
                                                    : uni(s, 14, 1.0 + 1e-9, 2.0);
    const State xo(x[kV], x[kW], y_out);
    const NoiseMatrix so = diffusion(0.0, xo, m, al, pf);
    const double pib = constraint_grad(xo).dot(drift(0.0, xo, m, al, pf));
    const double image = (constraint_grad(xo).transpose() * so).norm();
    const Eigen::Matrix3d sst = so * so.transpose();
    const double trace = (constraint_hess(xo).array() * sst.array()).sum();
    if (pib > 0.0 || so(kY, 2) != 0.0 || image != 0.0 || trace != 0.0) {
      ++report.constraint_violations;
    }
  }

  for (auto* t : {&sigma1, &sigma2, &wass_sigma, &wass_b, &mono1, &mono2,
                  &a1_mono, &a1_growth, &a1_alpha, &a1_lions, &a2_x,
                  &a2_lions}) {
    report.checks.push_back(t->check);
  }
  return report;
}

void print_report(const AssumptionReport& report, std::ostream& out) {
  out << fmt::format("{:<24} {:>14} {:>14} {:>10}\n", "constant", "analytic",
                     "fitted", "violations");
  for (const auto& c : report.checks) {
    out << fmt::format("{:<24} {:>14.6g} {:>14.6g} {:>10}\n", c.name,
                       c.analytic, c.fitted, c.violations);
  }
  out << fmt::format("{:<24} {:>14} {:>14} {:>10}\n", "constrained_dynamics",
                     "-", "-", report.constraint_violations);
  out << fmt::format("samples: {}  total violations: {}\n", report.n_samples,
                     report.total_violations());
}

}  // namespace mfc::oracle
