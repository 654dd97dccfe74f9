// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "mfc/adjoint.hpp"
#include "mfc/config.hpp"
#include "mfc/control.hpp"
#include "mfc/experiment.hpp"
#include "mfc/oracle.hpp"
#include "mfc/rbf.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace mfc;

namespace {

const State kAnchor(-0.828, -0.139, 0.589);

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  fmt::print("{} [{}] {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, name,
             o.detail, secs);
  std::fflush(stdout);
}

ControlGrid random_control(const TimeGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ControlGrid c = constant_control(g, 0.0, -1.0, 1.0);
  for (auto& a : c.values) a = u(rng);
  return c;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num / den);
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

Outcome constraints() {
  const ModelParams p;
  const TimeGrid g = make_grid(200.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  std::size_t bad = 0;
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto tr = simulate(p, g, random_control(g, 100 + s), law, 500, s);
    const auto rep = constraint_report(tr, 1e-9);
    bad += rep.violations;
    worst = std::max(worst, rep.max_excess);
  }
  return {bad == 0, fmt::format("violations {} over 10 seeds, max excess {:.2e}", bad, worst)};
}

Outcome audit() {
  const auto rep = oracle::check_assumptions(ModelParams{}, 100000);
  std::string worst;
  double ratio = 0.0;
  for (const auto& c : rep.checks) {
    if (c.analytic > 0 && c.fitted / c.analytic > ratio) {
      ratio = c.fitted / c.analytic;
      worst = c.name;
    }
  }
  return {rep.total_violations() == 0,
          fmt::format("{} checks, {} violations, tightest {} at {:.3f} of bound",
                      rep.checks.size(), rep.total_violations(), worst, ratio)};
}

Outcome gradient_fd() {
  const ModelParams p;
  const TimeGrid g = make_grid(20.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const CostSpec spec{std::vector<double>(g.n_steps + 1, oracle::rest_point(p)[kV]), 0.0};
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto ctrl = random_control(g, 200 + s);
    const auto tr = simulate(p, g, ctrl, law, 256, s);
    const auto adj = solve_pathwise(tr, spec.reference, p);
    const auto grad = gradient(tr, adj, spec, p);
    const auto fd = oracle::fd_gradient(p, g, spec, law, ctrl, 256, s);
    worst = std::max(worst, rel_l2(grad, fd));
  }
  return {worst <= 1e-3, fmt::format("max relative l2 error {:.2e} over 5 controls", worst)};
}

Outcome duality() {
  const ModelParams p;
  const TimeGrid g = make_grid(20.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const CostSpec spec{std::vector<double>(g.n_steps + 1, oracle::rest_point(p)[kV]), 0.05};
  const auto ctrl = random_control(g, 301);
  const auto tr = simulate(p, g, ctrl, law, 256, 3);
  const auto grad = gradient(tr, solve_pathwise(tr, spec.reference, p), spec, p);
  std::mt19937_64 rng(302);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int d = 0; d < 5; ++d) {
    std::vector<double> beta(g.n_steps);
    for (auto& b : beta) b = nd(rng);
    double pairing = 0.0;
    for (std::size_t k = 0; k < g.n_steps; ++k) pairing += g.dt * grad[k] * beta[k];
    const double dj = oracle::variation_solve(tr, beta, spec, p).directional_derivative;
    worst = std::max(worst, std::abs(pairing - dj) / std::abs(dj));
  }
  return {worst <= 1e-5, fmt::format("max relative error {:.2e} over 5 directions", worst)};
}

Outcome regression() {
  const ModelParams p;
  const TimeGrid g = make_grid(5.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const std::vector<double> ref(g.n_steps + 1, oracle::rest_point(p)[kV]);
  const auto tr = simulate(p, g, constant_control(g, 0.0, -1, 1), law, 512, 1);
  RegressionOptions ro;
  ro.n_nodes = 64;
  ro.seed = 1;
  const auto a = solve_pathwise(tr, ref, p).mean_P();
  const auto b = solve_regression(tr, ref, p, ro).mean_P();
  std::vector<double> pa, pb;
  for (std::size_t k = 0; k <= g.n_steps; ++k) {
    pa.push_back(a[k][kV]);
    pb.push_back(b[k][kV]);
  }
  const double err = rel_l2(pb, pa);
  return {err <= 0.05, fmt::format("relative l2 of mean P1 {:.2e} (T = 5, N = 512, L = 64)", err)};
}

Outcome rbf() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<State> nodes(40);
  for (auto& x : nodes) x = State(nd(rng), nd(rng), nd(rng));
  Eigen::MatrixXd w(40, 2);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
  const double delta = median_bandwidth(nodes);
  const Eigen::MatrixXd y = rbf_design(nodes, nodes, delta) * w;
  const auto m = rbf_fit(nodes, y, nodes, delta, 0.0);
  double resid = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    resid = std::max(resid, (m.predict(nodes[i]) - y.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff());
  }
  std::vector<State> pts(200);
  for (auto& x : pts) x = State(nd(rng), nd(rng), nd(rng));
  Eigen::MatrixXd t(200, 1);
  for (Eigen::Index i = 0; i < 200; ++i) t(i) = std::sin(pts[static_cast<std::size_t>(i)][0]) + 0.1 * nd(rng);
  std::vector<State> few(nodes.begin(), nodes.begin() + 20);
  bool shrinks = true;
  double prev = rbf_fit(pts, t, few, delta, 0.0).weights.norm();
  for (double r : {1e-4, 1e-2, 1.0, 100.0}) {
    const double n = rbf_fit(pts, t, few, delta, r).weights.norm();
    shrinks = shrinks && n < prev;
    prev = n;
  }
  return {resid <= 1e-8 && shrinks,
          fmt::format("interpolation residual {:.2e}, ridge shrinkage {}", resid,
                      shrinks ? "monotone" : "broken")};
}

Outcome hopf() {
  const ModelParams p;
  const TimeGrid g = make_grid(200.0, 0.1);
  const auto hi = oracle::integrate_reference(p, g, constant_control(g, 0.33, -1, 1), kAnchor);
  const auto lo = oracle::integrate_reference(p, g, constant_control(g, 0.315, -1, 1), kAnchor);
  const double a = oracle::peak_to_peak_v(hi, g.dt, 100, 200);
  const double b = oracle::peak_to_peak_v(lo, g.dt, 100, 200);
  return {a >= 3 * b, fmt::format("amplitude {:.4f} vs {:.4f}, ratio {:.1f}", a, b, a / b)};
}

ExperimentConfig optimization_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.run.n_particles = 200;
  c.run.seed = seed;
  c.optimizer.max_iters = 50;
  c.optimizer.seed_policy = SeedPolicy::frozen;
  return c;
}

OptimizerState optimize(const ExperimentConfig& c, const ReferenceProfile& ref) {
  const ProblemSetup setup = make_setup(c, ref);
  const OptimizerConfig oc = optimizer_config(c);
  McKeanVlasovObjective obj(setup, oc.n_particles, oc.seed, oc.seed_policy);
  const double eps = 1e-3 * std::sqrt(c.t_end);
  return projected_descent(obj, initial_control(c), c.dt, eps, oc);
}

Outcome optimization() {
  const ExperimentConfig c = optimization_config(1);
  const auto st = optimize(c, make_reference(c));
  std::vector<double> accepted;
  for (const auto& r : st.history) {
    if (r.accepted) accepted.push_back(r.cost);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < accepted.size(); ++i) {
    decreasing = decreasing && accepted[i] < accepted[i - 1];
  }
  const double ratio = st.cost / accepted.front();
  return {decreasing && ratio <= 0.5 && accepted.size() <= 51,
          fmt::format("{} accepted iterations, costs {}, final/baseline {:.3f}, status {}",
                      accepted.size() - 1, decreasing ? "strictly decreasing" : "NOT decreasing",
                      ratio, to_string(st.status))};
}

Outcome uncoupled() {
  std::vector<double> early, late;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    ExperimentConfig c = optimization_config(s);
    const auto ref = make_reference(c);
    c.model.J = 0.0;
    const auto st = optimize(c, ref);
    const TimeGrid g = c.grid();
    double e = 0, l = 0;
    std::size_t ne = 0, nl = 0;
    for (std::size_t k = 0; k < g.n_steps; ++k) {
      const double t = g.time(k);
      if (t <= 100.0 + 1e-9) {
        e += std::abs(st.control.values[k]);
        ++ne;
      } else {
        l += std::abs(st.control.values[k]);
        ++nl;
      }
    }
    early.push_back(e / ne);
    late.push_back(l / nl);
  }
  const double me = median(early);
  const double ml = median(late);
  return {ml < me, fmt::format("median mean |alpha| on [0, 100] {:.4f}, on (100, 200] {:.4f}", me, ml)};
}

Outcome order() {
  ModelParams p;
  p.J = 0.0;
  p.sigma_ext = 0.0;
  const double t_end = 20.0;
  std::vector<double> dts = {0.1, 0.05, 0.025};
  std::vector<double> errs;
  for (double dt : dts) {
    const TimeGrid g = make_grid(t_end, dt);
    const auto ctrl = constant_control(g, 0.33, -1, 1);
    const auto tr = simulate(p, g, ctrl, InitialLaw::point(kAnchor), 1, 1);
    const auto ref = oracle::integrate_reference(p, g, ctrl, kAnchor, Coupling::none, 64);
    double e = 0.0;
    for (std::size_t k = 0; k <= g.n_steps; ++k) {
      e = std::max(e, (tr.state(0, k) - ref.at_step(k)).lpNorm<Eigen::Infinity>());
    }
    errs.push_back(e);
  }
  // least squares slope of log err against log dt
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    mx += std::log(dts[i]) / 3;
    my += std::log(errs[i]) / 3;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sxy += (std::log(dts[i]) - mx) * (std::log(errs[i]) - my);
    sxx += std::pow(std::log(dts[i]) - mx, 2);
  }
  const double slope = sxy / sxx;
  return {std::abs(slope - 1.0) <= 0.2,
          fmt::format("slope {:.3f}, max errors {:.3e} {:.3e} {:.3e}", slope, errs[0], errs[1], errs[2])};
}

Outcome chaos() {
  const ModelParams p;
  const TimeGrid g = make_grid(200.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const auto ctrl = constant_control(g, 0.0, -1, 1);
  const auto final_v = [&](std::size_t n, std::uint64_t seed) {
    const auto tr = simulate(p, g, ctrl, law, n, seed);
    std::vector<double> v;
    for (const auto& x : tr.slice(g.n_steps)) v.push_back(x[kV]);
    return v;
  };
  const auto ref = final_v(1024, 999);
  std::vector<double> w64, w256;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    w64.push_back(oracle::wasserstein1d(final_v(64, s), ref));
    w256.push_back(oracle::wasserstein1d(final_v(256, 100 + s), ref));
  }
  const double a = median(w64);
  const double b = median(w256);
  return {b < a, fmt::format("median W2: N = 64 {:.4f}, N = 256 {:.4f}", a, b)};
}

}  // namespace

int main() {
  run(1, "constraint preservation", constraints);
  run(2, "assumption audit", audit);
  run(3, "gradient vs finite differences", gradient_fd);
  run(4, "discrete duality", duality);
  run(5, "regression vs pathwise adjoint", regression);
  run(6, "RBF fitter", rbf);
  run(7, "Hopf sensitivity", hopf);
  run(8, "optimization on the pulse reference", optimization);
  run(9, "uncoupled contrast", uncoupled);
  run(10, "forward scheme order", order);
  run(11, "propagation of chaos", chaos);
  fmt::print("{} of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
