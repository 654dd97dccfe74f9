#include "mfc/adjoint.hpp"
#include "mfc/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mfc;

namespace {

const State kAnchor(-0.828, -0.139, 0.589);

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("rest point") {
  const ModelParams p;
  const State r = oracle::rest_point(p);
  // values from an independent bracketing root solve
  CHECK(r[kV] == doctest::Approx(-1.1994080352440351).epsilon(1e-13));
  CHECK(r[kW] == doctest::Approx(-0.62426004405504387).epsilon(1e-13));
  CHECK(r[kY] == doctest::Approx(0.58373235740896112).epsilon(1e-13));
  CHECK(oracle::rest_point(p, 0.2)[kV] == doctest::Approx(-1.0693920265985872).epsilon(1e-13));
}

TEST_CASE("reference integrator stays at the rest point") {
  const ModelParams p;
  const TimeGrid g = make_grid(50.0, 0.1);
  const State r = oracle::rest_point(p);
  const auto sol = oracle::integrate_reference(p, g, constant_control(g, 0.0, -1, 1), r);
  CHECK(sol.fine.size() == g.n_steps * 16 + 1);
  for (const auto& x : sol.on_grid()) CHECK((x - r).norm() < 1e-12);
}

TEST_CASE("Hopf amplitudes match an adaptive high-order integration") {
  const ModelParams p;
  const TimeGrid g = make_grid(200.0, 0.1);
  const auto hi = oracle::integrate_reference(p, g, constant_control(g, 0.33, -1, 1), kAnchor);
  const auto lo = oracle::integrate_reference(p, g, constant_control(g, 0.315, -1, 1), kAnchor);
  CHECK(oracle::peak_to_peak_v(hi, g.dt, 100, 200) == doctest::Approx(3.748699068).epsilon(1e-6));
  CHECK(oracle::peak_to_peak_v(lo, g.dt, 100, 200) == doctest::Approx(0.1218799966).epsilon(1e-5));
}

TEST_CASE("reference integrator is fourth order") {
  const ModelParams p;
  const TimeGrid g = make_grid(20.0, 0.1);
  ControlGrid c = constant_control(g, 0.0, -1, 1);
  for (std::size_t k = 0; k < g.n_steps; ++k) c.values[k] = 0.5 * std::sin(0.1 * k);
  const State fine = oracle::integrate_reference(p, g, c, kAnchor, Coupling::self, 128).at_step(g.n_steps);
  const double e4 = (oracle::integrate_reference(p, g, c, kAnchor, Coupling::self, 2).at_step(g.n_steps) - fine).norm();
  const double e8 = (oracle::integrate_reference(p, g, c, kAnchor, Coupling::self, 4).at_step(g.n_steps) - fine).norm();
  const double order = std::log2(e4 / e8);
  CHECK(order > 3.7);
  CHECK(order < 4.3);
}

TEST_CASE("variation process") {
  const ModelParams p;
  const TimeGrid g = make_grid(5.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const auto ctrl = constant_control(g, 0.2, -1, 1);
  const auto tr = simulate(p, g, ctrl, law, 20, 1);
  const CostSpec spec{std::vector<double>(g.n_steps + 1, -1.0), 0.0};
  const std::vector<double> zero(g.n_steps, 0.0);
  const auto v0 = oracle::variation_solve(tr, zero, spec, p);
  for (const auto& z : v0.Z) CHECK(z.norm() == 0.0);
  CHECK(v0.directional_derivative == 0.0);
}

TEST_CASE("variation process unrolled by hand") {
  ModelParams p;
  p.J = 0.0;
  const TimeGrid g = make_grid(0.2, 0.1);
  const auto ctrl = constant_control(g, 0.1, -1, 1);
  const auto tr = simulate(p, g, ctrl, InitialLaw::point(kAnchor), 1, 4);
  const std::vector<double> beta = {0.7, -1.1};
  const CostSpec spec{{-1.0, -1.0, -1.0}, 0.0};
  const auto v = oracle::variation_solve(tr, beta, spec, p);
  MeasureSummary m0;
  m0.mean_y = tr.summary[0].mean_y;
  MeasureSummary m1;
  m1.mean_y = tr.summary[1].mean_y;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d m1i = (I - 0.1 * drift_jac_x(0, tr.state(0, 1), m0, 0.1, p)).inverse();
  const Eigen::Matrix3d m2i = (I - 0.1 * drift_jac_x(0, tr.state(0, 2), m1, 0.1, p)).inverse();
  const State z1 = m1i * State(0.1 * 0.7, 0, 0);
  const State z2 = m2i * (z1 + State(0.1 * -1.1, 0, 0));
  CHECK((v.Z[1] - z1).norm() < 1e-15);
  CHECK((v.Z[2] - z2).norm() < 1e-15);
  // cost uses steps 0 and 1; Z_0 = 0
  const double dj = 0.1 * 2 * (tr.summary[1].mean_v + 1.0) * z1[kV];
  CHECK(v.directional_derivative == doctest::Approx(dj).epsilon(1e-14));
}

TEST_CASE("finite differences") {
  const ModelParams p;
  const TimeGrid g = make_grid(2.0, 0.1);
  const auto law = make_orbit_law(p, kAnchor);
  const auto ctrl = constant_control(g, 0.3, -1, 1);
  const auto tr = simulate(p, g, ctrl, law, 16, 2);
  std::vector<double> own(g.n_steps + 1);
  for (std::size_t k = 0; k <= g.n_steps; ++k) own[k] = tr.summary[k].mean_v;
  const auto at_min = oracle::fd_gradient(p, g, CostSpec{own, 0.0}, law, ctrl, 16, 2);
  for (double v : at_min) CHECK(std::abs(v) < 1e-7);

  // central differences converge at second order
  const CostSpec spec{std::vector<double>(g.n_steps + 1, -1.5), 0.0};
  const auto a = oracle::fd_gradient(p, g, spec, law, ctrl, 16, 2, 4e-2);
  const auto b = oracle::fd_gradient(p, g, spec, law, ctrl, 16, 2, 2e-2);
  const auto c = oracle::fd_gradient(p, g, spec, law, ctrl, 16, 2, 1e-2);
  double d1 = 0, d2 = 0;
  for (std::size_t k = 0; k < g.n_steps; ++k) {
    d1 += std::pow(a[k] - b[k], 2);
    d2 += std::pow(b[k] - c[k], 2);
  }
  const double ratio = std::sqrt(d1 / d2);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("one-dimensional Wasserstein distance") {
  const std::vector<double> s = {0.3, -1.2, 2.5, 0.0, 0.7};
  CHECK(oracle::wasserstein1d(s, s) == 0.0);
  CHECK(oracle::wasserstein1d({0.0}, {1.0}) == 1.0);
  std::vector<double> shifted = s;
  for (auto& x : shifted) x += 0.37;
  CHECK(oracle::wasserstein1d(s, shifted) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(oracle::wasserstein1d({0.0, 1.0}, {0.0, 0.0, 1.0, 1.0}) == 0.0);
  // quantile pieces: 1/2 * 0 + 1/6 * 1 + 1/3 * 0.25
  CHECK(oracle::wasserstein1d({0.0, 1.0}, {0.0, 0.0, 0.5}) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(oracle::wasserstein1d({}, {1.0}), std::invalid_argument);
}

TEST_CASE("assumption audit") {
  const ModelParams p;
  const auto rep = oracle::check_assumptions(p, 100000);
  CHECK(rep.total_violations() == 0);
  for (const auto& c : rep.checks) CHECK(c.fitted <= c.analytic * (1 + 1e-12));

  ModelParams uncoupled;
  uncoupled.J = 0.0;
  const auto rep0 = oracle::check_assumptions(uncoupled, 20000);
  CHECK(rep0.get("L2_drift_measure").fitted == 0.0);
  CHECK(rep0.get("A1_lions_derivative").fitted == 0.0);
  CHECK(rep0.get("L3_drift_growth").analytic < rep.get("L3_drift_growth").analytic);

  ModelParams full;
  full.noise_mode = NoiseMode::full;
  full.sigma_J = 0.2;
  const auto repf = oracle::check_assumptions(full, 50000);
  CHECK(repf.total_violations() == 0);
  CHECK(repf.constraint_violations == 0);
  CHECK(repf.get("A2_diffusion_jacobian").fitted > 0.0);

  std::ostringstream out;
  oracle::print_report(rep, out);
  CHECK(out.str().find("L3_drift_monotone") != std::string::npos);
}

}
