#include "mfc/model.hpp"
#include "mfc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mfc;

namespace {

MeasureSummary with_mean_y(double y) {
  MeasureSummary m;
  m.mean_y = y;
  return m;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("sigmoid values") {
  ModelParams p;
  CHECK(sigmoid_S(p.V_T, p) == doctest::Approx(0.5).epsilon(1e-15));
  // reference from an independent scalar evaluation
  CHECK(sigmoid_S(0.0, p) == doctest::Approx(0.45016600268752216).epsilon(1e-14));
  CHECK(sigmoid_S(-1e6, p) == 0.0);
  CHECK(sigmoid_S(1e6, p) == doctest::Approx(p.T_max));
  CHECK(std::isfinite(sigmoid_S(-1e300, p)));
  for (double v = -10; v < 10; v += 0.37) CHECK(sigmoid_S(v + 0.1, p) > sigmoid_S(v, p));
}

TEST_CASE("sigmoid derivative against differences") {
  ModelParams p;
  for (double v : {-3.0, -0.5, 0.0, 2.0, 4.5}) {
    const double h = 1e-6;
    const double fd = (sigmoid_S(v + h, p) - sigmoid_S(v - h, p)) / (2 * h);
    CHECK(sigmoid_S_deriv(v, p) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("cut-off bump") {
  ModelParams p;
  CHECK(cutoff_chi(0.0, p) == 0.0);
  CHECK(cutoff_chi(1.0, p) == 0.0);
  CHECK(cutoff_chi(p.cutoff_margin / 2, p) == 0.0);
  CHECK(cutoff_chi(0.5, p) == doctest::Approx(1.0));
  for (double y = 0.06; y < 0.95; y += 0.01) {
    CHECK(cutoff_chi(y, p) > 0.0);
    CHECK(cutoff_chi(y, p) <= 1.0);
  }
  CHECK(cutoff_chi(p.cutoff_margin + 1e-4, p) < 1e-10);
  CHECK(std::abs(cutoff_chi_deriv(p.cutoff_margin + 1e-4, p)) < 1e-6);
  const double h = 1e-6;
  for (double y : {0.1, 0.3, 0.5, 0.77}) {
    const double fd = (cutoff_chi(y + h, p) - cutoff_chi(y - h, p)) / (2 * h);
    CHECK(cutoff_chi_deriv(y, p) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("drift values") {
  ModelParams p;
  const State d = drift(0.0, State::Zero(), with_mean_y(0.0), 0.0, p);
  CHECK(d[kV] == 0.0);
  CHECK(d[kW] == doctest::Approx(0.056).epsilon(1e-14));
  CHECK(d[kY] == doctest::Approx(0.45016600268752216).epsilon(1e-14));

  const State e = drift(0.0, State(0.5, -0.2, 0.3), with_mean_y(0.4), 0.1, p);
  CHECK(e[kV] == doctest::Approx(0.8503333333333333).epsilon(1e-14));
  CHECK(e[kW] == doctest::Approx(0.1088).epsilon(1e-14));
  CHECK(e[kY] == doctest::Approx(0.2337991082593753).epsilon(1e-14));

  const State f = drift(0.0, State(p.V_rev, 0.0, 0.0), with_mean_y(0.9), 0.0, p);
  const State g = drift(0.0, State(p.V_rev, 0.0, 0.0), with_mean_y(0.1), 0.0, p);
  CHECK(f[kV] == g[kV]);
}

TEST_CASE("uncoupled rest point is stationary") {
  ModelParams p;
  p.J = 0.0;
  const State rest(-1.1994080352440351, -0.62426004405504387, 0.58373235740896112);
  const State d = drift(0.0, rest, with_mean_y(rest[kY]), 0.0, p);
  CHECK(d.norm() < 1e-13);
}

TEST_CASE("external diffusion") {
  ModelParams p;
  const NoiseMatrix s = diffusion(0.0, State(0.3, 0.1, 0.5), with_mean_y(0.5), 0.0, p);
  REQUIRE(s.cols() == 1);
  CHECK(s(0, 0) == 0.04);
  CHECK(s(1, 0) == 0.0);
  CHECK(s(2, 0) == 0.0);
  CHECK(noise_dim(p) == 1);
}

TEST_CASE("full diffusion") {
  ModelParams p;
  p.noise_mode = NoiseMode::full;
  p.sigma_J = 0.2;
  REQUIRE(noise_dim(p) == 3);
  const NoiseMatrix s = diffusion(0.0, State(0.3, 0.1, 0.5), with_mean_y(0.25), 0.0, p);
  CHECK(s(0, 0) == 0.04);
  CHECK(s(0, 1) == doctest::Approx(-0.2 * (0.3 - 1.0) * 0.25));
  CHECK(s(2, 2) == doctest::Approx(std::sqrt(sigmoid_S(0.3, p) * 0.5 + 0.3 * 0.5)));
  CHECK(diffusion(0.0, State(0.3, 0.1, 0.02), with_mean_y(0.25), 0.0, p)(2, 2) == 0.0);
  CHECK(diffusion(0.0, State(p.V_rev, 0.1, 0.5), with_mean_y(0.25), 0.0, p)(0, 1) == 0.0);
  // no radicand check needed where the cut-off vanishes
  CHECK_NOTHROW(diffusion(0.0, State(0.0, 0.0, 7.0), with_mean_y(0.5), 0.0, p));
}

TEST_CASE("jacobian values") {
  ModelParams p;
  const Eigen::Matrix3d j = drift_jac_x(0.0, State::Zero(), with_mean_y(0.0), 0.0, p);
  CHECK(j(1, 0) == doctest::Approx(0.08));
  CHECK(j(1, 1) == doctest::Approx(-0.064));
  CHECK(j(1, 2) == 0.0);
  CHECK(j(0, 1) == -1.0);
  const Eigen::Matrix3d l = drift_lions_deriv(0.0, State::Zero(), p);
  CHECK(l(0, 2) == doctest::Approx(0.46));
  CHECK(drift_lions_deriv(0.0, State(p.V_rev, 2.0, 0.3), p).norm() == 0.0);
}

TEST_CASE("jacobians match central differences") {
  ModelParams p;
  const double h = 1e-6;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto u = [&](int c, double lo, double hi) {
      return lo + (hi - lo) * rng::uniform(rng::key(11, s, static_cast<std::uint64_t>(c), 0));
    };
    const State x(u(0, -2.5, 2.5), u(1, -2, 2), u(2, 0, 1));
    const MeasureSummary m = with_mean_y(u(3, 0, 1));
    const double al = u(4, -1, 1);
    const Eigen::Matrix3d jac = drift_jac_x(0.0, x, m, al, p);
    Eigen::Matrix3d fd;
    for (int c = 0; c < 3; ++c) {
      State xp = x;
      State xm = x;
      xp[c] += h;
      xm[c] -= h;
      fd.col(c) = (drift(0.0, xp, m, al, p) - drift(0.0, xm, m, al, p)) / (2 * h);
    }
    CHECK((jac - fd).norm() <= 1e-6 * std::max(1.0, jac.norm()));

    const State dmu = (drift(0.0, x, with_mean_y(m.mean_y + h), al, p) -
                       drift(0.0, x, with_mean_y(m.mean_y - h), al, p)) / (2 * h);
    const State lions = drift_lions_deriv(0.0, x, p) * State(0, 0, 1);
    CHECK((dmu - lions).norm() <= 1e-6 * std::max(1.0, lions.norm()));
  }
}

TEST_CASE("diffusion pairings match differences") {
  ModelParams p;
  p.noise_mode = NoiseMode::full;
  p.sigma_J = 0.3;
  const double h = 1e-6;
  const State x(0.4, -0.3, 0.42);
  const MeasureSummary m = with_mean_y(0.6);
  NoiseMatrix q(3, 3);
  q << 0.3, -1.2, 0.5, 0.7, 0.1, -0.4, 0.2, 0.9, 1.1;
  const auto pair = [&](const State& xx, const MeasureSummary& mm) {
    return (diffusion(0.0, xx, mm, 0.0, p).array() * q.array()).sum();
  };
  const State grad = diffusion_x_pairing(x, m, q, p);
  for (int c = 0; c < 3; ++c) {
    State xp = x;
    State xm = x;
    xp[c] += h;
    xm[c] -= h;
    CHECK(grad[c] == doctest::Approx((pair(xp, m) - pair(xm, m)) / (2 * h)).epsilon(1e-6));
  }
  const double dmu = (pair(x, with_mean_y(0.6 + h)) - pair(x, with_mean_y(0.6 - h))) / (2 * h);
  CHECK(diffusion_mean_y_pairing(x, q, p) == doctest::Approx(dmu).epsilon(1e-6));
}

TEST_CASE("constraint function") {
  CHECK(constraint_pi(State(0, 0, 0.5)) == -0.25);
  CHECK(constraint_pi(State(0, 0, 0.0)) == 0.0);
  CHECK(constraint_pi(State(0, 0, 1.0)) == 0.0);
  CHECK(constraint_pi(State(0, 0, 1.1)) == doctest::Approx(0.11));
  CHECK(constraint_grad(State(1, 2, 0.8)) == State(0, 0, 0.6000000000000001));
  CHECK(constraint_hess(State::Zero()) == Eigen::Vector3d(0, 0, 2).asDiagonal().toDenseMatrix());
}

TEST_CASE("one-sided Lipschitz drift has a finite constant") {
  ModelParams p;
  double fitted = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto u = [&](int c, double lo, double hi) {
      return lo + (hi - lo) * rng::uniform(rng::key(5, s, static_cast<std::uint64_t>(c), 0));
    };
    const State x(u(0, -3, 3), u(1, -3, 3), u(2, 0, 1));
    const State y(u(3, -3, 3), u(4, -3, 3), u(5, 0, 1));
    const double a1 = u(6, -1, 1);
    const double a2 = u(7, -1, 1);
    const MeasureSummary m = with_mean_y(u(8, 0, 1));
    const double lhs = (x - y).dot(drift(0, x, m, a1, p) - drift(0, y, m, a2, p));
    fitted = std::max(fitted, lhs / ((x - y).squaredNorm() + (a1 - a2) * (a1 - a2)));
  }
  CHECK(std::isfinite(fitted));
  CHECK(fitted < 2.0);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.a_d = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  ModelParams q;
  q.cutoff_margin = 0.5;
  CHECK_THROWS_AS(validate(q), std::invalid_argument);
  ModelParams r;
  r.sigma_J = 0.5;
  CHECK(r.coupling_noise() == 0.0);
}

}
