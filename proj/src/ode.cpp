#include "mfc/ode.hpp"

namespace mfc {

namespace {

State rate(const ModelParams& p, const State& x, double alpha,
           Coupling coupling) {
  MeasureSummary m;
  m.mean_y = coupling == Coupling::self ? x[kY] : 0.0;
  return drift(0.0, x, m, alpha, p);
}

}  // namespace

std::vector<State> rk4_path(const ModelParams& p, const State& x0, double h,
                            std::size_t n_steps,
                            const std::function<double(std::size_t)>& alpha,
                            Coupling coupling) {
  std::vector<State> path;
  path.reserve(n_steps + 1);
  path.push_back(x0);
  State x = x0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double a = alpha(k);
    const State k1 = rate(p, x, a, coupling);
    const State k2 = rate(p, x + 0.5 * h * k1, a, coupling);
    const State k3 = rate(p, x + 0.5 * h * k2, a, coupling);
    const State k4 = rate(p, x + h * k3, a, coupling);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    path.push_back(x);
  }
  return path;
}

}  // namespace mfc
