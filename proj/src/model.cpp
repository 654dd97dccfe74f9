#include "mfc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfc {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0)) {
    throw std::invalid_argument(std::string("model parameter '") + name +
                                "' must be > 0");
  }
}

double gate_radicand(double v, double y, const ModelParams& p) {
  return p.gate_noise_rise() * sigmoid_S(v, p) * (1.0 - y) +
         p.gate_noise_decay() * y;
}

}  // namespace

void validate(const ModelParams& p) {
  require_positive(p.a, "a");
  require_positive(p.b, "b");
  require_positive(p.c, "c");
  require_positive(p.a_r, "a_r");
  require_positive(p.a_d, "a_d");
  require_positive(p.T_max, "T_max");
  require_positive(p.lambda, "lambda");
  require_positive(p.gate_noise_rise(), "abar");
  require_positive(p.gate_noise_decay(), "bbar");
  if (p.sigma_ext < 0.0 || p.sigma_J < 0.0) {
    throw std::invalid_argument("noise intensities must be >= 0");
  }
  if (p.J < 0.0) {
    throw std::invalid_argument("model parameter 'J' must be >= 0");
  }
  if (!(p.cutoff_margin > 0.0 && p.cutoff_margin < 0.5)) {
    throw std::invalid_argument("cutoff_margin must lie in (0, 0.5)");
  }
}

int noise_dim(const ModelParams& p) {
  return p.noise_mode == NoiseMode::full ? 3 : 1;
}

MeasureSummary summarize(std::span<const State> particles) {
  MeasureSummary m;
  if (particles.empty()) return m;
  for (const auto& x : particles) {
    m.mean_v += x[kV];
    m.mean_w += x[kW];
    m.mean_y += x[kY];
    m.second_moment += x.squaredNorm();
  }
  const double n = static_cast<double>(particles.size());
  m.mean_v /= n;
  m.mean_w /= n;
  m.mean_y /= n;
  m.second_moment /= n;
  return m;
}

double sigmoid_S(double v, const ModelParams& p) {
  // Split on the sign of the exponent so neither branch can overflow.
  const double z = p.lambda * (v - p.V_T);
  if (z >= 0.0) return p.T_max / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return p.T_max * e / (1.0 + e);
}

double sigmoid_S_deriv(double v, const ModelParams& p) {
  const double s = sigmoid_S(v, p);
  return p.lambda * s * (1.0 - s / p.T_max);
}

double cutoff_chi(double y, const ModelParams& p) {
  const double s = (y - 0.5) / (0.5 - p.cutoff_margin);
  const double r = 1.0 - s * s;
  if (r <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / r);
}

double cutoff_chi_deriv(double y, const ModelParams& p) {
  const double half_width = 0.5 - p.cutoff_margin;
  const double s = (y - 0.5) / half_width;
  const double r = 1.0 - s * s;
  if (r <= 0.0) return 0.0;
  const double chi = std::exp(1.0 - 1.0 / r);
  return chi * (-2.0 * s / (r * r)) / half_width;
}

State drift(double /*t*/, const State& x, const MeasureSummary& m, double alpha,
            const ModelParams& p) {
  const double v = x[kV];
  const double w = x[kW];
  const double y = x[kY];
  return State(v - v * v * v / 3.0 - w + alpha - p.J * (v - p.V_rev) * m.mean_y,
               p.c * (v + p.a - p.b * w),
               p.a_r * sigmoid_S(v, p) * (1.0 - y) - p.a_d * y);
}

NoiseMatrix diffusion(double /*t*/, const State& x, const MeasureSummary& m,
                      double /*alpha*/, const ModelParams& p) {
  NoiseMatrix s = NoiseMatrix::Zero(3, noise_dim(p));
  s(kV, 0) = p.sigma_ext;
  if (p.noise_mode == NoiseMode::external_only) return s;

  s(kV, 1) = -p.coupling_noise() * (x[kV] - p.V_rev) * m.mean_y;
  const double chi = cutoff_chi(x[kY], p);
  if (chi > 0.0) {
    const double radicand = gate_radicand(x[kV], x[kY], p);
    if (radicand < 0.0) {
      throw std::domain_error("negative gating-noise radicand at y = " +
                              std::to_string(x[kY]) +
                              " (gating constraint breached upstream)");
    }
    s(kY, 2) = chi * std::sqrt(radicand);
  }
  return s;
}

Eigen::Matrix3d drift_jac_x(double /*t*/, const State& x,
                            const MeasureSummary& m, double /*alpha*/,
                            const ModelParams& p) {
  const double v = x[kV];
  const double y = x[kY];
  const double s = sigmoid_S(v, p);
  Eigen::Matrix3d jac;
  jac << 1.0 - v * v - p.J * m.mean_y, -1.0, 0.0,
         p.c, -p.c * p.b, 0.0,
         p.a_r * sigmoid_S_deriv(v, p) * (1.0 - y), 0.0, -p.a_r * s - p.a_d;
  return jac;
}

Eigen::Matrix3d drift_lions_deriv(double /*t*/, const State& x,
                                  const ModelParams& p) {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(kV, kY) = -p.J * (x[kV] - p.V_rev);
  return d;
}

State diffusion_x_pairing(const State& x, const MeasureSummary& m,
                          const NoiseMatrix& q, const ModelParams& p) {
  State g = State::Zero();
  if (p.noise_mode == NoiseMode::external_only) return g;

  g[kV] += -p.coupling_noise() * m.mean_y * q(kV, 1);

  const double y = x[kY];
  const double chi = cutoff_chi(y, p);
  const double dchi = cutoff_chi_deriv(y, p);
  if (chi == 0.0 && dchi == 0.0) return g;
  const double radicand = gate_radicand(x[kV], y, p);
  if (radicand <= 0.0) return g;
  const double root = std::sqrt(radicand);
  const double rise = p.gate_noise_rise();
  const double d_rad_dv = rise * sigmoid_S_deriv(x[kV], p) * (1.0 - y);
  const double d_rad_dy = -rise * sigmoid_S(x[kV], p) + p.gate_noise_decay();
  g[kV] += chi * d_rad_dv / (2.0 * root) * q(kY, 2);
  g[kY] += (dchi * root + chi * d_rad_dy / (2.0 * root)) * q(kY, 2);
  return g;
}

double diffusion_mean_y_pairing(const State& x, const NoiseMatrix& q,
                                const ModelParams& p) {
  if (p.noise_mode == NoiseMode::external_only) return 0.0;
  return -p.coupling_noise() * (x[kV] - p.V_rev) * q(kV, 1);
}

double constraint_pi(const State& x) { return x[kY] * (x[kY] - 1.0); }

State constraint_grad(const State& x) {
  return State(0.0, 0.0, 2.0 * x[kY] - 1.0);
}

Eigen::Matrix3d constraint_hess(const State& /*x*/) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(kY, kY) = 2.0;
  return h;
}

}  // namespace mfc
