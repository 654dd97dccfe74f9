#pragma once

// FitzHugh-Nagumo mean-field coefficients.
//
// A neuron is the triple x = (v, w, y): membrane potential, recovery variable
// and synaptic gating fraction. The law of the population enters the
// coefficients only through the barycenter of the gating variable (mean_y),
// so every coefficient below takes a MeasureSummary instead of a measure.

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace mfc {

using State = Eigen::Vector3d;

inline constexpr int kV = 0;
inline constexpr int kW = 1;
inline constexpr int kY = 2;

enum class NoiseMode {
  external_only,  // only sigma_ext on v; gating and coupling noise off
  full,           // W, B and B~ channels per neuron
};

struct ModelParams {
  // FHN constants
  double a = 0.7;
  double b = 0.8;
  double c = 0.08;
  double sigma_ext = 0.04;

  // synapse
  double V_rev = 1.0;
  double a_r = 1.0;
  double a_d = 0.3;
  double T_max = 1.0;
  double lambda = 0.1;
  double V_T = 2.0;
  double J = 0.46;
  double sigma_J = 0.0;

  // Gating-noise constants; fall back to a_r / a_d when unset.
  std::optional<double> abar;
  std::optional<double> bbar;

  // Support of the cut-off is [cutoff_margin, 1 - cutoff_margin].
  double cutoff_margin = 0.05;

  NoiseMode noise_mode = NoiseMode::external_only;

  double gate_noise_rise() const { return abar.value_or(a_r); }
  double gate_noise_decay() const { return bbar.value_or(a_d); }

  // sigma_J is ignored unless noise_mode == full.
  double coupling_noise() const {
    return noise_mode == NoiseMode::full ? sigma_J : 0.0;
  }
};

// Throws std::invalid_argument on non-positive rates or a bad cut-off margin.
void validate(const ModelParams& p);

// Number of Brownian channels per neuron: 1 (external_only) or 3 (full).
int noise_dim(const ModelParams& p);

struct MeasureSummary {
  double mean_v = 0.0;
  double mean_w = 0.0;
  double mean_y = 0.0;
  double second_moment = 0.0;  // empirical E|X|^2
};

MeasureSummary summarize(std::span<const State> particles);

// Neurotransmitter concentration S(v) = T_max / (1 + exp(-lambda (v - V_T))).
double sigmoid_S(double v, const ModelParams& p);
double sigmoid_S_deriv(double v, const ModelParams& p);

// Smooth bump supported in [delta0, 1 - delta0], peak value 1 at y = 1/2.
double cutoff_chi(double y, const ModelParams& p);
double cutoff_chi_deriv(double y, const ModelParams& p);

State drift(double t, const State& x, const MeasureSummary& m, double alpha,
            const ModelParams& p);

// 3 x noise_dim(p); at most three columns.
using NoiseMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 3>;

NoiseMatrix diffusion(double t, const State& x, const MeasureSummary& m,
                      double alpha, const ModelParams& p);

Eigen::Matrix3d drift_jac_x(double t, const State& x, const MeasureSummary& m,
                            double alpha, const ModelParams& p);

// L-derivative of the drift; constant in the copy variable, so no copy
// argument is taken. Only entry (0, 2) is nonzero.
Eigen::Matrix3d drift_lions_deriv(double t, const State& x,
                                  const ModelParams& p);

// Gradient in x of <sigma(x), q> (Frobenius pairing).
State diffusion_x_pairing(const State& x, const MeasureSummary& m,
                          const NoiseMatrix& q, const ModelParams& p);

// Derivative in mean_y of <sigma(x), q>.
double diffusion_mean_y_pairing(const State& x, const NoiseMatrix& q,
                                const ModelParams& p);

// Gating constraint pi(x) = y (y - 1); the admissible set is pi <= 0.
double constraint_pi(const State& x);
State constraint_grad(const State& x);
Eigen::Matrix3d constraint_hess(const State& x);

}  // namespace mfc
