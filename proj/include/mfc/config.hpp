#pragma once

// Experiment configuration: an INI file with the sections
//
//   [model] [grid] [control] [cost] [optimizer] [init] [adjoint] [run]
//
// Every key is optional and defaults to the member initializers below.
// Unknown sections or keys are an error.

#include "mfc/adjoint.hpp"
#include "mfc/forward.hpp"
#include "mfc/model.hpp"
#include "mfc/optimize.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfc {

enum class ReferenceKind { pulse_lfp, constant_alpha, resting };

struct ReferenceConfig {
  ReferenceKind kind = ReferenceKind::pulse_lfp;
  double pulse_amplitude = 0.8;
  double pulse_duration = 7.0;
  double switch_time = 100.0;
  double alpha = 0.33;          // constant_alpha
  double coupling_J = 0.46;     // network that produces the pulse LFP
  std::size_t n_particles = 0;  // 0: run.n_particles
};

struct InitConfig {
  enum class Kind { orbit, point };
  Kind kind = Kind::orbit;
  State anchor = State(-0.828, -0.139, 0.589);
  std::size_t orbit_samples = 4096;
};

struct RunConfig {
  std::size_t n_particles = 1000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::filesystem::path out;  // empty: <output root>/run-<seed>
};

struct ExperimentConfig {
  ModelParams model;
  double t_end = 200.0;
  double dt = 0.1;
  double alpha_min = -1.0;
  double alpha_max = 1.0;
  double alpha_initial = 0.0;
  ReferenceConfig reference;
  double control_penalty = 0.0;
  OptimizerConfig optimizer;
  InitConfig init;
  PathwiseOptions adjoint;
  RunConfig run;

  TimeGrid grid() const { return make_grid(t_end, dt); }
};

// Throws std::invalid_argument naming the offending key.
void validate(const ExperimentConfig& cfg);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical INI text; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& cfg);

// Zero sigma_ext and sigma_J and switch to external-only noise.
void disable_noise(ExperimentConfig& cfg);

// Default output root: $MFC_OUTPUT_ROOT, else "runs".
std::filesystem::path default_output_root();

std::string to_string(ReferenceKind k);

}  // namespace mfc
