#pragma once

// Reference profiles and the end-to-end control experiment.

#include "mfc/config.hpp"
#include "mfc/optimize.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfc {

struct ReferenceProfile {
  std::vector<double> values;  // vbar per step, n_steps + 1 entries
  std::string provenance;
};

// pulse_lfp: LFP of the coupled network (J = reference_J) driven by
// pulse_amplitude on [0, pulse_duration), for t <= switch_time; afterwards
// the uncoupled resting potential. constant_alpha: v of the deterministic
// single neuron from the anchor. resting: the resting potential.
ReferenceProfile make_reference(const ExperimentConfig& cfg);

InitialLaw make_initial_law(const ExperimentConfig& cfg, const ModelParams& p);

ControlGrid initial_control(const ExperimentConfig& cfg);

ProblemSetup make_setup(const ExperimentConfig& cfg,
                        const ReferenceProfile& reference);

OptimizerConfig optimizer_config(const ExperimentConfig& cfg);

// SHA-1 of "blob <size>\0<text>", as printed by git hash-object.
std::string git_blob_hash(const std::string& text);

struct ExperimentResult {
  OptimizerState state;
  ReferenceProfile reference;
  double baseline_cost = 0.0;  // cost of the initial control
  std::filesystem::path out_dir;
};

// Writes control.csv, lfp.csv, reference.csv, convergence.csv,
// adjoint_mean.csv and manifest.txt into out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

// CSV: t,vbar
void write_reference_csv(const ReferenceProfile& ref, double dt,
                         const std::filesystem::path& path);

// CSV: t,lfp,vbar
void write_lfp_csv(const TrajectoryBundle& traj, const ReferenceProfile& ref,
                   const std::filesystem::path& path);

}  // namespace mfc
