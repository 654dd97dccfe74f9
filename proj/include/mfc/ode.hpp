#pragma once

// Classical 4th-order Runge-Kutta for a single deterministic neuron.

#include "mfc/model.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace mfc {

enum class Coupling {
  none,  // isolated neuron: the synaptic current is dropped
  self,  // identical-particle ensemble: mean_y equals the neuron's own y
};

// n_steps RK4 steps of size h; alpha is sampled at the left end of each step
// and held over it. Returns n_steps + 1 states.
std::vector<State> rk4_path(const ModelParams& p, const State& x0, double h,
                            std::size_t n_steps,
                            const std::function<double(std::size_t)>& alpha,
                            Coupling coupling);

}  // namespace mfc
