#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "gridkit/control.hpp"
#include "gridkit/system.hpp"

namespace gridkit {

/// Overwrites one named component state at a given time; value is absolute
/// or a scale factor on the pre-fault value.
struct StateImpulse {
  int bus = 0;
  std::string state;
  double value = 0.0;
  bool scale = true;
  double time = 0.0;
};

/// Low-impedance shunt installed at the bus during [t_on, t_on + clearing].
struct ThreePhaseBusFault {
  int bus = 0;
  double t_on = 0.0;
  double clearing_time = 0.07;
};

using FaultSpec = std::variant<StateImpulse, ThreePhaseBusFault>;

struct SimOptions {
  double dt = 5e-3;
  double alg_tol = 1e-9;
  int max_newton = 10;
  double v_guard = 1e-4;           // voltage-collapse divergence guard
  Complex fault_shunt{1e6, -1e6};  // three-phase fault admittance
  int log_stride = 1;
};

struct Trajectory {
  std::vector<double> times;
  Mat states;       // n_x x T
  Mat xhat;         // controller states, n_h x T
  CMat voltages;    // N x T
  CMat injections;  // N x T
  Mat inputs;       // n_u x T (applied control)
  Mat aux;          // duty cycles etc.
  std::vector<double> alg_residual;
  std::vector<std::pair<int, std::string>> state_labels;
  std::vector<std::pair<int, std::string>> input_labels;
  std::vector<std::pair<int, std::string>> aux_labels;

  int col_of_time(double t) const;  // nearest logged column
};

/// Applies a state impulse to a stacked state vector.
void apply_fault(const SystemModel& sys, const StateImpulse& f, Vec& x);

/// Integrates the coupled DAE through the fault sequence with the given
/// controllers in the loop (implicit trapezoidal; component updates and the
/// algebraic voltage vector solved simultaneously by Newton each step).
Trajectory simulate(const SystemModel& sys, const std::vector<FaultSpec>& faults,
                    std::vector<RetrofitController> retrofits,
                    const std::optional<WacController>& wac, double t_end,
                    const SimOptions& options = {});

}  // namespace gridkit
