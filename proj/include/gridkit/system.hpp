#pragma once

#include <memory>
#include <vector>

#include "gridkit/component.hpp"
#include "gridkit/network.hpp"
#include "gridkit/powerflow.hpp"

namespace gridkit {

/// Power-flow triple plus per-component equilibrium, stored by the system
/// after initialization.
struct OperatingPoint {
  CVec V_star;
  CVec S_star;
  bool valid = false;
};

/// The interconnected model: one component per bus, coupled through the
/// network power balance. Owns the component instances; the stacked state
/// vector is laid out per bus in ascending bus order, inputs likewise.
class SystemModel {
 public:
  SystemModel(NetworkModel net, std::vector<std::unique_ptr<Component>> components);

  const NetworkModel& network() const { return net_; }
  int n_buses() const { return net_.n_buses(); }
  int n_states() const { return n_states_; }
  int n_inputs() const { return n_inputs_; }

  Component& component(int bus_1based);
  const Component& component(int bus_1based) const;

  int state_offset(int bus_1based) const { return state_off_[static_cast<size_t>(bus_1based - 1)]; }
  int input_offset(int bus_1based) const { return input_off_[static_cast<size_t>(bus_1based - 1)]; }

  /// Global index of a named component state; throws InputError if unknown.
  int state_index(int bus_1based, const std::string& state_name) const;

  /// (bus, state-name) label per global state, in layout order.
  std::vector<std::pair<int, std::string>> state_labels() const;
  std::vector<std::pair<int, std::string>> input_labels() const;

  /// Runs every component's initialization from the power-flow solution and
  /// records the operating point.
  void initialize(const PowerFlowSolution& pf);

  const OperatingPoint& operating_point() const { return op_; }
  /// Stacked equilibrium state (components must be initialized).
  Vec x_star() const;

  /// Stacked dynamics dx = f(x, V, u) over all components.
  Vec dynamics(const Vec& x, const CVec& V, const Vec& u) const;
  /// Per-bus injections S(x, V).
  CVec outputs(const Vec& x, const CVec& V) const;
  /// Residual of the algebraic network balance at (x, V) for a given Y.
  CVec algebraic_residual(const CMat& Y, const Vec& x, const CVec& V) const;

 private:
  NetworkModel net_;
  std::vector<std::unique_ptr<Component>> comps_;
  std::vector<int> state_off_, input_off_;
  int n_states_ = 0, n_inputs_ = 0;
  OperatingPoint op_;
};

/// Default component instance for a bus kind (Table presets).
std::unique_ptr<Component> make_default_component(BusKind kind);

}  // namespace gridkit
