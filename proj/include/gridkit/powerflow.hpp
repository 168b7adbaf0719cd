#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "gridkit/network.hpp"

namespace gridkit {

enum class BusConstraintKind { Slack, PV, PQ };

/// Steady-state constraint attached to one bus. Which fields are meaningful
/// depends on the kind: Slack uses (vmag, theta), PV uses (p, vmag),
/// PQ uses (p, q).
struct BusConstraint {
  BusConstraintKind kind = BusConstraintKind::PQ;
  double p = 0.0;
  double q = 0.0;
  double vmag = 1.0;
  double theta = 0.0;
};

struct PowerFlowOptions {
  double tol = 1e-10;    // infinity norm of the power mismatch
  int max_iter = 50;
};

struct PowerFlowSolution {
  CVec V_star;           // bus voltages
  CVec S_star;           // P*+jQ*, recomputed from V* so the balance holds exactly
  int iterations = 0;
  double max_mismatch = 0.0;
};

/// Per-bus dispatch record; NaN marks a blank field.
struct DispatchEntry {
  int bus = 0;
  double p = std::nan("");
  double q = std::nan("");
  double vmag = std::nan("");
};

/// Maps bus kinds and dispatch data onto power-flow constraints:
/// generator/wind/solar -> PV, load/storage -> PQ, non-unit -> PQ(0,0),
/// the designated slack generator -> Slack with angle 0.
/// slack_bus 0 picks the lowest-indexed generator bus.
std::vector<BusConstraint> assemble_constraints(const NetworkModel& net,
                                                const std::vector<DispatchEntry>& dispatch,
                                                int slack_bus = 0);

/// Newton-Raphson power flow in polar coordinates from a flat start.
PowerFlowSolution solve_power_flow(const NetworkModel& net,
                                   const std::vector<BusConstraint>& constraints,
                                   const PowerFlowOptions& options = {});

}  // namespace gridkit
