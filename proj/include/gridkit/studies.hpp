#pragma once

#include "gridkit/io.hpp"

namespace gridkit {

/// Named sweep parameters: "gamma_pv" and "gamma_w" scale the farm size and
/// re-dispatch the farm output at 0.02 pu per generator; "kappa_I_R" sets
/// both RSC integral gains on every wind farm.
void apply_sweep_parameter(io::CaseData& cd, const std::string& param, double value);

/// Rebuilds power flow + initialization + linearization per value and traces
/// the dominant eigenvalue real part. Per-point failures are recorded and the
/// sweep continues.
SweepResult run_param_sweep(const io::CaseData& base, const std::string& param,
                            const std::vector<double>& values, int n_threads = 0,
                            const PowerFlowOptions& pf_opt = {});

struct ScenarioRun {
  SystemModel sys;
  PowerFlowSolution pf;
  Trajectory traj;
};

/// Builds the system, designs or loads the requested controllers, and
/// integrates the fault sequence.
ScenarioRun run_scenario(const io::Scenario& sc, const PowerFlowOptions& pf_opt = {},
                         SimOptions sim_opt = {});

}  // namespace gridkit
