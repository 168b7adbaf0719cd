#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridkit/control.hpp"
#include "gridkit/linearization.hpp"
#include "gridkit/simulation.hpp"
#include "gridkit/system.hpp"

namespace gridkit::io {

// ---- readers -------------------------------------------------------------

/// Branch CSV: from,to,r,x,b (one row per branch, half of b per end).
std::vector<BranchSpec> read_branch_csv(const std::string& path);

/// Bus CSV: bus,kind with kind in {gen, load, wind, solar, storage, none};
/// every bus 1..N must appear exactly once.
std::pair<int, std::vector<BusKind>> read_bus_csv(const std::string& path);

/// Dispatch CSV: bus,p,q,vmag with unused fields blank.
std::vector<DispatchEntry> read_dispatch_csv(const std::string& path);

/// In-memory case description.
struct CaseData {
  int n_buses = 0;
  std::vector<BusKind> kinds;
  std::vector<BranchSpec> branches;
  std::vector<DispatchEntry> dispatch;
  std::string components_json;  // may be empty
  int slack_bus = 0;            // 0: lowest-indexed generator
};

CaseData read_case(const std::string& branches_csv, const std::string& buses_csv,
                   const std::string& dispatch_csv, const std::string& components_json_path = "",
                   int slack_bus = 0);

/// Builds the component set (Table presets + per-bus JSON overrides) and
/// wraps everything into a SystemModel. Does not run the power flow.
SystemModel build_system(const CaseData& cd);

/// Power flow + initialization of every component.
PowerFlowSolution initialize_case(SystemModel& sys, const CaseData& cd,
                                  const PowerFlowOptions& opt = {});

// ---- scenario files --------------------------------------------------------

struct RetrofitRequest {
  int bus = 0;
  std::string gain_csv;  // empty: design an LQR gain with the weights below
  RetrofitWeights weights;
};

struct Scenario {
  CaseData case_data;
  double t_end = 10.0;
  double dt = 5e-3;
  std::vector<FaultSpec> faults;
  std::vector<RetrofitRequest> retrofits;
  std::string wac_gain_csv;
};

/// Keyed-text scenario file; see the README for the grammar. Relative paths
/// are resolved against the scenario file's directory.
Scenario read_scenario(const std::string& path);

// ---- gain files ------------------------------------------------------------

void write_wac_gain_csv(const std::string& path, const WideAreaGain& gain, bool timestamp);
WacController read_wac_gain_csv(const std::string& path);

void write_retrofit_gain_csv(const std::string& path, int bus, const Mat& K, bool timestamp);
Mat read_retrofit_gain_csv(const std::string& path, int expect_bus);

// ---- report writers --------------------------------------------------------

void write_pf_csv(const std::string& path, const PowerFlowSolution& pf, bool timestamp);
void write_eigs_csv(const std::string& path, const std::vector<EigenInfo>& eigs, bool timestamp);
void write_sweep_csv(const std::string& path, const std::string& param, const SweepResult& sweep,
                     bool timestamp);
void write_freqresp_csv(const std::string& path, const FrequencyResponse& fr, bool timestamp);

/// One CSV per quantity family plus a gnuplot script referencing them.
void write_trajectories(const std::string& out_dir, const SystemModel& sys, const Trajectory& tr,
                        bool timestamp);

}  // namespace gridkit::io
