#pragma once

#include <array>
#include <string>
#include <vector>

#include "gridkit/errors.hpp"
#include "gridkit/types.hpp"

namespace gridkit {

/// One transmission branch modeled as a reciprocal Pi circuit.
/// Bus indices are 1-based, matching the data files.
struct BranchSpec {
  int from_bus = 0;
  int to_bus = 0;
  Complex series_impedance;        // R + jX
  Complex shunt_admittance_from;   // per-end charging, from side
  Complex shunt_admittance_to;     // per-end charging, to side

  static BranchSpec line(int from, int to, double r, double x, double b_total) {
    BranchSpec br;
    br.from_bus = from;
    br.to_bus = to;
    br.series_impedance = Complex(r, x);
    br.shunt_admittance_from = Complex(0.0, b_total / 2.0);
    br.shunt_admittance_to = Complex(0.0, b_total / 2.0);
    return br;
  }
};

enum class BusKind { Generator, Load, Wind, Solar, Storage, NonUnit };

std::string to_string(BusKind k);
BusKind bus_kind_from_string(const std::string& s);

/// Network topology: admittance matrix plus the six disjoint bus index sets.
/// Buses are stored 0-based internally; the accessors below take 1-based ids.
class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(int n_buses, std::vector<BusKind> kinds, const std::vector<BranchSpec>& branches);

  int n_buses() const { return n_; }
  const CMat& Y() const { return y_; }
  BusKind kind(int bus_1based) const;
  const std::vector<BusKind>& kinds() const { return kinds_; }

  /// 1-based ids of all buses of a given kind, ascending.
  std::vector<int> buses_of_kind(BusKind k) const;

  const std::vector<BranchSpec>& branches() const { return branches_; }

 private:
  int n_ = 0;
  CMat y_;
  std::vector<BusKind> kinds_;
  std::vector<BranchSpec> branches_;
};

/// Assembles the bus admittance matrix from Pi-circuit branch data.
/// Each branch adds 1/x to both diagonal entries, -1/x to both off-diagonal
/// entries, and the per-end shunt admittance to the corresponding diagonal.
CMat build_admittance(const std::vector<BranchSpec>& branches, int n_buses);

/// Kirchhoff power-balance residual (YV)* o V - S, elementwise.
/// Zero iff (V, S) satisfy the network balance.
CVec network_mismatch(const CMat& Y, const CVec& V, const CVec& S);

}  // namespace gridkit
