#include "gridkit/network.hpp"

#include <algorithm>

namespace gridkit {

std::string to_string(BusKind k) {
  switch (k) {
    case BusKind::Generator: return "gen";
    case BusKind::Load: return "load";
    case BusKind::Wind: return "wind";
    case BusKind::Solar: return "solar";
    case BusKind::Storage: return "storage";
    case BusKind::NonUnit: return "none";
  }
  return "?";
}

BusKind bus_kind_from_string(const std::string& s) {
  if (s == "gen" || s == "generator") return BusKind::Generator;
  if (s == "load") return BusKind::Load;
  if (s == "wind") return BusKind::Wind;
  if (s == "solar") return BusKind::Solar;
  if (s == "storage") return BusKind::Storage;
  if (s == "none" || s == "nonunit") return BusKind::NonUnit;
  throw InputError("unknown bus kind '" + s + "'");
}

CMat build_admittance(const std::vector<BranchSpec>& branches, int n_buses) {
  if (n_buses < 0) throw InputError("negative bus count");
  CMat Y = CMat::Zero(n_buses, n_buses);
  for (const auto& br : branches) {
    if (br.from_bus < 1 || br.from_bus > n_buses || br.to_bus < 1 || br.to_bus > n_buses)
      throw InputError("branch bus index out of range");
    if (br.from_bus == br.to_bus)
      throw InputError("branch connects a bus to itself");
    if (br.series_impedance == Complex(0.0, 0.0))
      throw InputError("branch series impedance is zero");
    const int i = br.from_bus - 1;
    const int j = br.to_bus - 1;
    const Complex ys = 1.0 / br.series_impedance;
    Y(i, i) += ys + br.shunt_admittance_from;
    Y(j, j) += ys + br.shunt_admittance_to;
    Y(i, j) -= ys;
    Y(j, i) -= ys;
  }
  return Y;
}

CVec network_mismatch(const CMat& Y, const CVec& V, const CVec& S) {
  if (Y.rows() != Y.cols() || Y.rows() != V.size() || V.size() != S.size())
    throw InputError("network_mismatch: dimension mismatch");
  return (Y * V).conjugate().cwiseProduct(V) - S;
}

NetworkModel::NetworkModel(int n_buses, std::vector<BusKind> kinds,
                           const std::vector<BranchSpec>& branches)
    : n_(n_buses), kinds_(std::move(kinds)), branches_(branches) {
  if (static_cast<int>(kinds_.size()) != n_buses)
    throw InputError("bus kind list length does not match bus count");
  y_ = build_admittance(branches_, n_buses);
}

BusKind NetworkModel::kind(int bus_1based) const {
  if (bus_1based < 1 || bus_1based > n_) throw InputError("bus index out of range");
  return kinds_[static_cast<size_t>(bus_1based - 1)];
}

std::vector<int> NetworkModel::buses_of_kind(BusKind k) const {
  std::vector<int> out;
  for (int b = 1; b <= n_; ++b)
    if (kinds_[static_cast<size_t>(b - 1)] == k) out.push_back(b);
  return out;
}

}  // namespace gridkit
