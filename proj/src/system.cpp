#include "gridkit/system.hpp"

#include "gridkit/generator.hpp"
#include "gridkit/load.hpp"
#include "gridkit/solar.hpp"
#include "gridkit/storage.hpp"
#include "gridkit/wind.hpp"

namespace gridkit {

SystemModel::SystemModel(NetworkModel net, std::vector<std::unique_ptr<Component>> components)
    : net_(std::move(net)), comps_(std::move(components)) {
  if (static_cast<int>(comps_.size()) != net_.n_buses())
    throw InputError("component count does not match bus count");
  state_off_.resize(comps_.size());
  input_off_.resize(comps_.size());
  for (size_t i = 0; i < comps_.size(); ++i) {
    state_off_[i] = n_states_;
    input_off_[i] = n_inputs_;
    n_states_ += comps_[i]->n_states();
    n_inputs_ += comps_[i]->n_inputs();
  }
}

Component& SystemModel::component(int bus) {
  if (bus < 1 || bus > net_.n_buses()) throw InputError("bus index out of range");
  return *comps_[static_cast<size_t>(bus - 1)];
}

const Component& SystemModel::component(int bus) const {
  if (bus < 1 || bus > net_.n_buses()) throw InputError("bus index out of range");
  return *comps_[static_cast<size_t>(bus - 1)];
}

int SystemModel::state_index(int bus, const std::string& state_name) const {
  const Component& c = component(bus);
  const auto& names = c.state_names();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == state_name) return state_offset(bus) + static_cast<int>(i);
  throw InputError("bus " + std::to_string(bus) + " has no state named '" + state_name + "'");
}

std::vector<std::pair<int, std::string>> SystemModel::state_labels() const {
  std::vector<std::pair<int, std::string>> out;
  out.reserve(static_cast<size_t>(n_states_));
  for (int b = 1; b <= n_buses(); ++b)
    for (const auto& n : component(b).state_names()) out.emplace_back(b, n);
  return out;
}

std::vector<std::pair<int, std::string>> SystemModel::input_labels() const {
  std::vector<std::pair<int, std::string>> out;
  for (int b = 1; b <= n_buses(); ++b) {
    const int m = component(b).n_inputs();
    for (int i = 0; i < m; ++i) out.emplace_back(b, "u" + std::to_string(i + 1));
  }
  return out;
}

void SystemModel::initialize(const PowerFlowSolution& pf) {
  if (pf.V_star.size() != n_buses()) throw InputError("power-flow solution size mismatch");
  for (int b = 1; b <= n_buses(); ++b)
    comps_[static_cast<size_t>(b - 1)]->initialize(pf.V_star(b - 1), pf.S_star(b - 1));
  op_.V_star = pf.V_star;
  op_.S_star = pf.S_star;
  op_.valid = true;
}

Vec SystemModel::x_star() const {
  Vec x(n_states_);
  for (int b = 1; b <= n_buses(); ++b) {
    const Component& c = component(b);
    if (c.n_states() > 0) x.segment(state_offset(b), c.n_states()) = c.x_star();
  }
  return x;
}

Vec SystemModel::dynamics(const Vec& x, const CVec& V, const Vec& u) const {
  Vec dx(n_states_);
  for (int b = 1; b <= n_buses(); ++b) {
    const Component& c = component(b);
    const int n = c.n_states();
    if (n == 0) continue;
    dx.segment(state_offset(b), n) =
        c.dynamics(x.segment(state_offset(b), n), V(b - 1),
                   u.segment(input_offset(b), c.n_inputs()));
  }
  return dx;
}

CVec SystemModel::outputs(const Vec& x, const CVec& V) const {
  CVec S(n_buses());
  for (int b = 1; b <= n_buses(); ++b) {
    const Component& c = component(b);
    S(b - 1) = c.output(x.segment(state_offset(b), c.n_states()), V(b - 1));
  }
  return S;
}

CVec SystemModel::algebraic_residual(const CMat& Y, const Vec& x, const CVec& V) const {
  return network_mismatch(Y, V, outputs(x, V));
}

std::unique_ptr<Component> make_default_component(BusKind kind) {
  switch (kind) {
    case BusKind::Generator: return std::make_unique<Generator>();
    case BusKind::Load: return std::make_unique<Load>();
    case BusKind::Wind: return std::make_unique<WindFarm>();
    case BusKind::Solar: return std::make_unique<SolarFarm>();
    case BusKind::Storage: return std::make_unique<Storage>();
    case BusKind::NonUnit: return std::make_unique<NonUnit>();
  }
  throw InputError("unknown bus kind");
}

}  // namespace gridkit
