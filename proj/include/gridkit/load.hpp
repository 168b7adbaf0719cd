#pragma once

#include "gridkit/component.hpp"

namespace gridkit {

enum class LoadKind { Impedance, Current, Power };

/// Static load: constant impedance, constant current, or constant power.
/// Stateless; only the output map participates in the network balance.
class Load : public Component {
 public:
  Load() = default;
  static Load impedance(Complex z_bar);
  static Load current(Complex i_bar);
  static Load power(Complex s_bar);

  std::string kind() const override { return "load"; }
  int n_states() const override { return 0; }
  int n_inputs() const override { return 0; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec&, Complex, const Vec&) const override { return Vec::Zero(0); }
  Complex output(const Vec& x, Complex V) const override;

  /// Fits a constant-impedance load to the operating point:
  /// z = |V*|^2 / conj(S*). S* = 0 degenerates to an open circuit.
  Vec initialize(Complex V_star, Complex S_star) override;

  LoadKind load_kind() const { return kind_; }
  /// Load admittance 1/z (0 for an open circuit). Impedance kind only.
  Complex admittance() const;
  Complex impedance_value() const;

 private:
  LoadKind kind_ = LoadKind::Impedance;
  Complex y_{0.0, 0.0};      // admittance representation; exact for S*=0
  Complex i_bar_{0.0, 0.0};
  Complex s_bar_{0.0, 0.0};
};

/// Bus with no attached unit: P + jQ = 0.
class NonUnit : public Component {
 public:
  std::string kind() const override { return "none"; }
  int n_states() const override { return 0; }
  int n_inputs() const override { return 0; }
  const std::vector<std::string>& state_names() const override;
  Vec dynamics(const Vec&, Complex, const Vec&) const override { return Vec::Zero(0); }
  Complex output(const Vec&, Complex) const override { return {0.0, 0.0}; }
  Vec initialize(Complex V_star, Complex S_star) override;
};

}  // namespace gridkit
