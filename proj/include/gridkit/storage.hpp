#pragma once

#include "gridkit/component.hpp"

namespace gridkit {

/// Battery + buck/boost DC/DC + DC/AC converter with PI control + DC link.
/// Same converter chain as the solar farm with the battery branch replacing
/// the PV array. 9 states.
struct StorageParams {
  double L_ac = 39.59;
  double R_ac = 0.05;
  double K_P_d = -0.01;
  double K_I_d = -0.1;
  double K_P_q = 0.01;
  double K_I_q = 0.1;
  double tau_ac = 0.7;
  double C_dc = 44.87;
  double G_sw = 1.19e-4;
  double S = 2.0;  // recomputed by initialize()
  double C_b = 8.97e3;
  double G_b = 1.2e-5;
  double R_b = 0.21;
  double L_b = 79.1;

  void validate() const;
};

struct StorageAlpha {
  double P_star = 0.0;
  double Q_star = 0.0;
  double S = 0.0;
};

class Storage : public Component {
 public:
  explicit Storage(StorageParams p = {});

  std::string kind() const override { return "storage"; }
  int n_states() const override { return 9; }
  int n_inputs() const override { return 2; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec& x, Complex V, const Vec& u) const override;
  Complex output(const Vec& x, Complex V) const override;

  /// Charge-neutral equilibrium: i'_dc = 0, v_b = 0, DC/DC gain 0, DC-link
  /// voltage from the power balance. Requires a (slightly) charging dispatch.
  Vec initialize(Complex V_star, Complex S_star) override;

  std::vector<std::pair<std::string, double>> aux_outputs(const Vec& x, Complex V,
                                                          const Vec& u) const override;
  double saturation_margin(const Vec& x, Complex V, const Vec& u) const override;

  const StorageParams& params() const { return params_; }
  const StorageAlpha& alpha() const { return alpha_; }

 private:
  struct Duties {
    double m_d, m_q;
    double r_d, r_q;
  };
  Duties duties(const Vec& x, Complex V, const Vec& u) const;

  StorageParams params_;
  StorageAlpha alpha_;
};

}  // namespace gridkit
