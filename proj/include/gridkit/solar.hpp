#pragma once

#include <optional>

#include "gridkit/component.hpp"

namespace gridkit {

/// PV array (linearized around the maximum power point) + buck/boost DC/DC
/// + DC/AC converter with PI current control + DC link. 7 states.
struct SolarFarmParams {
  double L_ac = 39.59;
  double R_ac = 0.05;
  double K_P_d = -0.01;
  double K_I_d = -0.1;
  double K_P_q = 0.01;
  double K_I_q = 0.1;
  double tau_ac = 0.7;
  double C_dc = 44.87;
  double G_sw = 1.19e-4;
  double S = 0.144;    // recomputed by initialize() from the MPP pair
  double R_PV = 7.687;
  double V_PV = 0.823;
  double gamma_pv = 20.0;  // PV generator count in the farm

  void validate() const;
};

struct SolarAlpha {
  double P_star = 0.0;
  double Q_star = 0.0;
  double S = 0.144;
};

struct SolarInitOptions {
  // MPP pair (v'_dc, i'_dc); defaults to the maximum of the linearized
  // I-V curve: v' = V_PV/2, i' = V_PV/(2 R_PV).
  std::optional<double> v_mpp;
  std::optional<double> i_mpp;
};

class SolarFarm : public Component {
 public:
  explicit SolarFarm(SolarFarmParams p = {});

  std::string kind() const override { return "solar"; }
  int n_states() const override { return 7; }
  int n_inputs() const override { return 2; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec& x, Complex V, const Vec& u) const override;
  Complex output(const Vec& x, Complex V) const override;
  Vec initialize(Complex V_star, Complex S_star) override;

  std::vector<std::pair<std::string, double>> aux_outputs(const Vec& x, Complex V,
                                                          const Vec& u) const override;
  double saturation_margin(const Vec& x, Complex V, const Vec& u) const override;

  const SolarFarmParams& params() const { return params_; }
  SolarFarmParams& params() { return params_; }
  const SolarAlpha& alpha() const { return alpha_; }
  void set_init_options(const SolarInitOptions& o) { init_opts_ = o; }

 private:
  struct Duties {
    double m_d, m_q;  // emitted
    double r_d, r_q;  // before saturation
  };
  Duties duties(const Vec& x, Complex V, const Vec& u) const;

  SolarFarmParams params_;
  SolarAlpha alpha_;
  SolarInitOptions init_opts_;
};

}  // namespace gridkit
