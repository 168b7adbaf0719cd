#pragma once

#include <optional>

#include "gridkit/component.hpp"

namespace gridkit {

/// Two-inertia turbine + DFIG + back-to-back converter (GSC/RSC with
/// PI loops) + DC link, with an optional battery behind a buck/boost
/// DC/DC converter. 18 states; battery rows are frozen at zero and the
/// DC/DC current is zero when the battery is absent.
struct WindFarmParams {
  // turbine
  double J_l = 1.95e4;
  double J_r = 0.138;
  double B_l = 9.87;
  double B_r = 0.001;
  double K_c = 508.9;
  double d_c = 337.76;
  double N_g = 90.0;
  double omega_m_base = 60.0 * kPi;  // mechanical synchronous frequency (rad/s)
  double P_a = 2.45e-5;              // aerodynamic power; backfilled by initialize()
  // DFIG
  double X_m = 197.64;
  double X_ls = 4.620;
  double X_lr = 4.976;
  double R_s = 0.244;
  double R_r = 0.274;
  double gamma_w = 20.0;  // turbine count in the farm
  // GSC and its controller
  double L_G = 633.46;
  double R_G = 0.05;
  double K_P_dG = 0.1;
  double K_I_dG = 1e-4;
  double K_P_qG = 0.01;
  double K_I_qG = 0.001;
  double tau_G = 0.1;
  // RSC and its controller
  double K_P_dR = 0.01;
  double K_P_qR = 0.1;
  double kappa_P_dR = 5.0;
  double kappa_P_qR = 5.0;
  double kappa_I_dR = 1.0;
  double kappa_I_qR = 1.0;
  // DC link
  double C_dc = 448.7;
  double G_sw = 1.2e-5;
  // DC/DC converter and battery
  double S = 2.0;
  double C_b = 8.97e3;
  double G_b = 1.2e-5;
  double R_b = 0.21;
  double L_b = 79.1;
  bool battery = false;

  double X_s() const { return X_m + X_ls; }
  double X_r() const { return X_m + X_lr; }
  double beta() const { return X_s() * X_r() - X_m * X_m; }
  void validate() const;
};

struct WindAlpha {
  double v_dc_star = 2.03;
  double Q_r_star = 0.001;
  double Vmag_star = 1.0;     // RSC voltage-loop setpoint
  double omega_r_star = 1.0;  // RSC speed-loop setpoint
};

/// Extra initialization choices: the rotor-converter power split and the
/// pinned equilibrium rotor speed.
struct WindInitOptions {
  std::optional<double> P_r_star;   // if set, v_dc* is solved instead
  std::optional<double> Q_r_star;   // defaults to the alpha preset
  std::optional<double> v_dc_star;  // defaults to the alpha preset
  double omega_r = 1.0;             // equilibrium high-speed shaft speed (pu)
  double tol = 1e-12;
  int max_iter = 60;
};

/// DFIG current-dynamics matrices: di/dt = A_i(w_r) i + G_i [ReV;ImV] + B_i [v_dr;v_qr],
/// with i = [i_dr, i_qr, i_ds, i_qs].
Mat dfig_A(const WindFarmParams& p, double omega_r);
Mat dfig_G(const WindFarmParams& p);
Mat dfig_B(const WindFarmParams& p);

class WindFarm : public Component {
 public:
  explicit WindFarm(WindFarmParams p = {});

  std::string kind() const override { return "wind"; }
  int n_states() const override { return 18; }
  int n_inputs() const override { return 5; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec& x, Complex V, const Vec& u) const override;
  Complex output(const Vec& x, Complex V) const override;
  Vec initialize(Complex V_star, Complex S_star) override;

  std::vector<std::pair<std::string, double>> aux_outputs(const Vec& x, Complex V,
                                                          const Vec& u) const override;
  double saturation_margin(const Vec& x, Complex V, const Vec& u) const override;

  const WindFarmParams& params() const { return params_; }
  WindFarmParams& params() { return params_; }
  const WindAlpha& alpha() const { return alpha_; }
  void set_init_options(const WindInitOptions& o) { init_opts_ = o; }

  /// Electromechanical torque X_m (i_ds i_qr - i_qs i_dr).
  double torque(const Vec& x) const;

 private:
  struct Duties {
    double m_dG, m_qG, m_dR, m_qR;   // emitted (saturated) values
    double r_dG, r_qG, r_dR, r_qR;   // raw values before saturation
  };
  Duties duties(const Vec& x, Complex V, const Vec& u) const;

  WindFarmParams params_;
  WindAlpha alpha_;
  WindInitOptions init_opts_;
};

}  // namespace gridkit
