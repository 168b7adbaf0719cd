#pragma once

#include "gridkit/component.hpp"

namespace gridkit {

/// One-axis (flux-decay) synchronous machine with exciter/AVR and a
/// speed-feedback PSS (washout plus two lead-lag stages).
struct GeneratorParams {
  double M = 30.0;       // inertia constant (s)
  double d = 0.1;        // damping coefficient
  double tau_do = 0.1;   // d-axis transient open-circuit time constant (s)
  double tau_e = 0.05;   // exciter time constant (s)
  double X_d = 1.8;
  double X_q = 1.8;
  double X_dp = 0.3;     // d-axis transient reactance
  double K_a = 20.0;     // AVR gain
  double K_pss = 150.0;
  double tau_pss = 10.0;
  double tau_L1 = 0.02;
  double tau_L1p = 0.07;
  double tau_L2 = 0.02;
  double tau_L2p = 0.07;

  void validate() const;
};

struct GeneratorAlpha {
  double P_m_star = 0.0;
  double V_fd_star = 1.0;
  double Vmag_star = 1.0;
};

/// PSS state-space realization (washout + two lead-lag stages).
struct PssMatrices {
  Mat A;  // 3x3
  Vec B;  // 3
  Vec C;  // 3 (row)
  double D = 0.0;
};
PssMatrices pss_matrices(const GeneratorParams& p);

class Generator : public Component {
 public:
  explicit Generator(GeneratorParams p = {});

  std::string kind() const override { return "generator"; }
  int n_states() const override { return 7; }
  int n_inputs() const override { return 1; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec& x, Complex V, const Vec& u) const override;
  Complex output(const Vec& x, Complex V) const override;
  Vec initialize(Complex V_star, Complex S_star) override;

  const GeneratorParams& params() const { return params_; }
  const GeneratorAlpha& alpha() const { return alpha_; }
  void set_alpha(const GeneratorAlpha& a) { alpha_ = a; }

 private:
  GeneratorParams params_;
  GeneratorAlpha alpha_;
  PssMatrices pss_;
};

/// Two-state classical machine (constant voltage behind reactance).
struct ClassicalParams {
  double M = 30.0;
  double d = 0.1;
  double X_d = 1.8;
};

class ClassicalGenerator : public Component {
 public:
  explicit ClassicalGenerator(ClassicalParams p = {});

  std::string kind() const override { return "classical"; }
  int n_states() const override { return 2; }
  int n_inputs() const override { return 0; }
  const std::vector<std::string>& state_names() const override;

  Vec dynamics(const Vec& x, Complex V, const Vec& u) const override;
  Complex output(const Vec& x, Complex V) const override;
  Vec initialize(Complex V_star, Complex S_star) override;

  double E_star() const { return E_star_; }
  double P_m_star() const { return P_m_star_; }
  void set_E_star(double e) { E_star_ = e; }
  void set_P_m_star(double pm) { P_m_star_ = pm; }
  const ClassicalParams& params() const { return params_; }

 private:
  ClassicalParams params_;
  double E_star_ = 1.0;
  double P_m_star_ = 0.0;
};

}  // namespace gridkit
