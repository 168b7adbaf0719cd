#include "gridkit/generator.hpp"

#include <cmath>

namespace gridkit {

void GeneratorParams::validate() const {
  if (M <= 0.0) throw InputError("generator inertia must be positive");
  if (tau_do <= 0.0 || tau_e <= 0.0 || tau_pss <= 0.0 || tau_L1 <= 0.0 || tau_L2 <= 0.0 ||
      tau_L1p <= 0.0 || tau_L2p <= 0.0)
    throw InputError("generator time constants must be positive");
  if (X_dp <= 0.0) throw InputError("transient reactance must be positive");
  if (X_d < X_dp) throw InputError("X_d must be >= X_d'");
}

PssMatrices pss_matrices(const GeneratorParams& p) {
  const double k1 = (p.K_pss / (p.tau_pss * p.tau_L1)) * (1.0 - p.tau_L1p / p.tau_L1);
  const double k2 =
      (p.K_pss * p.tau_L1p / (p.tau_pss * p.tau_L1 * p.tau_L2)) * (1.0 - p.tau_L2p / p.tau_L2);
  const double kd = p.K_pss * p.tau_L1p * p.tau_L2p / (p.tau_pss * p.tau_L1 * p.tau_L2);

  PssMatrices m;
  m.A = Mat::Zero(3, 3);
  m.A(0, 0) = -1.0 / p.tau_pss;
  m.A(1, 0) = -k1;
  m.A(1, 1) = -1.0 / p.tau_L1;
  m.A(2, 0) = -k2;
  m.A(2, 1) = (1.0 / p.tau_L2) * (1.0 - p.tau_L2p / p.tau_L2);
  m.A(2, 2) = -1.0 / p.tau_L2;
  m.B = Vec(3);
  m.B << 1.0 / p.tau_pss, k1, k2;
  m.C = Vec(3);
  m.C << -kd, p.tau_L2p / p.tau_L2, 1.0;
  m.D = kd;
  return m;
}

Generator::Generator(GeneratorParams p) : params_(p) {
  params_.validate();
  pss_ = pss_matrices(params_);
  x_star_ = Vec::Zero(7);
}

const std::vector<std::string>& Generator::state_names() const {
  static const std::vector<std::string> names = {"delta", "domega", "E",     "V_fd",
                                                 "zeta1", "zeta2",  "zeta3"};
  return names;
}

Vec Generator::dynamics(const Vec& x, Complex V, const Vec& u) const {
  const double vm = std::abs(V);
  if (vm <= 0.0) throw DegenerateError("generator bus voltage magnitude is zero");
  const double va = std::arg(V);
  const double delta = x(0), domega = x(1), E = x(2), V_fd = x(3);
  const Vec zeta = x.segment(4, 3);
  const double uin = (u.size() > 0) ? u(0) : 0.0;
  const double phi = delta - va;

  const GeneratorParams& p = params_;
  const double sal = 0.5 * (1.0 / p.X_dp - 1.0 / p.X_q);

  const double v_pss = pss_.C.dot(zeta) + pss_.D * domega;
  const double V_ef = p.K_a * (alpha_.Vmag_star - vm + v_pss + uin);

  Vec dx(7);
  dx(0) = kOmegaBase * domega;
  dx(1) = (alpha_.P_m_star - p.d * domega - vm * E / p.X_dp * std::sin(phi) +
           vm * vm * sal * std::sin(2.0 * phi)) /
          p.M;
  dx(2) = (-(p.X_d / p.X_dp) * E + (p.X_d / p.X_dp - 1.0) * vm * std::cos(phi) + V_fd) / p.tau_do;
  dx(3) = (-V_fd + alpha_.V_fd_star + V_ef) / p.tau_e;
  dx.segment(4, 3) = pss_.A * zeta + pss_.B * domega;
  return dx;
}

Complex Generator::output(const Vec& x, Complex V) const {
  const double vm = std::abs(V);
  if (vm <= 0.0) throw DegenerateError("generator bus voltage magnitude is zero");
  const double va = std::arg(V);
  const double phi = x(0) - va;
  const double E = x(2);
  const GeneratorParams& p = params_;
  const double sal = 0.5 * (1.0 / p.X_dp - 1.0 / p.X_q);
  const double s = std::sin(phi), c = std::cos(phi);

  const double P = vm * E / p.X_dp * s - vm * vm * sal * std::sin(2.0 * phi);
  const double Q = vm * E / p.X_dp * c - vm * vm * (s * s / p.X_q + c * c / p.X_dp);
  return {P, Q};
}

Vec Generator::initialize(Complex V_star, Complex S_star) {
  const double vm = std::abs(V_star);
  if (vm <= 0.0) throw DegenerateError("cannot initialize generator at zero voltage");
  const double va = std::arg(V_star);
  const double P = S_star.real(), Q = S_star.imag();
  const GeneratorParams& p = params_;

  const double delta = va + std::atan(P / (Q + vm * vm / p.X_q));
  const double den =
      vm * std::sqrt(P * P * p.X_q * p.X_q + Q * Q * p.X_q * p.X_q + 2.0 * Q * vm * vm * p.X_q +
                     vm * vm * vm * vm);
  if (den == 0.0) throw DegenerateError("generator init: zero denominator in E*");
  const double E = (vm * vm * vm * vm + Q * Q * p.X_dp * p.X_q + Q * vm * vm * p.X_dp +
                    Q * vm * vm * p.X_q + P * P * p.X_dp * p.X_q) /
                   den;
  const double V_fd =
      (p.X_d / p.X_dp) * E - (p.X_d / p.X_dp - 1.0) * vm * std::cos(delta - va);

  alpha_.P_m_star = P;
  alpha_.V_fd_star = V_fd;
  alpha_.Vmag_star = vm;

  x_star_ = Vec::Zero(7);
  x_star_(0) = delta;
  x_star_(2) = E;
  x_star_(3) = V_fd;
  V_star_ = V_star;
  S_star_ = S_star;
  return x_star_;
}

ClassicalGenerator::ClassicalGenerator(ClassicalParams p) : params_(p) {
  if (params_.M <= 0.0 || params_.X_d <= 0.0) throw InputError("bad classical machine parameters");
  x_star_ = Vec::Zero(2);
}

const std::vector<std::string>& ClassicalGenerator::state_names() const {
  static const std::vector<std::string> names = {"delta", "domega"};
  return names;
}

Vec ClassicalGenerator::dynamics(const Vec& x, Complex V, const Vec&) const {
  const double vm = std::abs(V);
  if (vm <= 0.0) throw DegenerateError("classical machine bus voltage magnitude is zero");
  const double phi = x(0) - std::arg(V);
  Vec dx(2);
  dx(0) = kOmegaBase * x(1);
  dx(1) = (P_m_star_ - params_.d * x(1) - E_star_ * vm / params_.X_d * std::sin(phi)) / params_.M;
  return dx;
}

Complex ClassicalGenerator::output(const Vec& x, Complex V) const {
  const double vm = std::abs(V);
  if (vm <= 0.0) throw DegenerateError("classical machine bus voltage magnitude is zero");
  const double phi = x(0) - std::arg(V);
  const double P = E_star_ * vm / params_.X_d * std::sin(phi);
  const double Q = E_star_ * vm / params_.X_d * std::cos(phi) - vm * vm;
  return {P, Q};
}

Vec ClassicalGenerator::initialize(Complex V_star, Complex S_star) {
  const double vm = std::abs(V_star);
  if (vm <= 0.0) throw DegenerateError("cannot initialize classical machine at zero voltage");
  const double P = S_star.real(), Q = S_star.imag();
  const double X = params_.X_d;

  const double delta = std::arg(V_star) + std::atan(P / (Q + vm * vm / X));
  E_star_ =
      std::sqrt(P * P * X * X + Q * Q * X * X + 2.0 * Q * vm * vm * X + vm * vm * vm * vm) / vm;
  P_m_star_ = P;

  x_star_ = Vec::Zero(2);
  x_star_(0) = delta;
  V_star_ = V_star;
  S_star_ = S_star;
  return x_star_;
}

}  // namespace gridkit
