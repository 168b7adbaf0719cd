#include "gridkit/solar.hpp"

#include <cmath>

namespace gridkit {

namespace {
constexpr double kVdcGuard = 1e-6;
enum : int { S_ID = 0, S_IQ, S_CHI_D, S_CHI_Q, S_ZETA_D, S_ZETA_Q, S_VDC };
}  // namespace

void SolarFarmParams::validate() const {
  if (R_PV <= 0.0) throw InputError("PV array series resistance must be positive");
  if (gamma_pv < 1.0) throw InputError("PV generator count must be >= 1");
  if (L_ac <= 0.0 || C_dc <= 0.0 || tau_ac <= 0.0)
    throw InputError("solar converter constants must be positive");
}

SolarFarm::SolarFarm(SolarFarmParams p) : params_(p) {
  params_.validate();
  x_star_ = Vec::Zero(7);
  alpha_.S = params_.S;
}

const std::vector<std::string>& SolarFarm::state_names() const {
  static const std::vector<std::string> names = {"i_d",    "i_q",    "chi_d", "chi_q",
                                                 "zeta_d", "zeta_q", "v_dc"};
  return names;
}

SolarFarm::Duties SolarFarm::duties(const Vec& x, Complex V, const Vec& u) const {
  const SolarFarmParams& p = params_;
  const double v_dc = x(S_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("solar farm DC-link voltage collapsed");

  const Complex s = output(x, V);
  const double e_p = alpha_.P_star - s.real();
  const double e_q = alpha_.Q_star - s.imag();
  const double i_ref_d = p.K_P_d * e_p + x(S_ZETA_D);
  const double i_ref_q = p.K_P_q * e_q + x(S_ZETA_Q);

  Duties d;
  d.r_d = (2.0 / v_dc) * (V.real() + p.L_ac * x(S_IQ) - p.R_ac * x(S_CHI_D) -
                          p.L_ac / (kOmegaBase * p.tau_ac) * (i_ref_d - x(S_ID))) +
          u(0);
  d.r_q = (2.0 / v_dc) * (V.imag() - p.L_ac * x(S_ID) - p.R_ac * x(S_CHI_Q) -
                          p.L_ac / (kOmegaBase * p.tau_ac) * (i_ref_q - x(S_IQ))) +
          u(1);
  d.m_d = saturate(d.r_d);
  d.m_q = saturate(d.r_q);
  return d;
}

Vec SolarFarm::dynamics(const Vec& x, Complex V, const Vec& u) const {
  const SolarFarmParams& p = params_;
  const double v_dc = x(S_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("solar farm DC-link voltage collapsed");

  const Duties d = duties(x, V, u);
  const Complex s = output(x, V);
  const double e_p = alpha_.P_star - s.real();
  const double e_q = alpha_.Q_star - s.imag();
  const double i_ref_d = p.K_P_d * e_p + x(S_ZETA_D);
  const double i_ref_q = p.K_P_q * e_q + x(S_ZETA_Q);

  // PV array through the DC/DC converter
  const double S_gain = alpha_.S;
  const double i_dcp = (p.V_PV - S_gain * v_dc) / p.R_PV;
  const double i_dc = S_gain * i_dcp;

  Vec dx(7);
  dx(S_ID) =
      (kOmegaBase / p.L_ac) * (-p.R_ac * x(S_ID) + p.L_ac * x(S_IQ) + V.real() - 0.5 * d.m_d * v_dc);
  dx(S_IQ) =
      (kOmegaBase / p.L_ac) * (-p.R_ac * x(S_IQ) - p.L_ac * x(S_ID) + V.imag() - 0.5 * d.m_q * v_dc);
  dx(S_CHI_D) = (i_ref_d - x(S_ID)) / p.tau_ac;
  dx(S_CHI_Q) = (i_ref_q - x(S_IQ)) / p.tau_ac;
  dx(S_ZETA_D) = p.K_I_d * e_p;
  dx(S_ZETA_Q) = p.K_I_q * e_q;
  dx(S_VDC) = (kOmegaBase / p.C_dc) *
              ((V.real() * x(S_ID) + V.imag() * x(S_IQ) + v_dc * i_dc -
                p.R_ac * (x(S_ID) * x(S_ID) + x(S_IQ) * x(S_IQ))) /
                   (2.0 * v_dc) -
               p.G_sw * v_dc);
  return dx;
}

Complex SolarFarm::output(const Vec& x, Complex V) const {
  const double g = params_.gamma_pv;
  const double P = -g * (V.real() * x(S_ID) + V.imag() * x(S_IQ));
  const double Q = -g * (V.imag() * x(S_ID) - V.real() * x(S_IQ));
  return {P, Q};
}

std::vector<std::pair<std::string, double>> SolarFarm::aux_outputs(const Vec& x, Complex V,
                                                                   const Vec& u) const {
  const Duties d = duties(x, V, u);
  return {{"m_d", d.m_d}, {"m_q", d.m_q}};
}

double SolarFarm::saturation_margin(const Vec& x, Complex V, const Vec& u) const {
  const Duties d = duties(x, V, u);
  return 1.0 - std::max(std::abs(d.r_d), std::abs(d.r_q));
}

Vec SolarFarm::initialize(Complex V_star, Complex S_star) {
  const SolarFarmParams& p = params_;
  const double n2 = std::norm(V_star);
  if (n2 <= 0.0) throw DegenerateError("cannot initialize solar farm at zero voltage");
  const double P = S_star.real(), Q = S_star.imag();

  const double v_mpp = init_opts_.v_mpp.value_or(p.V_PV / 2.0);
  const double i_mpp = init_opts_.i_mpp.value_or(p.V_PV / (2.0 * p.R_PV));

  const double i_d = (-V_star.real() * (P / p.gamma_pv) - V_star.imag() * (Q / p.gamma_pv)) / n2;
  const double i_q = (-V_star.imag() * (P / p.gamma_pv) + V_star.real() * (Q / p.gamma_pv)) / n2;

  const double radicand =
      (v_mpp * i_mpp - (P / p.gamma_pv + p.R_ac * (i_d * i_d + i_q * i_q))) / (2.0 * p.G_sw);
  if (radicand <= 0.0)
    throw InfeasibleError("solar init: converter losses exceed the MPP power");
  const double v_dc = std::sqrt(radicand);

  alpha_.P_star = P;
  alpha_.Q_star = Q;
  alpha_.S = v_mpp / v_dc;
  params_.S = alpha_.S;

  Vec x(7);
  x << i_d, i_q, i_d, i_q, i_d, i_q, v_dc;
  x_star_ = x;
  V_star_ = V_star;
  S_star_ = S_star;
  return x_star_;
}

}  // namespace gridkit
