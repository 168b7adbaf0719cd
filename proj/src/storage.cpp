#include "gridkit/storage.hpp"

#include <cmath>

namespace gridkit {

namespace {
constexpr double kVdcGuard = 1e-6;
enum : int { E_ID = 0, E_IQ, E_CHI_D, E_CHI_Q, E_ZETA_D, E_ZETA_Q, E_VDC, E_VB, E_IDCP };
}  // namespace

void StorageParams::validate() const {
  if (L_ac <= 0.0 || C_dc <= 0.0 || C_b <= 0.0 || L_b <= 0.0 || tau_ac <= 0.0)
    throw InputError("storage constants must be positive");
}

Storage::Storage(StorageParams p) : params_(p) {
  params_.validate();
  x_star_ = Vec::Zero(9);
  alpha_.S = params_.S;
}

const std::vector<std::string>& Storage::state_names() const {
  static const std::vector<std::string> names = {"i_d",    "i_q", "chi_d", "chi_q", "zeta_d",
                                                 "zeta_q", "v_dc", "v_b",  "i_dcp"};
  return names;
}

Storage::Duties Storage::duties(const Vec& x, Complex V, const Vec& u) const {
  const StorageParams& p = params_;
  const double v_dc = x(E_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("storage DC-link voltage collapsed");

  const Complex s = output(x, V);
  const double e_p = alpha_.P_star - s.real();
  const double e_q = alpha_.Q_star - s.imag();
  const double i_ref_d = p.K_P_d * e_p + x(E_ZETA_D);
  const double i_ref_q = p.K_P_q * e_q + x(E_ZETA_Q);

  Duties d;
  d.r_d = (2.0 / v_dc) * (V.real() + p.L_ac * x(E_IQ) - p.R_ac * x(E_CHI_D) -
                          p.L_ac / (kOmegaBase * p.tau_ac) * (i_ref_d - x(E_ID))) +
          u(0);
  d.r_q = (2.0 / v_dc) * (V.imag() - p.L_ac * x(E_ID) - p.R_ac * x(E_CHI_Q) -
                          p.L_ac / (kOmegaBase * p.tau_ac) * (i_ref_q - x(E_IQ))) +
          u(1);
  d.m_d = saturate(d.r_d);
  d.m_q = saturate(d.r_q);
  return d;
}

Vec Storage::dynamics(const Vec& x, Complex V, const Vec& u) const {
  const StorageParams& p = params_;
  const double v_dc = x(E_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("storage DC-link voltage collapsed");

  const Duties d = duties(x, V, u);
  const Complex s = output(x, V);
  const double e_p = alpha_.P_star - s.real();
  const double e_q = alpha_.Q_star - s.imag();
  const double i_ref_d = p.K_P_d * e_p + x(E_ZETA_D);
  const double i_ref_q = p.K_P_q * e_q + x(E_ZETA_Q);

  const double S_gain = alpha_.S;
  const double i_dc = S_gain * x(E_IDCP);
  const double v_dcp = S_gain * v_dc;

  Vec dx(9);
  dx(E_ID) =
      (kOmegaBase / p.L_ac) * (-p.R_ac * x(E_ID) + p.L_ac * x(E_IQ) + V.real() - 0.5 * d.m_d * v_dc);
  dx(E_IQ) =
      (kOmegaBase / p.L_ac) * (-p.R_ac * x(E_IQ) - p.L_ac * x(E_ID) + V.imag() - 0.5 * d.m_q * v_dc);
  dx(E_CHI_D) = (i_ref_d - x(E_ID)) / p.tau_ac;
  dx(E_CHI_Q) = (i_ref_q - x(E_IQ)) / p.tau_ac;
  dx(E_ZETA_D) = p.K_I_d * e_p;
  dx(E_ZETA_Q) = p.K_I_q * e_q;
  dx(E_VDC) = (kOmegaBase / p.C_dc) *
              ((V.real() * x(E_ID) + V.imag() * x(E_IQ) + v_dc * i_dc -
                p.R_ac * (x(E_ID) * x(E_ID) + x(E_IQ) * x(E_IQ))) /
                   (2.0 * v_dc) -
               p.G_sw * v_dc);
  dx(E_VB) = (kOmegaBase / p.C_b) * (-x(E_IDCP) - p.G_b * x(E_VB));
  dx(E_IDCP) = (kOmegaBase / p.L_b) * (x(E_VB) - p.R_b * x(E_IDCP) - v_dcp);
  return dx;
}

Complex Storage::output(const Vec& x, Complex V) const {
  const double P = -(V.real() * x(E_ID) + V.imag() * x(E_IQ));
  const double Q = -(V.imag() * x(E_ID) - V.real() * x(E_IQ));
  return {P, Q};
}

std::vector<std::pair<std::string, double>> Storage::aux_outputs(const Vec& x, Complex V,
                                                                 const Vec& u) const {
  const Duties d = duties(x, V, u);
  return {{"m_d", d.m_d}, {"m_q", d.m_q}};
}

double Storage::saturation_margin(const Vec& x, Complex V, const Vec& u) const {
  const Duties d = duties(x, V, u);
  return 1.0 - std::max(std::abs(d.r_d), std::abs(d.r_q));
}

Vec Storage::initialize(Complex V_star, Complex S_star) {
  const StorageParams& p = params_;
  const double n2 = std::norm(V_star);
  if (n2 <= 0.0) throw DegenerateError("cannot initialize storage at zero voltage");
  const double P = S_star.real(), Q = S_star.imag();

  const double i_d = (-V_star.real() * P - V_star.imag() * Q) / n2;
  const double i_q = (-V_star.imag() * P + V_star.real() * Q) / n2;

  const double radicand = -(P + p.R_ac * (i_d * i_d + i_q * i_q)) / (2.0 * p.G_sw);
  if (radicand <= 0.0)
    throw InfeasibleError(
        "storage init: charge-neutral equilibrium needs a dispatch covering the converter losses");
  const double v_dc = std::sqrt(radicand);

  alpha_.P_star = P;
  alpha_.Q_star = Q;
  alpha_.S = 0.0;

  Vec x = Vec::Zero(9);
  x(E_ID) = i_d;
  x(E_IQ) = i_q;
  x(E_CHI_D) = i_d;
  x(E_CHI_Q) = i_q;
  x(E_ZETA_D) = i_d;
  x(E_ZETA_Q) = i_q;
  x(E_VDC) = v_dc;
  x_star_ = x;
  V_star_ = V_star;
  S_star_ = S_star;
  return x_star_;
}

}  // namespace gridkit
