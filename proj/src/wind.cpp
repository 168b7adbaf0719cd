#include "gridkit/wind.hpp"

#include <cmath>

namespace gridkit {

namespace {
constexpr double kVdcGuard = 1e-6;

// indices into the 18-state vector
enum : int {
  W_OMEGA_L = 0,
  W_OMEGA_R,
  W_THETA_T,
  W_IDR,
  W_IQR,
  W_IDS,
  W_IQS,
  W_IDG,
  W_IQG,
  W_CHI_DG,
  W_CHI_QG,
  W_ZETA_DG,
  W_ZETA_QG,
  W_CHI_DR,
  W_CHI_QR,
  W_VDC,
  W_VB,
  W_IDCP,
};

// Solves [Re, Im; Im, -Re] w = rhs for w; the matrix is |V|^2 times its own inverse.
Eigen::Vector2d dq_solve(Complex V, double rhs_p, double rhs_q) {
  const double n2 = std::norm(V);
  Eigen::Vector2d w;
  w(0) = (V.real() * rhs_p + V.imag() * rhs_q) / n2;
  w(1) = (V.imag() * rhs_p - V.real() * rhs_q) / n2;
  return w;
}
}  // namespace

void WindFarmParams::validate() const {
  if (J_l <= 0.0 || J_r <= 0.0 || C_dc <= 0.0 || C_b <= 0.0 || L_G <= 0.0 || L_b <= 0.0)
    throw InputError("wind farm inertias/capacitances/inductances must be positive");
  if (gamma_w < 1.0) throw InputError("wind farm turbine count must be >= 1");
  if (beta() == 0.0) throw InputError("singular DFIG reactance combination");
}

Mat dfig_A(const WindFarmParams& p, double w) {
  const double Xs = p.X_s(), Xr = p.X_r(), Xm = p.X_m, b = p.beta();
  Mat A(4, 4);
  A << -p.R_r * Xs, b - w * Xs * Xr, p.R_s * Xm, -w * Xs * Xm,
      -b + w * Xs * Xr, -p.R_r * Xs, w * Xs * Xm, p.R_s * Xm,
      p.R_r * Xm, w * Xr * Xm, -p.R_s * Xr, b + w * Xm * Xm,
      -w * Xr * Xm, p.R_r * Xm, -b - w * Xm * Xm, -p.R_s * Xr;
  return A / b;
}

Mat dfig_G(const WindFarmParams& p) {
  Mat G(4, 2);
  G << p.X_m, 0.0, 0.0, p.X_m, -p.X_r(), 0.0, 0.0, -p.X_r();
  return G / p.beta();
}

Mat dfig_B(const WindFarmParams& p) {
  Mat B(4, 2);
  B << -p.X_s(), 0.0, 0.0, -p.X_s(), p.X_m, 0.0, 0.0, p.X_m;
  return B / p.beta();
}

WindFarm::WindFarm(WindFarmParams p) : params_(p) {
  params_.validate();
  x_star_ = Vec::Zero(18);
}

const std::vector<std::string>& WindFarm::state_names() const {
  static const std::vector<std::string> names = {
      "omega_l", "omega_r", "theta_T", "i_dr",   "i_qr",    "i_ds",   "i_qs",   "i_dG", "i_qG",
      "chi_dG",  "chi_qG",  "zeta_dG", "zeta_qG", "chi_dR", "chi_qR", "v_dc",  "v_b",  "i_dcp"};
  return names;
}

double WindFarm::torque(const Vec& x) const {
  return params_.X_m * (x(W_IDS) * x(W_IQR) - x(W_IQS) * x(W_IDR));
}

WindFarm::Duties WindFarm::duties(const Vec& x, Complex V, const Vec& u) const {
  const WindFarmParams& p = params_;
  const double v_dc = x(W_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("wind farm DC-link voltage collapsed");
  const double vm = std::abs(V);

  // GSC outer loop (DC-voltage error as setpoint minus measurement)
  const double e_dc = alpha_.v_dc_star - v_dc;
  const double i_ref_dG = p.K_P_dG * e_dc + x(W_ZETA_DG);
  const double Q_r = p.gamma_w * (V.imag() * x(W_IDG) - V.real() * x(W_IQG));
  const double e_qr = Q_r - alpha_.Q_r_star;
  const double i_ref_qG = p.K_P_qG * e_qr + x(W_ZETA_QG);

  // RSC outer loop
  const double i_ref_dr = p.K_P_dR * (vm - alpha_.Vmag_star);
  const double i_ref_qr = p.K_P_qR * (x(W_OMEGA_R) - alpha_.omega_r_star);

  Duties d;
  d.r_dG = (2.0 / v_dc) * (V.real() + p.L_G * x(W_IQG) - p.R_G * x(W_CHI_DG) -
                           p.L_G / (kOmegaBase * p.tau_G) * (i_ref_dG - x(W_IDG)) + u(0));
  d.r_qG = (2.0 / v_dc) * (V.imag() - p.L_G * x(W_IDG) - p.R_G * x(W_CHI_QG) -
                           p.L_G / (kOmegaBase * p.tau_G) * (i_ref_qG - x(W_IQG)) + u(1));
  d.r_dR = (2.0 / v_dc) * (p.kappa_P_dR * (x(W_IDR) - i_ref_dr) + x(W_CHI_DR) + u(2));
  d.r_qR = (2.0 / v_dc) * (p.kappa_P_qR * (x(W_IQR) - i_ref_qr) + x(W_CHI_QR) + u(3));
  d.m_dG = saturate(d.r_dG);
  d.m_qG = saturate(d.r_qG);
  d.m_dR = saturate(d.r_dR);
  d.m_qR = saturate(d.r_qR);
  return d;
}

Vec WindFarm::dynamics(const Vec& x, Complex V, const Vec& u) const {
  const WindFarmParams& p = params_;
  const double v_dc = x(W_VDC);
  if (v_dc <= kVdcGuard) throw DegenerateError("wind farm DC-link voltage collapsed");
  if (x(W_OMEGA_L) == 0.0) throw DegenerateError("wind turbine low-speed shaft at standstill");
  const double vm = std::abs(V);

  const Duties d = duties(x, V, u);
  const double v_dr = 0.5 * d.m_dR * v_dc;
  const double v_qr = 0.5 * d.m_qR * v_dc;

  Vec dx = Vec::Zero(18);

  // two-inertia turbine
  const double T = torque(x);
  dx(W_OMEGA_L) = (-(p.d_c + p.B_l) * x(W_OMEGA_L) + p.d_c / p.N_g * x(W_OMEGA_R) -
                   p.K_c * x(W_THETA_T) + p.P_a / x(W_OMEGA_L)) /
                  p.J_l;
  dx(W_OMEGA_R) = (p.d_c / p.N_g * x(W_OMEGA_L) -
                   (p.d_c / (p.N_g * p.N_g) + p.B_r) * x(W_OMEGA_R) +
                   p.K_c / p.N_g * x(W_THETA_T) - T) /
                  p.J_r;
  dx(W_THETA_T) = p.omega_m_base * (x(W_OMEGA_L) - x(W_OMEGA_R) / p.N_g);

  // DFIG currents
  Eigen::Vector4d i = x.segment<4>(W_IDR);
  Eigen::Vector2d vri(V.real(), V.imag());
  Eigen::Vector2d vr(v_dr, v_qr);
  dx.segment<4>(W_IDR) = dfig_A(p, x(W_OMEGA_R)) * i + dfig_G(p) * vri + dfig_B(p) * vr;

  // GSC currents
  dx(W_IDG) = (kOmegaBase / p.L_G) *
              (-p.R_G * x(W_IDG) + p.L_G * x(W_IQG) + V.real() - 0.5 * d.m_dG * v_dc);
  dx(W_IQG) = (kOmegaBase / p.L_G) *
              (-p.R_G * x(W_IQG) - p.L_G * x(W_IDG) + V.imag() - 0.5 * d.m_qG * v_dc);

  // GSC inner/outer controller states
  const double e_dc = alpha_.v_dc_star - v_dc;
  const double i_ref_dG = p.K_P_dG * e_dc + x(W_ZETA_DG);
  const double Q_r = p.gamma_w * (V.imag() * x(W_IDG) - V.real() * x(W_IQG));
  const double e_qr = Q_r - alpha_.Q_r_star;
  const double i_ref_qG = p.K_P_qG * e_qr + x(W_ZETA_QG);
  dx(W_CHI_DG) = (i_ref_dG - x(W_IDG)) / p.tau_G;
  dx(W_CHI_QG) = (i_ref_qG - x(W_IQG)) / p.tau_G;
  dx(W_ZETA_DG) = p.K_I_dG * e_dc;
  dx(W_ZETA_QG) = p.K_I_qG * e_qr;

  // RSC inner controller states
  const double i_ref_dr = p.K_P_dR * (vm - alpha_.Vmag_star);
  const double i_ref_qr = p.K_P_qR * (x(W_OMEGA_R) - alpha_.omega_r_star);
  dx(W_CHI_DR) = p.kappa_I_dR * (x(W_IDR) - i_ref_dr);
  dx(W_CHI_QR) = p.kappa_I_qR * (x(W_IQR) - i_ref_qr);

  // DC/DC converter and battery
  const double pe = std::max(p.S + u(4), 0.0);
  double i_dc = 0.0;
  if (p.battery) {
    i_dc = pe * x(W_IDCP);
    const double v_dcp = pe * v_dc;
    dx(W_VB) = (kOmegaBase / p.C_b) * (-x(W_IDCP) - p.G_b * x(W_VB));
    dx(W_IDCP) = (kOmegaBase / p.L_b) * (x(W_VB) - p.R_b * x(W_IDCP) - v_dcp);
  }

  // DC link
  dx(W_VDC) = (kOmegaBase / p.C_dc) *
              ((V.real() * x(W_IDG) + V.imag() * x(W_IQG) + v_dr * x(W_IDR) + v_qr * x(W_IQR) -
                p.R_G * (x(W_IDG) * x(W_IDG) + x(W_IQG) * x(W_IQG))) /
                   (2.0 * v_dc) -
               p.G_sw * v_dc + 0.5 * i_dc);
  return dx;
}

Complex WindFarm::output(const Vec& x, Complex V) const {
  const double g = params_.gamma_w;
  const double P_s = g * (V.real() * x(W_IDS) + V.imag() * x(W_IQS));
  const double Q_s = g * (V.imag() * x(W_IDS) - V.real() * x(W_IQS));
  const double P_r = g * (V.real() * x(W_IDG) + V.imag() * x(W_IQG));
  const double Q_r = g * (V.imag() * x(W_IDG) - V.real() * x(W_IQG));
  return {P_s - P_r, Q_s - Q_r};
}

std::vector<std::pair<std::string, double>> WindFarm::aux_outputs(const Vec& x, Complex V,
                                                                  const Vec& u) const {
  const Duties d = duties(x, V, u);
  return {{"m_dG", d.m_dG}, {"m_qG", d.m_qG}, {"m_dR", d.m_dR}, {"m_qR", d.m_qR}};
}

double WindFarm::saturation_margin(const Vec& x, Complex V, const Vec& u) const {
  const Duties d = duties(x, V, u);
  double margin = 1.0 - std::max(std::max(std::abs(d.r_dG), std::abs(d.r_qG)),
                                 std::max(std::abs(d.r_dR), std::abs(d.r_qR)));
  // the buck/boost clamp p(.) kinks at zero
  margin = std::min(margin, params_.S + u(4));
  return margin;
}

Vec WindFarm::initialize(Complex V_star, Complex S_star) {
  const WindFarmParams& p = params_;
  const double vm = std::abs(V_star);
  if (vm <= 0.0) throw DegenerateError("cannot initialize wind farm at zero voltage");
  const double P = S_star.real(), Q = S_star.imag();
  const double w_r = init_opts_.omega_r;
  const double Q_r_star = init_opts_.Q_r_star.value_or(alpha_.Q_r_star);
  alpha_.v_dc_star = init_opts_.v_dc_star.value_or(alpha_.v_dc_star);
  const bool solve_pr = !init_opts_.P_r_star.has_value();

  const Mat Ai = dfig_A(p, w_r);
  const Mat Gi = dfig_G(p);
  const Mat Bi = dfig_B(p);
  const Eigen::Vector2d vri(V_star.real(), V_star.imag());

  // Unknowns: (i_dr, i_qr, v_dr, v_qr, P_r or v_dc). Residuals: the four DFIG
  // steady-state equations and the DC-link power balance.
  auto residual = [&](const Eigen::Matrix<double, 5, 1>& z, Eigen::Matrix<double, 5, 1>& r) {
    const double P_r = solve_pr ? z(4) : *init_opts_.P_r_star;
    const double v_dc = solve_pr ? alpha_.v_dc_star : z(4);
    if (v_dc <= kVdcGuard) return false;
    const Eigen::Vector2d i_s = dq_solve(V_star, (P + P_r) / p.gamma_w, (Q + Q_r_star) / p.gamma_w);
    const Eigen::Vector2d i_G = dq_solve(V_star, P_r / p.gamma_w, Q_r_star / p.gamma_w);
    Eigen::Vector4d i(z(0), z(1), i_s(0), i_s(1));
    r.head<4>() = Ai * i + Gi * vri + Bi * Eigen::Vector2d(z(2), z(3));

    double i_dc = 0.0;
    if (p.battery) {
      const double v_b = p.S * v_dc / (1.0 + p.R_b * p.G_b);
      i_dc = p.S * (-p.G_b * v_b);
    }
    r(4) = V_star.real() * i_G(0) + V_star.imag() * i_G(1) + z(2) * z(0) + z(3) * z(1) -
           p.R_G * (i_G(0) * i_G(0) + i_G(1) * i_G(1)) - 2.0 * p.G_sw * v_dc * v_dc +
           v_dc * i_dc;
    return true;
  };

  // analytic warm start: rotor circuit solved for the stator currents at P_r = 0
  Eigen::Matrix<double, 5, 1> z;
  {
    const double P_r0 = solve_pr ? 0.0 : *init_opts_.P_r_star;
    const Eigen::Vector2d i_s0 =
        dq_solve(V_star, (P + P_r0) / p.gamma_w, (Q + Q_r_star) / p.gamma_w);
    Mat M(4, 4);
    M.block<4, 2>(0, 0) = Ai.block<4, 2>(0, 0);
    M.block<4, 2>(0, 2) = Bi;
    const Eigen::Vector4d rhs = -(Ai.block<4, 2>(0, 2) * i_s0 + Gi * vri);
    z.head<4>() = M.fullPivLu().solve(rhs);
    z(4) = solve_pr ? P_r0 : alpha_.v_dc_star;
  }

  Eigen::Matrix<double, 5, 1> r;
  if (!residual(z, r)) throw NoConvergenceError("wind init: bad starting point", 0.0);
  double rn = r.norm();
  int it = 0;
  while (rn > init_opts_.tol && it < init_opts_.max_iter) {
    Eigen::Matrix<double, 5, 5> J;
    Eigen::Matrix<double, 5, 1> rp, rm;
    for (int c = 0; c < 5; ++c) {
      const double h = 1e-7 * std::max(1.0, std::abs(z(c)));
      auto zp = z, zm = z;
      zp(c) += h;
      zm(c) -= h;
      if (!residual(zp, rp) || !residual(zm, rm))
        throw NoConvergenceError("wind init: residual evaluation failed", rn);
      J.col(c) = (rp - rm) / (2.0 * h);
    }
    const Eigen::Matrix<double, 5, 1> step = J.fullPivLu().solve(r);
    double lambda = 1.0;
    bool accepted = false;
    for (int halve = 0; halve < 40; ++halve) {
      Eigen::Matrix<double, 5, 1> zt = z - lambda * step;
      if (residual(zt, rp) && rp.norm() < rn) {
        z = zt;
        r = rp;
        rn = rp.norm();
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) throw NoConvergenceError("wind init: damped Newton stalled", rn);
    ++it;
  }
  if (rn > init_opts_.tol) throw NoConvergenceError("wind init: Newton did not converge", rn);

  const double P_r = solve_pr ? z(4) : *init_opts_.P_r_star;
  const double v_dc = solve_pr ? alpha_.v_dc_star : z(4);
  const Eigen::Vector2d i_s = dq_solve(V_star, (P + P_r) / p.gamma_w, (Q + Q_r_star) / p.gamma_w);
  const Eigen::Vector2d i_G = dq_solve(V_star, P_r / p.gamma_w, Q_r_star / p.gamma_w);

  Vec x = Vec::Zero(18);
  x(W_OMEGA_L) = w_r / p.N_g;
  x(W_OMEGA_R) = w_r;
  x(W_IDR) = z(0);
  x(W_IQR) = z(1);
  x(W_IDS) = i_s(0);
  x(W_IQS) = i_s(1);
  x(W_IDG) = i_G(0);
  x(W_IQG) = i_G(1);
  x(W_CHI_DG) = i_G(0);
  x(W_CHI_QG) = i_G(1);
  x(W_ZETA_DG) = i_G(0);
  x(W_ZETA_QG) = i_G(1);
  x(W_CHI_DR) = z(2);
  x(W_CHI_QR) = z(3);
  x(W_VDC) = v_dc;

  const double T = p.X_m * (x(W_IDS) * x(W_IQR) - x(W_IQS) * x(W_IDR));
  x(W_THETA_T) = p.N_g * (T + p.B_r * w_r) / p.K_c;
  if (p.battery) {
    x(W_VB) = p.S * v_dc / (1.0 + p.R_b * p.G_b);
    x(W_IDCP) = -p.G_b * x(W_VB);
  }

  // torque balance fixes the aerodynamic power consistent with the dispatch
  params_.P_a = x(W_OMEGA_L) * (p.K_c * x(W_THETA_T) + p.B_l * x(W_OMEGA_L));

  alpha_.v_dc_star = v_dc;
  alpha_.Q_r_star = Q_r_star;
  alpha_.Vmag_star = vm - z(0) / p.K_P_dR;
  alpha_.omega_r_star = w_r - z(1) / p.K_P_qR;

  const Vec dx = dynamics(x, V_star, Vec::Zero(5));
  if (dx.cwiseAbs().maxCoeff() > 1e-9)
    throw NoConvergenceError("wind init: equilibrium residual check failed",
                             dx.cwiseAbs().maxCoeff());

  x_star_ = x;
  V_star_ = V_star;
  S_star_ = S_star;
  return x_star_;
}

}  // namespace gridkit
