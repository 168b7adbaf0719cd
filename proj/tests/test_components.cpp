#include <doctest.h>

#include <cmath>
#include <random>

#include "gridkit/generator.hpp"
#include "gridkit/load.hpp"
#include "gridkit/solar.hpp"
#include "gridkit/storage.hpp"
#include "gridkit/wind.hpp"

using namespace gridkit;

TEST_CASE("state dimensions per component kind") {
  CHECK(Generator().n_states() == 7);
  CHECK(WindFarm().n_states() == 18);
  CHECK(SolarFarm().n_states() == 7);
  CHECK(Storage().n_states() == 9);
  CHECK(Load().n_states() == 0);
  CHECK(NonUnit().n_states() == 0);
}

TEST_CASE("PSS realization constants") {
  GeneratorParams p;
  const PssMatrices m = pss_matrices(p);
  // K t'1 t'2 / (tp t1 t2) = 150*0.07*0.07/(10*0.02*0.02)
  CHECK(m.D == doctest::Approx(183.75).epsilon(1e-12));
  // feedthrough for domega = 0.01
  Vec zeta = Vec::Zero(3);
  const double v = m.C.dot(zeta) + m.D * 0.01;
  CHECK(v == doctest::Approx(1.8375).epsilon(1e-12));
}

TEST_CASE("generator init closed forms") {
  Generator g;

  SUBCASE("flat unit point collapses to |V*|") {
    g.initialize(Complex(1, 0), Complex(0, 0));
    CHECK(g.x_star()(0) == doctest::Approx(0.0));
    CHECK(g.x_star()(2) == doctest::Approx(1.0));
    CHECK(g.x_star()(3) == doctest::Approx(1.0));
    const Vec dx = g.dynamics(g.x_star(), Complex(1, 0), Vec::Zero(1));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(g.output(g.x_star(), Complex(1, 0))) < 1e-12);
  }

  SUBCASE("loaded point: rotor angle from the arctan formula") {
    g.initialize(Complex(1, 0), Complex(0.5, 0.1));
    const double expected = std::atan(0.5 / (0.1 + 1.0 / 1.8));
    CHECK(g.x_star()(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.65157).epsilon(1e-4));
    const Vec dx = g.dynamics(g.x_star(), Complex(1, 0), Vec::Zero(1));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-10);
    const Complex S = g.output(g.x_star(), Complex(1, 0));
    CHECK(S.real() == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(S.imag() == doctest::Approx(0.1).epsilon(1e-10));
  }

  SUBCASE("round trip over random operating points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 25; ++k) {
      const Complex V = std::polar(0.95 + 0.1 * std::abs(U(rng)), 0.3 * U(rng));
      const Complex S(U(rng), 0.5 * U(rng));
      g.initialize(V, S);
      const Vec dx = g.dynamics(g.x_star(), V, Vec::Zero(1));
      CHECK(dx.cwiseAbs().maxCoeff() < 1e-10);
      CHECK(std::abs(g.output(g.x_star(), V) - S) < 1e-9);
    }
  }
}

TEST_CASE("saliency term vanishes when X_q equals X_d'") {
  GeneratorParams p;
  p.X_q = p.X_dp;  // 1/X_d' - 1/X_q = 0
  Generator g(p);
  g.initialize(Complex(1, 0), Complex(0.3, 0.05));
  // at delta - angle(V) = pi/2 the sin(2 phi) term would be the only asymmetry
  Vec x = g.x_star();
  x(0) = kPi / 2.0;
  const Complex S1 = g.output(x, Complex(1, 0));
  // against a direct evaluation without any saliency contribution
  const double E = x(2);
  CHECK(S1.real() == doctest::Approx(E / p.X_dp).epsilon(1e-12));
}

TEST_CASE("classical model equals one-axis model under the appendix reduction") {
  // X_d = X_q = X_d', constant field voltage
  GeneratorParams p;
  p.X_d = p.X_q = p.X_dp = 0.9;
  p.K_a = 0.0;
  Generator one_axis(p);
  const Complex V(1.0, 0.02);
  const Complex S(0.6, 0.15);
  one_axis.initialize(V, S);

  ClassicalParams cp;
  cp.M = p.M;
  cp.d = p.d;
  cp.X_d = 0.9;
  ClassicalGenerator classical(cp);
  classical.initialize(V, S);

  CHECK(classical.x_star()(0) == doctest::Approx(one_axis.x_star()(0)).epsilon(1e-10));
  CHECK(classical.E_star() == doctest::Approx(one_axis.x_star()(2)).epsilon(1e-10));
  const Vec dxc = classical.dynamics(classical.x_star(), V, Vec::Zero(0));
  CHECK(dxc.cwiseAbs().maxCoeff() < 1e-12);

  // co-simulation from a perturbed angle with V held fixed (RK4)
  Vec x1 = one_axis.x_star();
  Vec x2 = classical.x_star();
  x1(0) += 0.1;
  x2(0) += 0.1;
  const double h = 1e-3;
  auto rk4 = [&](auto&& f, Vec& x) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  for (int s = 0; s < 2000; ++s) {
    rk4([&](const Vec& x) { return one_axis.dynamics(x, V, Vec::Zero(1)); }, x1);
    rk4([&](const Vec& x) { return classical.dynamics(x, V, Vec::Zero(0)); }, x2);
  }
  CHECK(x1(0) == doctest::Approx(x2(0)).epsilon(1e-7));
  CHECK(x1(1) == doctest::Approx(x2(1)).epsilon(1e-6));

  SUBCASE("zero power angle gives zero active power") {
    Vec x = classical.x_star();
    x(0) = std::arg(V);
    const Complex out = classical.output(x, V);
    CHECK(out.real() == doctest::Approx(0.0));
    const double vm = std::abs(V);
    CHECK(out.imag() ==
          doctest::Approx(classical.E_star() * vm / cp.X_d - vm * vm).epsilon(1e-12));
  }
}

TEST_CASE("load models") {
  SUBCASE("unit impedance at unit voltage") {
    Load l = Load::impedance(Complex(1, 0));
    CHECK(l.output(Vec::Zero(0), Complex(1, 0)) == Complex(1, 0));
  }
  SUBCASE("constant power ignores voltage") {
    Load l = Load::power(Complex(-0.8, -0.2));
    CHECK(l.output(Vec::Zero(0), Complex(1, 0)) == Complex(-0.8, -0.2));
    CHECK(l.output(Vec::Zero(0), Complex(0.3, 0.4)) == Complex(-0.8, -0.2));
  }
  SUBCASE("impedance fit round trip") {
    Load l;
    const Complex V = std::polar(1.0, 0.1);
    const Complex S(-0.8, -0.2);
    l.initialize(V, S);
    CHECK(std::abs(l.output(Vec::Zero(0), V) - S) < 1e-12);
    // z = |V|^2 / conj(S)
    CHECK(std::abs(l.impedance_value() - Complex(1.0, 0.0) / std::conj(S)) < 1e-12);
  }
  SUBCASE("fit values") {
    Load l;
    l.initialize(Complex(1, 0), Complex(1, 0));
    CHECK(std::abs(l.impedance_value() - Complex(1, 0)) < 1e-14);
    l.initialize(Complex(2, 0), Complex(1, 0));
    CHECK(std::abs(l.impedance_value() - Complex(4, 0)) < 1e-14);
  }
  SUBCASE("zero power is an open circuit") {
    Load l;
    l.initialize(Complex(1, 0), Complex(0, 0));
    CHECK(l.admittance() == Complex(0, 0));
    CHECK(l.output(Vec::Zero(0), Complex(0.7, 0.1)) == Complex(0, 0));
    CHECK_THROWS_AS(l.impedance_value(), DegenerateError);
    CHECK_THROWS_AS(Load::impedance(Complex(0, 0)), DegenerateError);
  }
}

TEST_CASE("non-unit bus injects exactly zero") {
  NonUnit nu;
  CHECK(nu.output(Vec::Zero(0), Complex(0.9, -0.2)) == Complex(0, 0));
  CHECK(nu.output(Vec::Zero(0), Complex(0.9, -0.2)) == nu.output(Vec::Zero(0), Complex(0.9, -0.2)));
}

TEST_CASE("DFIG matrices against a literal transcription at omega_r = 0") {
  WindFarmParams p;
  const double Xs = p.X_m + p.X_ls, Xr = p.X_m + p.X_lr, b = Xs * Xr - p.X_m * p.X_m;
  const Mat A = dfig_A(p, 0.0);
  Mat expect(4, 4);
  expect << -p.R_r * Xs, b, p.R_s * p.X_m, 0.0,
      -b, -p.R_r * Xs, 0.0, p.R_s * p.X_m,
      p.R_r * p.X_m, 0.0, -p.R_s * Xr, b,
      0.0, p.R_r * p.X_m, -b, -p.R_s * Xr;
  expect /= b;
  CHECK((A - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("wind farm equilibrium and structure") {
  WindFarmParams p;
  p.gamma_w = 20.0;
  WindFarm w(p);
  const Complex V = std::polar(1.0, 0.05);
  const Complex S(0.4, 0.08);  // P* = gamma * 0.02
  w.initialize(V, S);

  SUBCASE("residual at the produced equilibrium") {
    const Vec dx = w.dynamics(w.x_star(), V, Vec::Zero(5));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(w.output(w.x_star(), V) - S) < 1e-9);
  }

  SUBCASE("steady torsion forces omega_l = omega_r / N_g") {
    CHECK(w.x_star()(0) == doctest::Approx(w.x_star()(1) / p.N_g).epsilon(1e-14));
  }

  SUBCASE("torque identity at an arbitrary state") {
    Vec x = w.x_star();
    x(3) = 0.3;
    x(4) = -0.2;
    x(5) = 1.1;
    x(6) = 0.4;
    CHECK(w.torque(x) == doctest::Approx(p.X_m * (1.1 * (-0.2) - 0.4 * 0.3)).epsilon(1e-14));
  }

  SUBCASE("duty cycles clamp at +-1") {
    Vec x = w.x_star();
    x(13) = 50.0;  // chi_dR pushes the RSC duty far beyond the limit
    const auto aux = w.aux_outputs(x, V, Vec::Zero(5));
    double m_dR = 0.0;
    for (const auto& kv : aux)
      if (kv.first == "m_dR") m_dR = kv.second;
    CHECK(m_dR == 1.0);
    Vec u = Vec::Zero(5);
    u(2) = -200.0;
    const auto aux2 = w.aux_outputs(x, V, u);
    for (const auto& kv : aux2)
      if (kv.first == "m_dR") CHECK(kv.second == -1.0);
  }

  SUBCASE("DC-link steady state without battery") {
    // 0 = ReV i_dG + ImV i_qG + v_dr i_dr + v_qr i_qr - R_G(i_dG^2+i_qG^2) - 2 G_sw v_dc^2
    const Vec& x = w.x_star();
    const double v_dr = x(13), v_qr = x(14);  // chi_R equals the rotor voltage at steady state
    const double lhs = V.real() * x(7) + V.imag() * x(8) + v_dr * x(3) + v_qr * x(4) -
                       p.R_G * (x(7) * x(7) + x(8) * x(8)) - 2.0 * p.G_sw * x(15) * x(15);
    CHECK(std::abs(lhs) < 1e-10);
  }

  SUBCASE("battery-attached equilibrium") {
    WindFarmParams pb = p;
    pb.battery = true;
    WindFarm wb(pb);
    wb.initialize(V, S);
    const Vec dx = wb.dynamics(wb.x_star(), V, Vec::Zero(5));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(wb.x_star()(16) > 0.0);  // battery floats at S v_dc / (1 + R_b G_b)
  }

  SUBCASE("explicit rotor power split solves the DC-link voltage") {
    WindFarm w2(p);
    WindInitOptions o;
    o.P_r_star = 0.01;
    w2.set_init_options(o);
    w2.initialize(V, S);
    const Vec dx = w2.dynamics(w2.x_star(), V, Vec::Zero(5));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("degenerate guards") {
    Vec x = w.x_star();
    x(15) = 0.0;
    CHECK_THROWS_AS(w.dynamics(x, V, Vec::Zero(5)), DegenerateError);
    Vec x2 = w.x_star();
    x2(0) = 0.0;
    CHECK_THROWS_AS(w.dynamics(x2, V, Vec::Zero(5)), DegenerateError);
  }
}

TEST_CASE("solar farm equilibrium and constants") {
  SolarFarmParams p;
  p.gamma_pv = 20.0;
  SolarFarm s(p);
  const Complex V(1.0, 0.0);
  const Complex S(0.4, 0.0);  // 0.02 per PV generator
  s.initialize(V, S);

  SUBCASE("first block of the init formula") {
    CHECK(s.x_star()(0) == doctest::Approx(-0.02).epsilon(1e-12));
    CHECK(s.x_star()(1) == doctest::Approx(0.0));
    // zeta = chi = i
    CHECK(s.x_star()(2) == s.x_star()(0));
    CHECK(s.x_star()(4) == s.x_star()(0));
    CHECK(s.x_star()(3) == s.x_star()(1));
    CHECK(s.x_star()(5) == s.x_star()(1));
  }

  SUBCASE("table step-down gain is reproduced within 5%") {
    CHECK(std::abs(s.alpha().S - 0.144) / 0.144 < 0.05);
  }

  SUBCASE("equilibrium residual") {
    const Vec dx = s.dynamics(s.x_star(), V, Vec::Zero(2));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(s.output(s.x_star(), V) - S) < 1e-12);
  }

  SUBCASE("PV array shorted at V_PV gives zero DC/DC current") {
    // with S v_dc = V_PV the array current vanishes; check the DC-link rate
    Vec x = s.x_star();
    x(6) = p.V_PV / s.alpha().S;
    const Vec dx = s.dynamics(x, V, Vec::Zero(2));
    const double expect =
        (kOmegaBase / p.C_dc) *
        ((V.real() * x(0) + V.imag() * x(1) - p.R_ac * (x(0) * x(0) + x(1) * x(1))) /
             (2.0 * x(6)) -
         p.G_sw * x(6));
    CHECK(dx(6) == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("zero current means zero injection") {
    Vec x = s.x_star();
    x(0) = x(1) = 0.0;
    CHECK(std::abs(s.output(x, Complex(0.7, 0.3))) == 0.0);
  }

  SUBCASE("losses above MPP power are infeasible") {
    SolarFarmParams bad = p;
    bad.R_ac = 1e3;
    SolarFarm sb(bad);
    CHECK_THROWS_AS(sb.initialize(V, S), InfeasibleError);
  }
}

TEST_CASE("storage equilibrium and sign conventions") {
  StorageParams p;
  Storage e(p);
  const Complex V = std::polar(1.0, 0.02);
  const Complex S(-0.01, 0.002);  // slightly charging

  const Vec x = e.initialize(V, S);
  SUBCASE("residual") {
    const Vec dx = e.dynamics(x, V, Vec::Zero(2));
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(e.output(x, V) - S) < 1e-12);
  }
  SUBCASE("charge-neutral convention") {
    CHECK(x(7) == 0.0);  // v_b
    CHECK(x(8) == 0.0);  // i'_dc
    CHECK(e.alpha().S == 0.0);
  }
  SUBCASE("battery voltage decays in isolation") {
    Vec xb = x;
    xb(7) = 0.5;
    const Vec dx = e.dynamics(xb, V, Vec::Zero(2));
    CHECK(dx(7) < 0.0);
    CHECK(dx(7) == doctest::Approx(-(kOmegaBase / p.C_b) * p.G_b * 0.5).epsilon(1e-12));
  }
  SUBCASE("zero converter current means zero injection") {
    Vec xb = x;
    xb(0) = xb(1) = 0.0;
    CHECK(std::abs(e.output(xb, V)) == 0.0);
  }
  SUBCASE("discharging dispatch is infeasible at equilibrium") {
    Storage e2(p);
    CHECK_THROWS_AS(e2.initialize(V, Complex(0.05, 0.0)), InfeasibleError);
  }
}

TEST_CASE("emitted duty cycles stay in [-1,1] over random states") {
  WindFarmParams wp;
  WindFarm w(wp);
  w.initialize(Complex(1, 0), Complex(0.4, 0.05));
  SolarFarmParams sp;
  SolarFarm s(sp);
  s.initialize(Complex(1, 0), Complex(0.4, 0.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Vec xw = w.x_star();
    for (int i = 0; i < xw.size(); ++i) xw(i) += 2.0 * N(rng);
    xw(15) = std::abs(xw(15)) + 0.1;  // keep the DC link alive
    Vec uw(5);
    for (int i = 0; i < 5; ++i) uw(i) = 3.0 * N(rng);
    const Complex V = std::polar(0.2 + std::abs(N(rng)), N(rng));
    for (const auto& kv : w.aux_outputs(xw, V, uw)) {
      CHECK(kv.second <= 1.0);
      CHECK(kv.second >= -1.0);
    }
    Vec xs = s.x_star();
    for (int i = 0; i < xs.size(); ++i) xs(i) += 2.0 * N(rng);
    xs(6) = std::abs(xs(6)) + 0.1;
    Vec us(2);
    us << 3.0 * N(rng), 3.0 * N(rng);
    for (const auto& kv : s.aux_outputs(xs, V, us)) {
      CHECK(kv.second <= 1.0);
      CHECK(kv.second >= -1.0);
    }
  }
}
