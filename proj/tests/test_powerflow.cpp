#include <doctest.h>

#include <cmath>

#include "gridkit/powerflow.hpp"

using namespace gridkit;

namespace {

NetworkModel two_bus() {
  BranchSpec br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_impedance = Complex(0.0, 0.1);
  return NetworkModel(2, {BusKind::Generator, BusKind::Load}, {br});
}

// brute-force oracle: coarse grid over (|V2|, th2) followed by box shrinking
std::pair<double, double> two_bus_oracle(const CMat& Y, double P, double Q) {
  auto err = [&](double vm, double th) {
    CVec V(2);
    V << Complex(1, 0), std::polar(vm, th);
    CVec S(2);
    const Complex I1 = Y(1, 0) * V(0) + Y(1, 1) * V(1);
    const Complex mis = std::conj(I1) * V(1) - Complex(P, Q);
    return std::abs(mis);
  };
  double vlo = 0.5, vhi = 1.2, tlo = -0.6, thi = 0.2;
  double bv = 1.0, bt = 0.0;
  for (int round = 0; round < 60; ++round) {
    double best = 1e30;
    const int m = 24;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double vm = vlo + (vhi - vlo) * i / m;
        const double th = tlo + (thi - tlo) * j / m;
        const double e = err(vm, th);
        if (e < best) {
          best = e;
          bv = vm;
          bt = th;
        }
      }
    const double dv = (vhi - vlo) / m, dt = (thi - tlo) / m;
    vlo = bv - 1.5 * dv;
    vhi = bv + 1.5 * dv;
    tlo = bt - 1.5 * dt;
    thi = bt + 1.5 * dt;
  }
  return {bv, bt};
}

}  // namespace

TEST_CASE("flat start is exact for a no-injection network") {
  NetworkModel net = two_bus();
  std::vector<BusConstraint> cons(2);
  cons[0] = {BusConstraintKind::Slack, 0, 0, 1.0, 0.0};
  cons[1] = {BusConstraintKind::PQ, 0.0, 0.0, 1.0, 0.0};
  const auto sol = solve_power_flow(net, cons);
  CHECK(sol.iterations == 0);
  CHECK(std::abs(sol.V_star(0) - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(sol.V_star(1) - Complex(1, 0)) < 1e-14);
  CHECK(sol.S_star.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-bus load case matches the brute-force oracle") {
  NetworkModel net = two_bus();
  std::vector<BusConstraint> cons(2);
  cons[0] = {BusConstraintKind::Slack, 0, 0, 1.0, 0.0};
  cons[1] = {BusConstraintKind::PQ, -0.5, 0.0, 1.0, 0.0};
  const auto sol = solve_power_flow(net, cons);

  auto [vm, th] = two_bus_oracle(net.Y(), -0.5, 0.0);
  CHECK(std::abs(std::abs(sol.V_star(1)) - vm) < 1e-8);
  CHECK(std::abs(std::arg(sol.V_star(1)) - th) < 1e-8);

  // closed form for this case: b = -P/10 = -0.05, a = (1+sqrt(1-4b^2))/2
  const double b = -0.05;
  const double a = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * b * b));
  CHECK(sol.V_star(1).real() == doctest::Approx(a).epsilon(1e-10));
  CHECK(sol.V_star(1).imag() == doctest::Approx(b).epsilon(1e-10));

  // balance invariant: generation equals load plus losses by construction
  CHECK(std::abs(sol.S_star.sum().real() -
                 ((net.Y() * sol.V_star).conjugate().cwiseProduct(sol.V_star)).sum().real()) <
        1e-12);

  // determinism
  const auto sol2 = solve_power_flow(net, cons);
  CHECK(sol2.V_star(1).real() == sol.V_star(1).real());
  CHECK(sol2.V_star(1).imag() == sol.V_star(1).imag());
  CHECK(sol2.iterations == sol.iterations);
}

TEST_CASE("infeasible load does not converge") {
  NetworkModel net = two_bus();
  std::vector<BusConstraint> cons(2);
  cons[0] = {BusConstraintKind::Slack, 0, 0, 1.0, 0.0};
  cons[1] = {BusConstraintKind::PQ, -1e6, 0.0, 1.0, 0.0};
  CHECK_THROWS_AS(solve_power_flow(net, cons), NoConvergenceError);
}

TEST_CASE("constraint assembly follows bus kinds") {
  std::vector<BranchSpec> brs = {BranchSpec::line(1, 2, 0.0, 0.1, 0.0),
                                 BranchSpec::line(2, 3, 0.0, 0.1, 0.0),
                                 BranchSpec::line(3, 4, 0.0, 0.1, 0.0),
                                 BranchSpec::line(4, 5, 0.0, 0.1, 0.0)};
  NetworkModel net(5,
                   {BusKind::Generator, BusKind::Wind, BusKind::Load, BusKind::NonUnit,
                    BusKind::Storage},
                   brs);
  std::vector<DispatchEntry> disp;
  disp.push_back({1, std::nan(""), std::nan(""), 1.02});
  DispatchEntry w;
  w.bus = 2;
  w.p = 0.6;
  w.vmag = 1.0;
  disp.push_back(w);
  DispatchEntry l;
  l.bus = 3;
  l.p = -0.5;
  l.q = -0.1;
  disp.push_back(l);
  DispatchEntry e;
  e.bus = 5;
  e.p = -0.01;
  e.q = 0.0;
  disp.push_back(e);

  const auto cons = assemble_constraints(net, disp);
  CHECK(cons[0].kind == BusConstraintKind::Slack);  // lowest-indexed generator
  CHECK(cons[0].vmag == 1.02);
  CHECK(cons[0].theta == 0.0);
  CHECK(cons[1].kind == BusConstraintKind::PV);
  CHECK(cons[1].p == 0.6);
  CHECK(cons[1].vmag == 1.0);
  CHECK(cons[2].kind == BusConstraintKind::PQ);
  CHECK(cons[3].kind == BusConstraintKind::PQ);
  CHECK(cons[3].p == 0.0);
  CHECK(cons[3].q == 0.0);
  CHECK(cons[4].kind == BusConstraintKind::PQ);

  // missing dispatch entries are input errors
  CHECK_THROWS_AS(assemble_constraints(net, {}), InputError);
}
