#include <doctest.h>

#include <random>

#include "gridkit/network.hpp"

using namespace gridkit;

TEST_CASE("empty network gives a zero admittance matrix") {
  const CMat Y = build_admittance({}, 3);
  CHECK(Y.rows() == 3);
  CHECK(Y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single branch, hand-evaluated Pi circuit") {
  // x = j0.1, no charging: Y = [[-j10, j10], [j10, -j10]]
  BranchSpec br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_impedance = Complex(0.0, 0.1);
  const CMat Y = build_admittance({br}, 2);
  CHECK(Y(0, 0).imag() == doctest::Approx(-10.0));
  CHECK(Y(0, 1).imag() == doctest::Approx(10.0));
  CHECK(Y(1, 0).imag() == doctest::Approx(10.0));
  CHECK(Y(1, 1).imag() == doctest::Approx(-10.0));
  CHECK(Y(0, 0).real() == doctest::Approx(0.0));
}

TEST_CASE("three-bus topology, closed-form substitution") {
  // branch1: 1-3 with x=j0.1, y=j0.02 per end; branch2: 2-3 with x=j0.2, y=j0.04 per end
  BranchSpec b1, b2;
  b1.from_bus = 1;
  b1.to_bus = 3;
  b1.series_impedance = Complex(0.0, 0.1);
  b1.shunt_admittance_from = b1.shunt_admittance_to = Complex(0.0, 0.02);
  b2.from_bus = 2;
  b2.to_bus = 3;
  b2.series_impedance = Complex(0.0, 0.2);
  b2.shunt_admittance_from = b2.shunt_admittance_to = Complex(0.0, 0.04);
  const CMat Y = build_admittance({b1, b2}, 3);
  CHECK(std::abs(Y(0, 0) - Complex(0.0, 0.02 - 10.0)) < 1e-14);
  CHECK(std::abs(Y(2, 2) - Complex(0.0, 0.06 - 10.0 - 5.0)) < 1e-13);
  CHECK(Y(0, 2) == Complex(0.0, 10.0));
  CHECK(Y(1, 2) == Complex(0.0, 5.0));
  CHECK(Y(0, 1) == Complex(0.0, 0.0));
}

TEST_CASE("admittance matrix is exactly symmetric and errors are reported") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.01, 0.5);
  std::vector<BranchSpec> branches;
  const int n = 12;
  for (int k = 0; k < 30; ++k) {
    int i = static_cast<int>(rng() % n) + 1;
    int j = static_cast<int>(rng() % n) + 1;
    if (i == j) continue;
    branches.push_back(BranchSpec::line(i, j, U(rng), U(rng), U(rng)));
  }
  const CMat Y = build_admittance(branches, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(Y(i, j) == Y(j, i));  // bitwise

  // row sums are exactly zero when all shunts are zero
  std::vector<BranchSpec> noshunt = branches;
  for (auto& b : noshunt) b.shunt_admittance_from = b.shunt_admittance_to = Complex(0, 0);
  const CMat Y2 = build_admittance(noshunt, n);
  for (int i = 0; i < n; ++i) CHECK(std::abs(Y2.row(i).sum()) < 1e-12);

  BranchSpec bad = BranchSpec::line(1, 13, 0.0, 0.1, 0.0);
  CHECK_THROWS_AS(build_admittance({bad}, 12), InputError);
  BranchSpec zero = BranchSpec::line(1, 2, 0.0, 0.0, 0.0);
  CHECK_THROWS_AS(build_admittance({zero}, 12), InputError);
}

TEST_CASE("network mismatch basics") {
  const CMat Y0 = CMat::Zero(3, 3);
  CVec V(3);
  V << Complex(1, 0.2), Complex(0.9, -0.1), Complex(1.05, 0);
  CHECK(network_mismatch(Y0, V, CVec::Zero(3)).cwiseAbs().maxCoeff() == 0.0);

  BranchSpec br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_impedance = Complex(0.0, 0.1);
  const CMat Y = build_admittance({br}, 2);
  CVec Vf(2);
  Vf << Complex(1, 0), Complex(1, 0);
  CHECK(network_mismatch(Y, Vf, CVec::Zero(2)).cwiseAbs().maxCoeff() < 1e-15);

  // independent complex arithmetic for a non-flat voltage
  CVec Vr(2);
  Vr << Complex(1, 0), std::polar(1.0, -0.1);
  const CVec mis = network_mismatch(Y, Vr, CVec::Zero(2));
  for (int k = 0; k < 2; ++k) {
    Complex Ik = Y(k, 0) * Vr(0) + Y(k, 1) * Vr(1);
    CHECK(std::abs(mis(k) - std::conj(Ik) * Vr(k)) < 1e-15);
  }
  CHECK(mis.cwiseAbs().maxCoeff() > 1e-3);

  // round trip: S recomputed from the same (Y, V) has zero mismatch
  const CVec S = (Y * Vr).conjugate().cwiseProduct(Vr);
  CHECK(network_mismatch(Y, Vr, S).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(network_mismatch(Y, Vf, CVec::Zero(3)), InputError);
}
