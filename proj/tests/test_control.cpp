#include <doctest.h>

#include <random>

#include "gridkit/control.hpp"
#include "test_helpers.hpp"

using namespace gridkit;

namespace {

Mat random_stable(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Mat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = N(rng);
  return M - (M.cwiseAbs().rowwise().sum().maxCoeff() + 0.5) * Mat::Identity(n, n);
}

// independent Lyapunov route for oracles: Kronecker vectorization
Mat lyap_kron(const Mat& A, const Mat& Q) {
  const int n = static_cast<int>(A.rows());
  Mat M = Mat::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        M(i + j * n, k + j * n) += A(i, k);   // A X
        M(i + j * n, i + k * n) += A(j, k);   // X A^T
      }
  Vec q(n * n);
  for (int j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
  const Vec x = M.fullPivLu().solve(q);
  Mat X(n, n);
  for (int j = 0; j < n; ++j) X.col(j) = x.segment(j * n, n);
  return X;
}

}  // namespace

TEST_CASE("Lyapunov solver against the Kronecker route") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Mat A = random_stable(n, static_cast<unsigned>(100 + trial));
    Mat Q0(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Q0(i, j) = N(rng);
    const Mat Q = Q0 * Q0.transpose();
    const Mat X = solve_lyapunov(A, Q);
    CHECK((A * X + X * A.transpose() + Q).norm() < 1e-9 * std::max(1.0, Q.norm()));
    CHECK((X - lyap_kron(A, Q)).norm() < 1e-7 * std::max(1.0, X.norm()));
  }
}

TEST_CASE("scalar Riccati closed form") {
  Mat A(1, 1), B(1, 1), W(1, 1), R(1, 1);
  A << -1.0;
  B << 1.0;
  W << 1.0;
  R << 1.0;
  const auto [K, X] = lqr_gain(A, B, W, R);
  CHECK(X(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-10));
  CHECK(K(0, 0) == doctest::Approx(-(std::sqrt(2.0) - 1.0)).epsilon(1e-10));
  CHECK((A + B * K)(0, 0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("Riccati with no input authority reduces to Lyapunov") {
  const Mat A = random_stable(3, 9);
  const Mat B = Mat::Zero(3, 1);
  const Mat W = Mat::Identity(3, 3);
  const Mat R = Mat::Identity(1, 1);
  const auto [K, X] = lqr_gain(A, B, W, R);
  CHECK(K.norm() == 0.0);
  CHECK((A.transpose() * X + X * A + W).norm() < 1e-9);
}

TEST_CASE("random Riccati instances satisfy the defining properties") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4;
    const Mat A = random_stable(n, static_cast<unsigned>(7 * trial + 1));
    Mat B(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) B(i, j) = N(rng);
    const Mat W = Mat::Identity(n, n);
    const Mat R = Mat::Identity(2, 2);
    const auto [K, X] = lqr_gain(A, B, W, R);
    const Mat res = A.transpose() * X + X * A - X * B * B.transpose() * X + W;
    CHECK(res.norm() < 1e-8);
    CHECK(spectral_abscissa(A + B * K) < 0.0);
    // X positive definite
    Eigen::SelfAdjointEigenSolver<Mat> es(X);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("unstabilizable pair is rejected") {
  // unstable mode decoupled from the input
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = -1.0;
  Mat B = Mat::Zero(2, 1);
  B(1, 0) = 1.0;
  CHECK_THROWS_AS(lqr_gain(A, B, Mat::Identity(2, 2), Mat::Identity(1, 1)), InfeasibleError);
}

TEST_CASE("sparsity pattern semantics") {
  SparsityPattern p;
  p.n_blocks = 4;
  p.groups = {{0, 1, 2}, {2, 3}};
  CHECK(p.allowed(0, 1));
  CHECK(p.allowed(2, 3));
  CHECK(!p.allowed(0, 3));
  CHECK(!p.allowed(1, 3));
  const Mat m = p.entry_mask(1, 2);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 8);
  CHECK(m(0, 2) == 1.0);
  CHECK(m(0, 6) == 0.0);
  CHECK(m(3, 4) == 1.0);
}

TEST_CASE("generator grouping from modal residues") {
  // four generators, three inter-area modes; residues per the grouping rule
  ModalDecomposition md;
  md.lambdas = CVec(3);
  md.lambdas << Complex(-0.1, 2.0), Complex(-0.2, 3.0), Complex(-0.15, 4.0);
  md.inter_area = {true, true, true};
  md.residues = CMat::Zero(4, 3);
  md.residues(0, 0) = 1.0;
  md.residues(1, 0) = 0.9;
  md.residues(2, 0) = 0.8;
  md.residues(2, 1) = 0.7;
  md.residues(3, 1) = 1.1;
  md.residues(0, 2) = 0.01;  // poorly excited mode

  const SparsityPattern p = build_groups(md, 0.5);
  REQUIRE(p.groups.size() == 2);
  CHECK(p.groups[0] == std::vector<int>{0, 1, 2});
  CHECK(p.groups[1] == std::vector<int>{2, 3});

  // threshold above every residue: all singleton groups
  const SparsityPattern ps = build_groups(md, 10.0);
  CHECK(ps.groups.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(ps.groups[static_cast<size_t>(i)] == std::vector<int>{i});
    for (int j = 0; j < 4; ++j)
      CHECK(ps.allowed(i, j) == (i == j));
  }

  // zero threshold: every generator joins every retained mode's group
  const SparsityPattern pf = build_groups(md, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(pf.allowed(i, j));
}

TEST_CASE("structured LQR") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> N(0.0, 1.0);

  SUBCASE("all-allowed pattern reproduces the dense gain") {
    const Mat A = random_stable(4, 77);
    Mat B(4, 2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) B(i, j) = N(rng);
    const Mat Q = Mat::Identity(4, 4);
    const Mat R = Mat::Identity(2, 2);
    const auto dense = lqr_gain(A, B, Q, R).first;
    const auto wag = structured_lqr(A, B, Q, R, SparsityPattern::all_allowed(2));
    CHECK((wag.K - dense).cwiseAbs().maxCoeff() < 1e-6);
    // J matches tr(X) of the dense solution
    const Mat X = lqr_gain(A, B, Q, R).second;
    CHECK(wag.J == doctest::Approx(X.trace()).epsilon(1e-6));
  }

  SUBCASE("block-diagonal pattern on decoupled subsystems separates") {
    const Mat A1 = random_stable(2, 3), A2 = random_stable(2, 4);
    Mat A = Mat::Zero(4, 4);
    A.topLeftCorner(2, 2) = A1;
    A.bottomRightCorner(2, 2) = A2;
    Mat B = Mat::Zero(4, 2);
    B(0, 0) = 1.0;
    B(1, 0) = -0.4;
    B(2, 1) = 0.8;
    B(3, 1) = 1.2;
    const Mat Q = Mat::Identity(4, 4);
    const Mat R = Mat::Identity(2, 2);
    SparsityPattern p;
    p.n_blocks = 2;
    p.groups = {{0}, {1}};
    const auto wag = structured_lqr(A, B, Q, R, p);
    const auto k1 = lqr_gain(A1, B.block(0, 0, 2, 1), Mat::Identity(2, 2), Mat::Identity(1, 1)).first;
    const auto k2 = lqr_gain(A2, B.block(2, 1, 2, 1), Mat::Identity(2, 2), Mat::Identity(1, 1)).first;
    CHECK((wag.K.block(0, 0, 1, 2) - k1).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((wag.K.block(1, 2, 1, 2) - k2).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(wag.K.block(0, 2, 1, 2).cwiseAbs().maxCoeff() == 0.0);  // forbidden exactly zero
    CHECK(wag.K.block(1, 0, 1, 2).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("forbidden block case matches a projected-gradient oracle") {
    const Mat A = random_stable(4, 99);
    Mat B(4, 2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) B(i, j) = N(rng);
    const Mat Q = Mat::Identity(4, 4);
    const Mat R = Mat::Identity(2, 2);
    SparsityPattern p;
    p.n_blocks = 2;
    p.groups = {{0}, {1}};  // off-diagonal blocks forbidden, plant coupled
    const auto wag = structured_lqr(A, B, Q, R, p);
    CHECK(wag.K.block(0, 2, 1, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(wag.K.block(1, 0, 1, 2).cwiseAbs().maxCoeff() == 0.0);

    const double dense_J = lqr_gain(A, B, Q, R).second.trace();
    CHECK(wag.J >= dense_J - 1e-9);
    CHECK(wag.J <= 1.5 * dense_J);

    // oracle: plain projected gradient descent with Kronecker Lyapunov solves
    const Mat mask = p.entry_mask(1, 2);
    auto cost = [&](const Mat& K) {
      const Mat Acl = A + B * K;
      if (spectral_abscissa(Acl) >= 0.0) return std::numeric_limits<double>::infinity();
      return lyap_kron(Acl.transpose(), Q + K.transpose() * R * K).trace();
    };
    auto grad = [&](const Mat& K) {
      const Mat Acl = A + B * K;
      const Mat X = lyap_kron(Acl.transpose(), Q + K.transpose() * R * K);
      const Mat L = lyap_kron(Acl, Mat::Identity(4, 4));
      return Mat(2.0 * (R * K + B.transpose() * X) * L);
    };
    Mat K = Mat::Zero(2, 4);
    double f = cost(K);
    for (int it = 0; it < 4000; ++it) {
      const Mat g = (grad(K).array() * mask.array()).matrix();
      if (g.norm() < 1e-10) break;
      double t = 1.0 / std::max(1.0, g.norm());
      for (int ls = 0; ls < 60; ++ls) {
        const Mat Kt = K - t * g;
        const double ft = cost(Kt);
        if (ft < f) {
          K = Kt;
          f = ft;
          break;
        }
        t *= 0.5;
      }
    }
    CHECK(std::abs(wag.J - f) / f < 1e-4);
  }
}

TEST_CASE("retrofit controller construction and semantics") {
  SystemModel sys = testing::make_gen_load_solar();
  testing::solve_fixture(sys);
  const Component& solar = sys.component(3);

  SUBCASE("zero gain is accepted when the local model is stable, and u stays 0") {
    const Mat K0 = Mat::Zero(solar.n_inputs(), solar.n_states());
    RetrofitController c = make_retrofit(solar, 3, K0);
    Vec x = solar.x_star();
    x(0) += 0.3;
    CHECK(c.control(x).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("LQR default gain stabilizes the local pair") {
    RetrofitController c = make_retrofit(solar, 3);
    CHECK(is_hurwitz(c.A() + c.B() * c.K()));
    // at rest: x = x^ = x*, u = 0 and the compensator stays put
    const Vec u0 = Vec::Zero(solar.n_inputs());
    CHECK(c.control(solar.x_star()).cwiseAbs().maxCoeff() == 0.0);
    const Vec xd = c.xhat_dot(solar, solar.x_star(), solar.V_star(), u0);
    CHECK(xd.cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("non-stabilizing gain is rejected") {
    Mat K = Mat::Zero(solar.n_inputs(), solar.n_states());
    K(0, 0) = 1e5;
    K(1, 1) = 1e5;
    CHECK_THROWS_AS(make_retrofit(solar, 3, K), RejectedGainError);
  }

  SUBCASE("one trapezoidal compensator step matches the hand calculation") {
    // scalar stand-in: A = -2, f~ = 1 held constant, dt = 0.1
    // (1 - 0.05 * (-2)) xh+ = (1 + 0.05 * (-2)) xh + 0.1  => xh+ = (0.9 xh + 0.1)/1.1
    RetrofitController c = make_retrofit(solar, 3);
    const Vec xh0 = c.x_hat();
    Vec u_prev = Vec::Zero(solar.n_inputs());
    const Vec f_tilde = c.remainder(solar, solar.x_star(), solar.V_star(), u_prev);
    const double dt = 0.1;
    const int n = solar.n_states();
    const Mat M = Mat::Identity(n, n) - 0.5 * dt * c.A();
    const Vec expect =
        M.partialPivLu().solve((Mat::Identity(n, n) + 0.5 * dt * c.A()) * xh0 + dt * f_tilde);
    retrofit_step(c, solar, solar.x_star(), solar.V_star(), u_prev, dt);
    CHECK((c.x_hat() - expect).cwiseAbs().maxCoeff() < 1e-12);

    // dt = 0 leaves the state unchanged
    RetrofitController c2 = make_retrofit(solar, 3);
    retrofit_step(c2, solar, solar.x_star(), solar.V_star(), u_prev, 0.0);
    CHECK((c2.x_hat() - solar.x_star()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("closed-loop assemblies") {
  SystemModel sys = testing::make_two_gen_wind_solar();
  testing::solve_two_gen_fixture(sys);
  const Linearization lin = linearize(sys);
  REQUIRE(dominant_real_part(lin.sys.A) < 0.0);

  SUBCASE("zero wide-area gain leaves the model unchanged") {
    WacController wac;
    wac.gen_buses = {1, 2};
    wac.K = Mat::Zero(2, 14);
    const Mat Acl = closed_loop_wac(lin.sys, sys.network(), wac);
    CHECK((Acl - lin.sys.A).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("dense stabilizing wide-area gain shifts the dominant mode left") {
    const GeneratorDesignModel gd = generator_design_model(lin.sys, sys.network());
    Mat Q = Mat::Zero(gd.A.rows(), gd.A.cols());
    for (int b = 0; b < 2; ++b) Q(7 * b + 1, 7 * b + 1) = 100.0;  // frequency deviations
    const Mat R = Mat::Identity(2, 2);
    const auto [K, X] = lqr_gain(gd.A, gd.B, Q, R);
    WacController wac;
    wac.gen_buses = gd.gen_buses;
    wac.K = K;
    const Mat Acl = closed_loop_wac(lin.sys, sys.network(), wac);
    CHECK(dominant_real_part(Acl) <= dominant_real_part(lin.sys.A) + 1e-9);
  }

  SUBCASE("retrofit closed loop: spectrum is the open loop plus local design modes") {
    std::vector<RetrofitController> cs;
    cs.push_back(make_retrofit(sys.component(4), 4));
    cs.push_back(make_retrofit(sys.component(5), 5));
    const Mat Aa = closed_loop_retrofit(lin, sys, cs);
    CHECK(dominant_real_part(Aa) < 0.0);

    // with zero gains the plant block decouples entirely
    std::vector<RetrofitController> zs;
    zs.push_back(make_retrofit(sys.component(4), 4,
                               Mat::Zero(sys.component(4).n_inputs(), sys.component(4).n_states())));
    const Mat Az = closed_loop_retrofit(lin, sys, zs);
    const int n = static_cast<int>(lin.sys.A.rows());
    CHECK((Az.topLeftCorner(n, n) - lin.sys.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Az.topRightCorner(n, Az.cols() - n).cwiseAbs().maxCoeff() == 0.0);
  }
}
