#include "gridkit/control_math.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

namespace gridkit {

namespace {

// diagonal block starts of a real quasi-triangular Schur factor
std::vector<int> schur_block_starts(const Mat& T) {
  std::vector<int> starts;
  const int n = static_cast<int>(T.rows());
  int i = 0;
  while (i < n) {
    starts.push_back(i);
    if (i + 1 < n && std::abs(T(i + 1, i)) > 0.0)
      i += 2;
    else
      i += 1;
  }
  return starts;
}

// small Sylvester T1 Y + Y T2' = C via Kronecker (blocks are at most 2x2)
Mat small_sylvester(const Mat& T1, const Mat& T2, const Mat& C) {
  const int p = static_cast<int>(T1.rows());
  const int q = static_cast<int>(T2.rows());
  Mat M = Mat::Zero(p * q, p * q);
  // vec(T1 Y) = (I_q  kron T1) vec(Y); vec(Y T2') = (T2 kron I_p) vec(Y)
  for (int j = 0; j < q; ++j)
    M.block(j * p, j * p, p, p) += T1;
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < q; ++k)
      M.block(j * p, k * p, p, p) += T2(j, k) * Mat::Identity(p, p);
  Vec rhs(p * q);
  for (int j = 0; j < q; ++j) rhs.segment(j * p, p) = C.col(j);
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible())
    throw NumericalError("Lyapunov solve: singular Sylvester block (eigenvalue pair sums to zero)");
  const Vec y = lu.solve(rhs);
  Mat Y(p, q);
  for (int j = 0; j < q; ++j) Y.col(j) = y.segment(j * p, p);
  return Y;
}

}  // namespace

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw InputError("solve_lyapunov: dimension mismatch");
  if (n == 0) return Mat::Zero(0, 0);

  Eigen::RealSchur<Mat> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("solve_lyapunov: Schur failed");
  const Mat U = schur.matrixU();
  const Mat T = schur.matrixT();
  const Mat Qt = U.transpose() * Q * U;

  const std::vector<int> starts = schur_block_starts(T);
  const int nb = static_cast<int>(starts.size());
  auto bsize = [&](int b) {
    return (b + 1 < nb ? starts[static_cast<size_t>(b + 1)] : n) - starts[static_cast<size_t>(b)];
  };

  // T Y + Y T' = -Qt, blocks resolved from the bottom-right corner up
  Mat Y = Mat::Zero(n, n);
  for (int bi = nb - 1; bi >= 0; --bi) {
    for (int bj = nb - 1; bj >= 0; --bj) {
      const int i0 = starts[static_cast<size_t>(bi)], pi = bsize(bi);
      const int j0 = starts[static_cast<size_t>(bj)], pj = bsize(bj);
      Mat rhs = -Qt.block(i0, j0, pi, pj);
      // contributions from already-solved blocks
      const int ni = n - (i0 + pi);
      const int nj = n - (j0 + pj);
      if (ni > 0) rhs -= T.block(i0, i0 + pi, pi, ni) * Y.block(i0 + pi, j0, ni, pj);
      if (nj > 0) rhs -= Y.block(i0, j0 + pj, pi, nj) * T.block(j0, j0 + pj, pj, nj).transpose();
      Y.block(i0, j0, pi, pj) =
          small_sylvester(T.block(i0, i0, pi, pi), T.block(j0, j0, pj, pj), rhs);
    }
  }
  return U * Y * U.transpose();
}

double spectral_abscissa(const Mat& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Mat> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_abscissa: eig failed");
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Mat& A, double margin) { return spectral_abscissa(A) < -margin; }

Mat solve_care(const Mat& A, const Mat& B, const Mat& W, const Mat& R, double tol) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || W.rows() != n || W.cols() != n || R.rows() != m ||
      R.cols() != m)
    throw InputError("solve_care: dimension mismatch");

  Eigen::LLT<Mat> rllt(R);
  if (rllt.info() != Eigen::Success) throw InputError("solve_care: R must be positive definite");
  const Mat Rinv = rllt.solve(Mat::Identity(m, m));
  const Mat Wsym = 0.5 * (W + W.transpose());

  auto residual_norm = [&](const Mat& X) {
    const Mat res =
        A.transpose() * X + X * A - X * B * Rinv * B.transpose() * X + Wsym;
    return res.norm();
  };

  Mat X;
  if (m == 0 || B.norm() == 0.0) {
    // no input authority: Lyapunov equation, needs stable A
    if (!is_hurwitz(A)) throw InfeasibleError("solve_care: unstabilizable (B = 0, A not Hurwitz)");
    X = solve_lyapunov(A.transpose(), Wsym);
  } else if (is_hurwitz(A)) {
    // stable plant: K = 0 is a stabilizing start for the Newton refinement,
    // which is far better conditioned than the Hamiltonian split when modes
    // sit close to the imaginary axis
    X = solve_lyapunov(A.transpose(), Wsym);
  } else {
    // stable invariant subspace of the Hamiltonian
    Mat H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = A;
    H.topRightCorner(n, n) = -B * Rinv * B.transpose();
    H.bottomLeftCorner(n, n) = -Wsym;
    H.bottomRightCorner(n, n) = -A.transpose();

    Eigen::ComplexEigenSolver<CMat> es(H.cast<Complex>());
    if (es.info() != Eigen::Success) throw NumericalError("solve_care: Hamiltonian eig failed");
    std::vector<int> stable;
    for (int i = 0; i < 2 * n; ++i)
      if (es.eigenvalues()(i).real() < 0.0) stable.push_back(i);
    if (static_cast<int>(stable.size()) != n)
      throw InfeasibleError("solve_care: Hamiltonian has no n-dimensional stable subspace");
    CMat U1(n, n), U2(n, n);
    for (int c = 0; c < n; ++c) {
      U1.col(c) = es.eigenvectors().col(stable[static_cast<size_t>(c)]).head(n);
      U2.col(c) = es.eigenvectors().col(stable[static_cast<size_t>(c)]).tail(n);
    }
    Eigen::FullPivLU<CMat> lu(U1);
    if (!lu.isInvertible())
      throw InfeasibleError("solve_care: unstabilizable pair (singular stable-subspace basis)");
    X = (U2 * lu.inverse()).real();
    X = 0.5 * (X + X.transpose());
  }

  // Newton-Kleinman refinement; converged when the residual is small
  // relative to the solution scale
  auto rel_residual = [&](const Mat& Xc) {
    return residual_norm(Xc) / std::max(1.0, Xc.norm());
  };
  double best = rel_residual(X);
  for (int it = 0; it < 40 && residual_norm(X) > tol; ++it) {
    const Mat K = -Rinv * B.transpose() * X;
    const Mat Acl = A + B * K;
    if (!is_hurwitz(Acl))
      throw InfeasibleError("solve_care: Riccati iterate lost stabilizing property");
    Mat Xn = solve_lyapunov(Acl.transpose(), Wsym + K.transpose() * R * K);
    Xn = 0.5 * (Xn + Xn.transpose());
    const double rel = rel_residual(Xn);
    X = Xn;
    if (rel >= 0.5 * best) break;  // stagnated at the attainable precision
    best = rel;
  }
  if (residual_norm(X) > tol && rel_residual(X) > 1e-9)
    throw NumericalError("solve_care: residual did not converge");
  return X;
}

std::pair<Mat, Mat> lqr_gain(const Mat& A, const Mat& B, const Mat& W, const Mat& R) {
  const Mat X = solve_care(A, B, W, R);
  const Mat K = -R.llt().solve(B.transpose() * X);
  if (B.norm() > 0.0 && !is_hurwitz(A + B * K))
    throw InfeasibleError("lqr_gain: closed loop not Hurwitz");
  return {K, X};
}

double lqr_cost(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& K) {
  const Mat Acl = A + B * K;
  if (!is_hurwitz(Acl)) return std::numeric_limits<double>::infinity();
  const Mat X = solve_lyapunov(Acl.transpose(), Q + K.transpose() * R * K);
  return X.trace();
}

Mat lqr_cost_gradient(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& K) {
  const Mat Acl = A + B * K;
  if (!is_hurwitz(Acl)) throw InputError("lqr_cost_gradient: closed loop not Hurwitz");
  const Mat X = solve_lyapunov(Acl.transpose(), Q + K.transpose() * R * K);
  const Mat L = solve_lyapunov(Acl, Mat::Identity(A.rows(), A.cols()));
  return 2.0 * (R * K + B.transpose() * X) * L;
}

}  // namespace gridkit
