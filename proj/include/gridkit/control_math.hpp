#pragma once

#include "gridkit/errors.hpp"
#include "gridkit/types.hpp"

namespace gridkit {

/// Solves the continuous Lyapunov equation A X + X A^T + Q = 0
/// (Bartels-Stewart on the real Schur form). Requires that no two
/// eigenvalues of A sum to zero.
Mat solve_lyapunov(const Mat& A, const Mat& Q);

/// Solves the control algebraic Riccati equation
///   A^T X + X A - X B R^{-1} B^T X + W = 0
/// for the stabilizing X (Hamiltonian eigenvector method + Newton-Kleinman
/// refinement). Throws InfeasibleError if (A, B) admits no stabilizing
/// solution.
Mat solve_care(const Mat& A, const Mat& B, const Mat& W, const Mat& R, double tol = 1e-10);

/// LQR state feedback u = K x minimizing int(x'Wx + u'Ru):
/// K = -R^{-1} B^T X with X from solve_care. Returns (K, X).
std::pair<Mat, Mat> lqr_gain(const Mat& A, const Mat& B, const Mat& W, const Mat& R);

/// Largest real part of the spectrum.
double spectral_abscissa(const Mat& A);
bool is_hurwitz(const Mat& A, double margin = 0.0);

/// Quadratic cost of u = K x with unit initial-state covariance:
/// J = tr(X), (A+BK)^T X + X (A+BK) + Q + K^T R K = 0.
/// Returns +inf if A+BK is not Hurwitz.
double lqr_cost(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& K);

/// Gradient of lqr_cost with respect to K: 2 (R K + B^T X) L with
/// L the closed-loop controllability Gramian for Sigma0 = I.
Mat lqr_cost_gradient(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& K);

}  // namespace gridkit
