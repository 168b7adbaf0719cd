#include "gridkit/linearization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace gridkit {

Linearization linearize(const SystemModel& sys, double fd_step) {
  if (!sys.operating_point().valid)
    throw InputError("linearize: system has no operating point");
  const int N = sys.n_buses();
  const int n = sys.n_states();
  const int m = sys.n_inputs();
  const CVec& V = sys.operating_point().V_star;
  const Vec x = sys.x_star();

  // equilibrium precheck
  {
    Vec u0 = Vec::Zero(m);
    const Vec dx = sys.dynamics(x, V, u0);
    if (dx.size() > 0 && dx.cwiseAbs().maxCoeff() > 1e-8)
      throw InputError("linearize: operating point is not an equilibrium");
  }

  Linearization lin;
  LinearDaeBlocks& d = lin.dae;
  d.A_xx = Mat::Zero(n, n);
  d.A_xV = Mat::Zero(n, 2 * N);
  d.B = Mat::Zero(n, m);
  d.G_Vx = Mat::Zero(2 * N, n);
  d.G_VV = Mat::Zero(2 * N, 2 * N);

  // network part of the algebraic residual r_k = V_k conj((YV)_k) - S_k
  const CMat& Y = sys.network().Y();
  const CVec W = Y * V;
  for (int k = 0; k < N; ++k) {
    for (int mcol = 0; mcol < N; ++mcol) {
      Complex d_e = V(k) * std::conj(Y(k, mcol));
      Complex d_f = -Complex(0, 1) * V(k) * std::conj(Y(k, mcol));
      if (k == mcol) {
        d_e += std::conj(W(k));
        d_f += Complex(0, 1) * std::conj(W(k));
      }
      d.G_VV(2 * k, 2 * mcol) = d_e.real();
      d.G_VV(2 * k + 1, 2 * mcol) = d_e.imag();
      d.G_VV(2 * k, 2 * mcol + 1) = d_f.real();
      d.G_VV(2 * k + 1, 2 * mcol + 1) = d_f.imag();
    }
  }

  lin.sys.state_offset.assign(static_cast<size_t>(N), -1);
  lin.sys.state_count.assign(static_cast<size_t>(N), 0);
  lin.sys.input_offset.assign(static_cast<size_t>(N), -1);
  lin.sys.input_count.assign(static_cast<size_t>(N), 0);

  for (int b = 1; b <= N; ++b) {
    const Component& c = sys.component(b);
    const int nk = c.n_states();
    const int mk = c.n_inputs();
    const int xo = sys.state_offset(b);
    const int uo = sys.input_offset(b);
    lin.sys.state_offset[static_cast<size_t>(b - 1)] = nk > 0 ? xo : -1;
    lin.sys.state_count[static_cast<size_t>(b - 1)] = nk;
    lin.sys.input_offset[static_cast<size_t>(b - 1)] = mk > 0 ? uo : -1;
    lin.sys.input_count[static_cast<size_t>(b - 1)] = mk;

    const Vec xk = x.segment(xo, nk);
    const Vec uk = Vec::Zero(mk);
    if (nk > 0 && c.saturation_margin(xk, V(b - 1), uk) <= 1e-9)
      throw SaturatedError("linearize: duty cycle saturated at equilibrium on bus " +
                           std::to_string(b));

    const ComponentJacobians j = component_jacobians(c, xk, V(b - 1), uk, fd_step);
    if (nk > 0) {
      d.A_xx.block(xo, xo, nk, nk) = j.A;
      d.A_xV.block(xo, 2 * (b - 1), nk, 2) = j.Fv;
      if (mk > 0) d.B.block(xo, uo, nk, mk) = j.B;
      d.G_Vx.block(2 * (b - 1), xo, 2, nk) = -j.Cg;
    }
    d.G_VV.block(2 * (b - 1), 2 * (b - 1), 2, 2) -= j.Dg;
  }

  Eigen::FullPivLU<Mat> lu(d.G_VV);
  if (!lu.isInvertible()) throw DegenerateError("linearize: singular algebraic block");
  lin.sys.A = d.A_xx - d.A_xV * lu.solve(d.G_Vx);
  lin.sys.B = d.B;
  lin.sys.state_labels = sys.state_labels();
  lin.sys.input_labels = sys.input_labels();
  return lin;
}

std::vector<EigenInfo> eigen_report(const Mat& A, int count) {
  if (!A.allFinite()) throw NumericalError("eigen_report: non-finite state matrix");
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_report: eig failed");
  std::vector<EigenInfo> all;
  for (int i = 0; i < A.rows(); ++i) {
    const Complex l = es.eigenvalues()(i);
    if (l.imag() < 0.0) continue;  // conjugate partner reported once
    EigenInfo e;
    e.lambda = l;
    const double mag = std::abs(l);
    e.damping = (mag > 0.0) ? -l.real() / mag : 0.0;
    e.freq_hz = std::abs(l.imag()) / (2.0 * kPi);
    all.push_back(e);
  }
  std::sort(all.begin(), all.end(),
            [](const EigenInfo& a, const EigenInfo& b) { return a.lambda.real() > b.lambda.real(); });
  if (count > 0 && static_cast<int>(all.size()) > count) all.resize(static_cast<size_t>(count));
  return all;
}

double dominant_real_part(const Mat& A, double zero_tol) {
  Eigen::EigenSolver<Mat> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("dominant_real_part: eig failed");
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < A.rows(); ++i) {
    const Complex l = es.eigenvalues()(i);
    if (std::abs(l) < zero_tol) continue;
    best = std::max(best, l.real());
  }
  return best;
}

ModalDecomposition modal_residues(const Mat& A, const Mat& C, const Vec& x0,
                                  double inter_area_lo_hz, double inter_area_hi_hz) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Mat> es(A, true);
  if (es.info() != Eigen::Success) throw NumericalError("modal_residues: eig failed");
  const CMat R = es.eigenvectors();
  Eigen::FullPivLU<CMat> lu(R);
  if (!lu.isInvertible())
    throw GeneralizedModesError("modal_residues: defective state matrix");
  const CVec w = lu.solve(x0.cast<Complex>());  // left-eigenvector weights of x0
  const CMat CR = C.cast<Complex>() * R;

  ModalDecomposition md;
  std::vector<int> keep;
  for (int j = 0; j < n; ++j)
    if (es.eigenvalues()(j).imag() >= 0.0) keep.push_back(j);
  md.lambdas = CVec(static_cast<Eigen::Index>(keep.size()));
  md.residues = CMat(C.rows(), static_cast<Eigen::Index>(keep.size()));
  md.inter_area.resize(keep.size());
  for (size_t jj = 0; jj < keep.size(); ++jj) {
    const int j = keep[jj];
    const Complex l = es.eigenvalues()(j);
    md.lambdas(static_cast<Eigen::Index>(jj)) = l;
    md.residues.col(static_cast<Eigen::Index>(jj)) = CR.col(j) * w(j);
    const double f = std::abs(l.imag()) / (2.0 * kPi);
    md.inter_area[jj] = (l.imag() > 0.0) && f >= inter_area_lo_hz && f <= inter_area_hi_hz;
  }
  return md;
}

FrequencyResponse frequency_response_sv(const Mat& A, const Mat& B, const Mat& C, const Mat& D,
                                        const std::vector<double>& omega_grid) {
  FrequencyResponse fr;
  const int n = static_cast<int>(A.rows());
  const CMat Ac = A.cast<Complex>();
  const CMat Bc = B.cast<Complex>();
  fr.peak_value = -1.0;
  for (double w : omega_grid) {
    CMat M = Complex(0, w) * CMat::Identity(n, n) - Ac;
    Eigen::FullPivLU<CMat> lu(M);
    if (!lu.isInvertible()) {
      fr.omega.push_back(w);
      fr.sigma_max.push_back(std::numeric_limits<double>::quiet_NaN());
      fr.flagged.push_back(true);
      continue;
    }
    CMat G = C.cast<Complex>() * lu.solve(Bc) + D.cast<Complex>();
    Eigen::JacobiSVD<CMat> svd(G);
    const double s = svd.singularValues()(0);
    fr.omega.push_back(w);
    fr.sigma_max.push_back(s);
    fr.flagged.push_back(false);
    if (s > fr.peak_value) {
      fr.peak_value = s;
      fr.peak_omega = w;
    }
  }
  return fr;
}

ComponentStateSpace component_voltage_to_power_ss(const Component& comp) {
  const Vec u0 = Vec::Zero(comp.n_inputs());
  const ComponentJacobians j =
      component_jacobians(comp, comp.x_star(), comp.V_star(), u0);
  return {j.A, j.Fv, j.Cg, j.Dg};
}

SweepResult stability_sweep(const std::function<double(double)>& dominant,
                            const std::vector<double>& values, int n_threads) {
  SweepResult res;
  res.points.resize(values.size());
  if (n_threads <= 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<int>(n_threads, static_cast<int>(values.size()) > 0 ? static_cast<int>(values.size()) : 1);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= values.size()) break;
      SweepPoint& pt = res.points[i];
      pt.value = values[i];
      try {
        pt.max_re = dominant(values[i]);
        pt.ok = true;
      } catch (const std::exception& e) {
        pt.ok = false;
        pt.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (const auto& pt : res.points) {
    if (pt.ok && pt.max_re > 0.0) {
      res.first_unstable = pt.value;
      break;
    }
  }
  return res;
}

}  // namespace gridkit
