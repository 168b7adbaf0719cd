#include "gridkit/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gridkit {

namespace {

// states that participate in the local dynamics; frozen coordinates (all-zero
// row and column in A and zero row in B, e.g. an absent battery) are excluded
// from stabilizability requirements
std::vector<int> active_states(const Mat& A, const Mat& B, double tol = 1e-13) {
  std::vector<int> act;
  for (int i = 0; i < A.rows(); ++i) {
    const bool frozen = A.row(i).cwiseAbs().maxCoeff() < tol &&
                        A.col(i).cwiseAbs().maxCoeff() < tol &&
                        (B.cols() == 0 || B.row(i).cwiseAbs().maxCoeff() < tol);
    if (!frozen) act.push_back(i);
  }
  return act;
}

Mat submatrix(const Mat& M, const std::vector<int>& rows, const std::vector<int>& cols) {
  Mat S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c)
      S(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          M(rows[r], cols[c]);
  return S;
}

}  // namespace

RetrofitController::RetrofitController(int bus, Mat A, Mat B, Mat K, Vec x_star)
    : bus_(bus), A_(std::move(A)), B_(std::move(B)), K_(std::move(K)), x_star_(std::move(x_star)) {
  if (K_.rows() != B_.cols() || K_.cols() != A_.rows())
    throw InputError("retrofit controller: gain dimensions do not match the local model");
  const auto act = active_states(A_, B_);
  const Mat Acl = A_ + B_ * K_;
  if (!is_hurwitz(submatrix(Acl, act, act)))
    throw RejectedGainError("retrofit controller: A + BK is not Hurwitz");
  x_hat_ = x_star_;
}

Vec RetrofitController::remainder(const Component& comp, const Vec& x_k, Complex V_k,
                                  const Vec& u_k) const {
  return comp.dynamics(x_k, V_k, u_k) - A_ * x_k - B_ * u_k;
}

Vec RetrofitController::xhat_dot(const Component& comp, const Vec& x_k, Complex V_k,
                                 const Vec& u_k) const {
  return A_ * x_hat_ + remainder(comp, x_k, V_k, u_k);
}

RetrofitController make_retrofit(const Component& comp, int bus, const std::optional<Mat>& K,
                                 const RetrofitWeights& weights) {
  if (comp.n_states() == 0 || comp.n_inputs() == 0)
    throw InputError("make_retrofit: component has no dynamic states or inputs");
  const Vec u0 = Vec::Zero(comp.n_inputs());
  const ComponentJacobians j = component_jacobians(comp, comp.x_star(), comp.V_star(), u0);

  Mat gain;
  if (K.has_value()) {
    gain = *K;
  } else {
    // design on the active subspace; frozen coordinates get zero gain
    const auto act = active_states(j.A, j.B);
    const auto& names = comp.state_names();
    Vec w(static_cast<Eigen::Index>(act.size()));
    for (size_t i = 0; i < act.size(); ++i)
      w(static_cast<Eigen::Index>(i)) =
          names[static_cast<size_t>(act[i])].rfind("i_", 0) == 0 ? weights.current
                                                                 : weights.state;
    const Mat W = w.asDiagonal();
    const Mat R = weights.input * Mat::Identity(comp.n_inputs(), comp.n_inputs());
    std::vector<int> allrows(static_cast<size_t>(j.B.rows()));
    for (int i = 0; i < j.B.rows(); ++i) allrows[static_cast<size_t>(i)] = i;
    const Mat Ar = submatrix(j.A, act, act);
    Mat Br(static_cast<Eigen::Index>(act.size()), j.B.cols());
    for (size_t i = 0; i < act.size(); ++i) Br.row(static_cast<Eigen::Index>(i)) = j.B.row(act[i]);
    const Mat Kr = lqr_gain(Ar, Br, W, R).first;
    gain = Mat::Zero(comp.n_inputs(), comp.n_states());
    for (size_t c = 0; c < act.size(); ++c)
      gain.col(act[c]) = Kr.col(static_cast<Eigen::Index>(c));
  }
  return RetrofitController(bus, j.A, j.B, gain, comp.x_star());
}

Vec retrofit_step(RetrofitController& ctrl, const Component& comp, const Vec& x_k, Complex V_k,
                  const Vec& u_k_prev, double dt) {
  if (dt < 0.0) throw InputError("retrofit_step: negative step");
  if (dt > 0.0) {
    const int n = static_cast<int>(ctrl.A().rows());
    const Vec ft = ctrl.remainder(comp, x_k, V_k, u_k_prev);
    // trapezoidal update, remainder held over the step:
    // (I - dt/2 A) x^+ = (I + dt/2 A) x^ + dt f~
    const Mat M = Mat::Identity(n, n) - 0.5 * dt * ctrl.A();
    const Vec rhs = (Mat::Identity(n, n) + 0.5 * dt * ctrl.A()) * ctrl.x_hat() + dt * ft;
    ctrl.set_x_hat(M.partialPivLu().solve(rhs));
  }
  return ctrl.control(x_k);
}

bool SparsityPattern::allowed(int i, int j) const {
  for (const auto& g : groups) {
    bool has_i = false, has_j = false;
    for (int v : g) {
      has_i |= (v == i);
      has_j |= (v == j);
    }
    if (has_i && has_j) return true;
  }
  return false;
}

Mat SparsityPattern::block_mask() const {
  Mat m = Mat::Zero(n_blocks, n_blocks);
  for (int i = 0; i < n_blocks; ++i)
    for (int j = 0; j < n_blocks; ++j) m(i, j) = allowed(i, j) ? 1.0 : 0.0;
  return m;
}

Mat SparsityPattern::entry_mask(int row_per_block, int col_per_block) const {
  const Mat bm = block_mask();
  Mat m = Mat::Zero(n_blocks * row_per_block, n_blocks * col_per_block);
  for (int i = 0; i < n_blocks; ++i)
    for (int j = 0; j < n_blocks; ++j)
      if (bm(i, j) > 0.0)
        m.block(i * row_per_block, j * col_per_block, row_per_block, col_per_block).setOnes();
  return m;
}

SparsityPattern SparsityPattern::all_allowed(int n_blocks) {
  SparsityPattern p;
  p.n_blocks = n_blocks;
  std::vector<int> all(static_cast<size_t>(n_blocks));
  for (int i = 0; i < n_blocks; ++i) all[static_cast<size_t>(i)] = i;
  p.groups.push_back(all);
  return p;
}

SparsityPattern build_groups(const ModalDecomposition& md, double mu) {
  if (mu < 0.0) throw InputError("build_groups: threshold must be non-negative");
  const int n_gen = static_cast<int>(md.residues.rows());
  SparsityPattern p;
  p.n_blocks = n_gen;
  std::set<int> covered;
  for (Eigen::Index l = 0; l < md.lambdas.size(); ++l) {
    if (!md.inter_area[static_cast<size_t>(l)]) continue;
    std::vector<int> g;
    for (int i = 0; i < n_gen; ++i)
      if (std::abs(md.residues(i, l)) >= mu) g.push_back(i);
    if (g.empty()) continue;  // poorly excited mode, ignored
    for (int i : g) covered.insert(i);
    p.groups.push_back(std::move(g));
  }
  for (int i = 0; i < n_gen; ++i)
    if (!covered.count(i)) p.groups.push_back({i});  // local feedback only
  return p;
}

namespace {

// Armijo descent on J(K) + (rho/2)||K - G + U||^2 over dense K.
Mat smooth_step(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, Mat K, const Mat& target,
                double rho, int iters) {
  auto phi = [&](const Mat& Kc) {
    const double j = lqr_cost(A, B, Q, R, Kc);
    if (!std::isfinite(j)) return j;
    return j + 0.5 * rho * (Kc - target).squaredNorm();
  };
  double f = phi(K);
  for (int it = 0; it < iters; ++it) {
    const Mat grad = lqr_cost_gradient(A, B, Q, R, K) + rho * (K - target);
    const double gn = grad.norm();
    if (gn < 1e-9 * std::max(1.0, K.norm())) break;
    double t = 1.0 / std::max(1.0, gn);
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Mat Kt = K - t * grad;
      const double ft = phi(Kt);
      if (ft < f - 1e-4 * t * gn * gn) {
        K = Kt;
        f = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return K;
}

}  // namespace

WideAreaGain structured_lqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                            const SparsityPattern& pattern, const StructuredLqrOptions& opts) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (pattern.n_blocks <= 0 || m % pattern.n_blocks != 0 || n % pattern.n_blocks != 0)
    throw InputError("structured_lqr: pattern block count incompatible with dimensions");
  const Mat mask = pattern.entry_mask(m / pattern.n_blocks, n / pattern.n_blocks);
  auto project = [&](const Mat& K) { return (K.array() * mask.array()).matrix().eval(); };

  // dense initializer; retried with a prescribed-stability shift when modes
  // hug the imaginary axis and the plain Riccati solve is ill-conditioned
  Mat K_dense;
  try {
    K_dense = lqr_gain(A, B, Q, R).first;
  } catch (const NumericalError&) {
    K_dense = lqr_gain(A + 0.02 * Mat::Identity(n, n), B, Q, R).first;
  }

  Mat G = project(K_dense);
  Mat K = G;
  Mat U = Mat::Zero(m, n);
  // a projected dense gain may not be stabilizing; fall back to zero (valid
  // for stable A) before entering the smooth step
  if (!is_hurwitz(A + B * K)) {
    K = Mat::Zero(m, n);
    G = K;
    if (!is_hurwitz(A)) throw InfeasibleError("structured_lqr: no stabilizing starting point");
  }

  for (int it = 0; it < opts.max_iter; ++it) {
    K = smooth_step(A, B, Q, R, K, G - U, opts.rho, opts.inner_iter);
    const Mat G_prev = G;
    G = project(K + U);
    U += K - G;
    const double primal = (K - G).norm();
    const double dual = opts.rho * (G - G_prev).norm();
    if (primal < opts.tol && dual < opts.tol) break;
  }

  // exact-sparsity polish: projected gradient on the allowed entries
  Mat Ks = G;
  if (!is_hurwitz(A + B * Ks)) {
    Ks = project(K);
    if (!is_hurwitz(A + B * Ks)) {
      Ks = Mat::Zero(m, n);
      if (!is_hurwitz(A)) throw InfeasibleError("structured_lqr: no stabilizing structured gain");
    }
  }
  double f = lqr_cost(A, B, Q, R, Ks);
  for (int it = 0; it < opts.polish_iter; ++it) {
    const Mat g = project(lqr_cost_gradient(A, B, Q, R, Ks));
    const double gn = g.norm();
    if (gn < opts.polish_tol * std::max(1.0, Ks.norm())) break;
    double t = 1.0 / std::max(1.0, gn);
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Mat Kt = Ks - t * g;
      const double ft = lqr_cost(A, B, Q, R, Kt);
      if (ft < f - 1e-4 * t * gn * gn) {
        Ks = Kt;
        f = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }

  if (!is_hurwitz(A + B * Ks))
    throw InfeasibleError("structured_lqr: result is not stabilizing");

  WideAreaGain out;
  out.K = Ks;
  out.pattern = pattern;
  out.J = lqr_cost(A, B, Q, R, Ks);
  return out;
}

GeneratorDesignModel generator_design_model(const LinearSystem& lin, const NetworkModel& net) {
  GeneratorDesignModel gd;
  gd.gen_buses = net.buses_of_kind(BusKind::Generator);
  for (int b : gd.gen_buses) {
    const int so = lin.bus_state_offset(b);
    const int nc = lin.state_count[static_cast<size_t>(b - 1)];
    for (int i = 0; i < nc; ++i) gd.state_rows.push_back(so + i);
    const int io = lin.bus_input_offset(b);
    const int mc = lin.input_count[static_cast<size_t>(b - 1)];
    for (int i = 0; i < mc; ++i) gd.input_cols.push_back(io + i);
  }
  const int ns = static_cast<int>(gd.state_rows.size());
  const int mi = static_cast<int>(gd.input_cols.size());
  gd.A = Mat(ns, ns);
  gd.B = Mat(ns, mi);
  for (int r = 0; r < ns; ++r) {
    for (int c = 0; c < ns; ++c)
      gd.A(r, c) = lin.A(gd.state_rows[static_cast<size_t>(r)], gd.state_rows[static_cast<size_t>(c)]);
    for (int c = 0; c < mi; ++c)
      gd.B(r, c) = lin.B(gd.state_rows[static_cast<size_t>(r)], gd.input_cols[static_cast<size_t>(c)]);
  }
  return gd;
}

Mat closed_loop_wac(const LinearSystem& lin, const NetworkModel& net, const WacController& wac) {
  const GeneratorDesignModel gd = generator_design_model(lin, net);
  if (wac.K.rows() != static_cast<Eigen::Index>(gd.input_cols.size()) ||
      wac.K.cols() != static_cast<Eigen::Index>(gd.state_rows.size()))
    throw InputError("closed_loop_wac: gain dimensions do not match the generator blocks");
  Mat Acl = lin.A;
  // A_cl = A + B_G K S_G with S_G selecting generator state deviations
  for (size_t ci = 0; ci < gd.input_cols.size(); ++ci)
    for (size_t sj = 0; sj < gd.state_rows.size(); ++sj)
      Acl.col(gd.state_rows[sj]) +=
          lin.B.col(gd.input_cols[ci]) * wac.K(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(sj));
  return Acl;
}

Mat closed_loop_retrofit(const Linearization& lin, const SystemModel& sys,
                         const std::vector<RetrofitController>& ctrls) {
  const int n = static_cast<int>(lin.sys.A.rows());
  int n_hat = 0;
  for (const auto& c : ctrls) n_hat += static_cast<int>(c.A().rows());

  // voltage sensitivity dV/dx from the algebraic constraint
  Eigen::FullPivLU<Mat> lu(lin.dae.G_VV);
  const Mat Mv = -lu.solve(lin.dae.G_Vx);  // 2N x n

  Mat Aa = Mat::Zero(n + n_hat, n + n_hat);
  Aa.topLeftCorner(n, n) = lin.sys.A;
  int off = n;
  for (const auto& c : ctrls) {
    const int b = c.bus();
    const int nk = static_cast<int>(c.A().rows());
    const int xo = lin.sys.bus_state_offset(b);
    const int uo = lin.sys.bus_input_offset(b);
    const int mk = static_cast<int>(c.B().cols());
    if (xo < 0 || uo < 0) throw InputError("closed_loop_retrofit: controller bus has no states");

    const Mat BK = lin.sys.B.middleCols(uo, mk) * c.K();  // n x nk
    Aa.block(0, xo, n, nk) += BK;
    Aa.block(0, off, n, nk) -= BK;

    // compensator: d(dx^)/dt = A_k dx^ + df~, with
    // df~ = (J_x - A_k) dx_k + (J_u - B_k) du + Fv dV and dV = Mv dx.
    // The correction terms vanish when the controller carries the same local
    // Jacobians, but are kept for externally supplied models.
    const Vec u0 = Vec::Zero(mk);
    const ComponentJacobians j = component_jacobians(
        sys.component(b), sys.component(b).x_star(), sys.component(b).V_star(), u0);
    const Mat dBK = (j.B - c.B()) * c.K();
    Aa.block(off, 0, nk, n) = j.Fv * Mv.middleRows(2 * (b - 1), 2);
    Aa.block(off, xo, nk, nk) += (j.A - c.A()) + dBK;
    Aa.block(off, off, nk, nk) = c.A() - dBK;
    off += nk;
  }
  return Aa;
}

}  // namespace gridkit
