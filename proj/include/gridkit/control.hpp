#pragma once

#include <optional>

#include "gridkit/control_math.hpp"
#include "gridkit/linearization.hpp"
#include "gridkit/system.hpp"

namespace gridkit {

/// Decentralized compensator for one DER:
///   d(x^)/dt = A x^ + f~(x, u, V),   u = K (x - x^),   x^(0) = x*,
/// where f~ is the nonlinear remainder f(x,V,u) - (A x + B u) of the local
/// model. Stability of the interconnection holds for any K making A + BK
/// Hurwitz.
class RetrofitController {
 public:
  RetrofitController(int bus, Mat A, Mat B, Mat K, Vec x_star);

  int bus() const { return bus_; }
  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  const Mat& K() const { return K_; }
  const Vec& x_hat() const { return x_hat_; }
  void set_x_hat(const Vec& xh) { x_hat_ = xh; }
  void reset() { x_hat_ = x_star_; }
  const Vec& x_star() const { return x_star_; }

  Vec control(const Vec& x_k) const { return K_ * (x_k - x_hat_); }

  /// Nonlinear remainder f~ evaluated through the component dynamics.
  Vec remainder(const Component& comp, const Vec& x_k, Complex V_k, const Vec& u_k) const;

  /// Compensator time derivative.
  Vec xhat_dot(const Component& comp, const Vec& x_k, Complex V_k, const Vec& u_k) const;

 private:
  int bus_;
  Mat A_, B_, K_;
  Vec x_star_;
  Vec x_hat_;
};

struct RetrofitWeights {
  double state = 1.0;    // default diagonal weight
  double current = 10.0; // weight on converter/machine current states
  double input = 1.0;    // R = input * I
};

/// Builds a retrofit controller for the component at `bus`, linearizing
/// locally at its stored equilibrium. If no gain is supplied, an LQR gain
/// with the given weights is designed. Throws RejectedGainError when the
/// supplied gain does not make A + BK Hurwitz.
RetrofitController make_retrofit(const Component& comp, int bus,
                                 const std::optional<Mat>& K = std::nullopt,
                                 const RetrofitWeights& weights = {});

/// One trapezoidal update of the compensator with the remainder held at the
/// supplied plant sample; returns the new control value.
Vec retrofit_step(RetrofitController& ctrl, const Component& comp, const Vec& x_k, Complex V_k,
                  const Vec& u_k_prev, double dt);

/// Overlapping generator groups inducing a block-sparsity structure:
/// block (i,j) of the wide-area gain may be nonzero iff some group contains
/// both i and j. Indices are 0-based positions in the generator list.
struct SparsityPattern {
  int n_blocks = 0;
  std::vector<std::vector<int>> groups;

  bool allowed(int i, int j) const;
  Mat block_mask() const;  // n_blocks x n_blocks of 0/1
  /// Entry-level mask for block rows of height `row_per_block` and block
  /// columns of width `col_per_block`.
  Mat entry_mask(int row_per_block, int col_per_block) const;
  static SparsityPattern all_allowed(int n_blocks);
};

/// Groups generators by dominant participation in retained inter-area modes:
/// G_l = { i : |residue_il| >= mu }. Modes with no member above mu are
/// dropped; generators in no group get singleton groups.
/// `md` must carry one output row per generator (frequency deviations).
SparsityPattern build_groups(const ModalDecomposition& md, double mu);

struct WideAreaGain {
  Mat K;  // m x n with the pattern's zero blocks exactly zero
  SparsityPattern pattern;
  double J = 0.0;  // achieved cost, tr of the closed-loop Lyapunov solution
  std::vector<int> gen_buses;  // 1-based bus per block, design order
};

struct StructuredLqrOptions {
  double rho = 1.0;
  double tol = 1e-6;     // ADMM primal/dual residual stop
  int max_iter = 500;
  int inner_iter = 60;   // smooth-step gradient iterations
  double polish_tol = 1e-9;
  int polish_iter = 400;
};

/// Pattern-constrained LQR via ADMM (indicator of the sparsity subspace;
/// projection is exact block zeroing), initialized at the projected dense
/// gain and polished by projected gradient descent. Guarantees the returned
/// gain is exactly sparse and stabilizing, else throws InfeasibleError.
WideAreaGain structured_lqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                            const SparsityPattern& pattern, const StructuredLqrOptions& opts = {});

/// Static wide-area feedback u_G = K (x_G - x_G*) applied to generator
/// inputs; gen_buses lists the generator buses in block order.
struct WacController {
  Mat K;
  std::vector<int> gen_buses;
};

/// Design-model restriction of the full linearization to generator states
/// and generator inputs (DER dynamics ignored in the design model).
struct GeneratorDesignModel {
  Mat A;  // 7|G| x 7|G|
  Mat B;  // 7|G| x |G|
  std::vector<int> gen_buses;
  std::vector<int> state_rows;  // rows of the full model kept
  std::vector<int> input_cols;
};
GeneratorDesignModel generator_design_model(const LinearSystem& lin, const NetworkModel& net);

/// Wires u = K (x_G - x_G*) into the full linear model: A_cl = A + B_G K S_G.
Mat closed_loop_wac(const LinearSystem& lin, const NetworkModel& net, const WacController& wac);

/// Closed-loop state matrix of the plant augmented with the retrofit
/// compensator states (plant block first, then one block per controller).
Mat closed_loop_retrofit(const Linearization& lin, const SystemModel& sys,
                         const std::vector<RetrofitController>& ctrls);

}  // namespace gridkit
