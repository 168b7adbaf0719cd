#include "gridkit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gridkit {

namespace {

struct ControllerLayout {
  std::vector<int> offset;  // into the stacked compensator state
  int total = 0;
};

ControllerLayout layout_controllers(const std::vector<RetrofitController>& cs) {
  ControllerLayout l;
  for (const auto& c : cs) {
    l.offset.push_back(l.total);
    l.total += static_cast<int>(c.A().rows());
  }
  return l;
}

}  // namespace

int Trajectory::col_of_time(double t) const {
  if (times.empty()) throw InputError("empty trajectory");
  size_t best = 0;
  double bd = std::abs(times[0] - t);
  for (size_t i = 1; i < times.size(); ++i) {
    const double d = std::abs(times[i] - t);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return static_cast<int>(best);
}

void apply_fault(const SystemModel& sys, const StateImpulse& f, Vec& x) {
  const int idx = sys.state_index(f.bus, f.state);
  x(idx) = f.scale ? f.value * x(idx) : f.value;
}

namespace {

class TrapezoidalDae {
 public:
  TrapezoidalDae(const SystemModel& sys, std::vector<RetrofitController>& ctrls,
                 const std::optional<WacController>& wac, const SimOptions& opt)
      : sys_(sys), ctrls_(ctrls), wac_(wac), opt_(opt), N_(sys.n_buses()),
        nx_(sys.n_states()), nu_(sys.n_inputs()), lay_(layout_controllers(ctrls)) {
    if (wac_) {
      for (int b : wac_->gen_buses)
        if (sys_.component(b).n_inputs() != 1)
          throw InputError("wide-area controller expects one input per generator bus");
    }
    x_star_ = sys.x_star();
  }

  int nx() const { return nx_; }
  int nh() const { return lay_.total; }
  int nz() const { return nx_ + lay_.total + 2 * N_; }

  Vec assemble_u(const Vec& x, const Vec& xh) const {
    Vec u = Vec::Zero(nu_);
    for (size_t i = 0; i < ctrls_.size(); ++i) {
      const auto& c = ctrls_[i];
      const int b = c.bus();
      const int nk = sys_.component(b).n_states();
      const Vec xk = x.segment(sys_.state_offset(b), nk);
      const Vec xhk = xh.segment(lay_.offset[i], nk);
      u.segment(sys_.input_offset(b), c.K().rows()) += c.K() * (xk - xhk);
    }
    if (wac_) {
      // stack generator state deviations in the controller's bus order
      Vec xi(wac_->K.cols());
      int off = 0;
      for (int b : wac_->gen_buses) {
        const int nk = sys_.component(b).n_states();
        xi.segment(off, nk) = x.segment(sys_.state_offset(b), nk) -
                              x_star_.segment(sys_.state_offset(b), nk);
        off += nk;
      }
      const Vec ug = wac_->K * xi;
      for (size_t i = 0; i < wac_->gen_buses.size(); ++i)
        u(sys_.input_offset(wac_->gen_buses[i])) += ug(static_cast<Eigen::Index>(i));
    }
    return u;
  }

  // compensator derivatives, reusing the already-evaluated plant dynamics
  Vec xhat_dot(const Vec& x, const Vec& xh, const Vec& u, const Vec& f_all) const {
    Vec d(lay_.total);
    for (size_t i = 0; i < ctrls_.size(); ++i) {
      const auto& c = ctrls_[i];
      const int b = c.bus();
      const int nk = sys_.component(b).n_states();
      const Vec xk = x.segment(sys_.state_offset(b), nk);
      const Vec xhk = xh.segment(lay_.offset[i], nk);
      const Vec uk = u.segment(sys_.input_offset(b), c.B().cols());
      const Vec fk = f_all.segment(sys_.state_offset(b), nk);
      d.segment(lay_.offset[i], nk) = c.A() * xhk + fk - c.A() * xk - c.B() * uk;
    }
    return d;
  }

  struct Eval {
    Vec f;    // plant dynamics
    Vec hd;   // compensator dynamics
    CVec S;   // injections
  };

  Eval eval(const Vec& x, const Vec& xh, const CVec& V) const {
    Eval e;
    const Vec u = assemble_u(x, xh);
    e.f = sys_.dynamics(x, V, u);
    e.hd = xhat_dot(x, xh, u, e.f);
    e.S = sys_.outputs(x, V);
    return e;
  }

  // residual of one trapezoidal step, z = [x+, xh+, ReV+/ImV+ interleaved]
  Vec residual(const Vec& z, const Vec& x0, const Vec& xh0, const Eval& e0, double h,
               const CMat& Y) const {
    const Vec x = z.head(nx_);
    const Vec xh = z.segment(nx_, lay_.total);
    CVec V(N_);
    for (int k = 0; k < N_; ++k)
      V(k) = Complex(z(nx_ + lay_.total + 2 * k), z(nx_ + lay_.total + 2 * k + 1));
    const Eval e = eval(x, xh, V);

    Vec r(nz());
    r.head(nx_) = x - x0 - 0.5 * h * (e0.f + e.f);
    r.segment(nx_, lay_.total) = xh - xh0 - 0.5 * h * (e0.hd + e.hd);
    const CVec mis = (Y * V).conjugate().cwiseProduct(V) - e.S;
    for (int k = 0; k < N_; ++k) {
      r(nx_ + lay_.total + 2 * k) = mis(k).real();
      r(nx_ + lay_.total + 2 * k + 1) = mis(k).imag();
    }
    return r;
  }

  // input sensitivity matrices du/dx (nu x nx) and du/dxh (nu x nh); exact
  // since the feedback laws are linear in the states
  void input_sensitivities(Mat& Ux, Mat& Uh) const {
    Ux = Mat::Zero(nu_, nx_);
    Uh = Mat::Zero(nu_, lay_.total);
    for (size_t i = 0; i < ctrls_.size(); ++i) {
      const auto& c = ctrls_[i];
      const int b = c.bus();
      const int nk = sys_.component(b).n_states();
      Ux.block(sys_.input_offset(b), sys_.state_offset(b), c.K().rows(), nk) += c.K();
      Uh.block(sys_.input_offset(b), lay_.offset[i], c.K().rows(), nk) -= c.K();
    }
    if (wac_) {
      int col = 0;
      for (int b : wac_->gen_buses) {
        const int nk = sys_.component(b).n_states();
        for (size_t ri = 0; ri < wac_->gen_buses.size(); ++ri) {
          const int rb = wac_->gen_buses[ri];
          Ux.block(sys_.input_offset(rb), sys_.state_offset(b), 1, nk) +=
              wac_->K.block(static_cast<Eigen::Index>(ri), col, 1, nk);
        }
        col += nk;
      }
    }
  }

  // approximate Newton matrix for the step, built from component Jacobians
  // at the given point; the residual itself stays exact
  Mat newton_matrix(const Vec& x, const Vec& xh, const CVec& V, double h, const CMat& Y) const {
    const Vec u = assemble_u(x, xh);
    Mat Ux, Uh;
    input_sensitivities(Ux, Uh);

    Mat Fx = Mat::Zero(nx_, nx_);
    Mat Fv = Mat::Zero(nx_, 2 * N_);
    Mat Gx = Mat::Zero(2 * N_, nx_);
    Mat Gv = Mat::Zero(2 * N_, 2 * N_);
    Mat Bfull = Mat::Zero(nx_, nu_);

    // network part of the algebraic Jacobian
    const CVec W = Y * V;
    for (int k = 0; k < N_; ++k) {
      for (int m = 0; m < N_; ++m) {
        if (Y(k, m) == Complex(0.0, 0.0) && k != m) continue;
        Complex de = V(k) * std::conj(Y(k, m));
        Complex df = -Complex(0, 1) * V(k) * std::conj(Y(k, m));
        if (k == m) {
          de += std::conj(W(k));
          df += Complex(0, 1) * std::conj(W(k));
        }
        Gv(2 * k, 2 * m) = de.real();
        Gv(2 * k + 1, 2 * m) = de.imag();
        Gv(2 * k, 2 * m + 1) = df.real();
        Gv(2 * k + 1, 2 * m + 1) = df.imag();
      }
    }

    std::vector<ComponentJacobians> jc(static_cast<size_t>(N_) + 1);
    for (int b = 1; b <= N_; ++b) {
      const Component& c = sys_.component(b);
      const int nk = c.n_states();
      const int xo = sys_.state_offset(b);
      const ComponentJacobians j = component_jacobians(
          c, x.segment(xo, nk), V(b - 1), u.segment(sys_.input_offset(b), c.n_inputs()));
      jc[static_cast<size_t>(b)] = j;
      if (nk > 0) {
        Fx.block(xo, xo, nk, nk) = j.A;
        Fv.block(xo, 2 * (b - 1), nk, 2) = j.Fv;
        if (c.n_inputs() > 0) Bfull.block(xo, sys_.input_offset(b), nk, c.n_inputs()) = j.B;
        Gx.block(2 * (b - 1), xo, 2, nk) = -j.Cg;
      }
      Gv.block(2 * (b - 1), 2 * (b - 1), 2, 2) -= j.Dg;
    }
    Fx += Bfull * Ux;
    const Mat Fh = Bfull * Uh;

    Mat Hx = Mat::Zero(lay_.total, nx_);
    Mat Hh = Mat::Zero(lay_.total, lay_.total);
    Mat Hv = Mat::Zero(lay_.total, 2 * N_);
    for (size_t i = 0; i < ctrls_.size(); ++i) {
      const auto& c = ctrls_[i];
      const int b = c.bus();
      const int nk = static_cast<int>(c.A().rows());
      const int ho = lay_.offset[i];
      const ComponentJacobians& j = jc[static_cast<size_t>(b)];
      // d/dx: J_x - A0 at own plant block plus (J_u - B0) du/dx everywhere
      Hx.block(ho, sys_.state_offset(b), nk, nk) += j.A - c.A();
      const Mat dB = j.B - c.B();
      Hx.block(ho, 0, nk, nx_) += dB * Ux.middleRows(sys_.input_offset(b), c.B().cols());
      Hh.block(ho, 0, nk, lay_.total) += dB * Uh.middleRows(sys_.input_offset(b), c.B().cols());
      Hh.block(ho, ho, nk, nk) += c.A();
      Hv.block(ho, 2 * (b - 1), nk, 2) = j.Fv;
    }

    Mat J = Mat::Zero(nz(), nz());
    J.topLeftCorner(nx_, nx_) = Mat::Identity(nx_, nx_) - 0.5 * h * Fx;
    J.block(0, nx_, nx_, lay_.total) = -0.5 * h * Fh;
    J.block(0, nx_ + lay_.total, nx_, 2 * N_) = -0.5 * h * Fv;
    J.block(nx_, 0, lay_.total, nx_) = -0.5 * h * Hx;
    J.block(nx_, nx_, lay_.total, lay_.total) =
        Mat::Identity(lay_.total, lay_.total) - 0.5 * h * Hh;
    J.block(nx_, nx_ + lay_.total, lay_.total, 2 * N_) = -0.5 * h * Hv;
    J.block(nx_ + lay_.total, 0, 2 * N_, nx_) = Gx;
    J.block(nx_ + lay_.total, nx_ + lay_.total, 2 * N_, 2 * N_) = Gv;
    return J;
  }

  const SystemModel& sys_;
  std::vector<RetrofitController>& ctrls_;
  const std::optional<WacController>& wac_;
  const SimOptions& opt_;
  int N_, nx_, nu_;
  ControllerLayout lay_;
  Vec x_star_;
};

CVec pack_V(const Vec& z, int off, int N) {
  CVec V(N);
  for (int k = 0; k < N; ++k) V(k) = Complex(z(off + 2 * k), z(off + 2 * k + 1));
  return V;
}

}  // namespace

Trajectory simulate(const SystemModel& sys, const std::vector<FaultSpec>& faults,
                    std::vector<RetrofitController> retrofits,
                    const std::optional<WacController>& wac, double t_end,
                    const SimOptions& opt) {
  if (!sys.operating_point().valid)
    throw InputError("simulate: system has no operating point");
  if (t_end <= 0.0) throw InputError("simulate: t_end must be positive");
  for (auto& c : retrofits) {
    if (c.bus() < 1 || c.bus() > sys.n_buses() ||
        sys.component(c.bus()).n_states() != c.A().rows())
      throw InputError("simulate: controller does not match its bus");
    c.reset();
  }

  const int N = sys.n_buses();
  TrapezoidalDae dae(sys, retrofits, wac, opt);

  // event schedule: impulses and fault edges land exactly on grid points
  std::map<double, std::vector<int>> impulses_at;  // time -> fault index
  std::map<double, std::vector<std::pair<int, bool>>> shunt_at;  // time -> (bus, on)
  std::set<double> edges{0.0, t_end};
  for (size_t i = 0; i < faults.size(); ++i) {
    if (std::holds_alternative<StateImpulse>(faults[i])) {
      const auto& f = std::get<StateImpulse>(faults[i]);
      if (f.time < 0.0 || f.time > t_end) throw InputError("fault time outside the horizon");
      impulses_at[f.time].push_back(static_cast<int>(i));
      edges.insert(f.time);
    } else {
      const auto& f = std::get<ThreePhaseBusFault>(faults[i]);
      if (f.clearing_time <= 0.0) throw InputError("fault clearing time must be positive");
      if (f.bus < 1 || f.bus > N) throw InputError("fault bus out of range");
      shunt_at[f.t_on].push_back({f.bus, true});
      shunt_at[f.t_on + f.clearing_time].push_back({f.bus, false});
      edges.insert(f.t_on);
      edges.insert(std::min(f.t_on + f.clearing_time, t_end));
    }
  }

  const CMat Y_base = sys.network().Y();
  CMat Y = Y_base;
  std::multiset<int> faulted_buses;

  Vec x = sys.x_star();
  Vec xh(dae.nh());
  {
    int off = 0;
    for (const auto& c : retrofits) {
      xh.segment(off, c.x_hat().size()) = c.x_hat();
      off += static_cast<int>(c.x_hat().size());
    }
  }
  CVec V = sys.operating_point().V_star;

  // count log points
  std::vector<double> seg_edges(edges.begin(), edges.end());
  int total_steps = 0;
  for (size_t s = 0; s + 1 < seg_edges.size(); ++s) {
    const double len = seg_edges[s + 1] - seg_edges[s];
    if (len <= 0.0) continue;
    total_steps += static_cast<int>(std::ceil(len / opt.dt - 1e-12));
  }

  Trajectory traj;
  traj.state_labels = sys.state_labels();
  traj.input_labels = sys.input_labels();
  const int n_log = total_steps + 1;
  traj.states.resize(sys.n_states(), n_log);
  traj.xhat.resize(dae.nh(), n_log);
  traj.voltages.resize(N, n_log);
  traj.injections.resize(N, n_log);
  traj.inputs.resize(sys.n_inputs(), n_log);
  traj.alg_residual.assign(static_cast<size_t>(n_log), 0.0);

  // auxiliary channels (duty cycles and similar)
  std::vector<int> aux_bus;
  {
    Vec u0 = Vec::Zero(sys.n_inputs());
    for (int b = 1; b <= N; ++b) {
      const Component& c = sys.component(b);
      const auto a = c.aux_outputs(c.x_star(), sys.operating_point().V_star(b - 1),
                                   u0.segment(sys.input_offset(b), c.n_inputs()));
      for (const auto& kv : a) {
        traj.aux_labels.emplace_back(b, kv.first);
        aux_bus.push_back(b);
      }
    }
  }
  traj.aux.resize(static_cast<Eigen::Index>(traj.aux_labels.size()), n_log);

  auto check_voltage = [&](double t) {
    for (int k = 0; k < N; ++k) {
      if (faulted_buses.count(k + 1)) continue;
      if (std::abs(V(k)) < opt.v_guard)
        throw SimulationDivergedError("voltage collapse at bus " + std::to_string(k + 1), t);
    }
  };

  // re-solve the algebraic constraint for V at fixed states; `start` picks
  // the Newton starting profile. Damped steps keep the iterates off the
  // spurious all-zero voltage branch.
  auto consistent_voltage_from = [&](double t, const CVec& start) {
    CVec Vn = start;
    double rn = sys.algebraic_residual(Y, x, Vn).cwiseAbs().maxCoeff();
    for (int it = 0; it < 80; ++it) {
      const CVec mis = sys.algebraic_residual(Y, x, Vn);
      if (mis.cwiseAbs().maxCoeff() < opt.alg_tol) {
        V = Vn;
        check_voltage(t);
        return;
      }
      // Jacobian of the algebraic system in rectangular coordinates
      Mat G = Mat::Zero(2 * N, 2 * N);
      const CVec W = Y * Vn;
      for (int k = 0; k < N; ++k)
        for (int m = 0; m < N; ++m) {
          if (Y(k, m) == Complex(0.0, 0.0) && k != m) continue;
          Complex de = Vn(k) * std::conj(Y(k, m));
          Complex df = -Complex(0, 1) * Vn(k) * std::conj(Y(k, m));
          if (k == m) {
            de += std::conj(W(k));
            df += Complex(0, 1) * std::conj(W(k));
          }
          G(2 * k, 2 * m) = de.real();
          G(2 * k + 1, 2 * m) = de.imag();
          G(2 * k, 2 * m + 1) = df.real();
          G(2 * k + 1, 2 * m + 1) = df.imag();
        }
      // subtract component voltage sensitivities
      Vec u = dae.assemble_u(x, xh);
      for (int b = 1; b <= N; ++b) {
        const Component& c = sys.component(b);
        const ComponentJacobians j =
            component_jacobians(c, x.segment(sys.state_offset(b), c.n_states()), Vn(b - 1),
                                u.segment(sys.input_offset(b), c.n_inputs()));
        G.block(2 * (b - 1), 2 * (b - 1), 2, 2) -= j.Dg;
      }
      Vec rhs(2 * N);
      for (int k = 0; k < N; ++k) {
        rhs(2 * k) = mis(k).real();
        rhs(2 * k + 1) = mis(k).imag();
      }
      const Vec dv = G.partialPivLu().solve(rhs);
      bool moved = false;
      double lam = 1.0;
      for (int halve = 0; halve < 30; ++halve) {
        CVec Vt = Vn;
        for (int k = 0; k < N; ++k) Vt(k) -= lam * Complex(dv(2 * k), dv(2 * k + 1));
        if (Vt.allFinite()) {
          const double rt = sys.algebraic_residual(Y, x, Vt).cwiseAbs().maxCoeff();
          if (rt < rn) {
            Vn = Vt;
            rn = rt;
            moved = true;
            break;
          }
        }
        lam *= 0.5;
      }
      if (!moved) throw SimulationDivergedError("algebraic network solve stalled", t);
    }
    throw SimulationDivergedError("algebraic network solve failed", t);
  };

  // after topology changes the previous profile may sit on the collapsed
  // branch (V = 0 solves the balance with impedance loads); fall back to the
  // operating-point profile before declaring divergence
  auto consistent_voltage = [&](double t) {
    try {
      consistent_voltage_from(t, V);
    } catch (const SimulationDivergedError&) {
      consistent_voltage_from(t, sys.operating_point().V_star);
    }
  };

  // previous accepted step, for the linear extrapolation predictor
  Vec z_prev;
  double h_prev = 0.0;

  // stage large admittance edits so Newton tracks the physical branch instead
  // of jumping to the all-zero solution; the ladder is geometric at both ends
  // (a fault shunt spans six orders of magnitude)
  auto retarget_voltage = [&](double t, const CMat& Y_from) {
    const CMat Y_to = Y;
    static const double ladder[] = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1,     0.5,
                                    0.9,  0.99, 1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1.0};
    for (double lam : ladder) {
      Y = Y_from + lam * (Y_to - Y_from);
      consistent_voltage(t);
    }
    Y = Y_to;
  };

  int col = 0;
  auto log_point = [&](double t) {
    traj.times.push_back(t);
    traj.states.col(col) = x;
    traj.xhat.col(col) = xh;
    traj.voltages.col(col) = V;
    traj.injections.col(col) = sys.outputs(x, V);
    const Vec u = dae.assemble_u(x, xh);
    traj.inputs.col(col) = u;
    traj.alg_residual[static_cast<size_t>(col)] =
        sys.algebraic_residual(Y, x, V).cwiseAbs().maxCoeff();
    int ai = 0;
    for (int b = 1; b <= N; ++b) {
      const Component& c = sys.component(b);
      const auto a = c.aux_outputs(x.segment(sys.state_offset(b), c.n_states()), V(b - 1),
                                   u.segment(sys.input_offset(b), c.n_inputs()));
      for (const auto& kv : a) traj.aux(ai++, col) = kv.second;
    }
    ++col;
  };

  Eigen::PartialPivLU<Mat> lu;
  bool jac_valid = false;
  int last_iters = 0;

  auto step_once = [&](double t0, double h, int depth_left) {
    auto impl = [&](double t0_, double h_, int depth, auto&& self) -> void {
      Vec z(dae.nz());
      z.head(dae.nx()) = x;
      z.segment(dae.nx(), dae.nh()) = xh;
      for (int k = 0; k < N; ++k) {
        z(dae.nx() + dae.nh() + 2 * k) = V(k).real();
        z(dae.nx() + dae.nh() + 2 * k + 1) = V(k).imag();
      }
      const Vec z0 = z;
      if (h_prev > 0.0 && z_prev.size() == z.size())
        z += (h_ / h_prev) * (z - z_prev);  // extrapolation predictor
      const TrapezoidalDae::Eval e0 = dae.eval(x, xh, V);

      auto try_solve = [&](bool fresh) -> bool {
        if (fresh || !jac_valid) {
          lu.compute(dae.newton_matrix(x, xh, V, h_, Y));
          jac_valid = true;
        }
        Vec zi = z;
        for (int it = 0; it < opt.max_newton; ++it) {
          Vec r;
          try {
            r = dae.residual(zi, x, xh, e0, h_, Y);
          } catch (const DegenerateError&) {
            return false;
          }
          if (!r.allFinite()) return false;
          if (r.cwiseAbs().maxCoeff() < opt.alg_tol) {
            z = zi;
            last_iters = it;
            return true;
          }
          zi -= lu.solve(r);
        }
        return false;
      };

      bool ok = try_solve(last_iters > 4);
      if (!ok) {
        z = z0;  // retry from the unextrapolated point with a fresh Jacobian
        ok = try_solve(true);
      }
      if (!ok) {
        if (depth <= 0)
          throw StepFailureError("step size underflow at t = " + std::to_string(t0_));
        jac_valid = false;
        self(t0_, 0.5 * h_, depth - 1, self);
        self(t0_ + 0.5 * h_, 0.5 * h_, depth - 1, self);
        return;
      }
      z_prev = z0;
      h_prev = h_;
      x = z.head(dae.nx());
      xh = z.segment(dae.nx(), dae.nh());
      V = pack_V(z, dae.nx() + dae.nh(), N);
      check_voltage(t0_ + h_);
    };
    impl(t0, h, depth_left, impl);
  };

  // voltage profile snapshot from just before the most recent fault install,
  // used to restart the algebraic solve when a fault clears
  CVec V_pre_fault = sys.operating_point().V_star;

  // start profile anchored at the machine flux states: the operating-point
  // voltages scaled by mean(E/E*) and rotated by mean(delta - delta*); after
  // a cleared fault the wound-up exciters put the solution in this basin
  auto emf_start = [&]() {
    double scale = 0.0, rot = 0.0;
    int n_mach = 0;
    for (int b = 1; b <= N; ++b) {
      const Component& c = sys.component(b);
      const auto& names = c.state_names();
      if (!names.empty() && names[0] == "delta") {
        const int off = sys.state_offset(b);
        rot += x(off) - c.x_star()(0);
        if (names.size() >= 3 && names[2] == "E" && c.x_star()(2) > 1e-9)
          scale += x(off + 2) / c.x_star()(2);
        else
          scale += 1.0;
        ++n_mach;
      }
    }
    CVec Vs = sys.operating_point().V_star;
    if (n_mach > 0) Vs *= std::polar(scale / n_mach, rot / n_mach);
    return Vs;
  };

  // applies impulses and admittance edits scheduled at time t
  auto apply_events_at = [&](double t) {
    bool state_changed = false, topo_changed = false;
    const CMat Y_prev = Y;
    std::vector<int> cleared;
    if (auto it = impulses_at.find(t); it != impulses_at.end()) {
      for (int fi : it->second)
        apply_fault(sys, std::get<StateImpulse>(faults[static_cast<size_t>(fi)]), x);
      state_changed = true;
    }
    if (auto it = shunt_at.find(t); it != shunt_at.end()) {
      bool installed = false;
      for (auto [bus, on] : it->second) {
        if (on) {
          if (!installed) {
            V_pre_fault = V;
            installed = true;
          }
          Y(bus - 1, bus - 1) += opt.fault_shunt;
          faulted_buses.insert(bus);
        } else {
          Y(bus - 1, bus - 1) -= opt.fault_shunt;
          cleared.push_back(bus);
        }
      }
      topo_changed = true;
    }
    if (topo_changed) {
      if (cleared.empty()) {
        retarget_voltage(t, Y_prev);
      } else {
        // a cleared fault leaves the previous profile in the collapsed basin;
        // restart the algebraic solve from physically plausible profiles
        for (int bus : cleared) faulted_buses.erase(faulted_buses.find(bus));
        bool solved = false;
        for (const CVec& start : {emf_start(), V_pre_fault, sys.operating_point().V_star}) {
          try {
            consistent_voltage_from(t, start);
            solved = true;
            break;
          } catch (const SimulationDivergedError&) {
          }
        }
        if (!solved)
          throw SimulationDivergedError("algebraic restart after fault clearing failed", t);
      }
      check_voltage(t);
    } else if (state_changed) {
      consistent_voltage(t);
    }
    if (state_changed || topo_changed) {
      jac_valid = false;
      h_prev = 0.0;  // do not extrapolate across a discontinuity
    }
    return state_changed || topo_changed;
  };

  apply_events_at(0.0);
  log_point(0.0);

  for (size_t s = 0; s + 1 < seg_edges.size(); ++s) {
    const double t0 = seg_edges[s];
    const double t1 = seg_edges[s + 1];
    const double len = t1 - t0;
    if (len <= 0.0) continue;

    if (t0 > 0.0) apply_events_at(t0);

    const int n_steps = static_cast<int>(std::ceil(len / opt.dt - 1e-12));
    const double h = len / n_steps;
    jac_valid = false;
    for (int k = 0; k < n_steps; ++k) {
      step_once(t0 + k * h, h, 24);
      log_point(t0 + (k + 1) * h);
    }
  }

  // restore any still-active fault shunts is unnecessary: Y is local
  return traj;
}

}  // namespace gridkit
