#include "gridkit/powerflow.hpp"

#include <algorithm>
#include <cmath>

namespace gridkit {

std::vector<BusConstraint> assemble_constraints(const NetworkModel& net,
                                                const std::vector<DispatchEntry>& dispatch,
                                                int slack_bus) {
  const int n = net.n_buses();
  std::vector<const DispatchEntry*> by_bus(static_cast<size_t>(n), nullptr);
  for (const auto& d : dispatch) {
    if (d.bus < 1 || d.bus > n) throw InputError("dispatch entry for unknown bus");
    by_bus[static_cast<size_t>(d.bus - 1)] = &d;
  }

  if (slack_bus == 0) {
    auto gens = net.buses_of_kind(BusKind::Generator);
    if (gens.empty()) throw InputError("no generator bus available as slack");
    slack_bus = gens.front();
  }
  if (net.kind(slack_bus) != BusKind::Generator)
    throw InputError("slack bus must be a generator bus");

  std::vector<BusConstraint> out(static_cast<size_t>(n));
  for (int b = 1; b <= n; ++b) {
    const auto* d = by_bus[static_cast<size_t>(b - 1)];
    BusConstraint& c = out[static_cast<size_t>(b - 1)];
    switch (net.kind(b)) {
      case BusKind::NonUnit:
        c = {BusConstraintKind::PQ, 0.0, 0.0, 1.0, 0.0};
        break;
      case BusKind::Load:
      case BusKind::Storage:
        if (!d || std::isnan(d->p) || std::isnan(d->q))
          throw InputError("missing P/Q dispatch for bus " + std::to_string(b));
        c = {BusConstraintKind::PQ, d->p, d->q, 1.0, 0.0};
        break;
      case BusKind::Generator:
      case BusKind::Wind:
      case BusKind::Solar:
        if (!d || std::isnan(d->vmag))
          throw InputError("missing voltage dispatch for bus " + std::to_string(b));
        if (d->vmag <= 0.0) throw InputError("non-positive voltage setpoint");
        if (b == slack_bus) {
          c = {BusConstraintKind::Slack, 0.0, 0.0, d->vmag, 0.0};
        } else {
          if (std::isnan(d->p))
            throw InputError("missing P dispatch for bus " + std::to_string(b));
          c = {BusConstraintKind::PV, d->p, 0.0, d->vmag, 0.0};
        }
        break;
    }
  }
  return out;
}

PowerFlowSolution solve_power_flow(const NetworkModel& net,
                                   const std::vector<BusConstraint>& constraints,
                                   const PowerFlowOptions& options) {
  const int n = net.n_buses();
  if (static_cast<int>(constraints.size()) != n)
    throw InputError("constraint count does not match bus count");

  int n_slack = 0;
  for (const auto& c : constraints)
    if (c.kind == BusConstraintKind::Slack) ++n_slack;
  if (n_slack != 1) throw InputError("exactly one slack bus is required");

  const CMat& Y = net.Y();
  const Mat G = Y.real();
  const Mat B = Y.imag();

  // Unknown layout: angles at all non-slack buses, magnitudes at PQ buses.
  std::vector<int> ang_idx, mag_idx;
  for (int i = 0; i < n; ++i) {
    if (constraints[static_cast<size_t>(i)].kind != BusConstraintKind::Slack) ang_idx.push_back(i);
    if (constraints[static_cast<size_t>(i)].kind == BusConstraintKind::PQ) mag_idx.push_back(i);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int nm = static_cast<int>(mag_idx.size());
  const int nu = na + nm;

  // Flat start: setpoint magnitudes, zero angles.
  Vec vm(n), th(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = constraints[static_cast<size_t>(i)];
    vm(i) = (c.kind == BusConstraintKind::PQ) ? 1.0 : c.vmag;
    th(i) = (c.kind == BusConstraintKind::Slack) ? c.theta : 0.0;
  }

  Vec p_calc(n), q_calc(n);
  auto eval_injections = [&]() {
    for (int i = 0; i < n; ++i) {
      double pi = 0.0, qi = 0.0;
      for (int k = 0; k < n; ++k) {
        if (G(i, k) == 0.0 && B(i, k) == 0.0) continue;
        const double dth = th(i) - th(k);
        const double c = std::cos(dth), s = std::sin(dth);
        pi += vm(i) * vm(k) * (G(i, k) * c + B(i, k) * s);
        qi += vm(i) * vm(k) * (G(i, k) * s - B(i, k) * c);
      }
      p_calc(i) = pi;
      q_calc(i) = qi;
    }
  };

  Vec mism(nu);
  auto eval_mismatch = [&]() {
    eval_injections();
    for (int r = 0; r < na; ++r) {
      const int i = ang_idx[static_cast<size_t>(r)];
      mism(r) = constraints[static_cast<size_t>(i)].p - p_calc(i);
    }
    for (int r = 0; r < nm; ++r) {
      const int i = mag_idx[static_cast<size_t>(r)];
      mism(na + r) = constraints[static_cast<size_t>(i)].q - q_calc(i);
    }
    return mism.size() == 0 ? 0.0 : mism.cwiseAbs().maxCoeff();
  };

  double norm = eval_mismatch();
  int it = 0;
  while (norm > options.tol && it < options.max_iter) {
    if (!std::isfinite(norm) || norm > 1e8)
      throw NoConvergenceError("power flow diverged", norm);

    Mat J = Mat::Zero(nu, nu);
    for (int r = 0; r < na; ++r) {
      const int i = ang_idx[static_cast<size_t>(r)];
      if (vm(i) < 1e-12)
        throw NoConvergenceError("power flow diverged (voltage magnitude collapsed)", norm);
      for (int c = 0; c < na; ++c) {
        const int j = ang_idx[static_cast<size_t>(c)];
        if (i == j) {
          J(r, c) = -q_calc(i) - B(i, i) * vm(i) * vm(i);
        } else {
          const double dth = th(i) - th(j);
          J(r, c) = vm(i) * vm(j) * (G(i, j) * std::sin(dth) - B(i, j) * std::cos(dth));
        }
      }
      for (int c = 0; c < nm; ++c) {
        const int j = mag_idx[static_cast<size_t>(c)];
        if (i == j) {
          J(r, na + c) = p_calc(i) / vm(i) + G(i, i) * vm(i);
        } else {
          const double dth = th(i) - th(j);
          J(r, na + c) = vm(i) * (G(i, j) * std::cos(dth) + B(i, j) * std::sin(dth));
        }
      }
    }
    for (int r = 0; r < nm; ++r) {
      const int i = mag_idx[static_cast<size_t>(r)];
      for (int c = 0; c < na; ++c) {
        const int j = ang_idx[static_cast<size_t>(c)];
        if (i == j) {
          J(na + r, c) = p_calc(i) - G(i, i) * vm(i) * vm(i);
        } else {
          const double dth = th(i) - th(j);
          J(na + r, c) = -vm(i) * vm(j) * (G(i, j) * std::cos(dth) + B(i, j) * std::sin(dth));
        }
      }
      for (int c = 0; c < nm; ++c) {
        const int j = mag_idx[static_cast<size_t>(c)];
        if (i == j) {
          J(na + r, na + c) = q_calc(i) / vm(i) - B(i, i) * vm(i);
        } else {
          const double dth = th(i) - th(j);
          J(na + r, na + c) = vm(i) * (G(i, j) * std::sin(dth) - B(i, j) * std::cos(dth));
        }
      }
    }

    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) throw DegenerateError("singular power-flow Jacobian");
    const Vec step = lu.solve(mism);

    for (int r = 0; r < na; ++r) th(ang_idx[static_cast<size_t>(r)]) += step(r);
    for (int r = 0; r < nm; ++r) vm(mag_idx[static_cast<size_t>(r)]) += step(na + r);

    norm = eval_mismatch();
    ++it;
  }
  if (norm > options.tol)
    throw NoConvergenceError("power flow did not converge in " +
                                 std::to_string(options.max_iter) + " iterations",
                             norm);

  PowerFlowSolution sol;
  sol.V_star = CVec(n);
  for (int i = 0; i < n; ++i) sol.V_star(i) = std::polar(vm(i), th(i));
  // Injections recomputed from V* so total generation = load + losses exactly.
  sol.S_star = (Y * sol.V_star).conjugate().cwiseProduct(sol.V_star);
  sol.iterations = it;
  sol.max_mismatch = norm;
  return sol;
}

}  // namespace gridkit
