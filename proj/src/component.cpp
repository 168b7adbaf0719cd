#include "gridkit/component.hpp"

#include <cmath>

namespace gridkit {

ComponentJacobians component_jacobians(const Component& comp, const Vec& x, Complex V,
                                       const Vec& u, double rel_step) {
  const int n = comp.n_states();
  const int m = comp.n_inputs();
  ComponentJacobians J;
  J.A = Mat::Zero(n, n);
  J.Fv = Mat::Zero(n, 2);
  J.B = Mat::Zero(n, m);
  J.Cg = Mat::Zero(2, n);
  J.Dg = Mat::Zero(2, 2);

  auto as_vec2 = [](Complex s) { return Eigen::Vector2d(s.real(), s.imag()); };

  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.A.col(i) = (comp.dynamics(xp, V, u) - comp.dynamics(xm, V, u)) / (2.0 * h);
    J.Cg.col(i) = (as_vec2(comp.output(xp, V)) - as_vec2(comp.output(xm, V))) / (2.0 * h);
  }
  for (int i = 0; i < 2; ++i) {
    const double base = (i == 0) ? V.real() : V.imag();
    const double h = rel_step * std::max(1.0, std::abs(base));
    const Complex dV = (i == 0) ? Complex(h, 0.0) : Complex(0.0, h);
    if (n > 0)
      J.Fv.col(i) = (comp.dynamics(x, V + dV, u) - comp.dynamics(x, V - dV, u)) / (2.0 * h);
    J.Dg.col(i) = (as_vec2(comp.output(x, V + dV)) - as_vec2(comp.output(x, V - dV))) / (2.0 * h);
  }
  for (int i = 0; i < m; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(u(i)));
    Vec up = u, um = u;
    up(i) += h;
    um(i) -= h;
    J.B.col(i) = (comp.dynamics(x, V, up) - comp.dynamics(x, V, um)) / (2.0 * h);
  }
  return J;
}

}  // namespace gridkit
