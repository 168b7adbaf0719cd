#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gridkit/errors.hpp"
#include "gridkit/types.hpp"

namespace gridkit {

/// Per-bus dynamic unit:  dx = f(x, V, u; alpha),  P+jQ = g(x, V; alpha).
/// Instances own their parameter record and, after initialize(), the
/// setpoint record alpha and the equilibrium state x*.
class Component {
 public:
  virtual ~Component() = default;

  virtual std::string kind() const = 0;
  virtual int n_states() const = 0;
  virtual int n_inputs() const = 0;
  virtual const std::vector<std::string>& state_names() const = 0;

  virtual Vec dynamics(const Vec& x, Complex V, const Vec& u) const = 0;
  virtual Complex output(const Vec& x, Complex V) const = 0;

  /// Solves alpha and the equilibrium state from the power-flow triple
  /// (V*, P*+jQ*); stores both and returns x*.
  virtual Vec initialize(Complex V_star, Complex S_star) = 0;

  /// Named auxiliary outputs (duty cycles and similar) for logging.
  virtual std::vector<std::pair<std::string, double>> aux_outputs(const Vec&, Complex,
                                                                  const Vec&) const {
    return {};
  }

  /// Distance of every clamped quantity from its clamp boundary; the
  /// linearizer refuses operating points where this is not positive.
  virtual double saturation_margin(const Vec&, Complex, const Vec&) const { return 1.0; }

  const Vec& x_star() const { return x_star_; }
  Complex V_star() const { return V_star_; }
  Complex S_star() const { return S_star_; }

 protected:
  Vec x_star_{Vec::Zero(0)};
  Complex V_star_{1.0, 0.0};
  Complex S_star_{0.0, 0.0};
};

/// Jacobians of one component about (x, V, u), by central finite differences
/// with per-entry relative steps. Voltage derivatives are taken in
/// rectangular (Re V, Im V) coordinates.
struct ComponentJacobians {
  Mat A;   // df/dx                 n x n
  Mat Fv;  // df/d[ReV, ImV]        n x 2
  Mat B;   // df/du                 n x m
  Mat Cg;  // d[P;Q]/dx             2 x n
  Mat Dg;  // d[P;Q]/d[ReV, ImV]    2 x 2
};

ComponentJacobians component_jacobians(const Component& comp, const Vec& x, Complex V,
                                       const Vec& u, double rel_step = 1e-6);

inline double saturate(double x) { return x > 1.0 ? 1.0 : (x < -1.0 ? -1.0 : x); }

}  // namespace gridkit
