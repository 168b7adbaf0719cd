#pragma once

#include <stdexcept>
#include <string>

namespace gridkit {

/// Bad user input: out-of-range indices, malformed files, dimension mismatches.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// A quantity required by a formula is singular (zero voltage magnitude,
/// zero impedance, singular algebraic block, ...).
struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solve exhausted its iteration budget.
struct NoConvergenceError : std::runtime_error {
  NoConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual;
};

/// Requested design/steady state does not exist (negative radicand, no
/// stabilizing gain, ...).
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Algebraic solve failed mid-trajectory (voltage collapse).
struct SimulationDivergedError : std::runtime_error {
  SimulationDivergedError(const std::string& what, double t)
      : std::runtime_error(what), time(t) {}
  double time;
};

/// Integration step size underflow.
struct StepFailureError : std::runtime_error {
  explicit StepFailureError(const std::string& what) : std::runtime_error(what) {}
};

/// Operating point sits on a saturation boundary; linearization refused.
struct SaturatedError : std::runtime_error {
  explicit SaturatedError(const std::string& what) : std::runtime_error(what) {}
};

/// Supplied feedback gain does not stabilize the local pair (A, B).
struct RejectedGainError : std::runtime_error {
  explicit RejectedGainError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense linear-algebra kernel failed (eig/Lyapunov breakdown).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Defective state matrix: modal decomposition would need generalized modes.
struct GeneralizedModesError : std::runtime_error {
  explicit GeneralizedModesError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridkit
