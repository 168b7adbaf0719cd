#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridkit/system.hpp"

namespace gridkit {

/// Linearized DAE about the operating point, in rectangular voltage
/// coordinates. Algebraic variables are [ReV_1, ImV_1, ..., ReV_N, ImV_N].
struct LinearDaeBlocks {
  Mat A_xx;  // n x n
  Mat A_xV;  // n x 2N
  Mat B;     // n x m
  Mat G_Vx;  // 2N x n
  Mat G_VV;  // 2N x 2N
};

/// Kron-reduced state-space model with bus bookkeeping.
struct LinearSystem {
  Mat A;
  Mat B;
  std::vector<std::pair<int, std::string>> state_labels;  // (bus, state name)
  std::vector<std::pair<int, std::string>> input_labels;
  std::vector<int> state_offset;  // per bus (1-based index shifted by -1), -1 if stateless
  std::vector<int> state_count;
  std::vector<int> input_offset;
  std::vector<int> input_count;

  int bus_state_offset(int bus_1based) const { return state_offset[static_cast<size_t>(bus_1based - 1)]; }
  int bus_input_offset(int bus_1based) const { return input_offset[static_cast<size_t>(bus_1based - 1)]; }
};

struct Linearization {
  LinearSystem sys;
  LinearDaeBlocks dae;
};

/// Central finite-difference linearization of the coupled DAE followed by
/// Kron reduction of the algebraic voltage variables:
///   A = A_xx - A_xV G_VV^{-1} G_Vx.
/// Preconditions: the stored operating point is an equilibrium and no duty
/// cycle is saturated there.
Linearization linearize(const SystemModel& sys, double fd_step = 1e-6);

/// Eigenvalue with derived quantities for reporting.
struct EigenInfo {
  Complex lambda;
  double damping = 0.0;   // -Re / |lambda|
  double freq_hz = 0.0;   // |Im| / 2pi
};

/// Eigenvalues sorted by descending real part, conjugate pairs reported once
/// (non-negative imaginary representative). count <= 0 returns all.
std::vector<EigenInfo> eigen_report(const Mat& A, int count = -1);

/// Largest real part over the spectrum, ignoring eigenvalues with
/// |lambda| < zero_tol. The band hides the structural angle-reference mode,
/// which DER coupling perturbs a few 1e-5 either way; electromechanical and
/// converter modes live well outside it.
double dominant_real_part(const Mat& A, double zero_tol = 1e-3);

struct ModalDecomposition {
  CVec lambdas;            // one entry per mode (conjugates deduplicated)
  CMat residues;           // n_outputs x n_modes
  std::vector<bool> inter_area;  // 0.1..2 Hz oscillatory band
};

/// Dyadic expansion of the impulse/initial-condition response:
/// y_i(t) = sum_j residues(i,j) exp(lambda_j t) (+ conjugate terms for
/// complex modes). x0 is the initial-condition direction.
ModalDecomposition modal_residues(const Mat& A, const Mat& C, const Vec& x0,
                                  double inter_area_lo_hz = 0.1, double inter_area_hi_hz = 2.0);

/// Largest singular value of C (jwI - A)^<-1> B + D on a frequency grid.
struct FrequencyResponse {
  std::vector<double> omega;      // rad/s
  std::vector<double> sigma_max;
  std::vector<bool> flagged;      // point skipped: jwI - A numerically singular
  double peak_omega = 0.0;
  double peak_value = 0.0;
};
FrequencyResponse frequency_response_sv(const Mat& A, const Mat& B, const Mat& C, const Mat& D,
                                        const std::vector<double>& omega_grid);

/// Component-level state space from bus voltage (Re, Im) to injected (P, Q),
/// linearized about the component's stored equilibrium.
struct ComponentStateSpace {
  Mat A, B, C, D;
};
ComponentStateSpace component_voltage_to_power_ss(const Component& comp);

/// One point of a parameter sweep.
struct SweepPoint {
  double value = 0.0;
  double max_re = 0.0;
  bool ok = false;
  std::string error;
};
struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<double> first_unstable;
};

/// Evaluates `dominant` (typically: rebuild power flow + init + linearize,
/// return dominant real part) across `values`, in parallel, results in input
/// order. Per-point failures are recorded and the sweep continues.
SweepResult stability_sweep(const std::function<double(double)>& dominant,
                            const std::vector<double>& values, int n_threads = 0);

}  // namespace gridkit
