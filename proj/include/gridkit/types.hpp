#pragma once

#include <complex>
#include <Eigen/Dense>

namespace gridkit {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Stacked per-bus complex quantities (bus voltages or P+jQ injections).
using PhasorVector = CVec;

inline constexpr double kOmegaBase = 120.0 * 3.14159265358979323846;  // rad/s, 60 Hz system
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace gridkit
