#include "gridkit/load.hpp"

#include <cmath>

namespace gridkit {

Load Load::impedance(Complex z_bar) {
  if (z_bar == Complex(0.0, 0.0)) throw DegenerateError("constant-impedance load with z = 0");
  Load l;
  l.kind_ = LoadKind::Impedance;
  l.y_ = 1.0 / z_bar;
  return l;
}

Load Load::current(Complex i_bar) {
  Load l;
  l.kind_ = LoadKind::Current;
  l.i_bar_ = i_bar;
  return l;
}

Load Load::power(Complex s_bar) {
  Load l;
  l.kind_ = LoadKind::Power;
  l.s_bar_ = s_bar;
  return l;
}

const std::vector<std::string>& Load::state_names() const {
  static const std::vector<std::string> names;
  return names;
}

Complex Load::output(const Vec&, Complex V) const {
  switch (kind_) {
    case LoadKind::Impedance:
      if (std::abs(V) <= 0.0) throw DegenerateError("impedance load at zero voltage");
      return std::conj(y_ * V) * V;
    case LoadKind::Current:
      if (std::abs(V) <= 0.0) throw DegenerateError("current load at zero voltage");
      return std::conj(i_bar_) * V;
    case LoadKind::Power:
      return s_bar_;
  }
  return {0.0, 0.0};
}

Complex Load::admittance() const {
  if (kind_ != LoadKind::Impedance) throw InputError("admittance of a non-impedance load");
  return y_;
}

Complex Load::impedance_value() const {
  if (kind_ != LoadKind::Impedance) throw InputError("impedance of a non-impedance load");
  if (y_ == Complex(0.0, 0.0)) throw DegenerateError("open-circuit load has infinite impedance");
  return 1.0 / y_;
}

Vec Load::initialize(Complex V_star, Complex S_star) {
  if (std::abs(V_star) <= 0.0) throw DegenerateError("cannot fit load at zero voltage");
  kind_ = LoadKind::Impedance;
  // y = conj(S*)/|V*|^2 so that (y V*)^* V* = S*; S* = 0 is an open circuit.
  y_ = std::conj(S_star) / std::norm(V_star);
  V_star_ = V_star;
  S_star_ = S_star;
  x_star_ = Vec::Zero(0);
  return x_star_;
}

const std::vector<std::string>& NonUnit::state_names() const {
  static const std::vector<std::string> names;
  return names;
}

Vec NonUnit::initialize(Complex V_star, Complex S_star) {
  V_star_ = V_star;
  S_star_ = S_star;
  x_star_ = Vec::Zero(0);
  return x_star_;
}

}  // namespace gridkit
