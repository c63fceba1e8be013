#pragma once

// Hamiltonian schedules for the driven two-level sweep, the two-qubit
// exchange sweep and the sweep embedded next to a J-coupled spectator spin.
//
// All frequencies are stored as the user gave them and converted to rad/s
// through the schedule's FrequencyConvention on use.

#include <cmath>
#include <string>
#include <variant>

#include "nia/error.hpp"
#include "nia/smallmat.hpp"

namespace nia {

enum class FrequencyConvention {
  angular_direct,  // values are already rad/s
  hertz,           // values are Hz, multiplied by 2*pi before use
};

inline double to_angular(FrequencyConvention c, double value) {
  return c == FrequencyConvention::hertz ? 2.0 * kPi * value : value;
}

inline std::string to_string(FrequencyConvention c) {
  return c == FrequencyConvention::hertz ? "hertz" : "angular-direct";
}

// Linear sweep A(u) sigma_x + B(u) sigma_z, u = t/T, scaled by (J0 + c).
// Both the single-qubit Hamiltonian and the {|01>,|10>} block of the
// exchange Hamiltonian have this form.
struct SweepShape {
  double x0, x1;  // A(u) = x0 + x1 u
  double z0, z1;  // B(u) = z0 + z1 u

  double x(double u) const { return x0 + x1 * u; }
  double z(double u) const { return z0 + z1 * u; }
  double radius(double u) const { return std::hypot(x(u), z(u)); }
};

struct SingleQubitSchedule {
  double J0 = 4000.0;
  double T = 0.5e-3;
  FrequencyConvention convention = FrequencyConvention::angular_direct;

  double j0_rad() const { return to_angular(convention, J0); }
  double a(double t) const { return t / T; }
  double b(double t) const { return 1.0 - t / T; }
  static constexpr SweepShape shape() { return {0.0, 1.0, 1.0, -1.0}; }
};

struct TwoQubitSchedule {
  double J0 = 100.0;
  double T = 10e-3;
  FrequencyConvention convention = FrequencyConvention::angular_direct;

  double j0_rad() const { return to_angular(convention, J0); }
  double a(double t) const { return t / T; }
  double omega(double t) const { return 1.0 - t / T; }
  // Block on span{|01>,|10>} is J0 [a sigma_x + (omega/2) sigma_z].
  static constexpr SweepShape shape() { return {0.0, 1.0, 0.5, -0.5}; }
};

struct SpectatorSchedule {
  SingleQubitSchedule base;
  double J12 = 215.0;       // Hz; the coupling term carries its own pi
  double omega_spec = 0.0;  // spectator offset, per convention
};

// Constant operator over [0, T]; used for reference runs and tests.
struct FixedSchedule {
  HermitianOperator h;
  double T = 1.0;
};

using Schedule = std::variant<SingleQubitSchedule, TwoQubitSchedule, SpectatorSchedule, FixedSchedule>;

namespace detail {

inline void check_time(double t, double T) {
  if (!(t >= 0.0 && t <= T * (1.0 + 1e-12))) {
    throw TimeOutOfRange("time " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
  }
}

inline void check_schedule(double J0, double T) {
  if (!(T > 0.0) || !(J0 > 0.0)) throw ConfigError("schedule requires T > 0 and J0 > 0");
}

}  // namespace detail

// (J0 + c) [a(t) sigma_x + b(t) sigma_z]
inline HermitianOperator h_single(const SingleQubitSchedule& s, double t, double c) {
  detail::check_schedule(s.J0, s.T);
  detail::check_time(t, s.T);
  const double scale = s.j0_rad() + c;
  return HermitianOperator((pauli::x() * s.a(t) + pauli::z() * s.b(t)) * Complex(scale));
}

// (J0 + c) [a (s1+ s2- + h.c.) + omega (s1z - s2z)/4], basis |q1 q2>, index 2 q1 + q2.
inline HermitianOperator h_pair(const TwoQubitSchedule& s, double t, double c) {
  detail::check_schedule(s.J0, s.T);
  detail::check_time(t, s.T);
  const double scale = s.j0_rad() + c;
  SmallMatrix m(4);
  const double zterm = 0.25 * s.omega(t) * scale;
  // sigma1z - sigma2z: |00> -> 0, |01> -> 2, |10> -> -2, |11> -> 0
  m(1, 1) = 2.0 * zterm;
  m(2, 2) = -2.0 * zterm;
  m(1, 2) = s.a(t) * scale;
  m(2, 1) = s.a(t) * scale;
  return HermitianOperator(m);
}

// h_single (x) I + (pi J12 / 2) sz (x) sz + omega_spec I (x) sz
inline HermitianOperator h_spectator(const SpectatorSchedule& s, double t, double c) {
  if (!(s.J12 >= 0.0)) throw ConfigError("J12 must be non-negative");
  const HermitianOperator driven = h_single(s.base, t, c);
  SmallMatrix m = kron(driven.matrix(), pauli::identity());
  m += kron(pauli::z(), pauli::z()) * Complex(0.5 * kPi * s.J12);
  m += kron(pauli::identity(), pauli::z()) * Complex(to_angular(s.base.convention, s.omega_spec));
  return HermitianOperator(m);
}

inline double total_time(const Schedule& s) {
  return std::visit(
      [](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SpectatorSchedule>) {
          return v.base.T;
        } else {
          return v.T;
        }
      },
      s);
}

inline int dimension(const Schedule& s) {
  return std::visit(
      [](const auto& v) -> int {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SingleQubitSchedule>) {
          return 2;
        } else if constexpr (std::is_same_v<V, FixedSchedule>) {
          return v.h.dim();
        } else {
          return 4;
        }
      },
      s);
}

// Characteristic energy in rad/s (0 for FixedSchedule).
inline double energy_scale(const Schedule& s) {
  return std::visit(
      [](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SpectatorSchedule>) {
          return v.base.j0_rad();
        } else if constexpr (std::is_same_v<V, FixedSchedule>) {
          return 0.0;
        } else {
          return v.j0_rad();
        }
      },
      s);
}

inline HermitianOperator hamiltonian(const Schedule& s, double t, double c) {
  return std::visit(
      [&](const auto& v) -> HermitianOperator {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SingleQubitSchedule>) {
          return h_single(v, t, c);
        } else if constexpr (std::is_same_v<V, TwoQubitSchedule>) {
          return h_pair(v, t, c);
        } else if constexpr (std::is_same_v<V, SpectatorSchedule>) {
          return h_spectator(v, t, c);
        } else {
          detail::check_time(t, v.T);
          return v.h;
        }
      },
      s);
}

// Two-level Hamiltonian of the observed qubit: the driven qubit itself, the
// {|01>,|10>} block of the exchange model, or the driven qubit of the
// spectator model with the coupling removed.
inline HermitianOperator observed_hamiltonian(const Schedule& s, double t, double c) {
  return std::visit(
      [&](const auto& v) -> HermitianOperator {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SingleQubitSchedule>) {
          return h_single(v, t, c);
        } else if constexpr (std::is_same_v<V, TwoQubitSchedule>) {
          const HermitianOperator full = h_pair(v, t, c);
          return HermitianOperator(
              SmallMatrix(2, {full(1, 1), full(1, 2), full(2, 1), full(2, 2)}));
        } else if constexpr (std::is_same_v<V, SpectatorSchedule>) {
          return h_single(v.base, t, c);
        } else {
          detail::check_time(t, v.T);
          if (v.h.dim() != 2) throw UnsupportedSchedule("observed two-level view needs a 2x2 fixed operator");
          return v.h;
        }
      },
      s);
}

}  // namespace nia
