#pragma once

// Rewrites the single-qubit propagator as NMR-style pulses: a train of
// rotations about axes in the equatorial (xy) plane followed by one closing
// z rotation by the accumulated frame angle,
//
//   U(T) = Z(theta_N) * E_N * ... * E_1,
//   Z(theta)      = exp(-i theta sigma_z),
//   E(amp, phi)   = exp(-i amp * duration * (cos(phi) sigma_x + sin(phi) sigma_y)).
//
// Each midpoint step exp(-i H dt) is factored exactly as Z(zeta) E(beta, phi);
// pushing the z parts to the left shifts later equatorial phases by -2*theta.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "nia/error.hpp"
#include "nia/evolve.hpp"
#include "nia/model.hpp"
#include "nia/noise.hpp"
#include "nia/smallmat.hpp"

namespace nia {

struct PulseStep {
  double t_start = 0.0;
  double duration = 0.0;
  double z_angle = 0.0;       // accumulated frame angle after this step, rad
  double xy_amplitude = 0.0;  // rad/s
  double xy_phase = 0.0;      // rad
};

inline SmallMatrix z_rotation(double theta) {
  return SmallMatrix(2, {std::polar(1.0, -theta), 0.0, 0.0, std::polar(1.0, theta)});
}

inline SmallMatrix equatorial_rotation(double angle, double phase) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return SmallMatrix(2, {c, Complex(0, -s) * std::polar(1.0, -phase), Complex(0, -s) * std::polar(1.0, phase), c});
}

namespace detail {

struct ZEFactor {
  double zeta;   // Z(zeta)
  double angle;  // E rotation angle
  double phase;  // E axis phase
};

// U in SU(2) written as Z(zeta) E(angle, phase), angle in [0, pi/2].
inline ZEFactor factor_ze(const SmallMatrix& u) {
  const Complex a = u(0, 0);
  const Complex b = u(1, 0);
  const double angle = std::atan2(std::abs(b), std::abs(a));
  const double zeta = std::abs(a) > 0.0 ? -std::arg(a) : 0.0;
  const double phase = std::abs(b) > 0.0 ? std::arg(b) + 0.5 * kPi - zeta : 0.0;
  return {zeta, angle, phase};
}

}  // namespace detail

// One PulseStep per stepwise-engine step, using the same midpoint sampling
// of H and c as evolve_stepwise.
inline std::vector<PulseStep> decompose_pulse(const Schedule& schedule, const NoiseRealization* noise,
                                              const EvolutionConfig& cfg) {
  if (dimension(schedule) != 2) {
    throw UnsupportedSchedule("pulse decomposition supports two-level schedules only");
  }
  const detail::StepGrid grid = detail::make_grid(schedule, cfg);
  detail::HalfStepNoise tape(noise, grid);
  std::vector<PulseStep> out;
  out.reserve(grid.steps);
  double theta = 0.0;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = grid.start(k);
    const double h = grid.length(k);
    const double c_mid = tape.at_step(k).second;
    const SmallMatrix u = expm_unitary(hamiltonian(schedule, t + 0.5 * h, c_mid), h);
    const detail::ZEFactor f = detail::factor_ze(u);
    PulseStep p;
    p.t_start = t;
    p.duration = h;
    p.xy_amplitude = f.angle / h;
    p.xy_phase = std::remainder(f.phase - 2.0 * theta, 2.0 * kPi);
    theta += f.zeta;
    p.z_angle = theta;
    out.push_back(p);
  }
  return out;
}

// Z(theta_N) * prod_k E_k
inline SmallMatrix reconstruct_propagator(const std::vector<PulseStep>& steps) {
  SmallMatrix u = SmallMatrix::identity(2);
  for (const PulseStep& p : steps) u = equatorial_rotation(p.xy_amplitude * p.duration, p.xy_phase) * u;
  return steps.empty() ? u : z_rotation(steps.back().z_angle) * u;
}

// Product of the stepwise engine's step propagators.
inline SmallMatrix direct_propagator(const Schedule& schedule, const NoiseRealization* noise,
                                     const EvolutionConfig& cfg) {
  const detail::StepGrid grid = detail::make_grid(schedule, cfg);
  detail::HalfStepNoise tape(noise, grid);
  SmallMatrix u = SmallMatrix::identity(dimension(schedule));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = grid.start(k);
    const double h = grid.length(k);
    const double c_mid = tape.at_step(k).second;
    u = expm_unitary(hamiltonian(schedule, t + 0.5 * h, c_mid), h) * u;
  }
  return u;
}

// Tab-separated pulse file: t_start duration xy_amplitude xy_phase z_angle.
inline void write_pulse_file(std::ostream& os, const std::vector<PulseStep>& steps,
                             const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
  os << "# rotations: Z(a) = exp(-i a sz), E = exp(-i xy_amplitude duration (cos(xy_phase) sx + sin(xy_phase) sy));"
        " U = Z(z_angle of last row) * E_N ... E_1\n";
  os << "# t_start\tduration\txy_amplitude\txy_phase\tz_angle\n";
  os << std::setprecision(12);
  for (const PulseStep& p : steps) {
    os << p.t_start << '\t' << p.duration << '\t' << p.xy_amplitude << '\t' << p.xy_phase << '\t' << p.z_angle
       << '\n';
  }
}

}  // namespace nia
