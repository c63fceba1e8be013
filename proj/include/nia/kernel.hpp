#pragma once

// Memory-kernel form of the adiabatic condition for a driven two-level system.
//
// With E0 the tracked (upper) level and E1 the other one,
//
//   d psi0/dt = -<E0|dE0/dt> psi0(t) - int_0^t g(t,s) psi0(s) ds
//   g(t,s)    = -<E0(t)|dE1/dt(t)> <E1(s)|dE0/dt(s)> exp(i int_s^t E(s') ds')
//   E(t)      = E1(t) - E0(t)
//
// (<E1|dE1/dt> vanishes for the real eigenvectors used here). Noise rescales
// E by (1 + c/J0) and leaves the eigenvectors alone, so it only changes the
// phase of g. The kernel factorizes, g(t_i, s_j) = left_i * right_j, which
// the Volterra solver exploits to carry the history integral as a running sum.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "nia/error.hpp"
#include "nia/metrics.hpp"
#include "nia/model.hpp"
#include "nia/noise.hpp"
#include "nia/smallmat.hpp"

namespace nia {

inline constexpr std::size_t kMinMemoryGridPoints = 500;
inline constexpr double kHistoryErrorLimit = 1e-3;

// Sweep data of a schedule whose observed block is (J0 + c)(A sx + B sz).
struct SweepModel {
  SweepShape shape;
  double j0 = 0.0;  // rad/s
  double T = 0.0;
};

inline SweepModel sweep_model(const Schedule& s) {
  if (const auto* v = std::get_if<SingleQubitSchedule>(&s)) return {SingleQubitSchedule::shape(), v->j0_rad(), v->T};
  if (const auto* v = std::get_if<TwoQubitSchedule>(&s)) return {TwoQubitSchedule::shape(), v->j0_rad(), v->T};
  throw UnsupportedSchedule("memory kernel supports the single-qubit and two-qubit sweeps only");
}

struct CouplingElements {
  double c01 = 0.0;  // <E0|dE1/dt>
  double c10 = 0.0;  // <E1|dE0/dt>
  double c11 = 0.0;  // <E1|dE1/dt>
  double gap = 0.0;  // E1 - E0, noise-free
};

// Closed forms. With phi = atan2(A, B) the tracked level is
// (cos phi/2, sin phi/2) and the other (-sin phi/2, cos phi/2), so
// <E0|dE1> = -phi'/2 and <E1|dE0> = +phi'/2, phi' = (A'B - AB') / (A^2 + B^2).
// For the single-qubit sweep this is -/+ 1/(2 T k^2) with E = -2 J0 k.
inline CouplingElements coupling_elements(const Schedule& s, double t) {
  const SweepModel m = sweep_model(s);
  detail::check_time(t, m.T);
  const double u = t / m.T;
  const double a = m.shape.x(u), b = m.shape.z(u);
  const double da = m.shape.x1 / m.T, db = m.shape.z1 / m.T;
  const double r2 = a * a + b * b;
  const double dphi = (da * b - a * db) / r2;
  return {-0.5 * dphi, 0.5 * dphi, 0.0, -2.0 * m.j0 * std::sqrt(r2)};
}

namespace detail {

// Upper and lower gauge-fixed eigenvectors of the noise-free observed block.
inline std::pair<StateVector, StateVector> sweep_levels(const Schedule& s, double t) {
  const EigenSystem es = eigh(observed_hamiltonian(s, t, 0.0));
  return {es.vectors[1], es.vectors[0]};
}

inline StateVector fd_derivative(const std::function<StateVector(double)>& f, double t, double T, double delta) {
  StateVector out(2);
  if (t - delta >= 0.0 && t + delta <= T) {
    const StateVector p = f(t + delta), q = f(t - delta);
    for (int i = 0; i < 2; ++i) out[i] = (p[i] - q[i]) / (2.0 * delta);
  } else {
    const double sgn = t - delta < 0.0 ? 1.0 : -1.0;
    const StateVector f0 = f(t), f1 = f(t + sgn * delta), f2 = f(t + 2.0 * sgn * delta);
    for (int i = 0; i < 2; ++i) out[i] = sgn * (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * delta);
  }
  return out;
}

}  // namespace detail

// The same elements from gauge-fixed eigh() vectors and finite differences
// with step delta (second order; one-sided within delta of an end point).
inline CouplingElements coupling_elements_fd(const Schedule& s, double t, double delta) {
  const SweepModel m = sweep_model(s);
  detail::check_time(t, m.T);
  auto upper = [&](double x) { return detail::sweep_levels(s, x).first; };
  auto lower = [&](double x) { return detail::sweep_levels(s, x).second; };
  const auto [e0, e1] = detail::sweep_levels(s, t);
  const StateVector de0 = detail::fd_derivative(upper, t, m.T, delta);
  const StateVector de1 = detail::fd_derivative(lower, t, m.T, delta);
  const EigenSystem es = eigh(observed_hamiltonian(s, t, 0.0));
  return {inner(e0, de1).real(), inner(e1, de0).real(), inner(e1, de1).real(), es.values[0] - es.values[1]};
}

// <E0|dE0/dt> by central differences of the gauge-fixed tracked level.
inline Complex berry_term(const Schedule& s, double t) {
  const SweepModel m = sweep_model(s);
  auto upper = [&](double x) { return detail::sweep_levels(s, x).first; };
  const StateVector e0 = upper(t);
  return inner(e0, detail::fd_derivative(upper, t, m.T, 1e-6 * m.T));
}

namespace detail {

// T * int_0^{t/T} sqrt(p u^2 + q u + w) du for the radius of a linear sweep.
inline double radius_integral(const SweepModel& m, double t) {
  const double p = m.shape.x1 * m.shape.x1 + m.shape.z1 * m.shape.z1;
  const double q = 2.0 * (m.shape.x0 * m.shape.x1 + m.shape.z0 * m.shape.z1);
  const double w = m.shape.x0 * m.shape.x0 + m.shape.z0 * m.shape.z0;
  const double disc = 4.0 * p * w - q * q;
  auto F = [&](double u) {
    const double qu = std::sqrt(std::max(0.0, p * u * u + q * u + w));
    return (2.0 * p * u + q) / (4.0 * p) * qu + disc / (8.0 * p * std::sqrt(p)) * std::asinh((2.0 * p * u + q) / std::sqrt(disc));
  };
  if (p > 0.0 && disc > 0.0) return m.T * (F(t / m.T) - F(0.0));
  // Fallback: composite Simpson.
  const int n = 2000;
  const double h = t / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += wgt * m.shape.radius(i * h / m.T);
  }
  return acc * h / 3.0;
}

inline double noise_resolution(const NoiseRealization& r) { return kPi / (5.0 * r.spec().omega_cut_rad()); }

// int_s^t gap(1 + c/J0) ds', composite trapezoid refined by halving (old
// nodes reused) until the Richardson error estimate is below 1e-8 relative.
inline double noisy_phase(const SweepModel& m, const NoiseRealization& r, double s, double t) {
  if (t == s) return 0.0;
  auto f = [&](double x) { return -2.0 * (m.j0 + r.value(x)) * m.shape.radius(x / m.T); };
  auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(t - s) / noise_resolution(r))));
  double h = (t - s) / static_cast<double>(n);
  double sum = 0.5 * (f(s) + f(t));
  for (std::size_t i = 1; i < n; ++i) sum += f(s + h * static_cast<double>(i));
  double prev = sum * h;
  for (int iter = 0; iter < 24; ++iter) {
    for (std::size_t i = 0; i < n; ++i) sum += f(s + h * (static_cast<double>(i) + 0.5));
    n *= 2;
    h *= 0.5;
    const double next = sum * h;
    const double err = std::abs(next - prev) / 3.0;
    if (err <= 1e-8 * std::max(std::abs(next), 1e-300)) return next + (next - prev) / 3.0;
    prev = next;
  }
  return prev;
}

inline double phase_between(const SweepModel& m, const NoiseRealization* noise, double s, double t) {
  if (!noise) return -2.0 * m.j0 * (radius_integral(m, t) - radius_integral(m, s));
  return noisy_phase(m, *noise, s, t);
}

// g(t, s) without the ordering check.
inline Complex kernel_raw(const Schedule& sch, const NoiseRealization* noise, double t, double s) {
  const SweepModel m = sweep_model(sch);
  const CouplingElements ct = coupling_elements(sch, t);
  const CouplingElements cs = coupling_elements(sch, s);
  return -ct.c01 * cs.c10 * std::polar(1.0, phase_between(m, noise, s, t));
}

}  // namespace detail

inline Complex kernel_value(const Schedule& sch, const NoiseRealization* noise, double t, double s) {
  if (s > t) throw TimeOutOfRange("kernel_value requires s <= t");
  if (s < 0.0) throw TimeOutOfRange("kernel_value requires s >= 0");
  return detail::kernel_raw(sch, noise, t, s);
}

// g(t_i, t_j) = left[i] * right[j] on a uniform grid.
struct SeparableKernel {
  std::vector<double> times;
  std::vector<Complex> left;
  std::vector<Complex> right;

  Complex operator()(std::size_t i, std::size_t j) const { return left[i] * right[j]; }
};

inline std::vector<double> uniform_grid(double T, std::size_t points) {
  if (points < 2) throw ResolutionError("grid needs at least two points");
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(points - 1);
  t.back() = T;
  return t;
}

// Cumulative phase Phi(t_i) = int_0^{t_i} gap (1 + c/J0) ds on the grid.
// Noise is sampled at spacing <= min(h, pi / (5 w_cut)).
inline std::vector<double> cumulative_phase(const Schedule& sch, const NoiseRealization* noise,
                                            const std::vector<double>& times) {
  const SweepModel m = sweep_model(sch);
  std::vector<double> phi(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) phi[i] = -2.0 * m.j0 * detail::radius_integral(m, times[i]);
  if (!noise || times.size() < 2) return phi;
  const double h = times[1] - times[0];
  const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(h / detail::noise_resolution(*noise))));
  const double hs = h / static_cast<double>(sub);
  NoiseGridSampler sampler(*noise, 0.0, hs);
  auto f = [&](double x, double c) { return -2.0 * c * m.shape.radius(std::min(x, m.T) / m.T); };
  double acc = 0.0;
  double prev = f(0.0, sampler.next());
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double base = times[i - 1];
    for (std::size_t k = 1; k <= sub; ++k) {
      const double x = base + hs * static_cast<double>(k);
      const double cur = f(x, sampler.next());
      acc += 0.5 * hs * (prev + cur);
      prev = cur;
    }
    phi[i] += acc;
  }
  return phi;
}

inline SeparableKernel separable_kernel(const Schedule& sch, const NoiseRealization* noise,
                                        const std::vector<double>& times) {
  const std::vector<double> phi = cumulative_phase(sch, noise, times);
  SeparableKernel k{times, std::vector<Complex>(times.size()), std::vector<Complex>(times.size())};
  for (std::size_t i = 0; i < times.size(); ++i) {
    const CouplingElements ce = coupling_elements(sch, times[i]);
    k.left[i] = -ce.c01 * std::polar(1.0, phi[i]);
    k.right[i] = ce.c10 * std::polar(1.0, -phi[i]);
  }
  return k;
}

// Lower-triangular table of g(t_i, t_j), j <= i.
class KernelGrid {
 public:
  KernelGrid(std::vector<double> times, const std::function<Complex(std::size_t, std::size_t)>& g)
      : times_(std::move(times)) {
    const std::size_t n = times_.size();
    values_.resize(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) values_[offset(i) + j] = g(i, j);
  }

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  Complex operator()(std::size_t i, std::size_t j) const {
    if (j > i) throw TimeOutOfRange("KernelGrid stores s <= t only");
    return values_[offset(i) + j];
  }

 private:
  static std::size_t offset(std::size_t i) { return i * (i + 1) / 2; }

  std::vector<double> times_;
  std::vector<Complex> values_;
};

inline KernelGrid kernel_grid(const Schedule& sch, const NoiseRealization* noise, std::size_t points) {
  const SeparableKernel k = separable_kernel(sch, noise, uniform_grid(sweep_model(sch).T, points));
  return KernelGrid(k.times, [&](std::size_t i, std::size_t j) { return k(i, j); });
}

struct MemorySolution {
  std::vector<double> times;
  std::vector<Complex> psi0;
  // history[i] = trapezoid of right(s) psi0(s) over [0, t_i]; defect = |left_i history_i|
  std::vector<Complex> history;
  std::vector<Complex> left;
  double quadrature_error = 0.0;  // Richardson estimate of the history error's effect on psi0
};

namespace detail {

inline void check_memory_grid(const std::vector<double>& times) {
  if (times.size() < kMinMemoryGridPoints) {
    throw ResolutionError("memory grid needs at least " + std::to_string(kMinMemoryGridPoints) + " points");
  }
}

}  // namespace detail

// Second-order predictor-corrector (Euler predictor, trapezoid corrector)
// with trapezoid history quadrature, for a separable kernel.
inline MemorySolution solve_volterra(const SeparableKernel& k, const std::vector<Complex>& beta, Complex psi_start = 1.0) {
  const std::vector<double>& t = k.times;
  detail::check_memory_grid(t);
  const std::size_t n = t.size();
  const double h = t[1] - t[0];
  MemorySolution sol{t, std::vector<Complex>(n), std::vector<Complex>(n), k.left, 0.0};
  sol.psi0[0] = psi_start;
  sol.history[0] = 0.0;
  auto rhs = [&](std::size_t i, Complex psi, Complex hist) { return -beta[i] * psi - k.left[i] * hist; };

  Complex coarse = 0.0;  // trapezoid at spacing 2h over [0, t_i], i even
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Complex f_i = rhs(i, sol.psi0[i], sol.history[i]);
    const Complex pred = sol.psi0[i] + h * f_i;
    const Complex hist_pred = sol.history[i] + 0.5 * h * (k.right[i] * sol.psi0[i] + k.right[i + 1] * pred);
    const Complex corr = sol.psi0[i] + 0.5 * h * (f_i + rhs(i + 1, pred, hist_pred));
    sol.psi0[i + 1] = corr;
    sol.history[i + 1] = sol.history[i] + 0.5 * h * (k.right[i] * sol.psi0[i] + k.right[i + 1] * corr);
    if (!std::isfinite(corr.real()) || !std::isfinite(corr.imag())) {
      throw NumericError("non-finite memory solution", static_cast<long>(i + 1));
    }

    if ((i + 1) % 2 == 0) {
      coarse += h * (k.right[i - 1] * sol.psi0[i - 1] + k.right[i + 1] * sol.psi0[i + 1]);
      const double err = std::abs(sol.history[i + 1] - coarse) / 3.0;
      sol.quadrature_error += 2.0 * h * std::abs(k.left[i + 1]) * err;
    }
  }
  return sol;
}

// Generic O(n^2) variant for an arbitrary kernel table (same scheme).
inline MemorySolution solve_volterra(const KernelGrid& g, const std::vector<Complex>& beta, Complex psi_start = 1.0) {
  const std::vector<double>& t = g.times();
  detail::check_memory_grid(t);
  const std::size_t n = t.size();
  const double h = t[1] - t[0];
  MemorySolution sol{t, std::vector<Complex>(n), std::vector<Complex>(n), std::vector<Complex>(n, 1.0), 0.0};
  sol.psi0[0] = psi_start;
  // history holds the full integral int_0^{t_i} g(t_i, s) psi(s) ds here
  auto integral = [&](std::size_t i, Complex psi_i) {
    if (i == 0) return Complex{};
    Complex acc = 0.5 * g(i, 0) * sol.psi0[0] + 0.5 * g(i, i) * psi_i;
    for (std::size_t j = 1; j < i; ++j) acc += g(i, j) * sol.psi0[j];
    return acc * h;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Complex f_i = -beta[i] * sol.psi0[i] - integral(i, sol.psi0[i]);
    const Complex pred = sol.psi0[i] + h * f_i;
    const Complex f_pred = -beta[i + 1] * pred - integral(i + 1, pred);
    sol.psi0[i + 1] = sol.psi0[i] + 0.5 * h * (f_i + f_pred);
    sol.history[i + 1] = integral(i + 1, sol.psi0[i + 1]);
  }
  return sol;
}

// psi0(t) for a sweep schedule on a uniform grid of `points` points.
inline MemorySolution solve_memory_equation(const Schedule& sch, const NoiseRealization* noise, std::size_t points) {
  const SweepModel m = sweep_model(sch);
  const std::vector<double> times = uniform_grid(m.T, points);
  detail::check_memory_grid(times);
  const SeparableKernel k = separable_kernel(sch, noise, times);
  std::vector<Complex> beta(points);
  for (std::size_t i = 0; i < points; ++i) beta[i] = berry_term(sch, times[i]);
  MemorySolution sol = solve_volterra(k, beta);
  if (sol.quadrature_error > kHistoryErrorLimit) {
    throw ResolutionError("memory grid too coarse: history quadrature error estimate " +
                          std::to_string(sol.quadrature_error));
  }
  return sol;
}

// |int_0^{t_i} g(t_i, s) psi0(s) ds| at grid index i.
inline double adiabatic_defect(const MemorySolution& sol, std::size_t i) {
  return std::abs(sol.left.at(i) * sol.history.at(i));
}

inline double adiabatic_defect(const MemorySolution& sol, double t) {
  const double h = sol.times[1] - sol.times[0];
  const auto i = static_cast<std::size_t>(std::llround(t / h));
  if (i >= sol.times.size() || std::abs(sol.times[i] - t) > 1e-9 * h) {
    throw TimeOutOfRange("adiabatic_defect: t is not on the memory grid");
  }
  return adiabatic_defect(sol, i);
}

inline double max_adiabatic_defect(const MemorySolution& sol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sol.times.size(); ++i) worst = std::max(worst, adiabatic_defect(sol, i));
  return worst;
}

}  // namespace nia
