#pragma once

// Time evolution under a Schedule, optionally with a noise realization
// multiplying the characteristic energy (J0 -> J0 + c(t)).
//
//  evolve_stepwise  product of exact step propagators exp(-i H(t_mid) dt)
//  evolve_oracle    classic RK4 on i dpsi/dt = H(t) psi, substeps <= dt/10
//
// Both engines record the same observables on the same grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nia/error.hpp"
#include "nia/metrics.hpp"
#include "nia/model.hpp"
#include "nia/noise.hpp"
#include "nia/smallmat.hpp"

namespace nia {

struct EvolutionConfig {
  double dt = 1e-6;
  bool renormalize = true;
  std::size_t store_every = 1;
};

// How the oracle evaluates c(t) at its RK nodes.
enum class NoiseSampling {
  exact,  // c evaluated at every node
  held,   // c held at the stepwise engine's per-step midpoint value
};

namespace detail {

struct StepGrid {
  double T;
  double dt;
  std::size_t steps;

  double start(std::size_t k) const { return static_cast<double>(k) * dt; }
  double length(std::size_t k) const {
    return k + 1 == steps ? T - start(k) : dt;
  }
};

inline StepGrid make_grid(const Schedule& s, const EvolutionConfig& cfg) {
  const double T = total_time(s);
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive");
  if (cfg.store_every < 1) throw ConfigError("store_every must be >= 1");
  const auto steps = static_cast<std::size_t>(std::ceil(T / cfg.dt - 1e-9));
  return {T, cfg.dt, std::max<std::size_t>(steps, 1)};
}

// Noise values on the half-step grid: c(t_k) and c(t_k + dt/2). The final,
// possibly truncated step and the end point use direct evaluation.
class HalfStepNoise {
 public:
  HalfStepNoise(const NoiseRealization* r, const StepGrid& g) : r_(r), g_(g) {
    if (r_) sampler_.emplace(*r_, 0.0, 0.5 * g.dt);
  }

  // Must be called for k = 0, 1, 2, ... in order.
  std::pair<double, double> at_step(std::size_t k) {
    if (!r_) return {0.0, 0.0};
    const double rec = sampler_->next();
    double mid;
    if (k + 1 == g_.steps) {
      mid = r_->value(g_.start(k) + 0.5 * g_.length(k));
    } else {
      mid = sampler_->next();
    }
    return {rec, mid};
  }

  double at_end() const { return r_ ? r_->value(g_.T) : 0.0; }

 private:
  const NoiseRealization* r_;
  StepGrid g_;
  std::optional<NoiseGridSampler> sampler_;
};

// Builds trajectory samples; tracks the observed level by continuity.
class Recorder {
 public:
  Recorder(const Schedule& s, const NoiseRealization* noise, const EvolutionConfig& cfg, const char* engine)
      : schedule_(s) {
    traj_.meta.engine = engine;
    traj_.meta.dt = cfg.dt;
    traj_.meta.noisy = noise != nullptr;
    if (noise) {
      traj_.meta.seed = noise->spec().seed;
      traj_.meta.realization = noise->index();
    }
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          auto& p = traj_.meta.parameters;
          if constexpr (std::is_same_v<V, SingleQubitSchedule> || std::is_same_v<V, TwoQubitSchedule>) {
            p["J0"] = v.J0;
            p["T"] = v.T;
            traj_.meta.convention = to_string(v.convention);
          } else if constexpr (std::is_same_v<V, SpectatorSchedule>) {
            p["J0"] = v.base.J0;
            p["T"] = v.base.T;
            p["J12"] = v.J12;
            p["omega_spec"] = v.omega_spec;
            traj_.meta.convention = to_string(v.base.convention);
          } else {
            p["T"] = v.T;
            traj_.meta.convention = "none";
          }
        },
        s);
  }

  void record(double t, double c, StateVector state) {
    const Density2 rho = observed_density(schedule_, state);
    if (!initial_) initial_ = rho;
    Sample smp;
    smp.t = t;
    smp.noise = c;
    const BasisMetrics bm = basis_metrics(rho);
    smp.pop0 = bm.pop0;
    smp.pop1 = bm.pop1;
    smp.im_coherence = bm.im_coherence;
    try {
      const EigenSystem es = eigh(observed_hamiltonian(schedule_, t, c));
      const LevelTracker::Level lvl = tracker_.update(es, *initial_);
      tracked_ = lvl.vector;
      smp.fidelity_e0 = std::clamp(expectation(rho, lvl.vector), 0.0, 1.0);
      smp.gap = lvl.other_value - lvl.value;
    } catch (const DegenerateSpectrum&) {
      // Any vector is an eigenvector; keep following the last tracked one.
      if (!tracked_) {
        const EigenSystem es = detail::eigh2_raw(*initial_);
        tracked_ = es.vectors[1];
      }
      smp.fidelity_e0 = std::clamp(expectation(rho, *tracked_), 0.0, 1.0);
      smp.gap = 0.0;
    }
    traj_.samples.push_back(smp);
    traj_.states.push_back(phase_fixed(state));
  }

  Trajectory take() && { return std::move(traj_); }

 private:
  // Global phase chosen so the observed alpha amplitude is real >= 0.
  StateVector phase_fixed(StateVector state) const {
    const int ia = std::holds_alternative<TwoQubitSchedule>(schedule_) ? 1 : 0;
    const double mag = std::abs(state[ia]);
    if (mag > 0.0) {
      state *= std::conj(state[ia]) / mag;
      state[ia] = Complex(mag, 0.0);
    }
    return state;
  }

  const Schedule& schedule_;
  Trajectory traj_;
  LevelTracker tracker_;
  std::optional<Density2> initial_;
  std::optional<StateVector> tracked_;
};

inline void check_initial(const Schedule& s, const StateVector& initial) {
  if (initial.dim() != dimension(s)) throw DimensionMismatch("initial state dimension does not match schedule");
  if (std::abs(initial.norm2() - 1.0) > 1e-10) throw ConfigError("initial state must be normalized");
}

inline void finish_step(StateVector& psi, std::size_t k) {
  if (!psi.all_finite()) throw NumericError("non-finite state", static_cast<long>(k));
}

}  // namespace detail

// Piecewise-constant propagator product with midpoint sampling of H and c.
inline Trajectory evolve_stepwise(const Schedule& schedule, const NoiseRealization* noise,
                                  const EvolutionConfig& cfg, const StateVector& initial) {
  detail::check_initial(schedule, initial);
  const detail::StepGrid grid = detail::make_grid(schedule, cfg);
  detail::HalfStepNoise tape(noise, grid);
  detail::Recorder rec(schedule, noise, cfg, "stepwise");

  StateVector psi = initial;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = grid.start(k);
    const double h = grid.length(k);
    const auto [c_rec, c_mid] = tape.at_step(k);
    if (!std::isfinite(c_mid)) throw NumericError("non-finite noise value", static_cast<long>(k));
    if (k % cfg.store_every == 0) {
      if (cfg.renormalize) psi = psi.normalized();
      rec.record(t, c_rec, psi);
    }
    psi = expm_unitary(hamiltonian(schedule, t + 0.5 * h, c_mid), h) * psi;
    detail::finish_step(psi, k);
  }
  if (cfg.renormalize) psi = psi.normalized();
  rec.record(grid.T, tape.at_end(), psi);
  return std::move(rec).take();
}

namespace detail {

inline double hamiltonian_bound(const Schedule& s, const NoiseRealization* noise) {
  const double c = noise ? 6.0 * noise->spec().rms() : 0.0;
  return std::visit(
      [&](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, SingleQubitSchedule> || std::is_same_v<V, TwoQubitSchedule>) {
          return (v.j0_rad() + c) * std::sqrt(2.0);
        } else if constexpr (std::is_same_v<V, SpectatorSchedule>) {
          return (v.base.j0_rad() + c) * std::sqrt(2.0) + 0.5 * kPi * v.J12 +
                 std::abs(to_angular(v.base.convention, v.omega_spec));
        } else {
          return v.h.matrix().frobenius();
        }
      },
      s);
}

// -i H psi
inline StateVector rhs(const HermitianOperator& h, const StateVector& psi) {
  StateVector out = h.matrix() * psi;
  out *= Complex(0.0, -1.0);
  return out;
}

inline StateVector axpy(const StateVector& y, double a, const StateVector& x) {
  StateVector out = y;
  for (int i = 0; i < y.dim(); ++i) out[i] += a * x[i];
  return out;
}

}  // namespace detail

// Reference integrator: RK4 with at most dt/10 per substep, refined so that
// |H| * substep stays below 0.05 rad for the expected Hamiltonian scale.
inline Trajectory evolve_oracle(const Schedule& schedule, const NoiseRealization* noise,
                                const EvolutionConfig& cfg, const StateVector& initial,
                                NoiseSampling sampling = NoiseSampling::exact) {
  detail::check_initial(schedule, initial);
  const detail::StepGrid grid = detail::make_grid(schedule, cfg);
  detail::HalfStepNoise tape(noise, grid);
  detail::Recorder rec(schedule, noise, cfg, "oracle");

  const auto sub = static_cast<std::size_t>(
      std::max(10.0, std::ceil(detail::hamiltonian_bound(schedule, noise) * cfg.dt / 0.05)));
  // Exact node sampling on the uniform grid of spacing dt / (2 sub).
  std::optional<NoiseGridSampler> nodes;
  if (noise && sampling == NoiseSampling::exact) nodes.emplace(*noise, 0.0, cfg.dt / (2.0 * static_cast<double>(sub)));
  double carry = nodes ? nodes->next() : 0.0;
  std::vector<double> node_c(2 * sub + 1, 0.0);

  StateVector psi = initial;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t0 = grid.start(k);
    const double h = grid.length(k);
    const double hs = h / static_cast<double>(sub);
    const auto [c_rec, c_mid] = tape.at_step(k);
    if (k % cfg.store_every == 0) {
      if (cfg.renormalize) psi = psi.normalized();
      rec.record(t0, c_rec, psi);
    }

    if (noise && sampling == NoiseSampling::exact) {
      node_c[0] = carry;
      if (k + 1 == grid.steps) {
        for (std::size_t m = 0; m <= 2 * sub; ++m) node_c[m] = noise->value(t0 + 0.5 * hs * static_cast<double>(m));
      } else {
        for (std::size_t m = 1; m <= 2 * sub; ++m) node_c[m] = nodes->next();
        carry = node_c[2 * sub];
      }
    } else {
      std::fill(node_c.begin(), node_c.end(), noise ? c_mid : 0.0);
    }

    for (std::size_t i = 0; i < sub; ++i) {
      const double ta = t0 + hs * static_cast<double>(i);
      const double tm = std::min(ta + 0.5 * hs, grid.T);
      const double tb = std::min(ta + hs, grid.T);
      const HermitianOperator ha = hamiltonian(schedule, ta, node_c[2 * i]);
      const HermitianOperator hm = hamiltonian(schedule, tm, node_c[2 * i + 1]);
      const HermitianOperator hb = hamiltonian(schedule, tb, node_c[2 * i + 2]);
      const StateVector k1 = detail::rhs(ha, psi);
      const StateVector k2 = detail::rhs(hm, detail::axpy(psi, 0.5 * hs, k1));
      const StateVector k3 = detail::rhs(hm, detail::axpy(psi, 0.5 * hs, k2));
      const StateVector k4 = detail::rhs(hb, detail::axpy(psi, hs, k3));
      for (int j = 0; j < psi.dim(); ++j) psi[j] += hs / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    detail::finish_step(psi, k);
  }
  if (cfg.renormalize) psi = psi.normalized();
  rec.record(grid.T, tape.at_end(), psi);
  return std::move(rec).take();
}

struct AdiabaticFrameState {
  std::vector<Complex> coeffs;  // psi_m, one per eigenlevel
  std::vector<double> phases;   // theta_m = -int_0^t E_m ds
};

// psi_m = e^{-i theta_m} <E_m(t)|psi(t)>, levels in eigh (ascending) order.
inline AdiabaticFrameState project_adiabatic(const StateVector& state, const HermitianOperator& h,
                                             const std::vector<double>& phases) {
  const EigenSystem es = eigh(h);
  if (phases.size() != es.values.size()) throw DimensionMismatch("one phase per eigenlevel required");
  AdiabaticFrameState out;
  out.phases = phases;
  for (std::size_t m = 0; m < es.values.size(); ++m) {
    out.coeffs.push_back(std::polar(1.0, -phases[m]) * inner(es.vectors[m], state));
  }
  return out;
}

// Adiabatic-frame coefficients of the observed two-level system along a
// recorded trajectory; entry 0 is the tracked level, entry 1 the other.
// Dynamical phases accumulate by the trapezoid rule on the record grid.
inline std::vector<AdiabaticFrameState> adiabatic_frame_series(const Schedule& schedule, const Trajectory& traj) {
  if (std::holds_alternative<SpectatorSchedule>(schedule)) {
    throw UnsupportedSchedule("adiabatic projection needs a pure observed state");
  }
  const Mapping mapping = std::holds_alternative<TwoQubitSchedule>(schedule) ? Mapping::pair_block : Mapping::computational;
  std::vector<AdiabaticFrameState> out;
  LevelTracker tracker;
  double theta_tracked = 0.0, theta_other = 0.0;
  double prev_t = 0.0, prev_e_tracked = 0.0, prev_e_other = 0.0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const Sample& smp = traj.samples[i];
    const StateVector ab = observed_amplitudes(traj.states[i], mapping);
    const HermitianOperator h = observed_hamiltonian(schedule, smp.t, smp.noise);
    const EigenSystem es = eigh(h);
    const LevelTracker::Level lvl = tracker.update(es, pure_density(ab));
    if (i > 0) {
      const double w = 0.5 * (smp.t - prev_t);
      theta_tracked -= w * (prev_e_tracked + lvl.value);
      theta_other -= w * (prev_e_other + lvl.other_value);
    }
    prev_t = smp.t;
    prev_e_tracked = lvl.value;
    prev_e_other = lvl.other_value;

    const bool tracked_is_upper = lvl.value >= lvl.other_value;
    const std::vector<double> ascending = tracked_is_upper ? std::vector<double>{theta_other, theta_tracked}
                                                           : std::vector<double>{theta_tracked, theta_other};
    AdiabaticFrameState st = project_adiabatic(ab, h, ascending);
    if (tracked_is_upper) {
      std::swap(st.coeffs[0], st.coeffs[1]);
      std::swap(st.phases[0], st.phases[1]);
    }
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace nia
