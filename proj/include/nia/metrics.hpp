#pragma once

// Observables on the driven two-level system: populations, the coherence
// Im(alpha beta*), overlap with the tracked instantaneous eigenstate, and
// ensemble statistics over trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nia/error.hpp"
#include "nia/model.hpp"
#include "nia/smallmat.hpp"

namespace nia {

enum class Mapping {
  computational,  // dim-2 state, alpha = <0|psi>, beta = <1|psi>
  pair_block,     // dim-4 state, alpha = <01|psi>, beta = <10|psi>
};

inline constexpr double kBlockLeakageTolerance = 1e-8;

struct BasisMetrics {
  double pop0 = 0.0;
  double pop1 = 0.0;
  double im_coherence = 0.0;
};

// 2x2 density matrix of the observed qubit.
using Density2 = SmallMatrix;

inline Density2 pure_density(const StateVector& v) {
  if (v.dim() != 2) throw DimensionMismatch("pure_density expects a dim-2 state");
  Density2 rho(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) rho(i, j) = v[i] * std::conj(v[j]);
  return rho;
}

// Amplitudes (alpha, beta) of the observed two-level system.
inline StateVector observed_amplitudes(const StateVector& state, Mapping mapping) {
  if (mapping == Mapping::computational) {
    if (state.dim() != 2) throw DimensionMismatch("computational mapping expects a dim-2 state");
    return state;
  }
  if (state.dim() != 4) throw DimensionMismatch("pair-block mapping expects a dim-4 state");
  const double leak = std::max(std::abs(state[0]), std::abs(state[3]));
  if (leak > kBlockLeakageTolerance) {
    throw BlockLeakage("amplitude outside the {|01>,|10>} block: " + std::to_string(leak));
  }
  return StateVector{state[1], state[2]};
}

inline BasisMetrics basis_metrics(const Density2& rho) {
  return {rho(0, 0).real(), rho(1, 1).real(), rho(0, 1).imag()};
}

inline BasisMetrics basis_metrics(const StateVector& state, Mapping mapping) {
  const StateVector ab = observed_amplitudes(state, mapping);
  return {std::norm(ab[0]), std::norm(ab[1]), (ab[0] * std::conj(ab[1])).imag()};
}

// Reduced state of the driven qubit (first tensor factor) of a dim-4 state.
inline Density2 partial_trace_spectator(const StateVector& state) {
  if (state.dim() != 4) throw DimensionMismatch("partial trace expects a dim-4 state");
  Density2 rho(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int s = 0; s < 2; ++s) rho(a, b) += state[2 * a + s] * std::conj(state[2 * b + s]);
  return rho;
}

inline double purity(const Density2& rho) { return (rho * rho).trace().real(); }

// Observed-qubit density matrix for a state evolved under schedule s.
inline Density2 observed_density(const Schedule& s, const StateVector& state) {
  if (std::holds_alternative<TwoQubitSchedule>(s)) {
    return pure_density(observed_amplitudes(state, Mapping::pair_block));
  }
  if (std::holds_alternative<SpectatorSchedule>(s)) return partial_trace_spectator(state);
  return pure_density(observed_amplitudes(state, Mapping::computational));
}

// Index of the upper level of a 2-level eigensystem; the driven models start
// in the upper level of H(0).
inline constexpr int kUpperLevel = 1;

inline double expectation(const Density2& rho, const StateVector& v) {
  Complex s{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += std::conj(v[i]) * rho(i, j) * v[j];
  return s.real();
}

// |<E0|psi>|^2 with E0 the upper eigenvector of the 2x2 operator h.
inline double eigenstate_fidelity(const StateVector& state, const HermitianOperator& h) {
  if (h.dim() != 2) throw DimensionMismatch("eigenstate_fidelity expects a 2x2 operator");
  const EigenSystem es = eigh(h);
  return std::clamp(std::norm(inner(es.vectors[kUpperLevel], state)) / state.norm2(), 0.0, 1.0);
}

// Follows one level of a 2x2 operator through time by maximum overlap with
// the previously tracked eigenvector.
class LevelTracker {
 public:
  struct Level {
    StateVector vector;
    double value = 0.0;
    double other_value = 0.0;
  };

  // The first call picks the level with the larger overlap with `initial`
  // (upper level on ties).
  Level update(const EigenSystem& es, const Density2& initial) {
    int pick = kUpperLevel;
    if (!previous_) {
      const double lo = expectation(initial, es.vectors[0]);
      const double hi = expectation(initial, es.vectors[1]);
      pick = lo > hi + 1e-12 ? 0 : 1;
    } else {
      const double lo = std::norm(inner(*previous_, es.vectors[0]));
      const double hi = std::norm(inner(*previous_, es.vectors[1]));
      pick = lo > hi ? 0 : 1;
    }
    previous_ = es.vectors[pick];
    return {es.vectors[pick], es.values[pick], es.values[1 - pick]};
  }

 private:
  std::optional<StateVector> previous_;
};

struct Sample {
  double t = 0.0;
  double pop0 = 0.0;
  double pop1 = 0.0;
  double im_coherence = 0.0;
  double fidelity_e0 = 0.0;
  double gap = 0.0;  // E1 - E0, E0 the tracked level
  double noise = 0.0;
};

struct TrajectoryMeta {
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
  bool noisy = false;
  std::string convention;
  std::string engine;
  double dt = 0.0;
  std::map<std::string, double> parameters;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<StateVector> states;  // full state at each sample, alpha made real >= 0
  TrajectoryMeta meta;

  const Sample& final() const { return samples.back(); }
  const StateVector& final_state() const { return states.back(); }
};

struct MetricStats {
  std::vector<double> mean;
  std::vector<double> se;
};

struct EnsembleSummary {
  std::vector<double> times;
  MetricStats pop0, pop1, im_coherence, fidelity_e0, gap, noise;
  std::size_t count = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> realizations;
};

namespace detail {

inline MetricStats stats_of(const std::vector<Trajectory>& trajs, double Sample::*field) {
  const std::size_t n = trajs.front().samples.size();
  const auto m = static_cast<double>(trajs.size());
  MetricStats out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& tr : trajs) sum += tr.samples[i].*field;
    const double mean = sum / m;
    double ss = 0.0;
    for (const auto& tr : trajs) {
      const double d = tr.samples[i].*field - mean;
      ss += d * d;
    }
    out.mean[i] = mean;
    out.se[i] = trajs.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
  }
  return out;
}

}  // namespace detail

// Pointwise mean and standard error over trajectories sharing one time grid.
inline EnsembleSummary aggregate(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw GridMismatch("aggregate needs at least one trajectory");
  const auto& ref = trajs.front().samples;
  for (const auto& tr : trajs) {
    if (tr.samples.size() != ref.size()) throw GridMismatch("trajectories have different lengths");
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (std::abs(tr.samples[i].t - ref[i].t) > 1e-12 * std::max(1.0, std::abs(ref[i].t))) {
        throw GridMismatch("trajectories have different time grids");
      }
    }
  }
  EnsembleSummary s;
  s.count = trajs.size();
  for (const auto& x : ref) s.times.push_back(x.t);
  s.pop0 = detail::stats_of(trajs, &Sample::pop0);
  s.pop1 = detail::stats_of(trajs, &Sample::pop1);
  s.im_coherence = detail::stats_of(trajs, &Sample::im_coherence);
  s.fidelity_e0 = detail::stats_of(trajs, &Sample::fidelity_e0);
  s.gap = detail::stats_of(trajs, &Sample::gap);
  s.noise = detail::stats_of(trajs, &Sample::noise);
  for (const auto& tr : trajs) {
    s.seeds.push_back(tr.meta.seed);
    s.realizations.push_back(tr.meta.realization);
  }
  return s;
}

inline constexpr double kSpectatorErrorFloor = 1e-3;

// max_t |pop0_base - pop0_embedded| / max(pop0_base, 1e-3)
inline double spectator_error(const Trajectory& base, const Trajectory& embedded) {
  if (base.samples.size() != embedded.samples.size()) throw GridMismatch("spectator_error: grid mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < base.samples.size(); ++i) {
    const Sample& b = base.samples[i];
    const Sample& e = embedded.samples[i];
    if (std::abs(b.t - e.t) > 1e-12 * std::max(1.0, std::abs(b.t))) {
      throw GridMismatch("spectator_error: grid mismatch");
    }
    worst = std::max(worst, std::abs(b.pop0 - e.pop0) / std::max(b.pop0, kSpectatorErrorFloor));
  }
  return worst;
}

}  // namespace nia
