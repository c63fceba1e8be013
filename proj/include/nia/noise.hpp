#pragma once

// White dephasing noise as a sum of equal-amplitude sinusoids with random
// phases, c(t) = sum_{j=1..N} alpha sin(j w0 t + phi_j), N = floor(w_cut/w0).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nia/error.hpp"
#include "nia/model.hpp"

namespace nia {

enum class NoiseNormalization {
  literal,   // per-component amplitude alpha
  unit_rms,  // components scaled by sqrt(2/N) so the process RMS is alpha
};

inline std::string to_string(NoiseNormalization n) {
  return n == NoiseNormalization::literal ? "literal" : "unit-rms";
}

struct NoiseSpec {
  double amplitude = 4000.0;
  double omega0 = 1.0;
  double omega_cut = 5000.0;
  NoiseNormalization normalization = NoiseNormalization::literal;
  std::uint64_t seed = 1;
  FrequencyConvention convention = FrequencyConvention::angular_direct;

  std::size_t components() const {
    return static_cast<std::size_t>(std::floor(omega_cut / omega0 + 1e-9));
  }
  double amplitude_rad() const { return to_angular(convention, amplitude); }
  double omega0_rad() const { return to_angular(convention, omega0); }
  double omega_cut_rad() const { return to_angular(convention, omega_cut); }

  // Multiplier applied to the literal sum.
  double scale() const {
    const double a = amplitude_rad();
    return normalization == NoiseNormalization::literal
               ? a
               : a * std::sqrt(2.0 / static_cast<double>(components()));
  }

  // Time-averaged RMS of c(t) in rad/s.
  double rms() const {
    return scale() * std::sqrt(0.5 * static_cast<double>(components()));
  }

  void validate() const {
    if (!(omega0 > 0.0)) throw ConfigError("noise.omega0 must be positive");
    if (!(omega_cut >= omega0)) throw ConfigError("noise.omega_cut must be >= noise.omega0");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ConfigError("noise.amplitude must be finite and >= 0");
    if (components() < 1) throw ConfigError("noise requires at least one component");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based uniform in [0, 1) keyed by (seed, stream, counter).
inline double keyed_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(stream ^ splitmix64(counter)));
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

}  // namespace detail

class NoiseRealization {
 public:
  NoiseRealization(NoiseSpec spec, std::uint64_t index) : spec_(std::move(spec)), index_(index) {
    spec_.validate();
    const std::size_t n = spec_.components();
    phases_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      phases_[j] = 2.0 * kPi * detail::keyed_uniform(spec_.seed, index_, j + 1);
    }
  }

  // Use explicit phases (length N) instead of drawing them.
  NoiseRealization(NoiseSpec spec, std::vector<double> phases)
      : spec_(std::move(spec)), index_(0), phases_(std::move(phases)) {
    spec_.validate();
    if (phases_.size() != spec_.components()) throw ConfigError("phase list length must equal N");
  }

  const NoiseSpec& spec() const noexcept { return spec_; }
  std::uint64_t index() const noexcept { return index_; }
  const std::vector<double>& phases() const noexcept { return phases_; }

  // c(t) in rad/s.
  double value(double t) const {
    const double w0 = spec_.omega0_rad();
    double s = 0.0;
    for (std::size_t j = 0; j < phases_.size(); ++j) {
      s += std::sin(static_cast<double>(j + 1) * w0 * t + phases_[j]);
    }
    return spec_.scale() * s;
  }

 private:
  NoiseSpec spec_;
  std::uint64_t index_;
  std::vector<double> phases_;
};

inline double noise_value(const NoiseRealization& r, double t) { return r.value(t); }

// Samples c(t0 + m h), m = 0, 1, 2, ... by rotating each component's phasor,
// re-anchoring with exact sin/cos periodically. Agrees with noise_value to
// rounding (~1e-13 relative).
class NoiseGridSampler {
 public:
  NoiseGridSampler(const NoiseRealization& r, double t0, double h)
      : r_(&r), t0_(t0), h_(h) {
    const std::size_t n = r.phases().size();
    re_.resize(n);
    im_.resize(n);
    wre_.resize(n);
    wim_.resize(n);
    const double w0 = r.spec().omega0_rad();
    for (std::size_t j = 0; j < n; ++j) {
      const double step = static_cast<double>(j + 1) * w0 * h;
      wre_[j] = std::cos(step);
      wim_[j] = std::sin(step);
    }
    anchor(0);
  }

  double next() {
    if (m_ % kAnchorEvery == 0 && m_ != anchored_at_) anchor(m_);
    const std::size_t n = re_.size();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += im_[j];
    for (std::size_t j = 0; j < n; ++j) {
      const double re = re_[j] * wre_[j] - im_[j] * wim_[j];
      const double im = re_[j] * wim_[j] + im_[j] * wre_[j];
      re_[j] = re;
      im_[j] = im;
    }
    ++m_;
    return r_->spec().scale() * s;
  }

  std::vector<double> take(std::size_t count) {
    std::vector<double> out(count);
    for (auto& v : out) v = next();
    return out;
  }

 private:
  static constexpr std::uint64_t kAnchorEvery = 512;

  void anchor(std::uint64_t m) {
    const double t = t0_ + static_cast<double>(m) * h_;
    const double w0 = r_->spec().omega0_rad();
    const auto& ph = r_->phases();
    for (std::size_t j = 0; j < ph.size(); ++j) {
      const double arg = static_cast<double>(j + 1) * w0 * t + ph[j];
      re_[j] = std::cos(arg);
      im_[j] = std::sin(arg);
    }
    anchored_at_ = m;
  }

  const NoiseRealization* r_;
  double t0_, h_;
  std::uint64_t m_ = 0;
  std::uint64_t anchored_at_ = 0;
  std::vector<double> re_, im_, wre_, wim_;
};

struct SpectrumPoint {
  double omega;    // rad/s
  double density;  // one-sided, (rad/s)^2 per (rad/s)
};

// Ensemble-averaged one-sided periodogram of c(t) sampled at dt over
// [0, duration]; zero-padded to a power of two. Sum of density * d_omega
// equals the mean square of the samples.
inline std::vector<SpectrumPoint> psd_estimate(const NoiseSpec& spec, std::size_t n_realizations,
                                               double duration, double dt) {
  spec.validate();
  if (n_realizations < 1) throw ConfigError("psd_estimate needs at least one realization");
  if (!(dt > 0.0) || !(duration > dt)) throw ConfigError("psd_estimate needs 0 < dt < duration");
  if (!(dt < kPi / spec.omega_cut_rad())) {
    throw ConfigError("sampling step aliases the cutoff: dt must be < pi/omega_cut");
  }
  const auto n = static_cast<std::size_t>(std::floor(duration / dt));
  const std::size_t padded = std::bit_ceil(n);
  const double d_omega = 2.0 * kPi / (static_cast<double>(padded) * dt);

  Eigen::FFT<double> fft;
  std::vector<double> acc(padded / 2, 0.0);
  std::vector<double> samples(padded);
  std::vector<Complex> spectrum;
  for (std::size_t m = 0; m < n_realizations; ++m) {
    NoiseRealization r(spec, m);
    NoiseGridSampler sampler(r, 0.0, dt);
    std::fill(samples.begin(), samples.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) samples[i] = sampler.next();
    fft.fwd(spectrum, samples);
    for (std::size_t k = 1; k < padded / 2; ++k) acc[k] += std::norm(spectrum[k]);
  }
  std::vector<SpectrumPoint> out;
  out.reserve(padded / 2);
  const double norm = 2.0 * dt / (2.0 * kPi * static_cast<double>(n) * static_cast<double>(n_realizations));
  for (std::size_t k = 1; k < padded / 2; ++k) {
    out.push_back({static_cast<double>(k) * d_omega, acc[k] * norm});
  }
  return out;
}

}  // namespace nia
