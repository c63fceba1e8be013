#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nia/pulse.hpp"

using namespace nia;

namespace {

const SingleQubitSchedule kFig3d{4000.0, 0.5e-3};

NoiseSpec fig3_noise() {
  NoiseSpec n;
  n.amplitude = 4000.0;
  n.omega_cut = 5000.0;
  n.omega0 = 1.0;
  return n;
}

SmallMatrix random_su2(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const double a = g(rng), b = g(rng), c = g(rng), d = g(rng);
  const double n = std::sqrt(a * a + b * b + c * c + d * d);
  const Complex al(a / n, b / n), be(c / n, d / n);
  return SmallMatrix(2, {al, -std::conj(be), be, std::conj(al)});
}

}  // namespace

TEST(Pulse, PureTransverseDriveHasNoFrameRotation) {
  const double j0 = 4000.0, dt = 1e-6;
  const FixedSchedule s{HermitianOperator(pauli::x() * Complex(j0)), 0.2e-3};
  for (const PulseStep& p : decompose_pulse(s, nullptr, {dt, true, 1})) {
    EXPECT_EQ(p.z_angle, 0.0);
    EXPECT_NEAR(p.xy_phase, 0.0, 1e-15);
    EXPECT_NEAR(p.xy_amplitude, j0, 1e-9);
  }
  // Ramped drive J0 a(t) sigma_x: amplitude follows J0 a at each midpoint.
  for (int i = 0; i <= 100; ++i) {
    const double a = i / 100.0;
    const auto f = detail::factor_ze(expm_unitary(HermitianOperator(pauli::x() * Complex(j0 * a)), dt));
    EXPECT_EQ(f.zeta, 0.0);
    EXPECT_NEAR(f.angle / dt, j0 * a, 1e-9);
    if (a > 0) {
      EXPECT_NEAR(f.phase, 0.0, 1e-12);
    }
  }
}

TEST(Pulse, PureLongitudinalDriveIsFrameOnly) {
  const double j0 = 4000.0, T = 0.2e-3;
  const FixedSchedule s{HermitianOperator(pauli::z() * Complex(j0)), T};
  const auto steps = decompose_pulse(s, nullptr, {1e-6, true, 1});
  for (const PulseStep& p : steps) EXPECT_EQ(p.xy_amplitude, 0.0);
  EXPECT_NEAR(steps.back().z_angle, j0 * T, 1e-9);
  // ramped b(t): accumulated angle is the integral of J0 b
  double total = 0.0;
  const double dt = 1e-6;
  for (int k = 0; k < 500; ++k) {
    const double b = 1.0 - (k + 0.5) / 500.0;
    total += detail::factor_ze(expm_unitary(HermitianOperator(pauli::z() * Complex(j0 * b)), dt)).zeta;
  }
  EXPECT_NEAR(total, j0 * 0.5 * 500 * dt, 1e-9);
}

TEST(Pulse, StepFactorizationIsExact) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const SmallMatrix u = random_su2(rng);
    const auto f = detail::factor_ze(u);
    EXPECT_LT(operator_infidelity(z_rotation(f.zeta) * equatorial_rotation(f.angle, f.phase), u), 1e-10);
    EXPECT_LT((z_rotation(f.zeta) * equatorial_rotation(f.angle, f.phase) - u).max_abs(), 1e-12);
  }
}

TEST(Pulse, PerStepReconstructionOnNoisySweep) {
  const NoiseRealization r(fig3_noise(), 0);
  const EvolutionConfig cfg{1e-6, true, 1};
  const auto steps = decompose_pulse(kFig3d, &r, cfg);
  ASSERT_EQ(steps.size(), 500u);
  // Each step's own factors, recovered from consecutive frame angles.
  double prev_theta = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const PulseStep& p = steps[k];
    const double zeta = p.z_angle - prev_theta;
    const SmallMatrix rebuilt =
        z_rotation(zeta) * equatorial_rotation(p.xy_amplitude * p.duration, p.xy_phase + 2.0 * prev_theta);
    const double c = noise_value(r, p.t_start + 0.5 * p.duration);
    const SmallMatrix direct = expm_unitary(h_single(kFig3d, p.t_start + 0.5 * p.duration, c), p.duration);
    EXPECT_LT(operator_infidelity(rebuilt, direct), 1e-10) << "step " << k;
    prev_theta = p.z_angle;
  }
}

TEST(Pulse, WholeRunReconstruction) {
  const EvolutionConfig cfg{1e-6, true, 1};
  for (std::uint64_t idx : {0u, 1u, 2u}) {
    const NoiseRealization r(fig3_noise(), idx);
    const auto steps = decompose_pulse(kFig3d, &r, cfg);
    EXPECT_LT(operator_infidelity(reconstruct_propagator(steps), direct_propagator(kFig3d, &r, cfg)), 1e-6);
  }
  const auto clean = decompose_pulse(kFig3d, nullptr, cfg);
  EXPECT_LT(operator_infidelity(reconstruct_propagator(clean), direct_propagator(kFig3d, nullptr, cfg)), 1e-6);
}

TEST(Pulse, StepsAreFinitePositive) {
  const NoiseRealization r(fig3_noise(), 5);
  for (const PulseStep& p : decompose_pulse(kFig3d, &r, {0.3e-6, true, 1})) {
    EXPECT_GT(p.duration, 0.0);
    EXPECT_TRUE(std::isfinite(p.z_angle) && std::isfinite(p.xy_amplitude) && std::isfinite(p.xy_phase));
  }
}

TEST(Pulse, RejectsFourLevelSchedules) {
  EXPECT_THROW(decompose_pulse(TwoQubitSchedule{}, nullptr, {1e-5, true, 1}), UnsupportedSchedule);
  EXPECT_THROW(decompose_pulse(SpectatorSchedule{}, nullptr, {1e-6, true, 1}), UnsupportedSchedule);
}

TEST(Pulse, FileFormat) {
  const auto steps = decompose_pulse(kFig3d, nullptr, {1e-6, true, 1});
  std::ostringstream os;
  write_pulse_file(os, steps, {"J0 = 4000", "seed = 1"});
  std::istringstream in(os.str());
  std::string line;
  std::size_t rows = 0, headers = 0;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      ++headers;
      continue;
    }
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 4);
  }
  EXPECT_EQ(rows, steps.size());
  EXPECT_GE(headers, 2u);
  EXPECT_NE(os.str().find("# J0 = 4000"), std::string::npos);
}
