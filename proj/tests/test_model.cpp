#include <gtest/gtest.h>

#include <random>

#include "nia/metrics.hpp"
#include "nia/model.hpp"

using namespace nia;

namespace {

double max_diff(const SmallMatrix& a, const SmallMatrix& b) { return (a - b).max_abs(); }

const SingleQubitSchedule kSingle{4000.0, 0.5e-3, FrequencyConvention::angular_direct};
const TwoQubitSchedule kPair{100.0, 10e-3, FrequencyConvention::angular_direct};

}  // namespace

TEST(Convention, HertzMultipliesByTwoPi) {
  EXPECT_DOUBLE_EQ(to_angular(FrequencyConvention::hertz, 1.0), 2.0 * kPi);
  EXPECT_DOUBLE_EQ(to_angular(FrequencyConvention::angular_direct, 3.0), 3.0);
  const SingleQubitSchedule hz{4000.0, 0.5e-3, FrequencyConvention::hertz};
  EXPECT_NEAR(h_single(hz, 0.0, 0.0)(0, 0).real(), 2.0 * kPi * 4000.0, 1e-9);
}

TEST(HSingle, Endpoints) {
  const double j0 = kSingle.J0;
  EXPECT_LT(max_diff(h_single(kSingle, 0.0, 0.0).matrix(), pauli::z() * Complex(j0)), 1e-12);
  EXPECT_LT(max_diff(h_single(kSingle, kSingle.T, 0.0).matrix(), pauli::x() * Complex(j0)), 1e-12);
}

TEST(HSingle, MidpointWithNoiseEqualToJ0) {
  const double j0 = kSingle.J0;
  const HermitianOperator h = h_single(kSingle, 0.5 * kSingle.T, j0);
  EXPECT_LT(max_diff(h.matrix(), (pauli::x() + pauli::z()) * Complex(j0)), 1e-9);
}

TEST(HSingle, RejectsTimeOutsideSweep) {
  EXPECT_THROW(h_single(kSingle, -1e-9, 0.0), TimeOutOfRange);
  EXPECT_THROW(h_single(kSingle, 1.01 * kSingle.T, 0.0), TimeOutOfRange);
  EXPECT_THROW(h_single(SingleQubitSchedule{4000.0, 0.0}, 0.0, 0.0), ConfigError);
}

TEST(HPair, StartIsZDifferenceOverFour) {
  const HermitianOperator h = h_pair(kPair, 0.0, 0.0);
  const SmallMatrix expected =
      (kron(pauli::z(), pauli::identity()) - kron(pauli::identity(), pauli::z())) * Complex(kPair.J0 / 4.0);
  EXPECT_LT(max_diff(h.matrix(), expected), 1e-12);
  // |01> is an eigenvector
  const StateVector v = h.matrix() * StateVector::basis(4, 1);
  EXPECT_LT(std::abs(v[1] - Complex(kPair.J0 / 2.0)), 1e-12);
  EXPECT_LT(std::abs(v[0]) + std::abs(v[2]) + std::abs(v[3]), 1e-12);
}

TEST(HPair, EndIsPureExchange) {
  const HermitianOperator block = observed_hamiltonian(kPair, kPair.T, 0.0);
  const EigenSystem es = eigh(block);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(es.values[0], -kPair.J0, 1e-12);
  EXPECT_NEAR(es.values[1], kPair.J0, 1e-12);
  EXPECT_NEAR(es.vectors[1][0].real(), r, 1e-12);
  EXPECT_NEAR(es.vectors[1][1].real(), r, 1e-12);
  EXPECT_NEAR(es.vectors[0][0].real(), r, 1e-12);
  EXPECT_NEAR(es.vectors[0][1].real(), -r, 1e-12);
}

TEST(HPair, BlockMatchesMappedTwoLevelOperator) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng) * kPair.T;
    const double a = t / kPair.T, w = 1.0 - t / kPair.T;
    const HermitianOperator h = h_pair(kPair, t, 0.0);
    const SmallMatrix expected = (pauli::x() * Complex(a) + pauli::z() * Complex(0.5 * w)) * Complex(kPair.J0);
    const int idx[2] = {1, 2};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) EXPECT_LT(std::abs(h(idx[r], idx[c]) - expected(r, c)), 1e-14);
    // nothing couples to |00> or |11>
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(h(0, k), Complex(0.0));
      EXPECT_EQ(h(3, k), Complex(0.0));
    }
  }
}

TEST(HSpectator, DecoupledLimit) {
  const SpectatorSchedule s{kSingle, 0.0, 0.0};
  for (double t : {0.0, 0.1e-3, 0.37e-3, 0.5e-3}) {
    const SmallMatrix expected = kron(h_single(kSingle, t, 123.0).matrix(), pauli::identity());
    EXPECT_EQ(max_diff(h_spectator(s, t, 123.0).matrix(), expected), 0.0);
  }
  EXPECT_LT(max_diff(h_spectator(s, 0.0, 0.0).matrix(), kron(pauli::z(), pauli::identity()) * Complex(kSingle.J0)),
            1e-12);
}

TEST(HSpectator, CouplingTermIsTracelessOnSpectator) {
  const SpectatorSchedule s{kSingle, 215.0, 30.0};
  const SmallMatrix extra = h_spectator(s, 0.2e-3, 50.0).matrix() -
                            kron(h_single(kSingle, 0.2e-3, 50.0).matrix(), pauli::identity()) -
                            kron(pauli::identity(), pauli::z()) * Complex(30.0);
  // extra = (pi J12 / 2) sz (x) sz
  EXPECT_LT(max_diff(extra, kron(pauli::z(), pauli::z()) * Complex(0.5 * kPi * 215.0)), 1e-9);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Complex tr{};
      for (int sp = 0; sp < 2; ++sp) tr += extra(2 * a + sp, 2 * b + sp);
      EXPECT_LT(std::abs(tr), 1e-12);
    }
  EXPECT_THROW(h_spectator(SpectatorSchedule{kSingle, -1.0, 0.0}, 0.0, 0.0), ConfigError);
}

TEST(Hamiltonians, HermitianForAllInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0), c(-1e5, 1e5);
  const SpectatorSchedule spec{kSingle, 215.0, 10.0};
  for (int i = 0; i < 300; ++i) {
    EXPECT_EQ(h_single(kSingle, u(rng) * kSingle.T, c(rng)).hermiticity_defect(), 0.0);
    EXPECT_EQ(h_pair(kPair, u(rng) * kPair.T, c(rng)).hermiticity_defect(), 0.0);
    EXPECT_EQ(h_spectator(spec, u(rng) * kSingle.T, c(rng)).hermiticity_defect(), 0.0);
  }
}

TEST(Hamiltonians, NoiseRescalesEigenvaluesOnly) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double j0 = kSingle.J0;
  for (int i = 0; i < 300; ++i) {
    const double t = u(rng) * kSingle.T;
    const double c = -j0 + 1e-3 * j0 + u(rng) * 50.0 * j0;
    const EigenSystem clean = eigh(h_single(kSingle, t, 0.0));
    const EigenSystem noisy = eigh(h_single(kSingle, t, c));
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(noisy.values[k], clean.values[k] * (1.0 + c / j0), 1e-9 * std::abs(noisy.values[k]));
      for (int m = 0; m < 2; ++m) EXPECT_LT(std::abs(noisy.vectors[k][m] - clean.vectors[k][m]), 1e-12);
    }
  }
}

TEST(Schedule, Dispatch) {
  EXPECT_EQ(dimension(Schedule{kSingle}), 2);
  EXPECT_EQ(dimension(Schedule{kPair}), 4);
  EXPECT_EQ(dimension(Schedule{SpectatorSchedule{kSingle, 215.0, 0.0}}), 4);
  EXPECT_DOUBLE_EQ(total_time(Schedule{SpectatorSchedule{kSingle, 215.0, 0.0}}), kSingle.T);
  EXPECT_DOUBLE_EQ(energy_scale(Schedule{kPair}), kPair.J0);
}
