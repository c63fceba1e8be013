#pragma once

// Complex linear algebra for the 2- and 4-dimensional Hilbert spaces used by
// the simulator: states, small dense matrices, a gauge-fixed Hermitian
// eigensolver (closed form for 2x2, cyclic Jacobi for 4x4) and exp(-iHdt).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "nia/error.hpp"

namespace nia {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kDegeneracyTolerance = 1e-12;

namespace detail {

inline void check_dim(int dim) {
  if (dim != 2 && dim != 4) {
    throw DimensionMismatch("dimension must be 2 or 4, got " + std::to_string(dim));
  }
}

inline bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace detail

class StateVector {
 public:
  StateVector() : StateVector(2) {}
  explicit StateVector(int dim) : dim_(dim) {
    detail::check_dim(dim);
    amps_.fill(Complex{});
  }
  StateVector(std::initializer_list<Complex> amps) : dim_(static_cast<int>(amps.size())) {
    detail::check_dim(dim_);
    amps_.fill(Complex{});
    std::copy(amps.begin(), amps.end(), amps_.begin());
  }

  static StateVector basis(int dim, int index) {
    StateVector v(dim);
    v[index] = 1.0;
    return v;
  }

  int dim() const noexcept { return dim_; }
  Complex& operator[](int i) { return amps_[static_cast<std::size_t>(i)]; }
  const Complex& operator[](int i) const { return amps_[static_cast<std::size_t>(i)]; }

  double norm2() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += std::norm(amps_[i]);
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  StateVector normalized() const {
    StateVector out = *this;
    const double n = norm();
    for (int i = 0; i < dim_; ++i) out[i] /= n;
    return out;
  }

  StateVector& operator*=(Complex s) {
    for (int i = 0; i < dim_; ++i) amps_[i] *= s;
    return *this;
  }

  bool all_finite() const {
    for (int i = 0; i < dim_; ++i) {
      if (!detail::finite(amps_[i])) return false;
    }
    return true;
  }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i) {
      if (a.amps_[i] != b.amps_[i]) return false;
    }
    return true;
  }

 private:
  int dim_;
  std::array<Complex, 4> amps_{};
};

// Dense dim x dim complex matrix, row-major.
class SmallMatrix {
 public:
  SmallMatrix() : SmallMatrix(2) {}
  explicit SmallMatrix(int dim) : dim_(dim) {
    detail::check_dim(dim);
    m_.fill(Complex{});
  }
  SmallMatrix(int dim, std::initializer_list<Complex> row_major) : SmallMatrix(dim) {
    if (static_cast<int>(row_major.size()) != dim * dim) {
      throw DimensionMismatch("matrix literal has wrong number of entries");
    }
    std::copy(row_major.begin(), row_major.end(), m_.begin());
  }

  static SmallMatrix identity(int dim) {
    SmallMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  int dim() const noexcept { return dim_; }
  Complex& operator()(int i, int j) { return m_[static_cast<std::size_t>(i * dim_ + j)]; }
  const Complex& operator()(int i, int j) const {
    return m_[static_cast<std::size_t>(i * dim_ + j)];
  }

  SmallMatrix adjoint() const {
    SmallMatrix out(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) out(i, j) = std::conj((*this)(j, i));
    return out;
  }

  SmallMatrix& operator+=(const SmallMatrix& o) {
    require_same(o);
    for (int k = 0; k < dim_ * dim_; ++k) m_[k] += o.m_[k];
    return *this;
  }
  SmallMatrix& operator-=(const SmallMatrix& o) {
    require_same(o);
    for (int k = 0; k < dim_ * dim_; ++k) m_[k] -= o.m_[k];
    return *this;
  }
  SmallMatrix& operator*=(Complex s) {
    for (int k = 0; k < dim_ * dim_; ++k) m_[k] *= s;
    return *this;
  }

  friend SmallMatrix operator+(SmallMatrix a, const SmallMatrix& b) { return a += b; }
  friend SmallMatrix operator-(SmallMatrix a, const SmallMatrix& b) { return a -= b; }
  friend SmallMatrix operator*(SmallMatrix a, Complex s) { return a *= s; }
  friend SmallMatrix operator*(Complex s, SmallMatrix a) { return a *= s; }

  friend SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b) {
    a.require_same(b);
    SmallMatrix out(a.dim_);
    for (int i = 0; i < a.dim_; ++i)
      for (int k = 0; k < a.dim_; ++k) {
        const Complex aik = a(i, k);
        for (int j = 0; j < a.dim_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend StateVector operator*(const SmallMatrix& a, const StateVector& v) {
    if (a.dim_ != v.dim()) throw DimensionMismatch("matrix-vector dimension mismatch");
    StateVector out(v.dim());
    for (int i = 0; i < a.dim_; ++i) {
      Complex s{};
      for (int j = 0; j < a.dim_; ++j) s += a(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

  // Largest elementwise modulus.
  double max_abs() const {
    double m = 0.0;
    for (int k = 0; k < dim_ * dim_; ++k) m = std::max(m, std::abs(m_[k]));
    return m;
  }

  double frobenius() const {
    double s = 0.0;
    for (int k = 0; k < dim_ * dim_; ++k) s += std::norm(m_[k]);
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (int k = 0; k < dim_ * dim_; ++k) {
      if (!detail::finite(m_[k])) return false;
    }
    return true;
  }

  Complex trace() const {
    Complex t{};
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

 private:
  void require_same(const SmallMatrix& o) const {
    if (o.dim_ != dim_) throw DimensionMismatch("matrix dimension mismatch");
  }

  int dim_;
  std::array<Complex, 16> m_{};
};

inline SmallMatrix kron(const SmallMatrix& a, const SmallMatrix& b) {
  if (a.dim() != 2 || b.dim() != 2) throw DimensionMismatch("kron supports 2x2 factors only");
  SmallMatrix out(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

// Hermitian matrix. Hermiticity is not enforced on construction; eigh()
// rejects operators whose defect exceeds kHermitianTolerance.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(SmallMatrix m) : m_(std::move(m)) {}

  int dim() const noexcept { return m_.dim(); }
  const SmallMatrix& matrix() const noexcept { return m_; }
  const Complex& operator()(int i, int j) const { return m_(i, j); }

  double hermiticity_defect() const {
    double d = 0.0;
    for (int i = 0; i < dim(); ++i)
      for (int j = i; j < dim(); ++j) d = std::max(d, std::abs(m_(i, j) - std::conj(m_(j, i))));
    return d;
  }

  friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator(a.m_ + b.m_);
  }
  friend HermitianOperator operator*(double s, const HermitianOperator& a) {
    return HermitianOperator(a.m_ * Complex(s));
  }

 private:
  SmallMatrix m_{2};
};

namespace pauli {

inline SmallMatrix x() { return SmallMatrix(2, {0.0, 1.0, 1.0, 0.0}); }
inline SmallMatrix y() { return SmallMatrix(2, {0.0, Complex(0, -1), Complex(0, 1), 0.0}); }
inline SmallMatrix z() { return SmallMatrix(2, {1.0, 0.0, 0.0, -1.0}); }
inline SmallMatrix identity() { return SmallMatrix::identity(2); }

}  // namespace pauli

struct EigenSystem {
  std::vector<double> values;        // ascending
  std::vector<StateVector> vectors;  // gauge-fixed, vectors[i] pairs with values[i]
};

// <a|b>, conjugate-linear in a.
inline Complex inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("inner product of unequal dimensions");
  Complex s{};
  for (int i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// Rotates v so that its largest-modulus component (lowest index on ties) is
// real and positive.
inline StateVector fix_gauge(StateVector v) {
  double best = 0.0;
  for (int i = 0; i < v.dim(); ++i) best = std::max(best, std::abs(v[i]));
  int pivot = 0;
  for (int i = 0; i < v.dim(); ++i) {
    if (std::abs(v[i]) >= best - 1e-12) {
      pivot = i;
      break;
    }
  }
  const double mag = std::abs(v[pivot]);
  if (mag == 0.0) return v;
  v *= std::conj(v[pivot]) / mag;
  v[pivot] = Complex(mag, 0.0);
  return v;
}

namespace detail {

inline void require_hermitian(const HermitianOperator& h) {
  detail::check_dim(h.dim());
  if (!h.matrix().all_finite()) throw InvalidOperator("operator has non-finite entries");
  const double defect = h.hermiticity_defect();
  const double scale = std::max(1.0, h.matrix().max_abs());
  if (defect > kHermitianTolerance * scale) {
    throw InvalidOperator("operator is not Hermitian (defect " + std::to_string(defect) + ")");
  }
}

// Closed-form 2x2 Hermitian eigensystem, ascending, unnormalized gauge.
inline EigenSystem eigh2_raw(const SmallMatrix& h) {
  const double p = h(0, 0).real();
  const double q = h(1, 1).real();
  const Complex z = h(0, 1);
  const double mid = 0.5 * (p + q);
  const double d = 0.5 * (p - q);
  const double r = std::hypot(d, std::abs(z));

  StateVector lo(2), hi(2);
  if (d >= 0.0) {
    hi = {d + r, std::conj(z)};
    lo = {z, -d - r};
  } else {
    hi = {z, r - d};
    lo = {d - r, std::conj(z)};
  }
  if (r == 0.0) {
    lo = StateVector::basis(2, 0);
    hi = StateVector::basis(2, 1);
  }
  return EigenSystem{{mid - r, mid + r}, {lo.normalized(), hi.normalized()}};
}

// Cyclic Jacobi for a 4x4 Hermitian matrix. No degeneracy check; the
// eigenbasis of a degenerate eigenspace is whatever the sweep converges to.
inline EigenSystem jacobi4_raw(const SmallMatrix& h) {
  constexpr int n = 4;
  SmallMatrix a = h;
  SmallMatrix v = SmallMatrix::identity(n);
  for (int i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  const double scale = std::max(a.frobenius(), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 60 && off_norm() >= 1e-13 * scale; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag < 1e-300) continue;
        const Complex phase = a(p, q) / mag;  // e^{i phi}
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Complex em = std::conj(phase);  // e^{-i phi}

        // a <- a J, v <- v J with J_pp=c, J_pq=s, J_qp=-s e^{-i phi}, J_qq=c e^{-i phi}
        for (int k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c - akq * s * em;
          a(k, q) = akp * s + akq * c * em;
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c - vkq * s * em;
          v(k, q) = vkp * s + vkq * c * em;
        }
        // a <- J^dagger a
        for (int k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * apk + c * phase * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::array<int, n> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });
  EigenSystem out;
  for (int idx : order) {
    out.values.push_back(a(idx, idx).real());
    StateVector col(n);
    for (int k = 0; k < n; ++k) col[k] = v(k, idx);
    out.vectors.push_back(col.normalized());
  }
  return out;
}

inline EigenSystem eigh_raw(const SmallMatrix& h) {
  return h.dim() == 2 ? eigh2_raw(h) : jacobi4_raw(h);
}

}  // namespace detail

// Eigen-decomposition of a nondegenerate Hermitian operator. Eigenvalues are
// ascending; each eigenvector carries the fix_gauge() phase.
inline EigenSystem eigh(const HermitianOperator& h) {
  detail::require_hermitian(h);
  EigenSystem es = detail::eigh_raw(h.matrix());
  double spread = 0.0;
  for (double v : es.values) spread = std::max(spread, std::abs(v));
  for (std::size_t i = 1; i < es.values.size(); ++i) {
    if (es.values[i] - es.values[i - 1] <= kDegeneracyTolerance * spread) {
      throw DegenerateSpectrum("degenerate spectrum: eigenvalues " + std::to_string(es.values[i - 1]) +
                               " and " + std::to_string(es.values[i]));
    }
  }
  for (auto& v : es.vectors) v = fix_gauge(v);
  return es;
}

// exp(-i h dt). Axis-angle form for 2x2, spectral reconstruction for 4x4
// (degenerate spectra are fine here).
inline SmallMatrix expm_unitary(const HermitianOperator& h, double dt) {
  detail::require_hermitian(h);
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidOperator("dt must be finite and non-negative");
  const SmallMatrix& m = h.matrix();
  if (h.dim() == 2) {
    const double mid = 0.5 * (m(0, 0).real() + m(1, 1).real());
    const double hz = 0.5 * (m(0, 0).real() - m(1, 1).real());
    const double hx = m(0, 1).real();
    const double hy = -m(0, 1).imag();
    const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
    const Complex global = std::polar(1.0, -mid * dt);
    SmallMatrix u = SmallMatrix::identity(2) * global;
    if (r > 0.0) {
      const double c = std::cos(r * dt);
      const double s = std::sin(r * dt) / r;
      const Complex mi(0.0, -1.0);
      u(0, 0) = global * Complex(c, -s * hz);
      u(1, 1) = global * Complex(c, s * hz);
      u(0, 1) = global * mi * s * Complex(hx, -hy);
      u(1, 0) = global * mi * s * Complex(hx, hy);
    }
    return u;
  }
  const EigenSystem es = detail::jacobi4_raw(m);
  SmallMatrix u(4);
  for (int k = 0; k < 4; ++k) {
    const Complex ph = std::polar(1.0, -es.values[k] * dt);
    const StateVector& vk = es.vectors[k];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) u(i, j) += ph * vk[i] * std::conj(vk[j]);
  }
  return u;
}

// max |(U^dagger U - I)_ij|
inline double unitarity_defect(const SmallMatrix& u) {
  return (u.adjoint() * u - SmallMatrix::identity(u.dim())).max_abs();
}

// 1 - |tr(A^dagger B)|^2 / d^2, phase-insensitive distance between unitaries.
inline double operator_infidelity(const SmallMatrix& a, const SmallMatrix& b) {
  const double d = a.dim();
  const double f = std::norm((a.adjoint() * b).trace()) / (d * d);
  return std::max(0.0, 1.0 - f);
}

// 1 - |<a|b>|^2
inline double state_infidelity(const StateVector& a, const StateVector& b) {
  return std::max(0.0, 1.0 - std::norm(inner(a, b)) / (a.norm2() * b.norm2()));
}

}  // namespace nia
