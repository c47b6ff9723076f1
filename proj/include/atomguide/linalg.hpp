#pragma once

// Small dense complex linear algebra: enough for spin matrices, 3x3 manifold
// blocks and plane-wave Hamiltonians of a few hundred rows.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "atomguide/errors.hpp"

namespace atomguide {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using Vec3 = std::array<double, 3>;

inline constexpr cplx I_unit{0.0, 1.0};

// ---------------------------------------------------------------- 3-vectors

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------- vectors

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm(std::span<const cplx> a) { return std::sqrt(std::real(inner(a, a))); }

/// |<a|b>|^2 for normalized a, b.
inline double fidelity(std::span<const cplx> a, std::span<const cplx> b) { return std::norm(inner(a, b)); }

// ---------------------------------------------------------------- matrices

/// Square complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t n) : n_(n), a_(n * n) {}

  static CMatrix identity(std::size_t n) {
    CMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return n_; }
  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  CMatrix adjoint() const {
    CMatrix r(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  cplx trace() const {
    cplx t{};
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  double frobenius() const {
    double s = 0.0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
  }

  /// Induced 1-norm (max column sum).
  double norm1() const {
    double m = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  CVector column(std::size_t j) const {
    CVector c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  CMatrix& operator+=(const CMatrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  CMatrix& operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
  }

 private:
  std::size_t n_ = 0;
  std::vector<cplx> a_;
};

inline CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
inline CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
inline CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
inline CMatrix operator*(double s, CMatrix a) { return a *= cplx(s); }

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  const std::size_t n = a.dim();
  CMatrix r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (std::size_t j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

inline CVector operator*(const CMatrix& a, std::span<const cplx> v) {
  const std::size_t n = a.dim();
  CVector r(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx s{};
    for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
    r[i] = s;
  }
  return r;
}
inline CVector operator*(const CMatrix& a, const CVector& v) { return a * std::span<const cplx>(v); }

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

/// max_ij |A - A^dagger|_ij
inline double hermiticity_defect(const CMatrix& a) { return (a - a.adjoint()).max_abs(); }

/// max_ij |U^dagger U - 1|_ij
inline double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::identity(u.dim())).max_abs();
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
/// The series stops once a term falls below 1e-16 relative to the partial sum.
inline CMatrix expm(const CMatrix& a) {
  const std::size_t n = a.dim();
  const double nrm = a.norm1();
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const CMatrix scaled = std::ldexp(1.0, -squarings) * a;

  CMatrix sum = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  for (int k = 1; k < 64; ++k) {
    term = (1.0 / k) * (term * scaled);
    sum += term;
    if (term.max_abs() <= 1e-16 * sum.max_abs()) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// ---------------------------------------------------------------- eigensolver

struct HermitianEigen {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column k is the eigenvector of values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi diagonalization of a dense Hermitian matrix.
///
/// Rotations continue until the off-diagonal Frobenius norm drops below
/// `tolerance` times the full Frobenius norm. Eigenvalues come out ascending;
/// each eigenvector is rephased so its largest-magnitude component is real
/// and positive, which makes the output deterministic.
inline HermitianEigen jacobi_eigh(CMatrix a, double tolerance = 1e-14, int max_sweeps = 100) {
  const std::size_t n = a.dim();
  const double scale = a.frobenius();
  if (hermiticity_defect(a) > 1e-12 * scale)
    throw DomainError("jacobi_eigh: matrix is not Hermitian");

  CMatrix v = CMatrix::identity(n);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= tolerance * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double g = std::abs(apq);
        if (g == 0.0) continue;
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        // Below roundoff relative to the diagonal: drop.
        if (sweep > 3 && g < 1e-18 * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const cplx ph = apq / g;  // e^{i alpha}
        const double tau = (aqq - app) / (2.0 * g);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // P = diag(1, e^{-i alpha}) [[c, s], [-s, c]] acting on (p, q).
        const cplx pqp = -s * std::conj(ph);
        const cplx pqq = c * std::conj(ph);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp + pqp * akq;
          a(k, q) = s * akp + pqq * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(pqp) * aqk;
          a(q, k) = s * apk + std::conj(pqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = std::real(a(p, p));
        a(q, q) = std::real(a(q, q));
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp + pqp * vkq;
          v(k, q) = s * vkp + pqq * vkq;
        }
      }
    }
  }
  if (off_norm() > tolerance * scale)
    throw NumericalError("jacobi_eigh: no convergence within sweep limit");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::real(a(i, i)) < std::real(a(j, j)); });

  HermitianEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = CMatrix(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = std::real(a(src, src));
    std::size_t big = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v(i, src)) > std::abs(v(big, src)) + 1e-14) big = i;
    const cplx phase = std::abs(v(big, src)) > 0 ? std::conj(v(big, src)) / std::abs(v(big, src)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, src) * phase;
    out.vectors(big, k) = std::abs(out.vectors(big, k));
  }
  return out;
}

}  // namespace atomguide
