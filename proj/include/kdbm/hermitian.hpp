#pragma once

// Small dense complex matrices with compile-time dimension, and the
// Hermitian / skew-Hermitian / unitary wrappers built on top of them.
// Dimensions in this library are 2..8, so everything lives on the stack.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace kdbm {

using cplx = std::complex<double>;

template <int D>
struct Matrix {
  static_assert(D >= 1, "matrix dimension must be positive");

  std::array<cplx, D * D> e{};

  cplx& operator()(int i, int j) { return e[i * D + j]; }
  const cplx& operator()(int i, int j) const { return e[i * D + j]; }

  static Matrix zero() { return Matrix{}; }

  static Matrix identity() {
    Matrix m;
    for (int i = 0; i < D; ++i) m(i, i) = 1.0;
    return m;
  }

  Matrix adjoint() const {
    Matrix r;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (int i = 0; i < D; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_sq() const {
    double s = 0.0;
    for (const auto& z : e) s += std::norm(z);
    return s;
  }
  double frobenius() const { return std::sqrt(frobenius_sq()); }

  /// Max column sum of moduli.
  double norm1() const {
    double best = 0.0;
    for (int j = 0; j < D; ++j) {
      double s = 0.0;
      for (int i = 0; i < D; ++i) s += std::abs((*this)(i, j));
      best = std::max(best, s);
    }
    return best;
  }

  bool all_finite() const {
    for (const auto& z : e)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    for (int k = 0; k < D * D; ++k) e[k] += o.e[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (int k = 0; k < D * D; ++k) e[k] -= o.e[k];
    return *this;
  }
  Matrix& operator*=(cplx s) {
    for (auto& z : e) z *= s;
    return *this;
  }
  Matrix& operator*=(double s) {
    for (auto& z : e) z *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(Matrix a, cplx s) { return a *= s; }
  friend Matrix operator*(cplx s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix r;
    for (int i = 0; i < D; ++i)
      for (int k = 0; k < D; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx{}) continue;
        for (int j = 0; j < D; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }
};

/// Solves q * x = p for x by LU with partial pivoting.
template <int D>
Matrix<D> solve(Matrix<D> q, Matrix<D> p) {
  for (int c = 0; c < D; ++c) {
    int piv = c;
    for (int r = c + 1; r < D; ++r)
      if (std::abs(q(r, c)) > std::abs(q(piv, c))) piv = r;
    if (std::abs(q(piv, c)) == 0.0) throw std::domain_error("singular matrix in solve");
    if (piv != c)
      for (int j = 0; j < D; ++j) {
        std::swap(q(c, j), q(piv, j));
        std::swap(p(c, j), p(piv, j));
      }
    for (int r = c + 1; r < D; ++r) {
      const cplx f = q(r, c) / q(c, c);
      if (f == cplx{}) continue;
      for (int j = c; j < D; ++j) q(r, j) -= f * q(c, j);
      for (int j = 0; j < D; ++j) p(r, j) -= f * p(c, j);
    }
  }
  for (int c = D - 1; c >= 0; --c) {
    for (int j = 0; j < D; ++j) {
      cplx s = p(c, j);
      for (int k = c + 1; k < D; ++k) s -= q(c, k) * p(k, j);
      p(c, j) = s / q(c, c);
    }
  }
  return p;
}

/// Real spectrum stored as a length-D vector (the diagonal of a diagonal
/// Hermitian matrix).
template <int D>
struct DiagonalSpectrum {
  std::array<double, D> values{};

  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
  bool is_nondecreasing() const { return std::is_sorted(values.begin(), values.end()); }

  DiagonalSpectrum sorted() const {
    DiagonalSpectrum s = *this;
    std::sort(s.values.begin(), s.values.end());
    return s;
  }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

/// Minimum over i != j of |s_i - s_j|; zero iff a value repeats.
template <int D>
double min_gap(const DiagonalSpectrum<D>& s) {
  if constexpr (D < 2) {
    return std::numeric_limits<double>::infinity();
  } else {
    auto v = s.values;
    std::sort(v.begin(), v.end());
    double g = std::numeric_limits<double>::infinity();
    for (int i = 1; i < D; ++i) g = std::min(g, v[i] - v[i - 1]);
    return g;
  }
}

template <int D>
class Hermitian {
 public:
  Hermitian() = default;

  /// Hermitian part (M + M*)/2. Used to re-symmetrize after arithmetic.
  static Hermitian from_matrix(const Matrix<D>& m) {
    Hermitian h;
    for (int i = 0; i < D; ++i) {
      h.m_(i, i) = m(i, i).real();
      for (int j = i + 1; j < D; ++j) {
        const cplx z = 0.5 * (m(i, j) + std::conj(m(j, i)));
        h.m_(i, j) = z;
        h.m_(j, i) = std::conj(z);
      }
    }
    return h;
  }

  /// Accepts only matrices that are exactly Hermitian.
  static Hermitian exact(const Matrix<D>& m) {
    for (int i = 0; i < D; ++i) {
      if (m(i, i).imag() != 0.0) throw std::invalid_argument("diagonal entry is not real");
      for (int j = i + 1; j < D; ++j)
        if (m(j, i) != std::conj(m(i, j)))
          throw std::invalid_argument("matrix is not Hermitian");
    }
    Hermitian h;
    h.m_ = m;
    return h;
  }

  static Hermitian diagonal(const DiagonalSpectrum<D>& s) {
    Hermitian h;
    for (int i = 0; i < D; ++i) h.m_(i, i) = s[i];
    return h;
  }

  static Hermitian identity() {
    Hermitian h;
    h.m_ = Matrix<D>::identity();
    return h;
  }

  static constexpr int dim() { return D; }

  cplx operator()(int i, int j) const { return m_(i, j); }
  const Matrix<D>& matrix() const { return m_; }

  /// Sets entry (i, j) and its mirror. Diagonal entries keep only the real part.
  void set(int i, int j, cplx z) {
    if (i == j) {
      m_(i, i) = z.real();
    } else {
      m_(i, j) = z;
      m_(j, i) = std::conj(z);
    }
  }

  DiagonalSpectrum<D> diag() const {
    DiagonalSpectrum<D> s;
    for (int i = 0; i < D; ++i) s[i] = m_(i, i).real();
    return s;
  }

  double trace() const { return m_.trace().real(); }
  double norm() const { return m_.frobenius(); }
  bool all_finite() const { return m_.all_finite(); }

  Hermitian& operator+=(const Hermitian& o) {
    m_ += o.m_;
    return *this;
  }
  Hermitian& operator-=(const Hermitian& o) {
    m_ -= o.m_;
    return *this;
  }
  Hermitian& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend Hermitian operator+(Hermitian a, const Hermitian& b) { return a += b; }
  friend Hermitian operator-(Hermitian a, const Hermitian& b) { return a -= b; }
  friend Hermitian operator*(Hermitian a, double s) { return a *= s; }
  friend Hermitian operator*(double s, Hermitian a) { return a *= s; }

 private:
  Matrix<D> m_{};
};

template <int D>
class SkewHermitian {
 public:
  SkewHermitian() = default;

  /// Skew-Hermitian part (M - M*)/2.
  static SkewHermitian from_matrix(const Matrix<D>& m) {
    SkewHermitian s;
    for (int i = 0; i < D; ++i) {
      s.m_(i, i) = cplx(0.0, m(i, i).imag());
      for (int j = i + 1; j < D; ++j) {
        const cplx z = 0.5 * (m(i, j) - std::conj(m(j, i)));
        s.m_(i, j) = z;
        s.m_(j, i) = -std::conj(z);
      }
    }
    return s;
  }

  cplx operator()(int i, int j) const { return m_(i, j); }
  const Matrix<D>& matrix() const { return m_; }

  /// Sets (i, j) to z and (j, i) to -conj(z).
  void set(int i, int j, cplx z) {
    if (i == j) {
      m_(i, i) = cplx(0.0, z.imag());
    } else {
      m_(i, j) = z;
      m_(j, i) = -std::conj(z);
    }
  }

  friend SkewHermitian operator*(SkewHermitian a, double s) {
    a.m_ *= s;
    return a;
  }

 private:
  Matrix<D> m_{};
};

template <int D>
class Unitary {
 public:
  Unitary() : m_(Matrix<D>::identity()) {}

  static Unitary identity() { return Unitary{}; }

  /// Wraps m without checking; callers are the exponential map, products of
  /// unitaries, and eigenvector frames.
  static Unitary unchecked(const Matrix<D>& m) {
    Unitary u;
    u.m_ = m;
    return u;
  }

  const Matrix<D>& matrix() const { return m_; }
  cplx operator()(int i, int j) const { return m_(i, j); }

  Unitary adjoint() const { return unchecked(m_.adjoint()); }

  /// ||U*U - I||_F.
  double unitarity_error() const {
    return (m_.adjoint() * m_ - Matrix<D>::identity()).frobenius();
  }

  /// Nearest-frame cleanup by modified Gram-Schmidt on the columns.
  Unitary reprojected() const {
    Matrix<D> q = m_;
    for (int j = 0; j < D; ++j) {
      for (int k = 0; k < j; ++k) {
        cplx dot = 0.0;
        for (int i = 0; i < D; ++i) dot += std::conj(q(i, k)) * q(i, j);
        for (int i = 0; i < D; ++i) q(i, j) -= dot * q(i, k);
      }
      double n = 0.0;
      for (int i = 0; i < D; ++i) n += std::norm(q(i, j));
      n = std::sqrt(n);
      for (int i = 0; i < D; ++i) q(i, j) /= n;
    }
    return unchecked(q);
  }

  friend Unitary operator*(const Unitary& a, const Unitary& b) { return unchecked(a.m_ * b.m_); }

 private:
  Matrix<D> m_;
};

/// Hilbert-Schmidt inner product Tr(a* b).
template <int D>
double hs_inner(const Hermitian<D>& a, const Hermitian<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) s += (std::conj(a(i, j)) * b(i, j)).real();
  return s;
}

template <int D>
Hermitian<D> project_diag(const Hermitian<D>& a) {
  return Hermitian<D>::diagonal(a.diag());
}

template <int D>
Hermitian<D> project_offdiag(const Hermitian<D>& a) {
  return a - project_diag(a);
}

/// Frobenius norm of the off-diagonal part of an arbitrary matrix.
template <int D>
double offdiag_norm(const Matrix<D>& m) {
  double s = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      if (i != j) s += std::norm(m(i, j));
  return std::sqrt(s);
}

/// u* a u, re-symmetrized.
template <int D>
Hermitian<D> conjugate_by(const Unitary<D>& u, const Hermitian<D>& a) {
  return Hermitian<D>::from_matrix(u.matrix().adjoint() * a.matrix() * u.matrix());
}

/// u a u*, the inverse of conjugate_by.
template <int D>
Hermitian<D> conjugate_back(const Unitary<D>& u, const Hermitian<D>& a) {
  return Hermitian<D>::from_matrix(u.matrix() * a.matrix() * u.matrix().adjoint());
}

template <int D>
Hermitian<D> normalized(const Hermitian<D>& a) {
  const double n = a.norm();
  if (!(n > 0.0)) throw std::domain_error("cannot normalize a zero matrix");
  return a * (1.0 / n);
}

}  // namespace kdbm
