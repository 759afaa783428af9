#pragma once

// Cyclic Jacobi eigensolver for small complex Hermitian matrices.
//
// This is the cross-check oracle for the diagonalizing-frame integration in
// spectral.hpp, so it deliberately shares nothing with it beyond the matrix
// types.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kdbm/errors.hpp"
#include "kdbm/hermitian.hpp"

namespace kdbm {

template <int D>
struct EigenDecomposition {
  DiagonalSpectrum<D> values;  // nondecreasing
  Unitary<D> vectors;          // column k is the eigenvector of values[k]
};

inline constexpr int kJacobiMaxSweeps = 60;

template <int D>
EigenDecomposition<D> eig_hermitian(const Hermitian<D>& h) {
  Matrix<D> a = h.matrix();
  Matrix<D> v = Matrix<D>::identity();
  if (!a.all_finite()) throw NumericError("non-finite input to eig_hermitian", 0);

  const double total = std::max(a.frobenius_sq(), std::numeric_limits<double>::min());
  int sweep = 0;
  for (;; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < D; ++p)
      for (int q = p + 1; q < D; ++q) off += 2.0 * std::norm(a(p, q));
    if (off <= 1e-32 * total) break;
    if (sweep >= kJacobiMaxSweeps)
      throw NumericError("Jacobi eigensolver did not converge", sweep);

    for (int p = 0; p < D - 1; ++p) {
      for (int q = p + 1; q < D; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        const cplx phase = a(p, q) / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx ph_conj = std::conj(phase);

        // a <- a J with J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q).
        for (int k = 0; k < D; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * ph_conj * akq;
          a(k, q) = s * akp + c * ph_conj * akq;
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * ph_conj * vkq;
          v(k, q) = s * vkp + c * ph_conj * vkq;
        }
        // a <- J* a
        for (int k = 0; k < D; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
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

  std::array<int, D> order;
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a(x, x).real() < a(y, y).real(); });

  EigenDecomposition<D> out;
  Matrix<D> sorted_v;
  for (int k = 0; k < D; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (int i = 0; i < D; ++i) sorted_v(i, k) = v(i, order[k]);
  }
  out.vectors = Unitary<D>::unchecked(sorted_v);
  return out;
}

/// u diag(values) u*.
template <int D>
Hermitian<D> reconstruct(const EigenDecomposition<D>& e) {
  return conjugate_back(e.vectors, Hermitian<D>::diagonal(e.values));
}

}  // namespace kdbm
