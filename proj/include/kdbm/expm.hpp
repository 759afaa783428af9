#pragma once

#include <cmath>

#include "kdbm/hermitian.hpp"

namespace kdbm {

/// Matrix exponential by [6/6] Pade approximation with scaling and squaring.
/// The scaled argument has 1-norm at most 1/2, where the [6/6] approximant
/// is accurate to well below double precision.
template <int D>
Matrix<D> expm(const Matrix<D>& x) {
  static constexpr double kPade6[] = {1.0,          1.0 / 2.0,     5.0 / 44.0,     1.0 / 66.0,
                                      1.0 / 792.0,  1.0 / 15840.0, 1.0 / 665280.0};
  const double n1 = x.norm1();
  int squarings = 0;
  if (n1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(n1 / 0.5)));
  const Matrix<D> a = x * std::ldexp(1.0, -squarings);

  const Matrix<D> id = Matrix<D>::identity();
  Matrix<D> p = id;
  Matrix<D> q = id;
  Matrix<D> power = id;
  for (int k = 1; k <= 6; ++k) {
    power = power * a;
    p += power * kPade6[k];
    q += power * ((k % 2 == 0) ? kPade6[k] : -kPade6[k]);
  }
  Matrix<D> r = solve(q, p);
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

/// exp of a skew-Hermitian generator. The diagonal Pade approximant maps the
/// imaginary axis to the unit circle, so the result is unitary to rounding.
template <int D>
Unitary<D> exp_skew(const SkewHermitian<D>& x) {
  return Unitary<D>::unchecked(expm(x.matrix()));
}

}  // namespace kdbm
