#pragma once

// Counter-based Gaussian noise.
//
// Every increment is a pure function of (master_seed, path_index,
// step_index, substream): the counter of a Philox4x32-10 block cipher is
// built from those fields, keyed by the 64-bit seed. Each cipher block gives
// two 53-bit uniforms, turned into two standard normals by Box-Muller.
// Ensembles are therefore reproducible under any parallel schedule.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kdbm/hermitian.hpp"

namespace kdbm {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Substream tags separate independent uses of the same (path, step) slot.
namespace substream {
inline constexpr std::uint32_t kStep = 0;
inline constexpr std::uint32_t kInitial = 1;
inline constexpr std::uint32_t kReference = 2;  // reference ensembles compared against simulated ones
inline constexpr std::uint32_t kBridgeBase = 0x100;  // + (level << 7) + index, see spectral.hpp
inline constexpr std::uint32_t kEnsembleBase = 0x10000;
}  // namespace substream

struct NoiseStream {
  std::uint64_t master_seed = 0;
  std::uint32_t path_index = 0;
  std::uint64_t step_index = 0;
  std::uint32_t substream = substream::kStep;

  NoiseStream at_step(std::uint64_t step) const {
    NoiseStream s = *this;
    s.step_index = step;
    return s;
  }
  NoiseStream next() const { return at_step(step_index + 1); }
  NoiseStream with_substream(std::uint32_t tag) const {
    NoiseStream s = *this;
    s.substream = tag;
    return s;
  }
  void advance() { ++step_index; }
};

/// Sequence of standard normals drawn from one (seed, path, step, substream) slot.
class NormalSequence {
 public:
  explicit NormalSequence(const NoiseStream& s) : stream_(s) {
    if ((s.step_index >> 56) != 0) throw std::out_of_range("step index exceeds 2^56");
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Philox4x32Counter out = philox4x32_10(counter(lane_++), key());
    const std::uint64_t x0 = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    const std::uint64_t x1 = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = static_cast<double>((x0 >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(x1 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  Philox4x32Key key() const {
    return {static_cast<std::uint32_t>(stream_.master_seed),
            static_cast<std::uint32_t>(stream_.master_seed >> 32)};
  }
  Philox4x32Counter counter(std::uint32_t lane) const {
    const auto step_lo = static_cast<std::uint32_t>(stream_.step_index);
    const auto step_hi = static_cast<std::uint32_t>(stream_.step_index >> 32);
    return {lane | (step_hi << 8), step_lo, stream_.substream, stream_.path_index};
  }

  NoiseStream stream_;
  std::uint32_t lane_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Maps a real d x d matrix m to the Hermitian matrix with diagonal m_ii and
/// upper entries (m_ij + i m_ji)/sqrt 2. This is an isometry from the
/// Euclidean R^{d x d} onto H_d with the Hilbert-Schmidt norm.
template <int D>
Hermitian<D> hermitian_from_real(const std::array<double, D * D>& m) {
  Hermitian<D> h;
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < D; ++i) {
    h.set(i, i, m[i * D + i]);
    for (int j = i + 1; j < D; ++j)
      h.set(i, j, cplx(m[i * D + j], m[j * D + i]) * inv_sqrt2);
  }
  return h;
}

/// Brownian increment on H_d over a time step dt: image of d^2 independent
/// N(0, dt) reals under hermitian_from_real. Diagonal entries are N(0, dt),
/// real and imaginary parts of off-diagonal entries are N(0, dt/2).
template <int D>
Hermitian<D> hermitian_bm_increment(const NoiseStream& stream, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("hermitian_bm_increment: dt must be positive");
  NormalSequence normals(stream);
  const double scale = std::sqrt(dt);
  std::array<double, D * D> m;
  for (auto& x : m) x = scale * normals.next();
  return hermitian_from_real<D>(m);
}

inline std::vector<double> vector_bm_increment(const NoiseStream& stream, int n, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("vector_bm_increment: dt must be positive");
  if (n < 1) throw std::invalid_argument("vector_bm_increment: n must be at least 1");
  NormalSequence normals(stream);
  const double scale = std::sqrt(dt);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = scale * normals.next();
  return out;
}

/// Uniform point on the unit sphere of H_d (normalized Gaussian).
template <int D>
Hermitian<D> uniform_unit_hermitian(const NoiseStream& stream) {
  return normalized(hermitian_bm_increment<D>(stream, 1.0));
}

}  // namespace kdbm
