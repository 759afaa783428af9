#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kdbm {

/// Non-finite values, eigensolver non-convergence, loss of unitarity.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::int64_t where)
      : std::runtime_error(what + " (at " + std::to_string(where) + ")"),
        where_(where) {}

  /// Step index or iteration count at which the failure was detected.
  std::int64_t where() const noexcept { return where_; }

 private:
  std::int64_t where_;
};

/// Raised when a formula needs pairwise distinct eigenvalues and gets a tie.
class DegenerateSpectrum : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The numerical stand-in for the first eigenvalue collision: the minimum
/// eigenvalue gap fell below the configured floor.
class GapFloorStop : public std::runtime_error {
 public:
  GapFloorStop(double t, double gap, double floor)
      : std::runtime_error("eigenvalue gap " + std::to_string(gap) +
                           " below floor " + std::to_string(floor) +
                           " at t=" + std::to_string(t)),
        t_(t),
        gap_(gap) {}

  double time() const noexcept { return t_; }
  double gap() const noexcept { return gap_; }

 private:
  double t_;
  double gap_;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kdbm
