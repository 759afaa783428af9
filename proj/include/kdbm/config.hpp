#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kdbm {

enum class Scheme { ito_euler_project, stratonovich_heun };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::ito_euler_project ? "ito_euler_project" : "stratonovich_heun";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "ito_euler_project") return Scheme::ito_euler_project;
  if (name == "stratonovich_heun") return Scheme::stratonovich_heun;
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (valid: ito_euler_project, stratonovich_heun)");
}

struct SimConfig {
  int d = 2;
  double dt = 1e-4;
  double t_max = 1.0;
  Scheme scheme = Scheme::ito_euler_project;
  /// Negative means "1e-3 times the initial minimum eigenvalue gap".
  double gap_floor = -1.0;
  int record_stride = 10;

  void validate() const {
    if (d < 2) throw std::invalid_argument("d must be at least 2");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("t_max must be non-negative");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be at least 1");
    if (std::isnan(gap_floor)) throw std::invalid_argument("gap_floor must be a number");
  }

  /// Number of steps covering [0, t_max]; a final partial step is rounded up.
  std::int64_t steps() const { return static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9)); }

  double effective_gap_floor(double initial_gap) const {
    return gap_floor >= 0.0 ? gap_floor : 1e-3 * initial_gap;
  }

  /// Whether step k (1-based, after the step) is recorded.
  bool records(std::int64_t k) const { return k % record_stride == 0 || k == steps(); }
};

}  // namespace kdbm
