#pragma once

// Runtime dimension to compile-time template argument.

#include <stdexcept>
#include <string>
#include <type_traits>

namespace kdbm {

inline constexpr int kMinDimension = 2;
inline constexpr int kMaxDimension = 8;

template <int D>
using Dim = std::integral_constant<int, D>;

/// Calls f(Dim<d>{}) for d in [2, 8].
template <class F>
decltype(auto) with_dimension(int d, F&& f) {
  switch (d) {
    case 2: return f(Dim<2>{});
    case 3: return f(Dim<3>{});
    case 4: return f(Dim<4>{});
    case 5: return f(Dim<5>{});
    case 6: return f(Dim<6>{});
    case 7: return f(Dim<7>{});
    case 8: return f(Dim<8>{});
    default:
      throw std::invalid_argument("d = " + std::to_string(d) + " is not supported (valid: 2..8)");
  }
}

}  // namespace kdbm
