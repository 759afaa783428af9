#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "kdbm/config.hpp"

namespace kdbm {

enum class EventKind { gap_floor_stop, step_refined, boundary_clamp };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::gap_floor_stop: return "gap_floor_stop";
    case EventKind::step_refined: return "step_refined";
    case EventKind::boundary_clamp: return "boundary_clamp";
  }
  return "unknown";
}

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::gap_floor_stop;
  std::string detail;
};

/// Scalar monitors accumulated over every step, recorded or not.
struct PathMonitors {
  double min_gap = std::numeric_limits<double>::infinity();
  double max_offdiag_residual = 0.0;
  double max_unitarity_error = 0.0;
  double max_sphere_error = 0.0;
  std::int64_t refinements = 0;
};

/// One simulated path: recorded frames on the time grid plus events.
template <class Frame>
struct PathRecord {
  SimConfig config;
  std::uint32_t path_index = 0;
  std::vector<double> times;
  std::vector<Frame> frames;
  std::vector<Event> events;
  PathMonitors monitors;
  bool stopped = false;

  void record(double t, const Frame& f) {
    times.push_back(t);
    frames.push_back(f);
  }

  std::size_t count(EventKind kind) const {
    std::size_t n = 0;
    for (const auto& e : events) n += (e.kind == kind);
    return n;
  }
};

}  // namespace kdbm
