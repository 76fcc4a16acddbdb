#pragma once

// Per-window QoE from a frame sequence. A frame belongs to the window that
// contains its end time; the end-time gap preceding a frame belongs to that
// frame's window.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vqoe/detail/stats.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

inline constexpr Micros kOneSecond = kMicrosPerSecond;

namespace detail {

inline std::vector<Micros> sorted_end_times(std::span<const Frame> frames) {
  std::vector<Micros> ends;
  ends.reserve(frames.size());
  for (const auto& f : frames) ends.push_back(f.end_us);
  std::sort(ends.begin(), ends.end());
  return ends;
}

inline double window_seconds(Micros window_us) {
  return static_cast<double>(window_us) / 1e6;
}

}  // namespace detail

// Frames ending in window `window_key` (units of window_us since the epoch),
// divided by the window length in seconds.
inline double frame_rate(std::span<const Frame> frames, std::int64_t window_key,
                         Micros window_us = kOneSecond) {
  std::int64_t count = 0;
  for (const auto& f : frames) {
    if (window_index(f.end_us, window_us) == window_key) ++count;
  }
  return static_cast<double>(count) / detail::window_seconds(window_us);
}

inline double bitrate_kbps(std::span<const Frame> frames, std::int64_t window_key,
                           Micros window_us = kOneSecond) {
  std::int64_t bytes = 0;
  for (const auto& f : frames) {
    if (window_index(f.end_us, window_us) == window_key) bytes += f.size_bytes;
  }
  return static_cast<double>(bytes) * 8.0 / detail::window_seconds(window_us) / 1000.0;
}

namespace detail {

// Population stddev (ms) of end-time gaps for frames ending in the window;
// missing when fewer than three frames end there.
inline std::optional<double> jitter_from_sorted_ends(std::span<const Micros> ends,
                                                     std::int64_t window_key,
                                                     Micros window_us) {
  auto lo = std::lower_bound(ends.begin(), ends.end(), window_key * window_us);
  auto hi = std::lower_bound(ends.begin(), ends.end(), (window_key + 1) * window_us);
  if (hi - lo < 3) return std::nullopt;
  std::vector<double> gaps;
  // A gap straddling the boundary counts toward the later frame's window.
  auto it = (lo == ends.begin()) ? lo + 1 : lo;
  for (; it != hi; ++it) gaps.push_back(static_cast<double>(*it - *(it - 1)));
  return population_std(gaps) / 1000.0;
}

}  // namespace detail

inline std::optional<double> frame_jitter_ms(std::span<const Frame> frames,
                                             std::int64_t window_key,
                                             Micros window_us = kOneSecond) {
  const auto ends = detail::sorted_end_times(frames);
  return detail::jitter_from_sorted_ends(ends, window_key, window_us);
}

// Estimates for every window from the first to the last frame end, including
// the partial edge windows. Resolution is never estimated here.
inline std::vector<QoeWindow> estimate_windows(std::span<const Frame> frames,
                                               Micros window_us = kOneSecond) {
  std::vector<QoeWindow> out;
  if (frames.empty()) return out;
  const auto ends = detail::sorted_end_times(frames);
  const auto first = window_index(ends.front(), window_us);
  const auto last = window_index(ends.back(), window_us);

  // Per-window frame counts and bytes in one pass.
  const auto n = static_cast<std::size_t>(last - first + 1);
  std::vector<std::int64_t> counts(n, 0), bytes(n, 0);
  for (const auto& f : frames) {
    const auto k = static_cast<std::size_t>(window_index(f.end_us, window_us) - first);
    ++counts[k];
    bytes[k] += f.size_bytes;
  }
  const double w = detail::window_seconds(window_us);
  for (std::size_t k = 0; k < n; ++k) {
    const auto key = first + static_cast<std::int64_t>(k);
    QoeWindow q;
    q.window_start = floor_div(key * window_us, kMicrosPerSecond);
    q.duration_s = w;
    q.fps = static_cast<double>(counts[k]) / w;
    q.bitrate_kbps = static_cast<double>(bytes[k]) * 8.0 / w / 1000.0;
    q.frame_jitter_ms = detail::jitter_from_sorted_ends(ends, key, window_us);
    out.push_back(q);
  }
  return out;
}

}  // namespace vqoe
