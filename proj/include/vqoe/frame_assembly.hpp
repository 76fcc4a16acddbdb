#pragma once

// Frame reconstruction from a video packet stream.
//
// assemble_ipudp looks only at payload sizes: a packet joins the frame of the
// most recent of its `n_max` predecessors whose size is within
// `delta_size_max` bytes, and starts a new frame when none is. assemble_rtp
// groups by RTP timestamp and is the baseline the size heuristic is judged
// against.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "vqoe/error.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

struct IpUdpAssemblyParams {
  std::uint32_t delta_size_max = 2;
  std::size_t n_max = 2;
};

// Lookback depths tuned per VCA; unknown labels get the default of 2.
inline std::size_t default_lookback_for(std::string_view vca) {
  if (vca == "meet") return 3;
  if (vca == "teams") return 2;
  if (vca == "webex") return 1;
  return 2;
}

struct AssemblyDiagnostics {
  std::int64_t split_count = 0;
  std::int64_t coalesce_count = 0;
  std::int64_t interleave_count = 0;
};

namespace detail {

inline void add_to_frame(Frame& f, std::size_t index, const PacketRecord& p) {
  if (f.packet_indices.empty()) {
    f.start_us = p.arrival_us;
    f.end_us = p.arrival_us;
  }
  f.packet_indices.push_back(index);
  f.size_bytes += media_bytes_of(p);
  f.start_us = std::min(f.start_us, p.arrival_us);
  f.end_us = std::max(f.end_us, p.arrival_us);
}

}  // namespace detail

// Frame ids are assigned in order of each frame's first packet.
inline std::vector<Frame> assemble_ipudp(std::span<const PacketRecord> packets,
                                         const IpUdpAssemblyParams& params = {}) {
  if (params.n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  std::vector<Frame> frames;
  std::vector<std::size_t> frame_of(packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto size = static_cast<std::int64_t>(packets[i].payload_len);
    bool assigned = false;
    const std::size_t depth = std::min(params.n_max, i);
    for (std::size_t back = 1; back <= depth; ++back) {
      const std::size_t j = i - back;
      const auto diff = std::llabs(size - static_cast<std::int64_t>(packets[j].payload_len));
      if (diff <= static_cast<std::int64_t>(params.delta_size_max)) {
        frame_of[i] = frame_of[j];
        assigned = true;
        break;
      }
    }
    // A new frame opens only after every candidate failed.
    if (!assigned) {
      frame_of[i] = frames.size();
      frames.emplace_back().frame_id = static_cast<int>(frames.size() - 1);
    }
    detail::add_to_frame(frames[frame_of[i]], i, packets[i]);
  }
  return frames;
}

// Groups by RTP timestamp regardless of arrival order. A frame ends at the
// (latest) marker-bit packet when one arrived, else at its last packet.
inline std::vector<Frame> assemble_rtp(std::span<const PacketRecord> packets) {
  std::vector<Frame> frames;
  std::unordered_map<std::uint32_t, std::size_t> by_ts;
  std::vector<Micros> marker_end;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    if (!p.rtp) {
      throw Error(ErrorCode::MissingRtp,
                  "packet " + std::to_string(i) + " has no RTP header");
    }
    auto [it, inserted] = by_ts.try_emplace(p.rtp->timestamp, frames.size());
    if (inserted) {
      auto& f = frames.emplace_back();
      f.frame_id = static_cast<int>(frames.size() - 1);
      f.rtp_timestamps.push_back(p.rtp->timestamp);
      marker_end.push_back(-1);
    }
    detail::add_to_frame(frames[it->second], i, p);
    if (p.rtp->marker) {
      marker_end[it->second] = std::max(marker_end[it->second], p.arrival_us);
    }
  }
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (marker_end[k] >= 0) frames[k].end_us = marker_end[k];
  }
  return frames;
}

// Per-packet frame labels, useful for comparing two partitions.
inline std::vector<std::size_t> frame_labels(std::span<const Frame> frames,
                                             std::size_t n_packets) {
  std::vector<std::size_t> labels(n_packets, 0);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    for (auto idx : frames[k].packet_indices) labels[idx] = k;
  }
  return labels;
}

// Failure-mode counts of a size-based partition against RTP truth:
//   split      true frames whose packet-size spread exceeds delta_size_max
//   coalesce   estimated frames holding more than one RTP timestamp
//   interleave estimated frames whose packets are not contiguous in arrival
inline AssemblyDiagnostics diagnose(std::span<const Frame> estimated,
                                    std::span<const PacketRecord> truth_packets,
                                    const IpUdpAssemblyParams& params = {}) {
  AssemblyDiagnostics d;
  std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> spread;
  for (std::size_t i = 0; i < truth_packets.size(); ++i) {
    const auto& p = truth_packets[i];
    if (!p.rtp) {
      throw Error(ErrorCode::MissingRtp,
                  "truth packet " + std::to_string(i) + " has no RTP header");
    }
    auto [it, inserted] =
        spread.try_emplace(p.rtp->timestamp, p.payload_len, p.payload_len);
    if (!inserted) {
      it->second.first = std::min(it->second.first, p.payload_len);
      it->second.second = std::max(it->second.second, p.payload_len);
    }
  }
  for (const auto& [ts, mm] : spread) {
    if (mm.second - mm.first > params.delta_size_max) ++d.split_count;
  }

  for (const auto& f : estimated) {
    std::vector<std::uint32_t> ts;
    for (auto idx : f.packet_indices) {
      if (idx >= truth_packets.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    fmt::format("frame {} references packet {}", f.frame_id, idx));
      }
      ts.push_back(truth_packets[idx].rtp->timestamp);
    }
    std::sort(ts.begin(), ts.end());
    if (std::unique(ts.begin(), ts.end()) - ts.begin() > 1) ++d.coalesce_count;

    auto idx = f.packet_indices;
    std::sort(idx.begin(), idx.end());
    if (!idx.empty() && idx.back() - idx.front() + 1 != idx.size()) {
      ++d.interleave_count;
    }
  }
  return d;
}

inline constexpr std::string_view kFrameCsvHeader =
    "frame_id,n_packets,size_bytes,start_us,end_us,rtp_ts_list";

// rtp_ts_list is ';'-separated and empty for size-assembled frames.
inline std::string format_frames_csv(std::span<const Frame> frames) {
  std::string out(kFrameCsvHeader);
  out += '\n';
  for (const auto& f : frames) {
    out += fmt::format("{},{},{},{},{},{}\n", f.frame_id, f.packet_indices.size(),
                       f.size_bytes, f.start_us, f.end_us,
                       fmt::join(f.rtp_timestamps, ";"));
  }
  return out;
}

}  // namespace vqoe
