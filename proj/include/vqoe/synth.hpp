#pragma once

// Synthetic VCA sessions with exact ground truth.
//
// A sender emits frames at 1/fps spacing. Each frame is split into
// ceil(size / max_payload) packets whose media sizes differ by at most one
// byte; every packet carries a 12-byte RTP header on top of its media bytes.
// Audio packets share the flow. impair() then delays, drops and optionally
// retransmits packets, and derive_receiver_view() recomputes what a receiver
// would have decoded per second.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vqoe/detail/stats.hpp"
#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"
#include "vqoe/ingest.hpp"
#include "vqoe/media_classifier.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

struct SenderProfile {
  double fps = 30.0;
  double bitrate_kbps = 800.0;
  std::uint32_t max_payload = 1200;  // media bytes per packet
  int keyframe_interval = 0;         // frames between keyframes, 0 = none
  double keyframe_multiplier = 3.0;
  double frame_size_jitter = 0.2;  // lognormal sigma of frame sizes
  double audio_pps = 50.0;
  std::uint32_t audio_min = 89;
  std::uint32_t audio_max = 385;
  std::uint32_t min_video_payload = 564;  // smallest video UDP payload
  double rtp_clock_hz = 90000.0;
  Micros pacing_us = 100;  // spacing of packets within a frame
  PayloadTypeMap payload_type_map = teams_lab_profile();
  bool separable = true;
  std::optional<int> frame_height;  // overrides the bitrate tier mapping
  std::int64_t start_epoch_s = 1'700'000'000;
  std::string session_id = "synth";
  std::string vca_label;

  double rtp_ts_increment() const { return rtp_clock_hz / fps; }
};

struct ImpairmentProfile {
  double base_delay_ms = 0.0;
  double delay_jitter_ms = 0.0;  // sigma of the per-packet extra delay
  double loss_prob = 0.0;
  bool retransmit = false;
  double rtt_ms = 100.0;
};

struct FrameLogEntry {
  int frame_id = 0;
  Micros emit_us = 0;
  Micros complete_us = -1;  // -1: never completed at the receiver
  std::int64_t media_bytes = 0;
  std::uint32_t rtp_ts = 0;
  int n_packets = 0;
};

struct SynthSession {
  Session session;
  GroundTruthSeries truth;
  std::vector<FrameLogEntry> frames;
  int frame_height = 0;
};

struct ReceiverView {
  GroundTruthSeries truth;
  std::vector<FrameLogEntry> frames;  // complete_us as seen by the receiver
};

// Resolution follows the bitrate tier.
inline int height_for_bitrate(double kbps) {
  if (kbps < 500.0) return 180;
  if (kbps < 1200.0) return 360;
  return 720;
}

// Media sizes of the packets of one frame: equal split, the remainder spread
// one byte each over the first packets.
inline std::vector<std::int64_t> fragment_frame(std::int64_t media_bytes,
                                                std::uint32_t max_payload) {
  const auto n = std::max<std::int64_t>(1, (media_bytes + max_payload - 1) / max_payload);
  const auto base = media_bytes / n;
  const auto rem = media_bytes % n;
  std::vector<std::int64_t> out(static_cast<std::size_t>(n), base);
  for (std::int64_t i = 0; i < rem; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

namespace detail {

inline void validate(const SenderProfile& p, double duration_s) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidProfile, why); };
  if (!(p.fps > 0)) throw bad("fps must be > 0");
  if (!(p.bitrate_kbps > 0)) throw bad("bitrate must be > 0");
  if (p.max_payload <= kRtpFixedHeaderBytes) throw bad("max_payload must exceed 12");
  if (p.audio_min < 1 || p.audio_min > p.audio_max || p.audio_max >= p.min_video_payload) {
    throw bad("audio size range must lie in [1, min video payload)");
  }
  if (p.min_video_payload <= kRtpFixedHeaderBytes ||
      p.min_video_payload - kRtpFixedHeaderBytes > p.max_payload) {
    throw bad("min_video_payload out of range");
  }
  if (p.keyframe_interval < 0 || !(p.keyframe_multiplier > 0)) throw bad("keyframe settings");
  if (p.frame_size_jitter < 0 || p.audio_pps < 0 || p.pacing_us < 0) throw bad("negative setting");
  if (!(p.rtp_clock_hz > 0)) throw bad("rtp clock must be > 0");
  if (!p.payload_type_map.payload_type_for(MediaClass::Video) ||
      !p.payload_type_map.payload_type_for(MediaClass::Audio)) {
    throw bad("payload type map needs audio and video entries");
  }
  if (!(duration_s >= 2.0)) throw bad("duration must be >= 2 s");
}

// Smallest distance between payload sizes of two fragmentations.
inline std::int64_t min_size_gap(const std::vector<std::int64_t>& a,
                                 const std::vector<std::int64_t>& b) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (auto x : a) {
    for (auto y : b) best = std::min<std::int64_t>(best, x > y ? x - y : y - x);
  }
  return best;
}

// Per-second truth from frame completion times: fps, media bitrate and the
// population stddev of completion gaps (gap assigned to the later frame's
// window, missing below three frames).
inline std::vector<QoeWindow> truth_from_completions(std::vector<std::pair<Micros, std::int64_t>> done,
                                                     std::int64_t window_s, int frame_height) {
  std::vector<QoeWindow> rows;
  if (done.empty()) return rows;
  std::sort(done.begin(), done.end());
  const Micros w_us = window_s * kMicrosPerSecond;
  const auto first = floor_div(done.front().first, w_us);
  const auto last = floor_div(done.back().first, w_us);
  std::size_t i = 0;
  for (auto k = first; k <= last; ++k) {
    std::int64_t frames = 0, bytes = 0;
    std::vector<double> gaps;
    for (; i < done.size() && floor_div(done[i].first, w_us) == k; ++i) {
      ++frames;
      bytes += done[i].second;
      if (i > 0) gaps.push_back(static_cast<double>(done[i].first - done[i - 1].first));
    }
    QoeWindow q;
    q.window_start = k * window_s;
    q.duration_s = static_cast<double>(window_s);
    q.fps = static_cast<double>(frames) / static_cast<double>(window_s);
    q.bitrate_kbps = static_cast<double>(bytes) * 8.0 / 1000.0 / static_cast<double>(window_s);
    if (frames >= 3) q.frame_jitter_ms = population_std(gaps) / 1000.0;
    q.frame_height = frame_height;
    q.resolution_class = resolution_class_of(frame_height);
    rows.push_back(q);
  }
  return rows;
}

}  // namespace detail

// Receiver-side truth for `session` (possibly impaired): a frame counts once
// every one of its packets arrived on the video or retransmission payload
// type, and it completes at the latest of those arrivals.
inline ReceiverView derive_receiver_view(const Session& session,
                                         std::vector<FrameLogEntry> frames,
                                         const PayloadTypeMap& map, int frame_height,
                                         std::int64_t window_s = 1) {
  std::map<std::uint32_t, std::size_t> by_ts;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    by_ts[frames[i].rtp_ts] = i;
    frames[i].complete_us = -1;
  }
  std::vector<std::set<std::uint16_t>> seen(frames.size());
  std::vector<Micros> last(frames.size(), -1);
  for (const auto& p : session.packets) {
    if (!p.rtp) continue;
    const auto c = map.classify(p.rtp->payload_type);
    if (c != MediaClass::Video && c != MediaClass::VideoRetransmission) continue;
    auto it = by_ts.find(p.rtp->timestamp);
    if (it == by_ts.end()) continue;
    seen[it->second].insert(p.rtp->sequence);
    last[it->second] = std::max(last[it->second], p.arrival_us);
  }
  std::vector<std::pair<Micros, std::int64_t>> done;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (static_cast<int>(seen[i].size()) == frames[i].n_packets) {
      frames[i].complete_us = last[i];
      done.emplace_back(last[i], frames[i].media_bytes);
    }
  }
  ReceiverView view;
  view.truth.session_id = session.session_id;
  view.truth.rows = detail::truth_from_completions(std::move(done), window_s, frame_height);
  view.frames = std::move(frames);
  return view;
}

inline SynthSession generate(const SenderProfile& profile, double duration_s,
                             std::uint64_t seed) {
  detail::validate(profile, duration_s);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int video_pt = *profile.payload_type_map.payload_type_for(MediaClass::Video);
  const int audio_pt = *profile.payload_type_map.payload_type_for(MediaClass::Audio);

  const Micros t_start = profile.start_epoch_s * kMicrosPerSecond +
                         static_cast<Micros>(unit(rng) * 1e6);
  const auto ts_start = static_cast<std::uint32_t>(rng());
  auto seq = static_cast<std::uint16_t>(rng());
  const std::uint32_t video_ssrc = static_cast<std::uint32_t>(rng()) | 1u;
  const std::uint32_t audio_ssrc = video_ssrc ^ 0x5a5a5a5au;

  PacketRecord tmpl;
  tmpl.src_ip = 0x0a000001;  // 10.0.0.1
  tmpl.dst_ip = 0xc0a8010a;  // 192.168.1.10
  tmpl.src_port = 3478;
  tmpl.dst_port = 50000;

  SynthSession out;
  out.frame_height = profile.frame_height.value_or(height_for_bitrate(profile.bitrate_kbps));
  out.session.session_id = profile.session_id;
  out.session.vca_label = profile.vca_label;

  const double mean_frame = profile.bitrate_kbps * 1000.0 / 8.0 / profile.fps;
  const double key_share =
      profile.keyframe_interval > 0
          ? 1.0 + (profile.keyframe_multiplier - 1.0) / profile.keyframe_interval
          : 1.0;
  const double sigma = profile.frame_size_jitter;
  const auto min_media = static_cast<std::int64_t>(profile.min_video_payload - kRtpFixedHeaderBytes);
  const auto n_frames = static_cast<std::int64_t>(std::floor(duration_s * profile.fps + 1e-9));

  std::vector<std::int64_t> prev_sizes;
  for (std::int64_t i = 0; i < n_frames; ++i) {
    const bool key = profile.keyframe_interval > 0 && i % profile.keyframe_interval == 0;
    double size = mean_frame / key_share * std::exp(sigma * normal(rng) - sigma * sigma / 2);
    if (key) size *= profile.keyframe_multiplier;
    auto media = std::max<std::int64_t>(1, std::llround(size));
    auto parts = fragment_frame(media, profile.max_payload);
    auto fix_floor = [&] {
      const auto floor_bytes = static_cast<std::int64_t>(parts.size()) * min_media;
      if (media < floor_bytes) {
        media = floor_bytes;
        parts = fragment_frame(media, profile.max_payload);
      }
    };
    fix_floor();
    if (profile.separable && !prev_sizes.empty()) {
      // Push packet sizes at least 3 bytes away from the previous frame's.
      while (detail::min_size_gap(parts, prev_sizes) <= 2) {
        media += static_cast<std::int64_t>(parts.size());
        parts = fragment_frame(media, profile.max_payload);
        fix_floor();
      }
    }
    prev_sizes = parts;

    FrameLogEntry entry;
    entry.frame_id = static_cast<int>(i);
    entry.emit_us = t_start + static_cast<Micros>(std::llround(static_cast<double>(i) * 1e6 / profile.fps));
    entry.media_bytes = media;
    entry.rtp_ts = ts_start + static_cast<std::uint32_t>(
                                  std::llround(static_cast<double>(i) * profile.rtp_ts_increment()));
    entry.n_packets = static_cast<int>(parts.size());
    for (std::size_t j = 0; j < parts.size(); ++j) {
      PacketRecord p = tmpl;
      p.arrival_us = entry.emit_us + static_cast<Micros>(j) * profile.pacing_us;
      p.payload_len = static_cast<std::uint32_t>(parts[j] + static_cast<std::int64_t>(kRtpFixedHeaderBytes));
      RtpHeader h;
      h.payload_type = static_cast<std::uint8_t>(video_pt);
      h.sequence = seq++;
      h.timestamp = entry.rtp_ts;
      h.ssrc = video_ssrc;
      h.marker = j + 1 == parts.size();
      p.rtp = h;
      out.session.packets.push_back(p);
    }
    entry.complete_us =
        entry.emit_us + static_cast<Micros>(parts.size() - 1) * profile.pacing_us;
    out.frames.push_back(entry);
  }

  if (profile.audio_pps > 0) {
    std::uniform_int_distribution<std::uint32_t> audio_size(profile.audio_min, profile.audio_max);
    const Micros end = t_start + static_cast<Micros>(std::llround(duration_s * 1e6));
    const double gap = 1e6 / profile.audio_pps;
    auto aseq = static_cast<std::uint16_t>(rng());
    auto ats = static_cast<std::uint32_t>(rng());
    // Offset audio by half a gap so it never collides with frame starts.
    for (std::int64_t k = 0;; ++k) {
      const Micros t = t_start + static_cast<Micros>(std::llround((static_cast<double>(k) + 0.5) * gap));
      if (t >= end) break;
      PacketRecord p = tmpl;
      p.arrival_us = t;
      p.payload_len = audio_size(rng);
      RtpHeader h;
      h.payload_type = static_cast<std::uint8_t>(audio_pt);
      h.sequence = aseq++;
      h.timestamp = ats;
      ats += 960;
      h.ssrc = audio_ssrc;
      h.marker = false;
      p.rtp = h;
      out.session.packets.push_back(p);
    }
  }
  detail::sort_by_arrival(out.session.packets);

  auto view = derive_receiver_view(out.session, out.frames, profile.payload_type_map,
                                   out.frame_height);
  out.truth = std::move(view.truth);
  out.frames = std::move(view.frames);
  return out;
}

// Delays every packet by base + max(0, N(0, jitter)), drops it with
// probability loss_prob and, when retransmission is on, re-sends dropped
// video packets one RTT later on the retransmission payload type.
inline Session impair(const Session& session, const ImpairmentProfile& profile,
                      std::uint64_t seed, const PayloadTypeMap& map = teams_lab_profile()) {
  if (profile.loss_prob < 0 || profile.loss_prob > 1 || profile.base_delay_ms < 0 ||
      profile.delay_jitter_ms < 0 || profile.rtt_ms < 0) {
    throw Error(ErrorCode::InvalidProfile, "impairment values out of range");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto retx_pt = map.payload_type_for(MediaClass::VideoRetransmission);

  auto delay = [&]() -> Micros {
    const double extra = std::max(0.0, profile.delay_jitter_ms * normal(rng));
    return static_cast<Micros>(std::llround((profile.base_delay_ms + extra) * 1000.0));
  };

  Session out;
  out.session_id = session.session_id;
  out.vca_label = session.vca_label;
  out.packets.reserve(session.packets.size());
  for (const auto& p : session.packets) {
    const bool lost = unit(rng) < profile.loss_prob;
    const Micros d = delay();
    if (!lost) {
      PacketRecord q = p;
      q.arrival_us = p.arrival_us + d;
      out.packets.push_back(q);
      continue;
    }
    const bool video =
        p.rtp && map.classify(p.rtp->payload_type) == MediaClass::Video;
    if (profile.retransmit && video && retx_pt) {
      PacketRecord q = p;
      q.rtp->payload_type = static_cast<std::uint8_t>(*retx_pt);
      q.arrival_us = p.arrival_us + static_cast<Micros>(std::llround(profile.rtt_ms * 1000.0)) + delay();
      out.packets.push_back(q);
    }
  }
  detail::sort_by_arrival(out.packets);
  return out;
}

inline constexpr std::string_view kFrameLogCsvHeader =
    "frame_id,emit_us,complete_us,media_bytes,rtp_ts";

inline std::string format_frame_log_csv(std::span<const FrameLogEntry> frames) {
  std::string out(kFrameLogCsvHeader);
  out += '\n';
  for (const auto& f : frames) {
    out += fmt::format("{},{},{},{},{}\n", f.frame_id, f.emit_us, f.complete_us,
                       f.media_bytes, f.rtp_ts);
  }
  return out;
}

}  // namespace vqoe
