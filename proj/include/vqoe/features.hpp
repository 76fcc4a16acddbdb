#pragma once

// Per-window feature vectors.
//
// IP/UDP set (14): flow statistics (12) followed by the two VCA-semantics
// features. RTP set (24): the same flow statistics followed by 12 RTP header
// features. Feature order is fixed; models store the names and refuse to load
// against a different order.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqoe/detail/stats.hpp"
#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"
#include "vqoe/frame_assembly.hpp"
#include "vqoe/media_classifier.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

enum class FeatureSet { IpUdp, Rtp };

inline constexpr std::array<std::string_view, 12> kFlowFeatureNames = {
    "bytes_per_s", "pkts_per_s",  "size_mean",  "size_std",
    "size_median", "size_min",    "size_max",   "iat_mean",
    "iat_std",     "iat_median",  "iat_min",    "iat_max"};

inline constexpr std::array<std::string_view, 2> kSemanticFeatureNames = {
    "n_unique_sizes", "n_microbursts"};

inline constexpr std::array<std::string_view, 12> kRtpFeatureNames = {
    "unique_rtp_ts_video", "unique_rtp_ts_retx",  "unique_rtp_ts_intersection",
    "unique_rtp_ts_union", "marker_sum_video",    "marker_sum_retx",
    "ooo_count",           "lag_mean",            "lag_std",
    "lag_median",          "lag_min",             "lag_max"};

inline std::vector<std::string> feature_names(FeatureSet set) {
  std::vector<std::string> names(kFlowFeatureNames.begin(), kFlowFeatureNames.end());
  if (set == FeatureSet::IpUdp) {
    names.insert(names.end(), kSemanticFeatureNames.begin(), kSemanticFeatureNames.end());
  } else {
    names.insert(names.end(), kRtpFeatureNames.begin(), kRtpFeatureNames.end());
  }
  return names;
}

inline std::string_view to_string(FeatureSet set) {
  return set == FeatureSet::IpUdp ? "ipudp" : "rtp";
}

struct SemanticParams {
  double theta_iat_ms = 3.0;
  double sf = 90000.0;  // RTP clock rate of the video stream
};

using FlowStats = std::array<double, 12>;
using RtpFeatures = std::array<double, 12>;

struct SemanticFeatures {
  double n_unique_sizes = 0;
  double n_microbursts = 0;
};

// Byte/packet rates over the window, five-number summaries of payload sizes
// (bytes) and of inter-arrival gaps between consecutive packets (seconds).
inline FlowStats flow_stats(std::span<const PacketRecord> window_packets,
                            double window_s = 1.0) {
  FlowStats out{};
  if (window_packets.empty()) return out;
  std::vector<double> sizes, iats;
  double bytes = 0;
  for (std::size_t i = 0; i < window_packets.size(); ++i) {
    sizes.push_back(window_packets[i].payload_len);
    bytes += window_packets[i].payload_len;
    if (i > 0) {
      iats.push_back(to_seconds(window_packets[i].arrival_us -
                                window_packets[i - 1].arrival_us));
    }
  }
  const auto s = detail::summarize(sizes);
  const auto g = detail::summarize(iats);
  out = {bytes / window_s,
         static_cast<double>(window_packets.size()) / window_s,
         s.mean, s.std, s.median, s.min, s.max,
         g.mean, g.std, g.median, g.min, g.max};
  return out;
}

// A microburst ends at every gap of at least theta_iat.
inline SemanticFeatures semantic_features(std::span<const PacketRecord> window_packets,
                                          const SemanticParams& params = {}) {
  SemanticFeatures out;
  if (window_packets.empty()) return out;
  std::set<std::uint32_t> sizes;
  const auto theta_us = static_cast<Micros>(std::llround(params.theta_iat_ms * 1000.0));
  double bursts = 1;
  for (std::size_t i = 0; i < window_packets.size(); ++i) {
    sizes.insert(window_packets[i].payload_len);
    if (i > 0 &&
        window_packets[i].arrival_us - window_packets[i - 1].arrival_us >= theta_us) {
      ++bursts;
    }
  }
  out.n_unique_sizes = static_cast<double>(sizes.size());
  out.n_microbursts = bursts;
  return out;
}

// Sequence decreases between consecutive video packets. A drop of more than
// half the 16-bit space is a wrap, not a reorder.
inline std::int64_t count_out_of_order(std::span<const std::uint16_t> sequences) {
  std::int64_t n = 0;
  for (std::size_t i = 1; i < sequences.size(); ++i) {
    // Serial-number comparison modulo 2^16.
    const auto diff = static_cast<std::uint16_t>(sequences[i] - sequences[i - 1]);
    if (diff > 32768) ++n;
  }
  return n;
}

struct FrameLag {
  Micros end_us = 0;
  double lag_s = 0.0;
};

// Delay of each frame relative to the schedule implied by its RTP timestamp,
// anchored so the first frame (by arrival) has zero lag.
inline std::vector<FrameLag> rtp_frame_lags(std::span<const Frame> rtp_frames,
                                            const SemanticParams& params = {}) {
  std::vector<FrameLag> out;
  if (rtp_frames.empty()) return out;
  const auto& first = rtp_frames.front();
  if (first.rtp_timestamps.empty()) {
    throw Error(ErrorCode::MissingRtp, "frame without RTP timestamp");
  }
  const Micros t0 = first.end_us;
  const std::uint32_t rtp0 = first.rtp_timestamps.front();
  for (const auto& f : rtp_frames) {
    if (f.rtp_timestamps.empty()) {
      throw Error(ErrorCode::MissingRtp, "frame without RTP timestamp");
    }
    const std::uint32_t delta = f.rtp_timestamps.front() - rtp0;  // mod 2^32
    const double sent = static_cast<double>(delta) / params.sf;
    out.push_back({f.end_us, to_seconds(f.end_us - t0) - sent});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FrameLag& a, const FrameLag& b) { return a.end_us < b.end_us; });
  return out;
}

// RTP features of one window. `window_lags` are the session-anchored lags of
// frames ending in the window.
inline RtpFeatures rtp_features(std::span<const PacketRecord> window_packets,
                                std::span<const FrameLag> window_lags) {
  std::set<std::uint32_t> video_ts, retx_ts;
  double marker_video = 0, marker_retx = 0;
  std::vector<std::uint16_t> video_seq;
  for (const auto& p : window_packets) {
    const bool video = p.is(MediaClass::Video);
    const bool retx = p.is(MediaClass::VideoRetransmission);
    if (!video && !retx) continue;
    if (!p.rtp) throw Error(ErrorCode::MissingRtp, "video packet without RTP header");
    if (video) {
      video_ts.insert(p.rtp->timestamp);
      marker_video += p.rtp->marker ? 1 : 0;
      video_seq.push_back(p.rtp->sequence);
    } else {
      retx_ts.insert(p.rtp->timestamp);
      marker_retx += p.rtp->marker ? 1 : 0;
    }
  }
  std::size_t inter = 0;
  for (auto ts : video_ts) inter += retx_ts.count(ts);
  std::vector<double> lags;
  for (const auto& l : window_lags) lags.push_back(l.lag_s);
  const auto s = detail::summarize(lags);
  return {static_cast<double>(video_ts.size()),
          static_cast<double>(retx_ts.size()),
          static_cast<double>(inter),
          static_cast<double>(video_ts.size() + retx_ts.size() - inter),
          marker_video,
          marker_retx,
          static_cast<double>(count_out_of_order(video_seq)),
          s.mean, s.std, s.median, s.min, s.max};
}

// ---------------------------------------------------------------------------
// Session-level extraction

// Computes windows of one classified session. For the IP/UDP set the session
// should be size-classified; for the RTP set, payload-type classified.
class FeatureExtractor {
 public:
  FeatureExtractor(const Session& session, FeatureSet set,
                   SemanticParams params = {}, Micros window_us = kMicrosPerSecond)
      : set_(set), params_(params), window_us_(window_us) {
    for (const auto& p : session.packets) {
      if (is_video_like(p)) video_.push_back(p);
    }
    if (set_ == FeatureSet::Rtp) {
      for (const auto& p : video_) {
        if (!p.rtp) throw Error(ErrorCode::MissingRtp, "video packet without RTP header");
      }
      const auto frames = assemble_rtp(video_);
      lags_ = rtp_frame_lags(frames, params_);
    }
  }

  FeatureSet set() const { return set_; }
  Micros window_us() const { return window_us_; }

  // Features of window `key` (in units of window_us since the epoch).
  std::vector<double> window(std::int64_t key) const {
    const Micros lo = key * window_us_;
    const Micros hi = lo + window_us_;
    auto by_time = [](const PacketRecord& p, Micros t) { return p.arrival_us < t; };
    const auto b = std::lower_bound(video_.begin(), video_.end(), lo, by_time);
    const auto e = std::lower_bound(video_.begin(), video_.end(), hi, by_time);
    const std::span<const PacketRecord> pk(video_.data() + (b - video_.begin()),
                                           static_cast<std::size_t>(e - b));
    const double w = static_cast<double>(window_us_) / 1e6;

    const auto flow = flow_stats(pk, w);
    std::vector<double> out(flow.begin(), flow.end());
    if (set_ == FeatureSet::IpUdp) {
      const auto sem = semantic_features(pk, params_);
      out.push_back(sem.n_unique_sizes);
      out.push_back(sem.n_microbursts);
    } else {
      auto by_end = [](const FrameLag& l, Micros t) { return l.end_us < t; };
      const auto lb = std::lower_bound(lags_.begin(), lags_.end(), lo, by_end);
      const auto le = std::lower_bound(lags_.begin(), lags_.end(), hi, by_end);
      const std::span<const FrameLag> wl(lags_.data() + (lb - lags_.begin()),
                                         static_cast<std::size_t>(le - lb));
      const auto rtp = rtp_features(pk, wl);
      out.insert(out.end(), rtp.begin(), rtp.end());
    }
    return out;
  }

 private:
  FeatureSet set_;
  SemanticParams params_;
  Micros window_us_;
  std::vector<PacketRecord> video_;
  std::vector<FrameLag> lags_;
};

// ---------------------------------------------------------------------------
// Feature CSV
//
// Header: session_id,window_start,<feature names...>[,fps,bitrate_kbps,
// frame_jitter_ms,frame_height]. Truth columns are present only when the
// table was built against ground truth; empty cells mean missing and a
// frame_height of -1 means unknown.

struct FeatureRow {
  std::string session_id;
  std::int64_t window_start = 0;
  std::vector<double> values;
  std::optional<QoeWindow> truth;
};

struct FeatureTable {
  std::vector<std::string> names;
  bool has_truth = false;
  std::vector<FeatureRow> rows;
};

inline constexpr std::array<std::string_view, 4> kTruthColumns = {
    "fps", "bitrate_kbps", "frame_jitter_ms", "frame_height"};

inline std::string format_feature_csv(const FeatureTable& table) {
  std::string out = "session_id,window_start";
  for (const auto& n : table.names) out += "," + n;
  if (table.has_truth) {
    for (auto c : kTruthColumns) out += fmt::format(",{}", c);
  }
  out += '\n';
  for (const auto& r : table.rows) {
    out += fmt::format("{},{}", r.session_id, r.window_start);
    for (double v : r.values) out += "," + detail::format_number(v);
    if (table.has_truth) {
      const QoeWindow t = r.truth.value_or(QoeWindow{});
      out += fmt::format(",{},{},{},{}", detail::format_optional(t.fps),
                         detail::format_optional(t.bitrate_kbps),
                         detail::format_optional(t.frame_jitter_ms),
                         t.frame_height ? *t.frame_height : -1);
    }
    out += '\n';
  }
  return out;
}

inline FeatureTable parse_feature_csv(const std::vector<std::string>& lines) {
  if (lines.empty()) throw Error(ErrorCode::BadHeader, "empty feature file");
  const auto header = detail::split(detail::trim(lines[0]), ',');
  if (header.size() < 3 || header[0] != "session_id" || header[1] != "window_start") {
    throw Error(ErrorCode::BadHeader, "feature header must start with session_id,window_start");
  }
  FeatureTable table;
  std::size_t n_cols = header.size();
  std::size_t n_features = n_cols - 2;
  if (n_cols >= 2 + kTruthColumns.size() + 1) {
    bool truth = true;
    for (std::size_t i = 0; i < kTruthColumns.size(); ++i) {
      truth = truth && header[n_cols - kTruthColumns.size() + i] == kTruthColumns[i];
    }
    if (truth) {
      table.has_truth = true;
      n_features -= kTruthColumns.size();
    }
  }
  for (std::size_t i = 0; i < n_features; ++i) table.names.emplace_back(header[2 + i]);

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::BadRow, "line " + std::to_string(li + 1) + ": " + why);
    };
    const auto f = detail::split(lines[li], ',');
    if (f.size() != n_cols) throw bad("expected " + std::to_string(n_cols) + " fields");
    FeatureRow row;
    row.session_id = std::string(detail::trim(f[0]));
    const auto ws = detail::parse_int<std::int64_t>(f[1]);
    if (!ws) throw bad("window_start");
    row.window_start = *ws;
    for (std::size_t i = 0; i < n_features; ++i) {
      const auto v = detail::parse_double(f[2 + i]);
      if (!v || !std::isfinite(*v)) throw bad(table.names[i]);
      row.values.push_back(*v);
    }
    if (table.has_truth) {
      QoeWindow t;
      t.window_start = row.window_start;
      const std::size_t base = 2 + n_features;
      auto metric = [&](std::size_t col) -> std::optional<double> {
        if (detail::is_missing_field(f[col])) return std::nullopt;
        const auto v = detail::parse_double(f[col]);
        if (!v) throw bad(std::string(header[col]));
        return v;
      };
      t.fps = metric(base);
      t.bitrate_kbps = metric(base + 1);
      t.frame_jitter_ms = metric(base + 2);
      const auto h = detail::parse_int<int>(f[base + 3]);
      if (!h) throw bad("frame_height");
      if (*h >= 0) {
        t.frame_height = *h;
        t.resolution_class = resolution_class_of(*h);
      }
      row.truth = t;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline FeatureTable read_feature_csv(const std::filesystem::path& path) {
  return parse_feature_csv(detail::read_lines(path));
}

}  // namespace vqoe
