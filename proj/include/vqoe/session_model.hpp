#pragma once

// Core domain types: packets, RTP headers, frames, sessions and per-window QoE
// records. Times are carried as integer microseconds since the Unix epoch and
// converted to seconds only at API edges.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqoe/error.hpp"

namespace vqoe {

using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;
inline constexpr std::size_t kRtpFixedHeaderBytes = 12;

inline double to_seconds(Micros us) { return static_cast<double>(us) / 1e6; }
inline Micros to_micros(double seconds) {
  return static_cast<Micros>(std::llround(seconds * 1e6));
}

// Floor division that rounds toward negative infinity.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct RtpHeader {
  std::uint8_t version = 2;
  bool padding = false;
  bool extension = false;
  bool marker = false;
  std::uint8_t csrc_count = 0;
  std::uint8_t payload_type = 0;
  std::uint16_t sequence = 0;
  std::uint32_t timestamp = 0;
  std::uint32_t ssrc = 0;
  // Bytes consumed by the header: 12 + 4*csrc_count (+ extension block).
  std::size_t header_length = kRtpFixedHeaderBytes;

  bool operator==(const RtpHeader&) const = default;
};

enum class MediaClass { Audio, Video, VideoRetransmission, Other };

constexpr std::string_view to_string(MediaClass c) {
  switch (c) {
    case MediaClass::Audio: return "audio";
    case MediaClass::Video: return "video";
    case MediaClass::VideoRetransmission: return "video_rtx";
    case MediaClass::Other: return "other";
  }
  return "other";
}

struct PacketRecord {
  Micros arrival_us = 0;
  std::uint32_t src_ip = 0;  // host byte order
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t payload_len = 0;  // UDP payload bytes
  std::optional<RtpHeader> rtp;
  std::optional<MediaClass> media_class;

  double arrival_time() const { return to_seconds(arrival_us); }
  bool is(MediaClass c) const { return media_class == c; }

  bool operator==(const PacketRecord&) const = default;
};

struct Frame {
  int frame_id = 0;
  // Indices into the packet list the frame was assembled from.
  std::vector<std::size_t> packet_indices;
  std::int64_t size_bytes = 0;
  Micros start_us = 0;
  Micros end_us = 0;
  // Sorted, unique. Empty when assembled without RTP.
  std::vector<std::uint32_t> rtp_timestamps;

  double start_time() const { return to_seconds(start_us); }
  double end_time() const { return to_seconds(end_us); }
};

struct Session {
  std::string session_id;
  std::string vca_label;
  std::vector<PacketRecord> packets;

  bool operator==(const Session&) const = default;
};

enum class ResolutionClass { Low, Medium, High };

constexpr std::string_view to_string(ResolutionClass c) {
  switch (c) {
    case ResolutionClass::Low: return "low";
    case ResolutionClass::Medium: return "medium";
    case ResolutionClass::High: return "high";
  }
  return "low";
}

// Three-way frame-height binning: low <= 240 < medium <= 480 < high.
constexpr ResolutionClass resolution_class_of(int frame_height) {
  if (frame_height <= 240) return ResolutionClass::Low;
  if (frame_height <= 480) return ResolutionClass::Medium;
  return ResolutionClass::High;
}

struct QoeWindow {
  std::int64_t window_start = 0;  // epoch second
  double duration_s = 1.0;
  std::optional<double> fps;
  std::optional<double> bitrate_kbps;
  std::optional<double> frame_jitter_ms;
  std::optional<int> frame_height;
  std::optional<ResolutionClass> resolution_class;

  bool operator==(const QoeWindow&) const = default;
};

// ---------------------------------------------------------------------------
// RTP header parsing

namespace detail {

inline std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

}  // namespace detail

// Non-throwing variant used when probing arbitrary UDP payloads.
inline std::optional<RtpHeader> try_parse_rtp_header(
    std::span<const std::uint8_t> raw, ErrorCode* why = nullptr) {
  auto fail = [&](ErrorCode c) -> std::optional<RtpHeader> {
    if (why) *why = c;
    return std::nullopt;
  };
  if (raw.size() < kRtpFixedHeaderBytes) return fail(ErrorCode::TooShort);

  const std::uint8_t* p = raw.data();
  RtpHeader h;
  h.version = static_cast<std::uint8_t>(p[0] >> 6);
  if (h.version != 2) return fail(ErrorCode::BadVersion);
  h.padding = (p[0] & 0x20) != 0;
  h.extension = (p[0] & 0x10) != 0;
  h.csrc_count = static_cast<std::uint8_t>(p[0] & 0x0f);
  h.marker = (p[1] & 0x80) != 0;
  h.payload_type = static_cast<std::uint8_t>(p[1] & 0x7f);
  h.sequence = detail::load_be16(p + 2);
  h.timestamp = detail::load_be32(p + 4);
  h.ssrc = detail::load_be32(p + 8);

  std::size_t len = kRtpFixedHeaderBytes + 4u * h.csrc_count;
  if (h.extension) {
    // 16-bit profile id, 16-bit length in 32-bit words, then the words.
    if (raw.size() >= len + 4) {
      len += 4 + 4u * detail::load_be16(p + len + 2);
    } else {
      len += 4;
    }
  }
  h.header_length = len;
  return h;
}

inline RtpHeader parse_rtp_header(std::span<const std::uint8_t> raw) {
  ErrorCode why = ErrorCode::TooShort;
  if (auto h = try_parse_rtp_header(raw, &why)) return *h;
  if (why == ErrorCode::TooShort) {
    throw Error(why, "RTP header needs 12 bytes, got " +
                         std::to_string(raw.size()));
  }
  throw Error(why, "RTP version must be 2");
}

// Writes the fixed header plus zeroed CSRC entries. Extension blocks are not
// reproduced.
inline std::vector<std::uint8_t> serialize_rtp_header(const RtpHeader& h) {
  std::vector<std::uint8_t> out(kRtpFixedHeaderBytes + 4u * h.csrc_count, 0);
  out[0] = static_cast<std::uint8_t>((h.version << 6) | (h.padding ? 0x20 : 0) |
                                     (h.extension ? 0x10 : 0) |
                                     (h.csrc_count & 0x0f));
  out[1] = static_cast<std::uint8_t>((h.marker ? 0x80 : 0) |
                                     (h.payload_type & 0x7f));
  out[2] = static_cast<std::uint8_t>(h.sequence >> 8);
  out[3] = static_cast<std::uint8_t>(h.sequence);
  for (int i = 0; i < 4; ++i) {
    out[4 + i] = static_cast<std::uint8_t>(h.timestamp >> (24 - 8 * i));
    out[8 + i] = static_cast<std::uint8_t>(h.ssrc >> (24 - 8 * i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windows

inline std::int64_t window_of(double arrival_time) {
  return static_cast<std::int64_t>(std::floor(arrival_time));
}

inline std::int64_t window_of_us(Micros t) {
  return floor_div(t, kMicrosPerSecond);
}

// Index of the w-long window containing t, windows aligned to the epoch.
inline std::int64_t window_index(Micros t, Micros window_us) {
  return floor_div(t, window_us);
}

// ---------------------------------------------------------------------------
// IPv4 helpers

inline std::string ipv4_to_string(std::uint32_t ip) {
  return std::to_string((ip >> 24) & 0xff) + "." +
         std::to_string((ip >> 16) & 0xff) + "." +
         std::to_string((ip >> 8) & 0xff) + "." + std::to_string(ip & 0xff);
}

inline std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
  std::uint32_t ip = 0;
  int parts = 0;
  std::size_t i = 0;
  while (parts < 4) {
    if (i >= s.size() || s[i] < '0' || s[i] > '9') return std::nullopt;
    unsigned octet = 0;
    std::size_t digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      octet = octet * 10 + static_cast<unsigned>(s[i] - '0');
      if (++digits > 3 || octet > 255) return std::nullopt;
      ++i;
    }
    ip = (ip << 8) | octet;
    ++parts;
    if (parts < 4) {
      if (i >= s.size() || s[i] != '.') return std::nullopt;
      ++i;
    }
  }
  if (i != s.size()) return std::nullopt;
  return ip;
}

// Media bytes a packet contributes to its frame: payload minus the fixed RTP
// header. CSRC and extension bytes are not deducted.
inline std::int64_t media_bytes_of(const PacketRecord& p) {
  const auto len = static_cast<std::int64_t>(p.payload_len);
  return len > static_cast<std::int64_t>(kRtpFixedHeaderBytes)
             ? len - static_cast<std::int64_t>(kRtpFixedHeaderBytes)
             : 0;
}

}  // namespace vqoe
