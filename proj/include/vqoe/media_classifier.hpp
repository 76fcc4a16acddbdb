#pragma once

// Media tagging. The size path needs only UDP payload lengths: packets at or
// above a threshold are video, everything else is ignored. The payload-type
// path reads the RTP header and serves as ground truth.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqoe/confusion.hpp"
#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

struct SizeThreshold {
  std::uint32_t v_min = 500;
};

inline constexpr std::uint32_t kDefaultKeepAliveSize = 304;

class PayloadTypeMap {
 public:
  PayloadTypeMap() = default;
  PayloadTypeMap(std::initializer_list<std::pair<const int, MediaClass>> init)
      : map_(init) {}

  void set(int payload_type, MediaClass c) { map_[payload_type] = c; }

  MediaClass classify(int payload_type) const {
    auto it = map_.find(payload_type);
    return it == map_.end() ? MediaClass::Other : it->second;
  }

  // First payload type mapped to `c`, if any.
  std::optional<int> payload_type_for(MediaClass c) const {
    for (const auto& [pt, cls] : map_) {
      if (cls == c) return pt;
    }
    return std::nullopt;
  }

  const std::map<int, MediaClass>& entries() const { return map_; }
  bool empty() const { return map_.empty(); }

 private:
  std::map<int, MediaClass> map_;
};

// Teams as observed in the lab: OPUS audio, H.264 video, RTX stream.
inline PayloadTypeMap teams_lab_profile() {
  return {{111, MediaClass::Audio},
          {102, MediaClass::Video},
          {103, MediaClass::VideoRetransmission}};
}

// Teams in the field uses different video payload types.
inline PayloadTypeMap teams_field_profile() {
  return {{111, MediaClass::Audio},
          {100, MediaClass::Video},
          {101, MediaClass::VideoRetransmission}};
}

inline std::optional<MediaClass> parse_media_class(std::string_view s) {
  s = detail::trim(s);
  if (s == "audio") return MediaClass::Audio;
  if (s == "video") return MediaClass::Video;
  if (s == "video_rtx" || s == "rtx" || s == "video_retransmission") {
    return MediaClass::VideoRetransmission;
  }
  if (s == "other") return MediaClass::Other;
  return std::nullopt;
}

// Profile config: one `vca,pt,class` line per mapping, '#' starts a comment.
inline std::map<std::string, PayloadTypeMap> parse_payload_type_profiles(
    const std::vector<std::string>& lines) {
  std::map<std::string, PayloadTypeMap> profiles;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto f = detail::split(line, ',');
    const auto pt = f.size() == 3 ? detail::parse_int<int>(f[1]) : std::nullopt;
    const auto cls = f.size() == 3 ? parse_media_class(f[2]) : std::nullopt;
    if (!pt || *pt < 0 || *pt > 127 || !cls) {
      throw Error(ErrorCode::BadRow, "profile line " + std::to_string(i + 1));
    }
    const std::string vca(detail::trim(f[0]));
    auto& profile = profiles[vca];
    if (profile.entries().contains(*pt)) {
      throw Error(ErrorCode::BadRow, "profile line " + std::to_string(i + 1) +
                                         ": payload type listed twice for " + vca);
    }
    if (*cls != MediaClass::Other && profile.payload_type_for(*cls)) {
      throw Error(ErrorCode::BadRow, "profile line " + std::to_string(i + 1) +
                                         ": class mapped twice for " + vca);
    }
    profile.set(*pt, *cls);
  }
  return profiles;
}

inline std::map<std::string, PayloadTypeMap> read_payload_type_profiles(
    const std::filesystem::path& path) {
  return parse_payload_type_profiles(detail::read_lines(path));
}

inline Session classify_by_size(Session session, SizeThreshold threshold) {
  for (auto& p : session.packets) {
    p.media_class =
        p.payload_len >= threshold.v_min ? MediaClass::Video : MediaClass::Other;
  }
  return session;
}

inline Session classify_by_payload_type(
    Session session, const PayloadTypeMap& map,
    std::uint32_t keepalive_size = kDefaultKeepAliveSize) {
  for (auto& p : session.packets) {
    if (!p.rtp) {
      p.media_class = MediaClass::Other;
      continue;
    }
    auto c = map.classify(p.rtp->payload_type);
    if (c == MediaClass::VideoRetransmission && p.payload_len == keepalive_size) {
      c = MediaClass::Other;  // RTX keep-alive, no media
    }
    p.media_class = c;
  }
  return session;
}

// Midpoint between the largest audio packet and the smallest video packet.
inline SizeThreshold fit_vmin(const Session& labeled) {
  std::uint32_t audio_max = 0;
  std::uint32_t video_min = std::numeric_limits<std::uint32_t>::max();
  bool has_audio = false;
  bool has_video = false;
  for (const auto& p : labeled.packets) {
    if (p.is(MediaClass::Audio)) {
      audio_max = std::max(audio_max, p.payload_len);
      has_audio = true;
    } else if (p.is(MediaClass::Video)) {
      video_min = std::min(video_min, p.payload_len);
      has_video = true;
    }
  }
  if (!has_audio || !has_video) {
    throw Error(ErrorCode::MissingClass,
                has_audio ? "no video packets" : "no audio packets");
  }
  if (audio_max >= video_min) {
    throw Error(ErrorCode::OverlappingRanges,
                fmt::format("audio max {} >= video min {}", audio_max, video_min));
  }
  return SizeThreshold{(audio_max + video_min) / 2};
}

inline bool is_video_like(const PacketRecord& p) {
  return p.is(MediaClass::Video) || p.is(MediaClass::VideoRetransmission);
}

// Video vs non-video agreement, laid out as actual-by-predicted.
inline ConfusionMatrix classification_report(const Session& predicted,
                                             const Session& truth) {
  if (predicted.packets.size() != truth.packets.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} predicted vs {} truth packets",
                            predicted.packets.size(), truth.packets.size()));
  }
  ConfusionMatrix m({"non-video", "video"});
  for (std::size_t i = 0; i < truth.packets.size(); ++i) {
    const std::size_t a = is_video_like(truth.packets[i]) ? 1 : 0;
    const std::size_t p = is_video_like(predicted.packets[i]) ? 1 : 0;
    m.add(a, p);
  }
  return m;
}

}  // namespace vqoe
