#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vqoe/session_model.hpp"

namespace vqoe::test {

inline PacketRecord udp(Micros t, std::uint32_t len) {
  PacketRecord p;
  p.arrival_us = t;
  p.src_ip = 0x0a000001;
  p.dst_ip = 0x0a000002;
  p.src_port = 50000;
  p.dst_port = 3478;
  p.payload_len = len;
  return p;
}

inline PacketRecord rtp(Micros t, std::uint32_t len, int pt, std::uint16_t seq,
                        std::uint32_t ts, bool marker = false) {
  auto p = udp(t, len);
  RtpHeader h;
  h.payload_type = static_cast<std::uint8_t>(pt);
  h.sequence = seq;
  h.timestamp = ts;
  h.marker = marker;
  h.ssrc = 1;
  p.rtp = h;
  return p;
}

inline PacketRecord video(Micros t, std::uint32_t len) {
  auto p = udp(t, len);
  p.media_class = MediaClass::Video;
  return p;
}

inline std::vector<PacketRecord> videos(const std::vector<std::uint32_t>& sizes,
                                        Micros start = 0, Micros step = 100) {
  std::vector<PacketRecord> out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out.push_back(video(start + static_cast<Micros>(i) * step, sizes[i]));
  }
  return out;
}

}  // namespace vqoe::test
