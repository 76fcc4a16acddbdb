#pragma once

// Trace and ground-truth readers/writers, and alignment of a packet session
// with its per-second ground truth.
//
// Packet CSV:  ts_us,src_ip,dst_ip,src_port,dst_port,udp_payload_len,
//              rtp_pt,rtp_seq,rtp_ts,rtp_marker,rtp_ssrc   (-1 = no RTP)
// Truth CSV:   t_sec,fps,bitrate_kbps,frame_jitter_ms,frame_height
//              (empty metric = missing, frame_height -1 = unknown)
// pcap:        classic libpcap, magic a1b2c3d4 (us) or a1b23c4d (ns), either
//              byte order, Ethernet link type. IPv4/UDP only.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

inline constexpr std::string_view kPacketCsvHeader =
    "ts_us,src_ip,dst_ip,src_port,dst_port,udp_payload_len,rtp_pt,rtp_seq,"
    "rtp_ts,rtp_marker,rtp_ssrc";
inline constexpr std::string_view kGroundTruthCsvHeader =
    "t_sec,fps,bitrate_kbps,frame_jitter_ms,frame_height";

struct GroundTruthSeries {
  std::string session_id;
  std::vector<QoeWindow> rows;  // strictly increasing window_start
};

struct PcapReadResult {
  Session session;
  std::size_t skipped = 0;  // non-IPv4 / non-UDP / fragment records
};

namespace detail {

inline void sort_by_arrival(std::vector<PacketRecord>& packets) {
  std::stable_sort(packets.begin(), packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) {
                     return a.arrival_us < b.arrival_us;
                   });
}

struct ByteReader {
  std::span<const std::uint8_t> data;
  bool swap = false;

  std::uint32_t u32(std::size_t off) const {
    std::uint32_t v;
    std::memcpy(&v, data.data() + off, 4);
    if (swap) v = __builtin_bswap32(v);
    return v;
  }
};

inline void put_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
inline void put_le16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v));
  out.push_back(static_cast<char>(v >> 8));
}
inline void put_be16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}
inline void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>(v >> (8 * i)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pcap

inline PcapReadResult parse_pcap(std::span<const std::uint8_t> bytes,
                                 std::string session_id = {}) {
  constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
  constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
  constexpr std::uint32_t kLinkEthernet = 1;

  if (bytes.size() < 4) throw Error(ErrorCode::BadMagic, "file too small");
  detail::ByteReader rd{bytes};
  std::uint32_t magic = rd.u32(0);
  bool nanos = false;
  if (magic == kMagicMicros || magic == kMagicNanos) {
    nanos = magic == kMagicNanos;
  } else if (__builtin_bswap32(magic) == kMagicMicros ||
             __builtin_bswap32(magic) == kMagicNanos) {
    rd.swap = true;
    nanos = __builtin_bswap32(magic) == kMagicNanos;
  } else {
    throw Error(ErrorCode::BadMagic, fmt::format("magic 0x{:08x}", magic));
  }
  if (bytes.size() < 24) throw Error(ErrorCode::Truncated, "global header");
  const std::uint32_t link = rd.u32(20);
  if (link != kLinkEthernet) {
    throw Error(ErrorCode::UnsupportedLinkType,
                "link type " + std::to_string(link));
  }

  PcapReadResult result;
  result.session.session_id = std::move(session_id);
  std::size_t off = 24;
  std::size_t record_no = 0;
  while (off < bytes.size()) {
    ++record_no;
    if (bytes.size() - off < 16) {
      throw Error(ErrorCode::Truncated,
                  "record header " + std::to_string(record_no));
    }
    const std::uint32_t ts_sec = rd.u32(off);
    const std::uint32_t ts_frac = rd.u32(off + 4);
    const std::uint32_t incl_len = rd.u32(off + 8);
    off += 16;
    if (bytes.size() - off < incl_len) {
      throw Error(ErrorCode::Truncated,
                  "record " + std::to_string(record_no) + " declares " +
                      std::to_string(incl_len) + " bytes");
    }
    const auto frame = bytes.subspan(off, incl_len);
    off += incl_len;

    const Micros arrival = static_cast<Micros>(ts_sec) * kMicrosPerSecond +
                           (nanos ? ts_frac / 1000 : ts_frac);

    // Ethernet II -> IPv4 -> UDP. Anything else is skipped.
    if (frame.size() < 14 || detail::load_be16(frame.data() + 12) != 0x0800) {
      ++result.skipped;
      continue;
    }
    const auto ip = frame.subspan(14);
    if (ip.size() < 20 || (ip[0] >> 4) != 4) {
      ++result.skipped;
      continue;
    }
    const std::size_t ihl = std::size_t{ip[0] & 0x0fu} * 4;
    const std::uint16_t frag = detail::load_be16(ip.data() + 6);
    if (ip[9] != 17 || ihl < 20 || ip.size() < ihl + 8 || (frag & 0x1fff) != 0) {
      ++result.skipped;
      continue;
    }
    const auto udp = ip.subspan(ihl);
    const std::uint16_t udp_len = detail::load_be16(udp.data() + 4);
    if (udp_len < 8) {
      ++result.skipped;
      continue;
    }

    PacketRecord rec;
    rec.arrival_us = arrival;
    rec.src_ip = detail::load_be32(ip.data() + 12);
    rec.dst_ip = detail::load_be32(ip.data() + 16);
    rec.src_port = detail::load_be16(udp.data());
    rec.dst_port = detail::load_be16(udp.data() + 2);
    rec.payload_len = udp_len - 8u;
    const auto captured = udp.subspan(8, std::min<std::size_t>(
                                             udp.size() - 8, rec.payload_len));
    rec.rtp = try_parse_rtp_header(captured);
    result.session.packets.push_back(std::move(rec));
  }

  if (result.session.packets.empty()) {
    throw Error(ErrorCode::Empty, "no IPv4/UDP packets");
  }
  detail::sort_by_arrival(result.session.packets);
  return result;
}

inline PcapReadResult read_pcap(const std::filesystem::path& path) {
  const std::string raw = detail::read_file(path);
  return parse_pcap(
      std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()),
      path.stem().string());
}

// Microsecond-resolution little-endian pcap. UDP payloads carry the serialized
// RTP header (when present) followed by zero bytes up to payload_len.
inline std::string format_pcap(const Session& session) {
  std::string out;
  detail::put_le32(out, 0xa1b2c3d4);
  detail::put_le16(out, 2);
  detail::put_le16(out, 4);
  detail::put_le32(out, 0);
  detail::put_le32(out, 0);
  detail::put_le32(out, 262144);
  detail::put_le32(out, 1);

  for (const auto& p : session.packets) {
    std::string payload(p.payload_len, '\0');
    if (p.rtp) {
      const auto hdr = serialize_rtp_header(*p.rtp);
      std::memcpy(payload.data(), hdr.data(),
                  std::min<std::size_t>(hdr.size(), payload.size()));
    }
    std::string pkt;
    // Ethernet
    pkt.append(6, '\x02');
    pkt.append(6, '\x04');
    detail::put_be16(pkt, 0x0800);
    // IPv4
    const auto total_len = static_cast<std::uint16_t>(20 + 8 + p.payload_len);
    pkt.push_back('\x45');
    pkt.push_back('\0');
    detail::put_be16(pkt, total_len);
    detail::put_be16(pkt, 0);
    detail::put_be16(pkt, 0x4000);  // DF
    pkt.push_back('\x40');
    pkt.push_back('\x11');
    detail::put_be16(pkt, 0);
    detail::put_be32(pkt, p.src_ip);
    detail::put_be32(pkt, p.dst_ip);
    // UDP
    detail::put_be16(pkt, p.src_port);
    detail::put_be16(pkt, p.dst_port);
    detail::put_be16(pkt, static_cast<std::uint16_t>(8 + p.payload_len));
    detail::put_be16(pkt, 0);
    pkt += payload;

    detail::put_le32(out, static_cast<std::uint32_t>(p.arrival_us / kMicrosPerSecond));
    detail::put_le32(out, static_cast<std::uint32_t>(p.arrival_us % kMicrosPerSecond));
    detail::put_le32(out, static_cast<std::uint32_t>(pkt.size()));
    detail::put_le32(out, static_cast<std::uint32_t>(pkt.size()));
    out += pkt;
  }
  return out;
}

inline void write_pcap(const Session& session, const std::filesystem::path& path) {
  detail::write_file_atomic(path, format_pcap(session));
}

// ---------------------------------------------------------------------------
// Packet CSV

inline Session parse_packet_csv(const std::vector<std::string>& lines,
                                std::string session_id = {}) {
  if (lines.empty() || detail::trim(lines[0]) != kPacketCsvHeader) {
    throw Error(ErrorCode::BadHeader, "expected header '" +
                                          std::string(kPacketCsvHeader) + "'");
  }
  Session s;
  s.session_id = std::move(session_id);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::size_t line_no = i + 1;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::BadRow,
                   "line " + std::to_string(line_no) + ": " + why);
    };
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 11) throw bad("expected 11 fields");

    PacketRecord p;
    const auto ts = detail::parse_int<std::int64_t>(f[0]);
    if (!ts || *ts < 0) throw bad("ts_us");
    p.arrival_us = *ts;
    const auto src = parse_ipv4(detail::trim(f[1]));
    const auto dst = parse_ipv4(detail::trim(f[2]));
    if (!src || !dst) throw bad("ip address");
    p.src_ip = *src;
    p.dst_ip = *dst;
    const auto sport = detail::parse_int<std::uint16_t>(f[3]);
    const auto dport = detail::parse_int<std::uint16_t>(f[4]);
    if (!sport || !dport) throw bad("port");
    p.src_port = *sport;
    p.dst_port = *dport;
    const auto len = detail::parse_int<std::uint32_t>(f[5]);
    if (!len) throw bad("udp_payload_len");
    p.payload_len = *len;

    const auto pt = detail::parse_int<std::int64_t>(f[6]);
    if (!pt || *pt > 127) throw bad("rtp_pt");
    if (*pt >= 0) {
      const auto seq = detail::parse_int<std::uint16_t>(f[7]);
      const auto rts = detail::parse_int<std::uint32_t>(f[8]);
      const auto marker = detail::parse_int<int>(f[9]);
      const auto ssrc = detail::parse_int<std::uint32_t>(f[10]);
      if (!seq || !rts || !marker || (*marker != 0 && *marker != 1) || !ssrc) {
        throw bad("rtp fields");
      }
      RtpHeader h;
      h.payload_type = static_cast<std::uint8_t>(*pt);
      h.sequence = *seq;
      h.timestamp = *rts;
      h.marker = *marker == 1;
      h.ssrc = *ssrc;
      p.rtp = h;
    }
    s.packets.push_back(std::move(p));
  }
  detail::sort_by_arrival(s.packets);
  return s;
}

inline Session read_packet_csv(const std::filesystem::path& path) {
  return parse_packet_csv(detail::read_lines(path), path.stem().string());
}

inline std::string format_packet_csv(const Session& s) {
  std::string out(kPacketCsvHeader);
  out += '\n';
  for (const auto& p : s.packets) {
    out += fmt::format("{},{},{},{},{},{},", p.arrival_us,
                       ipv4_to_string(p.src_ip), ipv4_to_string(p.dst_ip),
                       p.src_port, p.dst_port, p.payload_len);
    if (p.rtp) {
      out += fmt::format("{},{},{},{},{}\n", p.rtp->payload_type,
                         p.rtp->sequence, p.rtp->timestamp,
                         p.rtp->marker ? 1 : 0, p.rtp->ssrc);
    } else {
      out += "-1,-1,-1,-1,-1\n";
    }
  }
  return out;
}

inline void write_packet_csv(const Session& s, const std::filesystem::path& path) {
  detail::write_file_atomic(path, format_packet_csv(s));
}

// Reads either format, picking by extension (.pcap) or content.
inline Session read_session(const std::filesystem::path& path) {
  if (path.extension() == ".pcap") return read_pcap(path).session;
  return read_packet_csv(path);
}

// ---------------------------------------------------------------------------
// Ground-truth CSV

inline GroundTruthSeries parse_ground_truth_csv(
    const std::vector<std::string>& lines, std::string session_id = {}) {
  if (lines.empty() || detail::trim(lines[0]) != kGroundTruthCsvHeader) {
    throw Error(ErrorCode::BadHeader,
                "expected header '" + std::string(kGroundTruthCsvHeader) + "'");
  }
  GroundTruthSeries series;
  series.session_id = std::move(session_id);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const std::size_t line_no = i + 1;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::BadRow,
                   "line " + std::to_string(line_no) + ": " + why);
    };
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 5) throw bad("expected 5 fields");
    QoeWindow w;
    const auto t = detail::parse_int<std::int64_t>(f[0]);
    if (!t) throw bad("t_sec");
    w.window_start = *t;
    auto metric = [&](std::string_view field,
                      const char* name) -> std::optional<double> {
      if (detail::is_missing_field(field)) return std::nullopt;
      const auto v = detail::parse_double(field);
      if (!v || *v < 0) throw bad(name);
      return v;
    };
    w.fps = metric(f[1], "fps");
    w.bitrate_kbps = metric(f[2], "bitrate_kbps");
    w.frame_jitter_ms = metric(f[3], "frame_jitter_ms");
    const auto h = detail::parse_int<int>(f[4]);
    if (!h || *h < -1) throw bad("frame_height");
    if (*h >= 0) {
      w.frame_height = *h;
      w.resolution_class = resolution_class_of(*h);
    }
    series.rows.push_back(w);
  }
  std::stable_sort(series.rows.begin(), series.rows.end(),
                   [](const QoeWindow& a, const QoeWindow& b) {
                     return a.window_start < b.window_start;
                   });
  for (std::size_t i = 1; i < series.rows.size(); ++i) {
    if (series.rows[i].window_start == series.rows[i - 1].window_start) {
      throw Error(ErrorCode::DuplicateSecond,
                  "t_sec " + std::to_string(series.rows[i].window_start));
    }
  }
  return series;
}

inline GroundTruthSeries read_ground_truth_csv(const std::filesystem::path& path) {
  return parse_ground_truth_csv(detail::read_lines(path), path.stem().string());
}

inline std::string format_ground_truth_csv(std::span<const QoeWindow> rows) {
  std::string out(kGroundTruthCsvHeader);
  out += '\n';
  for (const auto& w : rows) {
    out += fmt::format("{},{},{},{},{}\n", w.window_start,
                       detail::format_optional(w.fps),
                       detail::format_optional(w.bitrate_kbps),
                       detail::format_optional(w.frame_jitter_ms),
                       w.frame_height ? *w.frame_height : -1);
  }
  return out;
}

inline void write_ground_truth_csv(std::span<const QoeWindow> rows,
                                   const std::filesystem::path& path) {
  detail::write_file_atomic(path, format_ground_truth_csv(rows));
}

// ---------------------------------------------------------------------------
// Alignment

struct AlignOptions {
  std::int64_t offset_s = 0;  // added to every truth t_sec
  std::int64_t window_s = 1;
};

struct AlignedRow {
  std::string session_id;
  std::int64_t window_start = 0;  // epoch second of the window's first second
  // Half-open range of session packets arriving inside the window.
  std::size_t first_packet = 0;
  std::size_t end_packet = 0;
  QoeWindow truth;
};

struct AlignedDataset {
  std::vector<AlignedRow> rows;
};

namespace detail {

inline std::optional<double> mean_of(std::span<const std::optional<double>> v) {
  double sum = 0.0;
  int n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Folds `window_s` consecutive per-second rows into one window: metrics are
// averaged over the seconds that report them, height is the most frequent
// value (smallest on ties).
inline QoeWindow merge_truth_rows(std::span<const QoeWindow* const> rows,
                                  std::int64_t start, std::int64_t window_s) {
  QoeWindow out;
  out.window_start = start;
  out.duration_s = static_cast<double>(window_s);
  std::vector<std::optional<double>> fps, br, jit;
  std::map<int, int> heights;
  for (const auto* r : rows) {
    fps.push_back(r->fps);
    br.push_back(r->bitrate_kbps);
    jit.push_back(r->frame_jitter_ms);
    if (r->frame_height) ++heights[*r->frame_height];
  }
  out.fps = mean_of(fps);
  out.bitrate_kbps = mean_of(br);
  out.frame_jitter_ms = mean_of(jit);
  int best = 0;
  for (const auto& [h, count] : heights) {
    if (count > best) {
      best = count;
      out.frame_height = h;
    }
  }
  if (out.frame_height) out.resolution_class = resolution_class_of(*out.frame_height);
  return out;
}

}  // namespace detail

inline AlignedDataset align(const Session& session, const GroundTruthSeries& truth,
                            const AlignOptions& opts = {}) {
  if (session.packets.empty()) throw Error(ErrorCode::Empty, "empty session");
  if (truth.rows.empty()) throw Error(ErrorCode::Empty, "empty ground truth");
  if (opts.window_s < 1) throw Error(ErrorCode::InvalidArgument, "window_s < 1");

  const std::int64_t first = truth.rows.front().window_start + opts.offset_s;
  const std::int64_t last = truth.rows.back().window_start + opts.offset_s;
  const auto span_s = last - first + 1;
  if (static_cast<std::int64_t>(truth.rows.size()) < span_s) {
    throw Error(ErrorCode::SessionFiltered,
                fmt::format("{} truth rows over a {}-second span",
                            truth.rows.size(), span_s));
  }
  std::map<std::int64_t, const QoeWindow*> by_second;
  for (const auto& r : truth.rows) by_second[r.window_start + opts.offset_s] = &r;

  const Micros w_us = opts.window_s * kMicrosPerSecond;
  const auto& pk = session.packets;
  const auto first_win = window_index(pk.front().arrival_us, w_us);
  const auto last_win = window_index(pk.back().arrival_us, w_us);

  AlignedDataset out;
  // The session's first and last windows are partial and never evaluated.
  for (auto k = first_win + 1; k < last_win; ++k) {
    const std::int64_t start = k * opts.window_s;
    std::vector<const QoeWindow*> rows;
    for (std::int64_t s = start; s < start + opts.window_s; ++s) {
      auto it = by_second.find(s);
      if (it == by_second.end()) break;
      rows.push_back(it->second);
    }
    if (static_cast<std::int64_t>(rows.size()) != opts.window_s) continue;

    AlignedRow row;
    row.session_id = session.session_id;
    row.window_start = start;
    const Micros lo = k * w_us;
    const Micros hi = lo + w_us;
    auto cmp = [](const PacketRecord& p, Micros t) { return p.arrival_us < t; };
    row.first_packet = static_cast<std::size_t>(
        std::lower_bound(pk.begin(), pk.end(), lo, cmp) - pk.begin());
    row.end_packet = static_cast<std::size_t>(
        std::lower_bound(pk.begin(), pk.end(), hi, cmp) - pk.begin());
    if (opts.window_s == 1) {
      row.truth = *rows.front();
      row.truth.window_start = start;
    } else {
      row.truth = detail::merge_truth_rows(rows, start, opts.window_s);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) {
    throw Error(ErrorCode::NoOverlap, "session and ground truth share no complete window");
  }
  return out;
}

}  // namespace vqoe
