#pragma once

// End-to-end runners shared by the CLI and the experiment suites: synthetic
// corpora, heuristic estimation against truth, feature tables and
// session-grouped cross-validation.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "vqoe/evaluation.hpp"
#include "vqoe/features.hpp"
#include "vqoe/forest.hpp"
#include "vqoe/frame_assembly.hpp"
#include "vqoe/ingest.hpp"
#include "vqoe/media_classifier.hpp"
#include "vqoe/qoe_heuristics.hpp"
#include "vqoe/session_model.hpp"
#include "vqoe/synth.hpp"

namespace vqoe {

// ---------------------------------------------------------------------------
// Corpora

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CorpusSpec {
  std::size_t sessions = 10;
  double duration_s = 60.0;
  std::uint64_t seed = 1;
  SenderProfile sender;
  Range fps{30.0, 30.0};
  Range bitrate_kbps{800.0, 800.0};
  // When set, each session picks one tier uniformly and scales it by a factor
  // drawn from tier_spread.
  std::vector<double> bitrate_tiers;
  Range tier_spread{0.85, 1.15};
  double base_delay_ms = 0.0;
  Range delay_jitter_ms{0.0, 0.0};
  Range loss_prob{0.0, 0.0};
  bool retransmit = true;
  double rtt_ms = 100.0;
  unsigned n_threads = 1;
};

struct CorpusSession {
  SenderProfile profile;
  ImpairmentProfile impairment;
  Session session;  // as received, unclassified
  GroundTruthSeries truth;
  std::vector<FrameLogEntry> frames;
  int frame_height = 0;
};

inline std::uint64_t session_seed(std::uint64_t corpus_seed, std::size_t index) {
  return detail::splitmix64(corpus_seed * 0x100000001b3ULL + index + 1);
}

inline CorpusSession make_corpus_session(const CorpusSpec& spec, std::size_t index) {
  std::mt19937_64 rng(session_seed(spec.seed, index));
  auto draw = [&](Range r) {
    return r.hi > r.lo ? std::uniform_real_distribution<double>(r.lo, r.hi)(rng) : r.lo;
  };
  CorpusSession cs;
  cs.profile = spec.sender;
  cs.profile.session_id = fmt::format("s{:04d}", index);
  cs.profile.fps = draw(spec.fps);
  if (!spec.bitrate_tiers.empty()) {
    const auto tier = detail::uniform_below(rng, spec.bitrate_tiers.size());
    cs.profile.bitrate_kbps = spec.bitrate_tiers[tier] * draw(spec.tier_spread);
  } else {
    cs.profile.bitrate_kbps = draw(spec.bitrate_kbps);
  }
  cs.impairment.base_delay_ms = spec.base_delay_ms;
  cs.impairment.delay_jitter_ms = draw(spec.delay_jitter_ms);
  cs.impairment.loss_prob = draw(spec.loss_prob);
  cs.impairment.retransmit = spec.retransmit;
  cs.impairment.rtt_ms = spec.rtt_ms;

  const std::uint64_t gen_seed = rng();
  const std::uint64_t imp_seed = rng();
  auto synth = generate(cs.profile, spec.duration_s, gen_seed);
  cs.frame_height = synth.frame_height;
  const bool clean = cs.impairment.base_delay_ms == 0 && cs.impairment.delay_jitter_ms == 0 &&
                     cs.impairment.loss_prob == 0;
  if (clean) {
    cs.session = std::move(synth.session);
    cs.truth = std::move(synth.truth);
    cs.frames = std::move(synth.frames);
  } else {
    cs.session = impair(synth.session, cs.impairment, imp_seed, cs.profile.payload_type_map);
    auto view = derive_receiver_view(cs.session, std::move(synth.frames),
                                     cs.profile.payload_type_map, cs.frame_height);
    cs.truth = std::move(view.truth);
    cs.frames = std::move(view.frames);
  }
  return cs;
}

inline std::vector<CorpusSession> generate_corpus(const CorpusSpec& spec) {
  std::vector<CorpusSession> out(spec.sessions);
  detail::parallel_for(spec.sessions, spec.n_threads,
                       [&](std::size_t i) { out[i] = make_corpus_session(spec, i); });
  return out;
}

// ---------------------------------------------------------------------------
// Heuristics

enum class Method { IpUdp, Rtp };

inline std::string_view to_string(Method m) { return m == Method::IpUdp ? "ipudp" : "rtp"; }

struct HeuristicConfig {
  Method method = Method::IpUdp;
  IpUdpAssemblyParams assembly;
  SizeThreshold vmin;
  PayloadTypeMap payload_types = teams_lab_profile();
};

// Video packets of a session under the method's classifier.
inline std::vector<PacketRecord> video_packets(const Session& session, const HeuristicConfig& cfg) {
  const Session tagged = cfg.method == Method::IpUdp
                             ? classify_by_size(session, cfg.vmin)
                             : classify_by_payload_type(session, cfg.payload_types);
  std::vector<PacketRecord> video;
  for (const auto& p : tagged.packets) {
    if (is_video_like(p)) video.push_back(p);
  }
  return video;
}

inline std::vector<Frame> heuristic_frames(const Session& session, const HeuristicConfig& cfg) {
  const auto video = video_packets(session, cfg);
  return cfg.method == Method::IpUdp ? assemble_ipudp(video, cfg.assembly) : assemble_rtp(video);
}

struct WindowPair {
  std::string session_id;
  std::int64_t window_start = 0;
  QoeWindow estimate;
  QoeWindow truth;
};

// Heuristic estimates paired with truth on the session's complete windows.
inline std::vector<WindowPair> evaluate_heuristic(const Session& session,
                                                  const GroundTruthSeries& truth,
                                                  const HeuristicConfig& cfg,
                                                  std::int64_t window_s = 1) {
  const auto frames = heuristic_frames(session, cfg);
  const Micros w_us = window_s * kMicrosPerSecond;
  std::map<std::int64_t, QoeWindow> est;
  for (auto& q : estimate_windows(frames, w_us)) est[q.window_start] = q;

  const auto aligned = align(session, truth, {0, window_s});
  std::vector<WindowPair> out;
  for (const auto& row : aligned.rows) {
    WindowPair wp;
    wp.session_id = row.session_id;
    wp.window_start = row.window_start;
    wp.truth = row.truth;
    if (auto it = est.find(row.window_start); it != est.end()) {
      wp.estimate = it->second;
    } else {
      wp.estimate.window_start = row.window_start;
      wp.estimate.duration_s = static_cast<double>(window_s);
      wp.estimate.fps = 0.0;
      wp.estimate.bitrate_kbps = 0.0;
    }
    out.push_back(std::move(wp));
  }
  return out;
}

inline MetricReport report_pairs(std::span<const WindowPair> pairs, std::string_view metric,
                                 std::string method, std::optional<double> tol = std::nullopt) {
  if (metric != "fps" && metric != "bitrate" && metric != "jitter") {
    throw Error(ErrorCode::InvalidArgument, "unknown metric " + std::string(metric));
  }
  std::vector<std::optional<double>> p, t;
  for (const auto& wp : pairs) {
    if (metric == "fps") {
      p.push_back(wp.estimate.fps);
      t.push_back(wp.truth.fps);
    } else if (metric == "bitrate") {
      p.push_back(wp.estimate.bitrate_kbps);
      t.push_back(wp.truth.bitrate_kbps);
    } else {
      p.push_back(wp.estimate.frame_jitter_ms);
      t.push_back(wp.truth.frame_jitter_ms);
    }
  }
  return evaluate_metric(std::string(metric), std::move(method), p, t, tol);
}

// ---------------------------------------------------------------------------
// Feature tables and ML

enum class Target { Fps, Bitrate, Jitter, Resolution };

inline std::optional<Target> parse_target(std::string_view s) {
  if (s == "fps") return Target::Fps;
  if (s == "bitrate") return Target::Bitrate;
  if (s == "jitter") return Target::Jitter;
  if (s == "resolution") return Target::Resolution;
  return std::nullopt;
}

inline std::string_view to_string(Target t) {
  switch (t) {
    case Target::Fps: return "fps";
    case Target::Bitrate: return "bitrate";
    case Target::Jitter: return "jitter";
    case Target::Resolution: return "resolution";
  }
  return "fps";
}

inline Task task_for(Target t) {
  return t == Target::Resolution ? Task::Classification : Task::Regression;
}

struct FeatureConfig {
  FeatureSet set = FeatureSet::IpUdp;
  SemanticParams semantic;
  SizeThreshold vmin;
  PayloadTypeMap payload_types = teams_lab_profile();
  std::int64_t window_s = 1;
  std::int64_t offset_s = 0;
};

// Features of every complete window of `session`, with truth attached when
// given. Without truth, all but the partial edge windows are emitted.
inline FeatureTable session_features(const Session& session, const FeatureConfig& cfg,
                                     const GroundTruthSeries* truth = nullptr) {
  if (session.packets.empty()) throw Error(ErrorCode::Empty, "empty session");
  const Session tagged = cfg.set == FeatureSet::IpUdp
                             ? classify_by_size(session, cfg.vmin)
                             : classify_by_payload_type(session, cfg.payload_types);
  const Micros w_us = cfg.window_s * kMicrosPerSecond;
  FeatureExtractor fx(tagged, cfg.set, cfg.semantic, w_us);
  FeatureTable table;
  table.names = feature_names(cfg.set);
  table.has_truth = truth != nullptr;
  if (truth) {
    const auto aligned = align(session, *truth, {cfg.offset_s, cfg.window_s});
    for (const auto& row : aligned.rows) {
      table.rows.push_back({row.session_id, row.window_start,
                            fx.window(floor_div(row.window_start, cfg.window_s)), row.truth});
    }
  } else {
    const auto first = window_index(session.packets.front().arrival_us, w_us);
    const auto last = window_index(session.packets.back().arrival_us, w_us);
    for (auto k = first + 1; k < last; ++k) {
      table.rows.push_back({session.session_id, k * cfg.window_s, fx.window(k), std::nullopt});
    }
  }
  return table;
}

// Resolution targets are raw frame heights; binning happens at evaluation.
inline std::optional<double> target_value(const QoeWindow& truth, Target t) {
  switch (t) {
    case Target::Fps: return truth.fps;
    case Target::Bitrate: return truth.bitrate_kbps;
    case Target::Jitter: return truth.frame_jitter_ms;
    case Target::Resolution:
      if (!truth.frame_height) return std::nullopt;
      return static_cast<double>(*truth.frame_height);
  }
  return std::nullopt;
}

struct MlTable {
  Dataset data;
  std::vector<std::int64_t> window_starts;
  std::vector<std::string> feature_names;
};

// Rows whose target is missing are left out.
inline MlTable to_ml_table(std::span<const FeatureTable> tables, Target target) {
  MlTable out;
  for (const auto& table : tables) {
    if (!table.has_truth) throw Error(ErrorCode::InvalidArgument, "feature table has no truth");
    if (out.feature_names.empty()) {
      out.feature_names = table.names;
      out.data.n_features = table.names.size();
    } else if (out.feature_names != table.names) {
      throw Error(ErrorCode::FeatureMismatch, "feature tables use different feature sets");
    }
    for (const auto& row : table.rows) {
      const auto y = target_value(*row.truth, target);
      if (!y) continue;
      out.data.add_row(row.values, *y, row.session_id);
      out.window_starts.push_back(row.window_start);
    }
  }
  return out;
}

// Out-of-fold predictions for every row under session-grouped k-fold CV.
inline std::vector<double> cross_validate(const Dataset& data, Task task,
                                          const ForestParams& params, std::size_t k,
                                          std::uint64_t seed) {
  const auto folds = kfold_by_session(data.groups, k, seed);
  std::vector<double> pred(data.rows(), 0.0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train_set = data.subset(folds[f].train);
    const auto forest = train(train_set, task, params, seed + f);
    for (auto i : folds[f].test) pred[i] = predict_one(forest, data.row(i));
  }
  return pred;
}

}  // namespace vqoe
