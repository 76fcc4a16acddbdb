#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vqoe/vqoe.hpp"

namespace fs = std::filesystem;

namespace vqoe::cli {
namespace {

// ---------------------------------------------------------------------------
// Window tables: per-window values keyed by session, read from ground-truth
// CSVs, prediction CSVs or feature CSVs carrying truth columns.

inline constexpr std::string_view kPredictionCsvHeader =
    "session_id,t_sec,fps,bitrate_kbps,frame_jitter_ms,frame_height";

struct WindowRow {
  std::string session_id;
  QoeWindow w;
};

std::string format_prediction_csv(const std::vector<WindowRow>& rows) {
  std::string out(kPredictionCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.session_id, r.w.window_start,
                       detail::format_optional(r.w.fps),
                       detail::format_optional(r.w.bitrate_kbps),
                       detail::format_optional(r.w.frame_jitter_ms),
                       r.w.frame_height ? *r.w.frame_height : -1);
  }
  return out;
}

std::vector<WindowRow> read_window_table(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::Empty, path.string() + ": empty file");
  const auto header = detail::trim(lines[0]);
  std::vector<WindowRow> rows;
  if (header == kGroundTruthCsvHeader) {
    for (auto& w : parse_ground_truth_csv(lines).rows) rows.push_back({"", w});
    return rows;
  }
  if (header == kPredictionCsvHeader) {
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (detail::trim(lines[i]).empty()) continue;
      auto bad = [&](const char* why) {
        return Error(ErrorCode::BadRow, fmt::format("line {}: {}", i + 1, why));
      };
      const auto f = detail::split(lines[i], ',');
      if (f.size() != 6) throw bad("expected 6 fields");
      WindowRow r;
      r.session_id = std::string(f[0]);
      const auto t = detail::parse_int<std::int64_t>(f[1]);
      if (!t) throw bad("t_sec");
      r.w.window_start = *t;
      auto metric = [&](std::string_view s, const char* name) -> std::optional<double> {
        if (detail::is_missing_field(s)) return std::nullopt;
        const auto v = detail::parse_double(s);
        if (!v) throw bad(name);
        return v;
      };
      r.w.fps = metric(f[2], "fps");
      r.w.bitrate_kbps = metric(f[3], "bitrate_kbps");
      r.w.frame_jitter_ms = metric(f[4], "frame_jitter_ms");
      const auto h = detail::parse_int<int>(f[5]);
      if (!h || *h < -1) throw bad("frame_height");
      if (*h >= 0) r.w.frame_height = *h;
      rows.push_back(std::move(r));
    }
    return rows;
  }
  if (header.starts_with("session_id,window_start,")) {
    const auto table = parse_feature_csv(lines);
    if (!table.has_truth) {
      throw Error(ErrorCode::BadHeader, path.string() + ": feature table has no truth columns");
    }
    for (const auto& r : table.rows) {
      QoeWindow w = *r.truth;
      w.window_start = r.window_start;
      rows.push_back({r.session_id, w});
    }
    return rows;
  }
  throw Error(ErrorCode::BadHeader, path.string() + ": unrecognized header");
}

// Pairs prediction and truth rows by (session, t_sec). When either side
// carries no session ids, rows are matched on t_sec alone.
std::vector<std::pair<QoeWindow, QoeWindow>> join_windows(const std::vector<WindowRow>& pred,
                                                          const std::vector<WindowRow>& truth) {
  auto anonymous = [](const std::vector<WindowRow>& v) {
    return std::all_of(v.begin(), v.end(), [](const auto& r) { return r.session_id.empty(); });
  };
  const bool by_time = anonymous(pred) || anonymous(truth);
  auto key = [&](const WindowRow& r) {
    return std::make_pair(by_time ? std::string{} : r.session_id, r.w.window_start);
  };
  std::map<std::pair<std::string, std::int64_t>, const QoeWindow*> truth_by_key;
  for (const auto& r : truth) {
    if (!truth_by_key.emplace(key(r), &r.w).second) {
      throw Error(ErrorCode::DuplicateSecond,
                  fmt::format("truth window {} appears twice", r.w.window_start));
    }
  }
  std::vector<std::pair<QoeWindow, QoeWindow>> out;
  for (const auto& r : pred) {
    auto it = truth_by_key.find(key(r));
    if (it != truth_by_key.end()) out.emplace_back(r.w, *it->second);
  }
  if (out.empty()) throw Error(ErrorCode::NoOverlap, "predictions and truth share no window");
  return out;
}

// ---------------------------------------------------------------------------
// Shared helpers

PayloadTypeMap payload_types(const std::string& profile, const std::string& file) {
  if (!file.empty()) {
    const auto profiles = read_payload_type_profiles(file);
    auto it = profiles.find(profile);
    if (it == profiles.end()) {
      throw Error(ErrorCode::InvalidArgument, "no payload-type profile '" + profile + "' in " + file);
    }
    return it->second;
  }
  if (profile == "teams-lab") return teams_lab_profile();
  if (profile == "teams-field") return teams_field_profile();
  throw Error(ErrorCode::InvalidArgument, "unknown payload-type profile '" + profile + "'");
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    detail::write_file_atomic(path, content);
  }
}

Micros window_us_of(std::int64_t window_s) {
  if (window_s < 1) throw Error(ErrorCode::InvalidArgument, "window must be >= 1 s");
  return window_s * kMicrosPerSecond;
}

// Key=value defaults: each known key becomes `--key=value` ahead of the user's
// own flags, which win because single-valued options keep their last value.
std::vector<std::string> apply_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].starts_with("--config=")) config = args[i].substr(9);
  }
  if (config.empty() || args.size() < 2) return args;
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({})) {
    if (s->get_name() == args[1]) sub = s;
  }
  if (!sub) return args;
  const auto lines = detail::read_lines(config);
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::BadRow, fmt::format("{}:{}: expected key=value", config, i + 1));
    }
    const auto k = std::string(detail::trim(line.substr(0, eq)));
    const auto v = std::string(detail::trim(line.substr(eq + 1)));
    if (k == "config") continue;
    if (!sub->get_option_no_throw("--" + k)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: unknown key '{}' for {}", config, i + 1, k, args[1]));
    }
    injected.push_back("--" + k + "=" + v);
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

void last_value_wins(CLI::App& app) {
  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options()) {
      if (opt->get_items_expected_max() == 1) {
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
  std::string out_dir;
  std::size_t sessions = 1;
  double duration = 60.0;
  double fps = 30.0;
  std::optional<double> fps_max;
  double bitrate = 800.0;
  std::optional<double> bitrate_max;
  std::vector<double> tiers;
  double delay = 0.0;
  double jitter = 0.0;
  std::optional<double> jitter_max;
  double loss = 0.0;
  std::optional<double> loss_max;
  bool retransmit = true;
  double rtt = 100.0;
  std::uint32_t max_payload = 1200;
  int keyframe_interval = 0;
  double frame_size_jitter = 0.2;
  bool non_separable = false;
  std::optional<int> height;
  std::string vca;
  bool pcap = false;
};

int cmd_synth(const SynthArgs& a, std::uint64_t seed, unsigned threads, const PayloadTypeMap& map,
              std::ostream& out) {
  CorpusSpec spec;
  spec.sessions = a.sessions;
  spec.duration_s = a.duration;
  spec.seed = seed;
  spec.sender.max_payload = a.max_payload;
  spec.sender.keyframe_interval = a.keyframe_interval;
  spec.sender.frame_size_jitter = a.frame_size_jitter;
  spec.sender.separable = !a.non_separable;
  spec.sender.frame_height = a.height;
  spec.sender.payload_type_map = map;
  spec.sender.vca_label = a.vca;
  spec.fps = {a.fps, a.fps_max.value_or(a.fps)};
  spec.bitrate_kbps = {a.bitrate, a.bitrate_max.value_or(a.bitrate)};
  spec.bitrate_tiers = a.tiers;
  spec.base_delay_ms = a.delay;
  spec.delay_jitter_ms = {a.jitter, a.jitter_max.value_or(a.jitter)};
  spec.loss_prob = {a.loss, a.loss_max.value_or(a.loss)};
  spec.retransmit = a.retransmit;
  spec.rtt_ms = a.rtt;
  spec.n_threads = threads;
  const auto corpus = generate_corpus(spec);

  const fs::path dir(a.out_dir);
  for (const auto& cs : corpus) {
    const auto& id = cs.session.session_id;
    write_packet_csv(cs.session, dir / (id + ".csv"));
    write_ground_truth_csv(cs.truth.rows, dir / (id + ".truth.csv"));
    detail::write_file_atomic(dir / (id + ".frames.csv"), format_frame_log_csv(cs.frames));
    if (a.pcap) write_pcap(cs.session, dir / (id + ".pcap"));
    out << fmt::format("{}: {} packets, {} frames, fps {}, bitrate {} kbps, height {}\n", id,
                       cs.session.packets.size(), cs.frames.size(), cs.profile.fps,
                       cs.profile.bitrate_kbps, cs.frame_height);
  }
  return 0;
}

struct ClassifyArgs {
  std::string input;
  std::string output;
  std::uint32_t vmin = 500;
  bool fit = false;
};

int cmd_classify(const ClassifyArgs& a, const PayloadTypeMap& map, std::ostream& out) {
  const auto session = read_session(a.input);
  const bool has_rtp = std::any_of(session.packets.begin(), session.packets.end(),
                                   [](const PacketRecord& p) { return p.rtp.has_value(); });
  SizeThreshold th{a.vmin};
  std::optional<Session> reference;
  if (has_rtp) reference = classify_by_payload_type(session, map);
  if (a.fit) {
    if (!reference) throw Error(ErrorCode::MissingRtp, "fitting v_min needs RTP payload types");
    th = fit_vmin(*reference);
  }
  const auto tagged = classify_by_size(session, th);
  std::string report;
  if (reference) {
    report = classification_report(tagged, *reference).to_table();
  } else {
    std::size_t video = 0;
    for (const auto& p : tagged.packets) video += is_video_like(p) ? 1 : 0;
    report = fmt::format("class,packets\nvideo,{}\nnon-video,{}\n", video,
                         tagged.packets.size() - video);
  }
  emit(a.output, report, out);
  if (!a.output.empty() && a.output != "-") out << fmt::format("v_min {}\n", th.v_min);
  return 0;
}

struct AnalyzeArgs {
  std::string input;
  std::string output;
  std::string frames_out;
  std::string method = "ipudp";
  std::uint32_t delta = 2;
  std::optional<std::size_t> lookback;
  std::string vca;
  std::uint32_t vmin = 500;
  std::int64_t window = 1;
};

int cmd_analyze(const AnalyzeArgs& a, const PayloadTypeMap& map, std::ostream& out) {
  const auto session = read_session(a.input);
  if (session.packets.empty()) throw Error(ErrorCode::Empty, a.input + ": no packets");
  HeuristicConfig cfg;
  cfg.method = a.method == "rtp" ? Method::Rtp : Method::IpUdp;
  cfg.assembly.delta_size_max = a.delta;
  cfg.assembly.n_max = a.lookback.value_or(default_lookback_for(a.vca));
  cfg.vmin = {a.vmin};
  cfg.payload_types = map;
  const auto frames = heuristic_frames(session, cfg);
  const Micros w_us = window_us_of(a.window);

  std::map<std::int64_t, QoeWindow> est;
  for (const auto& q : estimate_windows(frames, w_us)) est[q.window_start] = q;
  // Partial first and last windows are left out, empty ones report zero.
  const auto first = window_index(session.packets.front().arrival_us, w_us);
  const auto last = window_index(session.packets.back().arrival_us, w_us);
  std::vector<WindowRow> rows;
  for (auto k = first + 1; k < last; ++k) {
    const auto start = k * a.window;
    QoeWindow q;
    if (auto it = est.find(start); it != est.end()) {
      q = it->second;
    } else {
      q.window_start = start;
      q.duration_s = static_cast<double>(a.window);
      q.fps = 0.0;
      q.bitrate_kbps = 0.0;
    }
    rows.push_back({session.session_id, q});
  }
  emit(a.output, format_prediction_csv(rows), out);
  if (!a.frames_out.empty()) detail::write_file_atomic(a.frames_out, format_frames_csv(frames));
  return 0;
}

struct FeaturesArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> truths;
  std::string output;
  std::string set = "ipudp";
  std::uint32_t vmin = 500;
  double theta_iat_ms = 3.0;
  double sf = 90000.0;
  std::int64_t window = 1;
  std::int64_t offset = 0;
};

int cmd_features(const FeaturesArgs& a, const PayloadTypeMap& map, std::ostream& out) {
  if (!a.truths.empty() && a.truths.size() != a.inputs.size()) {
    throw Error(ErrorCode::InvalidArgument, "give one --truth per input or none");
  }
  FeatureConfig cfg;
  cfg.set = a.set == "rtp" ? FeatureSet::Rtp : FeatureSet::IpUdp;
  cfg.semantic.theta_iat_ms = a.theta_iat_ms;
  cfg.semantic.sf = a.sf;
  cfg.vmin = {a.vmin};
  cfg.payload_types = map;
  window_us_of(a.window);
  cfg.window_s = a.window;
  cfg.offset_s = a.offset;
  FeatureTable all;
  all.names = feature_names(cfg.set);
  all.has_truth = !a.truths.empty();
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    auto session = read_session(a.inputs[i]);
    std::optional<GroundTruthSeries> truth;
    if (all.has_truth) truth = read_ground_truth_csv(a.truths[i]);
    try {
      auto t = session_features(session, cfg, truth ? &*truth : nullptr);
      for (auto& r : t.rows) all.rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), a.inputs[i] + ": " + e.what());
    }
  }
  emit(a.output, format_feature_csv(all), out);
  return 0;
}

struct TrainArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string importances;
  std::string target;
  ForestParams params;
  bool no_bootstrap = false;
};

int cmd_train(TrainArgs a, std::uint64_t seed, unsigned threads, std::ostream& out) {
  const auto target = *parse_target(a.target);
  std::vector<FeatureTable> tables;
  for (const auto& in : a.inputs) tables.push_back(read_feature_csv(in));
  const auto ml = to_ml_table(tables, target);
  a.params.bootstrap = !a.no_bootstrap;
  a.params.n_threads = threads;
  const auto forest = train(ml.data, task_for(target), a.params, seed, ml.feature_names);
  auto j = forest_to_json(forest);
  j["target"] = to_string(target);
  detail::write_file_atomic(a.output, j.dump() + "\n");
  if (!a.importances.empty()) {
    std::string csv = "feature,importance\n";
    for (std::size_t f = 0; f < forest.feature_names.size(); ++f) {
      csv += fmt::format("{},{}\n", forest.feature_names[f], forest.feature_importances[f]);
    }
    detail::write_file_atomic(a.importances, csv);
  }
  out << fmt::format("trained {} trees on {} windows ({} target)\n", forest.trees.size(),
                     ml.data.rows(), to_string(target));
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string input;
  std::string output;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(a.model));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModel, a.model + ": " + e.what());
  }
  const auto forest = forest_from_json(j);
  const auto target = parse_target(j.value("target", std::string{}));
  if (!target) throw Error(ErrorCode::BadModel, a.model + ": model names no target");
  const auto table = read_feature_csv(a.input);
  if (table.names != forest.feature_names) {
    throw Error(ErrorCode::FeatureMismatch, "model features differ from " + a.input);
  }
  std::vector<WindowRow> rows;
  for (const auto& r : table.rows) {
    const double v = predict_one(forest, r.values);
    WindowRow row{r.session_id, {}};
    row.w.window_start = r.window_start;
    switch (*target) {
      case Target::Fps: row.w.fps = v; break;
      case Target::Bitrate: row.w.bitrate_kbps = v; break;
      case Target::Jitter: row.w.frame_jitter_ms = v; break;
      case Target::Resolution: row.w.frame_height = static_cast<int>(v); break;
    }
    rows.push_back(std::move(row));
  }
  emit(a.output, format_prediction_csv(rows), out);
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string output;
  std::string residuals;
  std::string metric = "fps";
  std::string method;
  std::optional<double> tol;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto pairs = join_windows(read_window_table(a.pred), read_window_table(a.truth));
  const std::string method = a.method.empty() ? fs::path(a.pred).stem().string() : a.method;
  MetricReport report;
  std::vector<std::int64_t> starts;
  if (a.metric == "resolution") {
    std::vector<int> ph, th, all;
    for (const auto& [p, t] : pairs) {
      if (!p.frame_height || !t.frame_height) continue;
      ph.push_back(*p.frame_height);
      th.push_back(*t.frame_height);
    }
    if (ph.empty()) throw Error(ErrorCode::Empty, "no window has both heights");
    all = th;
    all.insert(all.end(), ph.begin(), ph.end());
    const auto binning = ResolutionBinning::for_heights(all);
    report.metric = a.metric;
    report.method = method;
    report.n_windows = ph.size();
    report.excluded = pairs.size() - ph.size();
    report.confusion = resolution_confusion_from_heights(ph, th, binning);
  } else {
    std::vector<std::optional<double>> p, t;
    for (const auto& [pw, tw] : pairs) {
      std::optional<double> pv, tv;
      if (a.metric == "fps") {
        pv = pw.fps, tv = tw.fps;
      } else if (a.metric == "bitrate") {
        pv = pw.bitrate_kbps, tv = tw.bitrate_kbps;
      } else {
        pv = pw.frame_jitter_ms, tv = tw.frame_jitter_ms;
      }
      if (pv && tv) starts.push_back(pw.window_start);
      p.push_back(pv);
      t.push_back(tv);
    }
    report = evaluate_metric(a.metric, method, p, t, a.tol);
  }
  emit(a.output, to_json(report).dump(2) + "\n", out);
  if (!a.residuals.empty()) {
    detail::write_file_atomic(a.residuals, format_residuals_csv(starts, report));
  }
  return 0;
}

struct SweepArgs {
  std::string axis;
  std::vector<double> values;
  std::string output;
  std::string method = "ipudp";
  std::string metric = "fps";
  double tol = 2.0;
  std::size_t sessions = 5;
  double duration = 60.0;
  double fps = 30.0;
  double bitrate = 800.0;
  std::uint32_t max_payload = 1200;
  double jitter = 0.0;
  double loss = 0.0;
  bool retransmit = true;
  bool non_separable = false;
  std::uint32_t delta = 2;
  std::size_t lookback = 2;
  std::uint32_t vmin = 500;
  std::int64_t window = 1;
};

std::vector<double> default_axis_values(const std::string& axis) {
  if (axis == "window") return {1, 2, 5, 10};
  if (axis == "loss") return {0, 0.05, 0.1, 0.2};
  if (axis == "jitter") return {0, 10, 25, 50};
  return {1, 2, 3, 4, 5, 6};
}

int cmd_sweep(SweepArgs a, std::uint64_t seed, unsigned threads, const PayloadTypeMap& map,
              std::ostream& out) {
  if (a.values.empty()) a.values = default_axis_values(a.axis);
  auto runner = [&](double v) {
    CorpusSpec spec;
    spec.sessions = a.sessions;
    spec.duration_s = a.duration;
    spec.seed = seed;
    spec.sender.max_payload = a.max_payload;
    spec.sender.separable = !a.non_separable;
    spec.sender.payload_type_map = map;
    spec.fps = {a.fps, a.fps};
    spec.bitrate_kbps = {a.bitrate, a.bitrate};
    spec.delay_jitter_ms = {a.jitter, a.jitter};
    spec.loss_prob = {a.loss, a.loss};
    spec.retransmit = a.retransmit;
    HeuristicConfig cfg;
    cfg.method = a.method == "rtp" ? Method::Rtp : Method::IpUdp;
    cfg.assembly.delta_size_max = a.delta;
    cfg.assembly.n_max = a.lookback;
    cfg.vmin = {a.vmin};
    cfg.payload_types = map;
    std::int64_t window = a.window;
    if (a.axis == "loss") spec.loss_prob = {v, v};
    if (a.axis == "jitter") spec.delay_jitter_ms = {v, v};
    if (a.axis == "lookback") {
      if (v < 1) throw Error(ErrorCode::InvalidArgument, "lookback must be >= 1");
      cfg.assembly.n_max = static_cast<std::size_t>(v);
    }
    if (a.axis == "window") {
      if (v < 1) throw Error(ErrorCode::InvalidArgument, "window must be >= 1 s");
      window = static_cast<std::int64_t>(v);
    }
    std::vector<WindowPair> pairs;
    for (const auto& cs : generate_corpus(spec)) {
      auto p = evaluate_heuristic(cs.session, cs.truth, cfg, window);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    const auto r = report_pairs(pairs, a.metric, a.method, a.tol);
    return SweepRow{v, r.mae.value_or(0.0), r.within_tolerance.value_or(0.0), r.n_windows};
  };
  const auto result = sweep(a.axis, a.values, runner, threads);
  emit(a.output, result.to_csv(), out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video-conferencing QoE estimation from packet traces"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string config;
  std::string pt_profile = "teams-lab";
  std::string pt_file;
  auto common = [&](CLI::App* s) {
    s->add_option("--seed", seed, "Random seed");
    s->add_option("--threads", threads, "Worker threads, 0 = all cores");
    s->add_option("--config", config, "key=value file with default flags");
    s->add_option("--pt-profile", pt_profile, "Payload-type profile name");
    s->add_option("--pt-file", pt_file, "Payload-type profiles file (vca,pt,class)");
  };
  const std::vector<std::string> methods{"ipudp", "rtp"};
  const std::vector<std::string> metrics{"fps", "bitrate", "jitter"};

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("-o,--out", sa.out_dir, "Output directory")->required();
  synth->add_option("--sessions", sa.sessions)->check(CLI::PositiveNumber);
  synth->add_option("--duration", sa.duration, "Seconds per session");
  synth->add_option("--fps", sa.fps);
  synth->add_option("--fps-max", sa.fps_max, "Draw fps uniformly from [fps, fps-max]");
  synth->add_option("--bitrate", sa.bitrate, "kbps");
  synth->add_option("--bitrate-max", sa.bitrate_max);
  synth->add_option("--tiers", sa.tiers, "Bitrate tiers in kbps, one per session at random")
      ->delimiter(',');
  synth->add_option("--delay", sa.delay, "Base one-way delay, ms");
  synth->add_option("--jitter", sa.jitter, "Delay jitter sigma, ms");
  synth->add_option("--jitter-max", sa.jitter_max);
  synth->add_option("--loss", sa.loss, "Packet loss probability");
  synth->add_option("--loss-max", sa.loss_max);
  synth->add_flag("--retransmit,!--no-retransmit", sa.retransmit);
  synth->add_option("--rtt", sa.rtt, "Retransmission delay, ms");
  synth->add_option("--max-payload", sa.max_payload);
  synth->add_option("--keyframe-interval", sa.keyframe_interval);
  synth->add_option("--frame-size-jitter", sa.frame_size_jitter);
  synth->add_flag("--non-separable", sa.non_separable);
  synth->add_option("--height", sa.height, "Fixed frame height");
  synth->add_option("--vca", sa.vca, "VCA label");
  synth->add_flag("--pcap", sa.pcap, "Also write pcap traces");
  common(synth);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Media classification report");
  classify->add_option("input", ca.input)->required()->check(CLI::ExistingFile);
  classify->add_option("-o,--out", ca.output);
  classify->add_option("--vmin", ca.vmin, "Video size threshold, bytes");
  classify->add_flag("--fit", ca.fit, "Fit v_min from payload-type labels");
  common(classify);

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Heuristic per-window estimates");
  analyze->add_option("input", aa.input)->required()->check(CLI::ExistingFile);
  analyze->add_option("-o,--out", aa.output);
  analyze->add_option("--frames", aa.frames_out, "Write assembled frames here");
  analyze->add_option("--method", aa.method)->check(CLI::IsMember(methods));
  analyze->add_option("--delta", aa.delta, "Max intra-frame size difference, bytes");
  analyze->add_option("--lookback", aa.lookback, "Previous packets compared");
  analyze->add_option("--vca", aa.vca, "Picks the default lookback");
  analyze->add_option("--vmin", aa.vmin);
  analyze->add_option("--window", aa.window, "Window, seconds");
  common(analyze);

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Per-window feature CSV");
  features->add_option("inputs", fa.inputs)->required()->check(CLI::ExistingFile);
  features->add_option("--truth", fa.truths, "Ground truth per input")->check(CLI::ExistingFile);
  features->add_option("-o,--out", fa.output);
  features->add_option("--set", fa.set)->check(CLI::IsMember(methods));
  features->add_option("--vmin", fa.vmin);
  features->add_option("--theta-iat", fa.theta_iat_ms, "Microburst gap, ms");
  features->add_option("--sf", fa.sf, "RTP clock, Hz");
  features->add_option("--window", fa.window);
  features->add_option("--offset", fa.offset, "Seconds added to truth timestamps");
  common(features);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Fit a random forest");
  train_cmd->add_option("inputs", ta.inputs, "Feature CSVs with truth")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--out", ta.output)->required();
  train_cmd->add_option("--target", ta.target)
      ->required()
      ->check(CLI::IsMember({"fps", "bitrate", "jitter", "resolution"}));
  train_cmd->add_option("--trees", ta.params.n_trees)->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-depth", ta.params.max_depth, "0 = unlimited");
  train_cmd->add_option("--min-leaf", ta.params.min_samples_leaf)->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-features", ta.params.max_features, "0 = default");
  train_cmd->add_flag("--no-bootstrap", ta.no_bootstrap);
  train_cmd->add_option("--importances", ta.importances, "Write feature importances CSV");
  common(train_cmd);

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Apply a trained model");
  predict_cmd->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("input", pa.input)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("-o,--out", pa.output);
  common(predict_cmd);

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score estimates against truth");
  evaluate->add_option("pred", ea.pred)->required()->check(CLI::ExistingFile);
  evaluate->add_option("truth", ea.truth)->required()->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out", ea.output);
  evaluate->add_option("--residuals", ea.residuals);
  evaluate->add_option("--metric", ea.metric)
      ->check(CLI::IsMember({"fps", "bitrate", "jitter", "resolution"}));
  evaluate->add_option("--method", ea.method, "Label in the report");
  evaluate->add_option("--tol", ea.tol);
  common(evaluate);

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Heuristic sensitivity sweep");
  sweep_cmd->add_option("--axis", wa.axis)
      ->required()
      ->check(CLI::IsMember({"window", "loss", "jitter", "lookback"}));
  sweep_cmd->add_option("--values", wa.values)->delimiter(',');
  sweep_cmd->add_option("-o,--out", wa.output);
  sweep_cmd->add_option("--method", wa.method)->check(CLI::IsMember(methods));
  sweep_cmd->add_option("--metric", wa.metric)->check(CLI::IsMember(metrics));
  sweep_cmd->add_option("--tol", wa.tol);
  sweep_cmd->add_option("--sessions", wa.sessions)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--duration", wa.duration);
  sweep_cmd->add_option("--fps", wa.fps);
  sweep_cmd->add_option("--bitrate", wa.bitrate);
  sweep_cmd->add_option("--max-payload", wa.max_payload);
  sweep_cmd->add_option("--jitter", wa.jitter);
  sweep_cmd->add_option("--loss", wa.loss);
  sweep_cmd->add_flag("--retransmit,!--no-retransmit", wa.retransmit);
  sweep_cmd->add_flag("--non-separable", wa.non_separable);
  sweep_cmd->add_option("--delta", wa.delta);
  sweep_cmd->add_option("--lookback", wa.lookback);
  sweep_cmd->add_option("--vmin", wa.vmin);
  sweep_cmd->add_option("--window", wa.window);
  common(sweep_cmd);

  last_value_wins(app);

  try {
    const auto args = apply_config(raw_args, app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
      app.parse(rev);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : 1;
    }
    const auto map = payload_types(pt_profile, pt_file);
    if (*synth) return cmd_synth(sa, seed, threads, map, out);
    if (*classify) return cmd_classify(ca, map, out);
    if (*analyze) return cmd_analyze(aa, map, out);
    if (*features) return cmd_features(fa, map, out);
    if (*train_cmd) return cmd_train(ta, seed, threads, out);
    if (*predict_cmd) return cmd_predict(pa, out);
    if (*evaluate) return cmd_evaluate(ea, out);
    if (*sweep_cmd) return cmd_sweep(wa, seed, threads, map, out);
    return 2;
  } catch (const Error& e) {
    err << fmt::format("error: {}: {}\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace vqoe::cli
