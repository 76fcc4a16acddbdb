#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../tools/cli.hpp"
#include "vqoe/detail/text.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result vqoe_run(std::vector<std::string> args) {
  args.insert(args.begin(), "vqoe");
  std::ostringstream out, err;
  const int code = vqoe::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return vqoe::detail::read_file(p); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("vqoe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  // Two short sessions with delay jitter so ML targets vary.
  void make_corpus(const std::string& sub = "corpus") {
    const auto r = vqoe_run({"synth", "-o", path(sub), "--sessions", "2", "--duration", "12",
                             "--fps", "20", "--fps-max", "30", "--jitter", "5", "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, SynthWritesTracesTruthAndFrameLog) {
  const auto r = vqoe_run({"synth", "--fps", "30", "--bitrate", "800", "--duration", "5", "--seed",
                           "7", "-o", path("c"), "--pcap"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"s0000.csv", "s0000.truth.csv", "s0000.frames.csv", "s0000.pcap"}) {
    EXPECT_TRUE(fs::exists(dir / "c" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "c" / "s0000.truth.csv").substr(0, 9), "t_sec,fps");
  EXPECT_EQ(slurp(dir / "c" / "s0000.frames.csv").substr(0, 9), "frame_id,");
  EXPECT_NE(r.out.find("s0000"), std::string::npos);
}

TEST_F(Cli, AnalyzeThenEvaluate) {
  make_corpus();
  const auto a = vqoe_run({"analyze", "--method", "ipudp", "--delta", "2", "--lookback", "2",
                           path("corpus/s0000.csv"), "-o", path("pred.csv"), "--frames",
                           path("frames.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto pred = slurp(dir / "pred.csv");
  EXPECT_EQ(pred.substr(0, pred.find('\n')),
            "session_id,t_sec,fps,bitrate_kbps,frame_jitter_ms,frame_height");
  EXPECT_EQ(slurp(dir / "frames.csv").substr(0, 9), "frame_id,");

  const auto e = vqoe_run({"evaluate", path("pred.csv"), path("corpus/s0000.truth.csv"), "--metric",
                           "fps", "--tol", "2", "--residuals", path("res.csv")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  EXPECT_EQ(j["metric"], "fps");
  EXPECT_EQ(j["method"], "pred");
  EXPECT_TRUE(j["mae"].is_number());
  EXPECT_TRUE(j["within_tolerance"].is_number());
  EXPECT_GE(j["n_windows"].get<int>(), 9);
  EXPECT_EQ(slurp(dir / "res.csv").substr(0, 22), "window_start,residual\n");

  const auto rtp = vqoe_run({"analyze", "--method", "rtp", path("corpus/s0001.csv")});
  ASSERT_EQ(rtp.code, 0) << rtp.err;
  EXPECT_NE(rtp.out.find("s0001,"), std::string::npos);
}

TEST_F(Cli, ClassifyWithFittedThreshold) {
  make_corpus();
  const auto r = vqoe_run({"classify", path("corpus/s0000.csv"), "--fit"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("actual\\predicted,non-video,video,total"), std::string::npos);
  EXPECT_NE(r.out.find("non-video,100.00%,0.00%,"), std::string::npos);
  EXPECT_NE(r.out.find("video,0.00%,100.00%,"), std::string::npos);
}

TEST_F(Cli, FeaturesTrainPredictEvaluate) {
  make_corpus();
  for (const char* set : {"ipudp", "rtp"}) {
    const std::string feats = path(std::string("f_") + set + ".csv");
    auto f = vqoe_run({"features", "--set", set, path("corpus/s0000.csv"), path("corpus/s0001.csv"),
                       "--truth", path("corpus/s0000.truth.csv"), "--truth",
                       path("corpus/s0001.truth.csv"), "-o", feats});
    ASSERT_EQ(f.code, 0) << f.err;
    const std::string model = path(std::string("m_") + set + ".json");
    auto t = vqoe_run({"train", feats, "--target", "fps", "--trees", "10", "-o", model,
                       "--importances", path("imp.csv")});
    ASSERT_EQ(t.code, 0) << t.err;
    const auto mj = nlohmann::json::parse(slurp(model));
    EXPECT_EQ(mj["format"], "vqoe-forest");
    EXPECT_EQ(mj["target"], "fps");
    EXPECT_EQ(mj["trees"].size(), 10u);
    EXPECT_EQ(slurp(dir / "imp.csv").substr(0, 19), "feature,importance\n");

    auto p = vqoe_run({"predict", "--model", model, feats, "-o", path("p.csv")});
    ASSERT_EQ(p.code, 0) << p.err;
    auto e = vqoe_run({"evaluate", path("p.csv"), feats, "--metric", "fps", "--tol", "2"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_LT(nlohmann::json::parse(e.out)["mae"].get<double>(), 2.0);
  }
  // A model only accepts the feature set it was trained on.
  const auto bad = vqoe_run({"predict", "--model", path("m_rtp.json"), path("f_ipudp.csv")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("FeatureMismatch"), std::string::npos) << bad.err;
}

TEST_F(Cli, ResolutionTargetReportsConfusion) {
  const auto s = vqoe_run({"synth", "-o", path("c"), "--sessions", "3", "--duration", "8",
                           "--tiers", "300,800,1600", "--seed", "3"});
  ASSERT_EQ(s.code, 0) << s.err;
  std::vector<std::string> args = {"features"};
  for (int i = 0; i < 3; ++i) args.push_back(path(fmt::format("c/s{:04d}.csv", i)));
  for (int i = 0; i < 3; ++i) {
    args.push_back("--truth");
    args.push_back(path(fmt::format("c/s{:04d}.truth.csv", i)));
  }
  args.insert(args.end(), {"-o", path("f.csv")});
  ASSERT_EQ(vqoe_run(args).code, 0);
  ASSERT_EQ(vqoe_run({"train", path("f.csv"), "--target", "resolution", "--trees", "5", "-o",
                      path("m.json")}).code, 0);
  ASSERT_EQ(vqoe_run({"predict", "--model", path("m.json"), path("f.csv"), "-o", path("p.csv")}).code, 0);
  const auto e = vqoe_run({"evaluate", path("p.csv"), path("f.csv"), "--metric", "resolution"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  EXPECT_TRUE(j.contains("confusion"));
  EXPECT_TRUE(j["accuracy"].is_number());
}

TEST_F(Cli, SweepProducesOneRowPerValue) {
  const auto r = vqoe_run({"sweep", "--axis", "window", "--sessions", "2", "--duration", "20",
                           "-o", path("sweep.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = vqoe::detail::read_lines(dir / "sweep.csv");
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "window,mae,within_tolerance,n_windows");
  EXPECT_EQ(lines[1].substr(0, 2), "1,");
  EXPECT_EQ(lines[4].substr(0, 3), "10,");
}

TEST_F(Cli, RerunsAreByteIdentical) {
  make_corpus("a");
  make_corpus("b");
  for (const char* f : {"s0000.csv", "s0001.truth.csv", "s0001.frames.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  auto twice = [&](std::vector<std::string> args, const std::string& out) {
    auto a1 = args, a2 = args;
    a1.insert(a1.end(), {"-o", path(out + "1")});
    a2.insert(a2.end(), {"-o", path(out + "2"), "--threads", "3"});
    ASSERT_EQ(vqoe_run(a1).code, 0);
    ASSERT_EQ(vqoe_run(a2).code, 0);
    EXPECT_EQ(slurp(dir / (out + "1")), slurp(dir / (out + "2"))) << out;
  };
  twice({"analyze", path("a/s0000.csv")}, "an");
  twice({"features", path("a/s0000.csv"), "--truth", path("a/s0000.truth.csv")}, "fe");
  twice({"train", path("fe1"), "--target", "fps", "--trees", "12"}, "tr");
  twice({"predict", "--model", path("tr1"), path("fe1")}, "pr");
  twice({"evaluate", path("pr1"), path("fe1")}, "ev");
  twice({"sweep", "--axis", "loss", "--values", "0,0.1", "--sessions", "2", "--duration", "8"}, "sw");
}

TEST_F(Cli, ConfigSuppliesDefaultsAndFlagsWin) {
  make_corpus();
  std::ofstream(dir / "cfg.txt") << "# analyzer defaults\nmethod = rtp\nwindow=2\n";
  const auto from_cfg = vqoe_run({"analyze", path("corpus/s0000.csv"), "--config", path("cfg.txt")});
  const auto explicit_ = vqoe_run({"analyze", path("corpus/s0000.csv"), "--method", "rtp", "--window", "2"});
  ASSERT_EQ(from_cfg.code, 0) << from_cfg.err;
  EXPECT_EQ(from_cfg.out, explicit_.out);
  const auto override_ =
      vqoe_run({"analyze", path("corpus/s0000.csv"), "--config", path("cfg.txt"), "--window", "1"});
  const auto plain = vqoe_run({"analyze", path("corpus/s0000.csv"), "--method", "rtp"});
  EXPECT_EQ(override_.out, plain.out);

  std::ofstream(dir / "bad.txt") << "bogus=1\n";
  const auto bad = vqoe_run({"analyze", path("corpus/s0000.csv"), "--config", path("bad.txt")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("bogus"), std::string::npos);
}

TEST_F(Cli, InputErrorsExitWithOne) {
  EXPECT_EQ(vqoe_run({}).code, 1);
  EXPECT_EQ(vqoe_run({"frobnicate"}).code, 1);
  EXPECT_EQ(vqoe_run({"analyze", path("missing.csv")}).code, 1);
  EXPECT_EQ(vqoe_run({"analyze", "--method", "dpi", path("missing.csv")}).code, 1);
  EXPECT_EQ(vqoe_run({"synth"}).code, 1);  // -o required

  std::ofstream(dir / "junk.csv") << "hello,world\n1,2\n";
  const auto junk = vqoe_run({"analyze", path("junk.csv")});
  EXPECT_EQ(junk.code, 1);
  EXPECT_NE(junk.err.find("error:"), std::string::npos);

  std::ofstream(dir / "rows.csv") << "ts_us,src_ip,dst_ip,src_port,dst_port,udp_payload_len,rtp_pt,rtp_seq,"
                                     "rtp_ts,rtp_marker,rtp_ssrc\n"
                                  << "1,10.0.0.1,10.0.0.2,1,2,100,-1,,,,\nx\n";
  const auto rows = vqoe_run({"analyze", path("rows.csv")});
  EXPECT_EQ(rows.code, 1);
  EXPECT_NE(rows.err.find("line 3"), std::string::npos) << rows.err;

  std::ofstream(dir / "model.json") << "{\"format\":\"nope\"}";
  make_corpus();
  ASSERT_EQ(vqoe_run({"features", path("corpus/s0000.csv"), "-o", path("f.csv")}).code, 0);
  EXPECT_EQ(vqoe_run({"predict", "--model", path("model.json"), path("f.csv")}).code, 1);
  EXPECT_EQ(vqoe_run({"train", path("f.csv"), "--target", "fps", "-o", path("m.json")}).code, 1);
  EXPECT_EQ(vqoe_run({"analyze", path("corpus/s0000.csv"), "--pt-profile", "zoom"}).code, 1);
  EXPECT_EQ(vqoe_run({"analyze", path("corpus/s0000.csv"), "--window", "0"}).code, 1);

  std::ofstream(dir / "plain") << "x";
  EXPECT_EQ(vqoe_run({"analyze", path("corpus/s0000.csv"), "-o", path("plain/out.csv")}).code, 1);
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = vqoe_run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("synth"), std::string::npos);
}
