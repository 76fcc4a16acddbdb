#include <gtest/gtest.h>

#include <optional>
#include <random>
#include <vector>

#include "vqoe/evaluation.hpp"

using namespace vqoe;

namespace {

using V = std::vector<double>;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

// Brute-force pair agreement.
double rand_oracle(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  double agree = 0, pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      pairs += 1;
      if ((a[i] == a[j]) == (b[i] == b[j])) agree += 1;
    }
  }
  return pairs == 0 ? 1.0 : agree / pairs;
}

}  // namespace

TEST(Mae, Examples) {
  EXPECT_EQ(mae(V{30, 28}, V{30, 30}), 1.0);
  EXPECT_EQ(mae(V{1.5, -2, 7}, V{1.5, -2, 7}), 0.0);
  EXPECT_EQ(mae(V{10}, V{12}), 2.0);
  EXPECT_EQ(code_of([] { mae(V{}, V{}); }), ErrorCode::Empty);
  EXPECT_EQ(code_of([] { mae(V{1}, V{1, 2}); }), ErrorCode::LengthMismatch);
}

TEST(Mae, SignSymmetric) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 5);
  V t(50), p(50), q(50);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = n(rng);
    const double r = n(rng);
    p[i] = t[i] + r;
    q[i] = t[i] - r;
  }
  EXPECT_DOUBLE_EQ(mae(p, t), mae(q, t));
}

TEST(Mrae, Examples) {
  EXPECT_DOUBLE_EQ(mrae(V{500}, V{400}).value, 0.25);
  EXPECT_EQ(mrae(V{300, 10}, V{300, 10}).value, 0.0);
  const auto r = mrae(V{500, 7, 90}, V{400, 0, 100});
  EXPECT_DOUBLE_EQ(r.value, (0.25 + 0.1) / 2);
  EXPECT_EQ(r.used, 2u);
  EXPECT_EQ(r.excluded_zero_truth, 1u);
  EXPECT_EQ(code_of([] { mrae(V{1, 2}, V{0, 0}); }), ErrorCode::AllExcluded);
}

TEST(WithinTolerance, Examples) {
  EXPECT_EQ(within_tolerance(V{31, 33}, V{30, 30}, 2), 0.5);
  EXPECT_EQ(within_tolerance(V{1, 2}, V{1, 2}, 0), 1.0);
  EXPECT_EQ(within_tolerance(V{1, 2.5}, V{1, 2}, 0), 0.5);
  EXPECT_EQ(within_tolerance(V{32}, V{30}, 2), 1.0);  // boundary counts
  EXPECT_EQ(code_of([] { within_tolerance(V{}, V{}, 1); }), ErrorCode::Empty);
}

TEST(WithinTolerance, MonotoneInTolerance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  V p(200), t(200, 0.0);
  for (auto& v : p) v = u(rng);
  double last = -1;
  for (double tol = 0; tol <= 11; tol += 0.25) {
    const double f = within_tolerance(p, t, tol);
    EXPECT_GE(f, last);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    last = f;
  }
  EXPECT_EQ(last, 1.0);
}

TEST(PairValues, MissingOnEitherSideIsExcluded) {
  const std::vector<std::optional<double>> p = {1, std::nullopt, 3, 4};
  const std::vector<std::optional<double>> t = {1, 2, std::nullopt, 6};
  const auto pv = pair_values(p, t);
  EXPECT_EQ(pv.pred, (V{1, 4}));
  EXPECT_EQ(pv.truth, (V{1, 6}));
  EXPECT_EQ(pv.excluded, 2u);
}

TEST(EvaluateMetric, ReportFields) {
  const std::vector<std::optional<double>> p = {30, 28, std::nullopt, 10};
  const std::vector<std::optional<double>> t = {30, 30, 30, 0};
  const auto r = evaluate_metric("fps", "ipudp", p, t, 2.0);
  EXPECT_EQ(r.n_windows, 3u);
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_DOUBLE_EQ(*r.mae, 4.0);
  EXPECT_DOUBLE_EQ(*r.mrae, (0 + 2.0 / 30) / 2);
  EXPECT_EQ(r.mrae_excluded_zero_truth, 1u);
  EXPECT_DOUBLE_EQ(*r.within_tolerance, 2.0 / 3);
  EXPECT_EQ(r.residuals, (V{0, -2, 10}));
  const auto j = to_json(r);
  EXPECT_EQ(j["metric"], "fps");
  EXPECT_EQ(j["method"], "ipudp");
  EXPECT_EQ(j["n_windows"], 3);
  EXPECT_EQ(j["tolerance"], 2.0);
  EXPECT_FALSE(j.contains("confusion"));
  const std::vector<std::int64_t> starts = {100, 101, 103};
  EXPECT_EQ(format_residuals_csv(starts, r), "window_start,residual\n100,0\n101,-2\n103,10\n");
}

TEST(EvaluateMetric, NothingEvaluable) {
  const std::vector<std::optional<double>> p = {std::nullopt};
  const std::vector<std::optional<double>> t = {1.0};
  const auto r = evaluate_metric("jitter", "rtp", p, t);
  EXPECT_EQ(r.n_windows, 0u);
  EXPECT_FALSE(r.mae);
  EXPECT_TRUE(to_json(r)["mae"].is_null());
}

TEST(Binning, TeamsEdges) {
  const auto b = ResolutionBinning::binned();
  EXPECT_EQ(b.labels(), (std::vector<std::string>{"low", "medium", "high"}));
  EXPECT_EQ(b.class_of(180), 0u);
  EXPECT_EQ(b.class_of(240), 0u);
  EXPECT_EQ(b.class_of(241), 1u);
  EXPECT_EQ(b.class_of(360), 1u);
  EXPECT_EQ(b.class_of(404), 1u);
  EXPECT_EQ(b.class_of(480), 1u);
  EXPECT_EQ(b.class_of(481), 2u);
  EXPECT_EQ(b.class_of(720), 2u);
  EXPECT_EQ(code_of([] { ResolutionBinning::binned({480, 240}); }), ErrorCode::InvalidArgument);
}

TEST(Binning, PerValueAndAutomaticChoice) {
  const auto b = ResolutionBinning::per_value({720, 180, 360, 180});
  EXPECT_EQ(b.labels(), (std::vector<std::string>{"180", "360", "720"}));
  EXPECT_EQ(b.class_of(360), 1u);
  EXPECT_EQ(code_of([&] { b.class_of(404); }), ErrorCode::UnknownClass);

  const std::vector<int> few = {180, 360, 720, 360};
  EXPECT_EQ(ResolutionBinning::for_heights(few).mode, ResolutionBinning::Mode::PerValue);
  const std::vector<int> many = {180, 216, 270, 360, 404, 540, 720};
  EXPECT_EQ(ResolutionBinning::for_heights(many).mode, ResolutionBinning::Mode::Binned);
}

TEST(Confusion, PerfectPredictionsGiveIdentity) {
  const std::vector<int> h = {180, 360, 720, 720, 360, 180, 180};
  const auto m = resolution_confusion_from_heights(h, h, ResolutionBinning::binned());
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m.percent(r, c), r == c ? 100.0 : 0.0);
  }
  EXPECT_EQ(m.accuracy(), 1.0);
  EXPECT_EQ(m.row_total(0), 3);
}

TEST(Confusion, CellsSumToWindowCount) {
  std::mt19937_64 rng(2);
  std::vector<std::size_t> p, t;
  for (int i = 0; i < 257; ++i) {
    p.push_back(rng() % 3);
    t.push_back(rng() % 3);
  }
  const auto m = resolution_confusion(p, t, ResolutionBinning::binned());
  EXPECT_EQ(m.total(), 257);
  for (std::size_t r = 0; r < 3; ++r) {
    double pct = 0;
    for (std::size_t c = 0; c < 3; ++c) pct += m.percent(r, c);
    EXPECT_NEAR(pct, 100.0, 1e-9);
  }
  std::vector<std::size_t> bad = {3};
  std::vector<std::size_t> ok = {0};
  EXPECT_EQ(code_of([&] { resolution_confusion(bad, ok, ResolutionBinning::binned()); }),
            ErrorCode::UnknownClass);
}

TEST(Confusion, TableLayout) {
  const std::vector<int> truth = {180, 180, 180, 180, 720};
  const std::vector<int> pred = {180, 180, 180, 360, 720};
  const auto m = resolution_confusion_from_heights(pred, truth, ResolutionBinning::binned());
  EXPECT_EQ(m.to_table(),
            "actual\\predicted,low,medium,high,total\n"
            "low,75.00%,25.00%,0.00%,4\n"
            "medium,0.00%,0.00%,0.00%,0\n"
            "high,0.00%,0.00%,100.00%,1\n");
}

TEST(RandIndex, MatchesBruteForce) {
  EXPECT_EQ(rand_index(std::vector<std::size_t>{0, 0, 1, 1}, std::vector<std::size_t>{5, 5, 2, 2}), 1.0);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> a, b;
    const auto n = 2 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(rng() % 5);
      b.push_back(rng() % 4);
    }
    EXPECT_NEAR(rand_index(a, b), rand_oracle(a, b), 1e-12);
  }
  EXPECT_EQ(rand_index(std::vector<std::size_t>{3}, std::vector<std::size_t>{1}), 1.0);
}

TEST(Sweep, OneRowPerAxisValueInOrder) {
  const V windows = {1, 2, 5, 10};
  const auto r = sweep(
      "window", windows,
      [](double w) {
        SweepRow row;
        row.mae = 4.0 / w;
        row.within_tolerance = 1.0;
        row.n_windows = static_cast<std::size_t>(100 / w);
        return row;
      },
      3);
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.rows[i].axis_value, windows[i]);
  EXPECT_EQ(r.argmin(), 10.0);
  EXPECT_EQ(r.to_csv(),
            "window,mae,within_tolerance,n_windows\n1,4,1,100\n2,2,1,50\n5,0.8,1,20\n10,0.4,1,10\n");
  EXPECT_EQ(code_of([] { sweep("loss", V{}, [](double) { return SweepRow{}; }); }),
            ErrorCode::InvalidArgument);
}

TEST(Sweep, RunnerErrorsPropagate) {
  const V v = {1, 2};
  EXPECT_THROW(sweep("lookback", v,
                     [](double x) -> SweepRow {
                       if (x > 1) throw Error(ErrorCode::InvalidArgument, "boom");
                       return {};
                     }),
               Error);
}
