#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "vqoe/forest.hpp"

using namespace vqoe;

namespace {

ForestParams small(int trees = 20) {
  ForestParams p;
  p.n_trees = trees;
  p.n_threads = 1;
  return p;
}

Dataset noisy_line(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 10.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double row[] = {x};
    d.add_row(row, 2 * x + noise(rng), "g" + std::to_string(i % 10));
  }
  return d;
}

// y depends on column `j` only; the rest is noise.
Dataset one_informative(std::size_t j, std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = u(rng);
    out.add_row(row, row[j] > 0.5 ? 3.0 : 1.0, "g");
  }
  return out;
}

Tree stump(int feature, double threshold, double lo, double hi) {
  Tree t;
  t.nodes = {{feature, threshold, 1, 2, 0.0}, {-1, 0, -1, -1, lo}, {-1, 0, -1, -1, hi}};
  return t;
}

Tree leaf(double v) {
  Tree t;
  t.nodes = {{-1, 0, -1, -1, v}};
  return t;
}

}  // namespace

TEST(Train, ConstantTargetIsExact) {
  Dataset d;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const double row[] = {static_cast<double>(rng() % 100), static_cast<double>(i)};
    d.add_row(row, 5.0, "g");
  }
  const auto f = train(d, Task::Regression, small(), 7);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(predict_one(f, d.row(i)), 5.0);
  const double far[] = {-1e9, 1e9};
  EXPECT_EQ(predict_one(f, far), 5.0);
}

TEST(Train, SeparableClassesReachFullTrainingAccuracy) {
  Dataset d;
  for (int i = -20; i <= 20; ++i) {
    if (i == 0) continue;
    const double row[] = {i * 0.1};
    d.add_row(row, i < 0 ? 180.0 : 720.0, "g");
  }
  const auto f = train(d, Task::Classification, small(), 3);
  EXPECT_EQ(f.classes, (std::vector<double>{180.0, 720.0}));
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(predict_one(f, d.row(i)), d.y[i]);
}

TEST(Train, NoisyLineBeatsMeanPredictor) {
  const auto tr = noisy_line(200, 11);
  const auto te = noisy_line(200, 12);
  const auto f = train(tr, Task::Regression, small(50), 5);
  const double mean = std::accumulate(tr.y.begin(), tr.y.end(), 0.0) / tr.rows();
  double mae_forest = 0, mae_mean = 0;
  for (std::size_t i = 0; i < te.rows(); ++i) {
    mae_forest += std::abs(predict_one(f, te.row(i)) - te.y[i]);
    mae_mean += std::abs(mean - te.y[i]);
  }
  EXPECT_LT(mae_forest, mae_mean);
  EXPECT_LT(mae_forest / te.rows(), 1.5);
}

TEST(Train, MemorizesWithoutBootstrapAndDepthLimit) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < 120; ++i) {
    const double row[] = {u(rng), u(rng), u(rng)};
    d.add_row(row, u(rng) * 100, "g");
  }
  ForestParams p = small(5);
  p.bootstrap = false;
  p.max_depth = 0;
  p.max_features = 3;
  const auto f = train(d, Task::Regression, p, 1);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_DOUBLE_EQ(predict_one(f, d.row(i)), d.y[i]);
}

TEST(Train, Errors) {
  Dataset empty;
  empty.n_features = 2;
  try {
    train(empty, Task::Regression);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
  Dataset bad;
  const double row[] = {std::nan("")};
  bad.add_row(row, 1.0, "g");
  bad.add_row(row, 2.0, "g");
  try {
    train(bad, Task::Regression);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteInput);
  }
  Dataset d;
  const double two[] = {1, 2};
  d.add_row(two, 1, "g");
  const double three[] = {1, 2, 3};
  EXPECT_THROW(d.add_row(three, 1, "g"), Error);
}

TEST(Predict, IdenticalStumpsGiveStumpValue) {
  Forest f;
  f.task = Task::Regression;
  f.n_features = 2;
  for (int i = 0; i < 7; ++i) f.trees.push_back(stump(1, 0.5, -2.5, 4.25));
  const double lo[] = {9, 0.5}, hi[] = {-9, 0.75};
  EXPECT_EQ(predict_one(f, lo), -2.5);
  EXPECT_EQ(predict_one(f, hi), 4.25);
}

TEST(Predict, VoteTieGoesToLowerLabel) {
  Forest f;
  f.task = Task::Classification;
  f.n_features = 1;
  f.classes = {360.0, 720.0};
  f.trees = {leaf(1), leaf(0)};
  const double x[] = {0};
  EXPECT_EQ(predict_one(f, x), 360.0);
  f.trees.push_back(leaf(1));
  EXPECT_EQ(predict_one(f, x), 720.0);
}

TEST(Predict, DimensionMismatch) {
  const auto f = train(noisy_line(30, 1), Task::Regression, small(3), 1);
  const double x[] = {1, 2};
  try {
    predict_one(f, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Predict, BatchMatchesSingleRows) {
  const auto d = noisy_line(40, 2);
  const auto f = train(d, Task::Regression, small(5), 1);
  const auto all = predict(f, d.x);
  ASSERT_EQ(all.size(), d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(all[i], predict_one(f, d.row(i)));
}

TEST(Predict, LabelsComeFromTrainingSet) {
  std::mt19937_64 rng(4);
  Dataset d;
  const double labels[] = {180, 360, 720};
  for (int i = 0; i < 150; ++i) {
    const double row[] = {static_cast<double>(rng() % 1000), static_cast<double>(rng() % 7)};
    d.add_row(row, labels[rng() % 3], "g");
  }
  const auto f = train(d, Task::Classification, small(), 2);
  std::mt19937_64 probe(8);
  for (int i = 0; i < 500; ++i) {
    const double row[] = {static_cast<double>(probe() % 3000) - 1000, static_cast<double>(probe() % 20)};
    const double y = predict_one(f, row);
    EXPECT_TRUE(y == 180 || y == 360 || y == 720) << y;
  }
}

TEST(Determinism, ThreadCountDoesNotMatter) {
  const auto d = one_informative(2, 6, 300, 3);
  auto p = small(24);
  const auto one = forest_to_json(train(d, Task::Regression, p, 42)).dump();
  for (unsigned t : {2u, 4u, 0u}) {
    p.n_threads = t;
    EXPECT_EQ(forest_to_json(train(d, Task::Regression, p, 42)).dump(), one) << t;
  }
  EXPECT_NE(forest_to_json(train(d, Task::Regression, small(24), 43)).dump(), one);
}

TEST(Determinism, RowPermutationWithSameDrawsChangesNothing) {
  // Integer targets keep every impurity sum exact, so ties resolve identically.
  std::mt19937_64 rng(6);
  Dataset d;
  for (int i = 0; i < 80; ++i) {
    const double row[] = {static_cast<double>(rng() % 50), static_cast<double>(rng() % 9),
                          static_cast<double>(rng() % 4)};
    d.add_row(row, static_cast<double>(rng() % 20), "s" + std::to_string(i % 8));
  }
  std::vector<std::vector<std::size_t>> draws(6);
  for (auto& draw : draws) {
    for (std::size_t i = 0; i < d.rows(); ++i) draw.push_back(rng() % d.rows());
  }
  std::vector<std::size_t> perm(d.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  // Row i of the permuted set is row perm[i] of the original.
  const auto shuffled = d.subset(perm);
  std::vector<std::size_t> where(d.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) where[perm[i]] = i;
  auto moved = draws;
  for (auto& draw : moved) {
    for (auto& i : draw) i = where[i];
    std::shuffle(draw.begin(), draw.end(), rng);
  }
  auto p = small();
  p.max_features = 2;
  const auto a = train_with_draws(d, Task::Regression, p, 5, draws);
  const auto b = train_with_draws(shuffled, Task::Regression, p, 5, moved);
  for (int i = 0; i < 300; ++i) {
    const double row[] = {static_cast<double>(rng() % 60) - 5, static_cast<double>(rng() % 10),
                          static_cast<double>(rng() % 5)};
    EXPECT_EQ(predict_one(a, row), predict_one(b, row));
  }
  EXPECT_EQ(a.feature_importances, b.feature_importances);
}

TEST(Importance, InformativeFeatureRanksFirst) {
  for (std::size_t j : {0u, 3u, 5u}) {
    const auto f = train(one_informative(j, 6, 400, j + 1), Task::Regression, small(30), 1);
    const auto& imp = feature_importances(f);
    ASSERT_EQ(imp.size(), 6u);
    EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), static_cast<long>(j));
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
    for (double v : imp) EXPECT_GE(v, 0.0);
  }
}

TEST(Importance, ClassificationSumsToOne) {
  auto d = one_informative(1, 4, 300, 2);
  const auto f = train(d, Task::Classification, small(), 9);
  const auto& imp = feature_importances(f);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 1);
}

TEST(Importance, ConstantFeaturesGiveZeros) {
  Dataset d;
  for (int i = 0; i < 30; ++i) {
    const double row[] = {1.0, 2.0, 3.0};
    d.add_row(row, i % 3, "g");
  }
  const auto f = train(d, Task::Regression, small(), 1);
  for (double v : feature_importances(f)) EXPECT_EQ(v, 0.0);
  const double row[] = {1.0, 2.0, 3.0};
  EXPECT_NEAR(predict_one(f, row), 1.0, 0.5);
}

namespace {

std::vector<std::string> sessions_with_sizes(const std::vector<int>& sizes) {
  std::vector<std::string> g;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    for (int i = 0; i < sizes[s]; ++i) g.push_back("s" + std::to_string(s));
  }
  return g;
}

// Every row in exactly one test fold, train = complement, no session split.
void expect_partition(const std::vector<std::string>& groups, const std::vector<Fold>& folds) {
  std::vector<int> seen(groups.size(), 0);
  for (const auto& f : folds) {
    std::set<std::string> test_sessions, train_sessions;
    for (auto i : f.test) {
      ++seen[i];
      test_sessions.insert(groups[i]);
    }
    for (auto i : f.train) train_sessions.insert(groups[i]);
    EXPECT_EQ(f.test.size() + f.train.size(), groups.size());
    for (const auto& s : test_sessions) EXPECT_FALSE(train_sessions.count(s)) << s;
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

}  // namespace

TEST(KFold, TenEqualSessionsTwoPerFold) {
  const auto g = sessions_with_sizes(std::vector<int>(10, 12));
  const auto folds = kfold_by_session(g, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  expect_partition(g, folds);
  for (const auto& f : folds) {
    std::set<std::string> s;
    for (auto i : f.test) s.insert(g[i]);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_EQ(f.test.size(), 24u);
  }
}

TEST(KFold, LopsidedSessionsEachGetOwnFold) {
  const auto g = sessions_with_sizes({100, 1, 1, 1, 1});
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto folds = kfold_by_session(g, 5, seed);
    expect_partition(g, folds);
    std::multiset<std::size_t> sizes;
    for (const auto& f : folds) {
      std::set<std::string> s;
      for (auto i : f.test) s.insert(g[i]);
      EXPECT_EQ(s.size(), 1u);
      sizes.insert(f.test.size());
    }
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 1, 1, 1, 100}));
  }
}

TEST(KFold, SameSeedSameFolds) {
  std::mt19937_64 rng(1);
  std::vector<int> sizes;
  for (int i = 0; i < 23; ++i) sizes.push_back(static_cast<int>(rng() % 40) + 1);
  const auto g = sessions_with_sizes(sizes);
  const auto a = kfold_by_session(g, 5, 77);
  const auto b = kfold_by_session(g, 5, 77);
  expect_partition(g, a);
  for (std::size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(a[f].test, b[f].test);
    EXPECT_EQ(a[f].train, b[f].train);
  }
}

TEST(KFold, TooFewGroups) {
  const auto g = sessions_with_sizes({3, 3, 3});
  try {
    kfold_by_session(g, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewGroups);
  }
}

TEST(Serialization, JsonRoundTripPredictsIdentically) {
  const auto d = one_informative(1, 3, 200, 4);
  const auto f = train(d, Task::Classification, small(), 12, {"a", "b", "c"});
  const auto path = std::filesystem::temp_directory_path() / "vqoe_forest_rt.json";
  save_forest(f, path);
  const std::vector<std::string> names = {"a", "b", "c"};
  const auto g = load_forest(path, names);
  EXPECT_EQ(forest_to_json(g).dump(), forest_to_json(f).dump());
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(predict_one(g, d.row(i)), predict_one(f, d.row(i)));
  const std::vector<std::string> other = {"a", "c", "b"};
  try {
    load_forest(path, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FeatureMismatch);
  }
  std::filesystem::remove(path);
}

TEST(Serialization, MalformedModelsAreRejected) {
  const auto f = train(noisy_line(30, 3), Task::Regression, small(2), 1);
  auto expect_bad = [](const nlohmann::json& j) {
    try {
      forest_from_json(j);
      FAIL() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadModel);
    }
  };
  const nlohmann::json good = nlohmann::json::parse(forest_to_json(f).dump());
  auto j = good;
  j["format"] = "other";
  expect_bad(j);
  j = good;
  j["version"] = 99;
  expect_bad(j);
  j = good;
  j.erase("trees");
  expect_bad(j);
  j = good;
  j["trees"][0]["left"][0] = 0;  // self loop
  if (j["trees"][0]["feature"][0] >= 0) expect_bad(j);
  j = good;
  j["trees"][0]["value"].push_back(1.0);
  expect_bad(j);

  const auto path = std::filesystem::temp_directory_path() / "vqoe_forest_bad.json";
  std::ofstream(path) << "{not json";
  try {
    load_forest(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadModel);
  }
  std::filesystem::remove(path);
}
