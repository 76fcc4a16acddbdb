#pragma once

// Random forest for regression (variance reduction) and classification (Gini),
// session-grouped k-fold splitting and impurity-based feature importance.
//
// Training is deterministic for a given seed: every tree draws from its own
// RNG stream derived from (seed, tree index), so the result does not depend on
// how many threads build trees.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"

namespace vqoe {

enum class Task { Regression, Classification };

inline std::string_view to_string(Task t) {
  return t == Task::Regression ? "regression" : "classification";
}

// Row-major feature matrix with targets and per-row session ids.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> groups;

  std::size_t rows() const { return y.size(); }

  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * n_features, n_features};
  }

  void add_row(std::span<const double> features, double target, std::string group) {
    if (n_features == 0 && rows() == 0) n_features = features.size();
    if (features.size() != n_features) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("row has {} features, dataset has {}", features.size(),
                              n_features));
    }
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(target);
    groups.push_back(std::move(group));
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.n_features = n_features;
    out.x.reserve(indices.size() * n_features);
    for (auto i : indices) {
      const auto r = row(i);
      out.x.insert(out.x.end(), r.begin(), r.end());
      out.y.push_back(y[i]);
      out.groups.push_back(groups.empty() ? std::string{} : groups[i]);
    }
    return out;
  }

  void validate() const {
    if (rows() == 0) throw Error(ErrorCode::EmptyDataset, "no rows");
    if (x.size() != rows() * n_features || (!groups.empty() && groups.size() != rows())) {
      throw Error(ErrorCode::DimensionMismatch, "inconsistent dataset shape");
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "feature value");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "target value");
    }
  }
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 20;  // <= 0: unlimited
  int min_samples_leaf = 1;
  int max_features = 0;  // 0: sqrt(d) for classification, ceil(d/3) for regression
  bool bootstrap = true;
  unsigned n_threads = 0;  // 0: hardware concurrency
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // regression mean, or class index for classification
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                       ? n.left
                                       : n.right);
    }
    return nodes[i].value;
  }
};

struct Forest {
  Task task = Task::Regression;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<double> classes;  // sorted label values (classification)
  std::vector<Tree> trees;
  std::vector<double> feature_importances;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tree) + 1));
}

// Uniform integer in [0, bound) from a 64-bit engine, independent of the
// standard library's distribution implementation.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % b);
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, Task task, std::span<const int> class_index,
              std::size_t n_classes, const ForestParams& params, std::size_t max_features,
              std::uint64_t seed)
      : data_(data),
        task_(task),
        class_index_(class_index),
        n_classes_(n_classes),
        params_(params),
        max_features_(max_features),
        rng_(seed),
        importance_(data.n_features, 0.0) {}

  std::mt19937_64& rng() { return rng_; }

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    grow(tree, samples, 0);
    return tree;
  }

  const std::vector<double>& importance() const { return importance_; }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
  };

  struct Entry {
    double x;
    double y;  // target, or class index
    std::size_t sample;
  };

  double leaf_value(std::span<const std::size_t> samples) const {
    if (task_ == Task::Regression) {
      std::vector<double> ys;
      ys.reserve(samples.size());
      for (auto s : samples) ys.push_back(data_.y[s]);
      std::sort(ys.begin(), ys.end());
      double sum = 0.0;
      for (double v : ys) sum += v;
      return sum / static_cast<double>(ys.size());
    }
    std::vector<std::size_t> counts(n_classes_, 0);
    for (auto s : samples) ++counts[static_cast<std::size_t>(class_index_[s])];
    std::size_t best = 0;
    for (std::size_t c = 1; c < n_classes_; ++c) {
      if (counts[c] > counts[best]) best = c;
    }
    return static_cast<double>(best);
  }

  double target(std::size_t s) const {
    return task_ == Task::Regression ? data_.y[s]
                                     : static_cast<double>(class_index_[s]);
  }

  bool is_pure(std::span<const std::size_t> samples) const {
    const double first = target(samples.front());
    for (auto s : samples) {
      if (target(s) != first) return false;
    }
    return true;
  }

  std::vector<std::size_t> choose_features() {
    const std::size_t d = data_.n_features;
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::size_t k = std::min(max_features_, d);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_below(rng_, d - i);
      std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
  }

  // Best split on one feature. `entries` are sorted by (x, y).
  void scan_feature(std::size_t feature, std::vector<Entry>& entries, Split& best) {
    const std::size_t n = entries.size();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    if (n < 2 * min_leaf) return;

    if (task_ == Task::Regression) {
      double total = 0.0;
      for (const auto& e : entries) total += e.y;
      const double parent = total * total / static_cast<double>(n);
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += entries[i].y;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (entries[i].x == entries[i + 1].x) continue;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right = total - left;
        const double decrease = left * left / static_cast<double>(nl) +
                                right * right / static_cast<double>(nr) - parent;
        consider(feature, entries[i].x, entries[i + 1].x, decrease, best);
      }
    } else {
      std::vector<double> total(n_classes_, 0.0), left(n_classes_, 0.0);
      for (const auto& e : entries) total[static_cast<std::size_t>(e.y)] += 1.0;
      double parent = 0.0;
      for (double c : total) parent += c * c;
      parent /= static_cast<double>(n);
      double sq_left = 0.0;
      double sq_right = 0.0;
      for (double c : total) sq_right += c * c;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(entries[i].y);
        // Update running sums of squared class counts.
        sq_left += 2.0 * left[c] + 1.0;
        left[c] += 1.0;
        const double rc = total[c] - left[c];
        sq_right -= 2.0 * rc + 1.0;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (entries[i].x == entries[i + 1].x) continue;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double decrease = sq_left / static_cast<double>(nl) +
                                sq_right / static_cast<double>(nr) - parent;
        consider(feature, entries[i].x, entries[i + 1].x, decrease, best);
      }
    }
  }

  static void consider(std::size_t feature, double lo, double hi, double decrease,
                       Split& best) {
    // Strictly greater keeps the lowest feature index, then lowest threshold.
    if (!(decrease > best.decrease)) return;
    double threshold = lo + (hi - lo) / 2.0;
    if (!(threshold < hi)) threshold = lo;
    best.feature = static_cast<int>(feature);
    best.threshold = threshold;
    best.decrease = decrease;
  }

  int grow(Tree& tree, std::vector<std::size_t>& samples, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));

    const bool depth_exhausted = params_.max_depth > 0 && depth >= params_.max_depth;
    if (depth_exhausted || samples.size() < 2 * min_leaf || is_pure(samples)) {
      tree.nodes[id].value = leaf_value(samples);
      return id;
    }

    Split best;
    std::vector<Entry> entries(samples.size());
    for (auto f : choose_features()) {
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto s = samples[i];
        entries[i] = {data_.x[s * data_.n_features + f], target(s), s};
      }
      std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
      });
      scan_feature(f, entries, best);
    }
    if (best.feature < 0) {
      tree.nodes[id].value = leaf_value(samples);
      return id;
    }

    std::vector<std::size_t> left, right;
    const auto f = static_cast<std::size_t>(best.feature);
    for (auto s : samples) {
      (data_.x[s * data_.n_features + f] <= best.threshold ? left : right).push_back(s);
    }
    importance_[f] += best.decrease;
    samples.clear();
    samples.shrink_to_fit();

    tree.nodes[id].feature = best.feature;
    tree.nodes[id].threshold = best.threshold;
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }

  const Dataset& data_;
  Task task_;
  std::span<const int> class_index_;
  std::size_t n_classes_;
  const ForestParams& params_;
  std::size_t max_features_;
  std::mt19937_64 rng_;
  std::vector<double> importance_;
};

inline std::size_t resolve_max_features(const ForestParams& p, Task task, std::size_t d) {
  if (p.max_features > 0) return std::min<std::size_t>(static_cast<std::size_t>(p.max_features), d);
  const auto k = task == Task::Classification
                     ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))))
                     : (d + 2) / 3;
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(d, 1));
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned n_threads, Fn&& fn) {
  unsigned threads = n_threads ? n_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// `draws`, when non-empty, fixes the training rows of every tree (test mode);
// otherwise rows are bootstrapped (or all used) per params.
inline Forest train_impl(const Dataset& data, Task task, const ForestParams& params,
                         std::uint64_t seed, std::vector<std::string> feature_names,
                         const std::vector<std::vector<std::size_t>>* draws) {
  data.validate();
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  if (!feature_names.empty() && feature_names.size() != data.n_features) {
    throw Error(ErrorCode::DimensionMismatch, "feature name count");
  }

  Forest forest;
  forest.task = task;
  forest.n_features = data.n_features;
  forest.feature_names = std::move(feature_names);
  forest.seed = seed;

  std::vector<int> class_index;
  if (task == Task::Classification) {
    forest.classes = data.y;
    std::sort(forest.classes.begin(), forest.classes.end());
    forest.classes.erase(std::unique(forest.classes.begin(), forest.classes.end()),
                         forest.classes.end());
    for (double v : data.y) {
      class_index.push_back(static_cast<int>(
          std::lower_bound(forest.classes.begin(), forest.classes.end(), v) -
          forest.classes.begin()));
    }
  }

  const auto n_trees = draws ? draws->size() : static_cast<std::size_t>(params.n_trees);
  const std::size_t max_features = resolve_max_features(params, task, data.n_features);
  const std::size_t n = data.rows();
  forest.trees.resize(n_trees);
  std::vector<std::vector<double>> importances(n_trees);

  parallel_for(n_trees, params.n_threads, [&](std::size_t t) {
    TreeBuilder builder(data, task, class_index, forest.classes.size(), params,
                        max_features, tree_seed(seed, t));
    std::vector<std::size_t> samples;
    if (draws) {
      samples = (*draws)[t];
    } else if (params.bootstrap) {
      samples.resize(n);
      for (auto& s : samples) s = uniform_below(builder.rng(), n);
    } else {
      samples.resize(n);
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    forest.trees[t] = builder.build(std::move(samples));
    importances[t] = builder.importance();
  });

  // Per-tree normalized decrease, averaged over trees, renormalized.
  forest.feature_importances.assign(data.n_features, 0.0);
  for (const auto& imp : importances) {
    double sum = 0.0;
    for (double v : imp) sum += v;
    if (sum <= 0.0) continue;
    for (std::size_t f = 0; f < imp.size(); ++f) forest.feature_importances[f] += imp[f] / sum;
  }
  double total = 0.0;
  for (double v : forest.feature_importances) total += v;
  if (total > 0.0) {
    for (double& v : forest.feature_importances) v /= total;
  }
  return forest;
}

}  // namespace detail

inline Forest train(const Dataset& data, Task task, const ForestParams& params = {},
                    std::uint64_t seed = 0, std::vector<std::string> feature_names = {}) {
  return detail::train_impl(data, task, params, seed, std::move(feature_names), nullptr);
}

// Builds one tree per entry of `draws`, each on exactly those row indices
// (duplicates allowed). Feature sampling still follows `seed`.
inline Forest train_with_draws(const Dataset& data, Task task, const ForestParams& params,
                               std::uint64_t seed,
                               const std::vector<std::vector<std::size_t>>& draws,
                               std::vector<std::string> feature_names = {}) {
  if (draws.empty()) throw Error(ErrorCode::InvalidArgument, "no draws");
  for (const auto& d : draws) {
    if (d.empty()) throw Error(ErrorCode::InvalidArgument, "empty draw");
    for (auto i : d) {
      if (i >= data.rows()) throw Error(ErrorCode::InvalidArgument, "draw index out of range");
    }
  }
  return detail::train_impl(data, task, params, seed, std::move(feature_names), &draws);
}

inline double predict_one(const Forest& forest, std::span<const double> row) {
  if (row.size() != forest.n_features) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("row has {} features, model expects {}", row.size(),
                            forest.n_features));
  }
  if (forest.trees.empty()) throw Error(ErrorCode::BadModel, "forest has no trees");
  if (forest.task == Task::Regression) {
    double sum = 0.0;
    for (const auto& t : forest.trees) sum += t.predict(row);
    return sum / static_cast<double>(forest.trees.size());
  }
  std::vector<std::size_t> votes(forest.classes.size(), 0);
  for (const auto& t : forest.trees) ++votes[static_cast<std::size_t>(t.predict(row))];
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;  // ties keep the lower label index
  }
  return forest.classes[best];
}

// Predicts every row of a row-major matrix with `forest.n_features` columns.
inline std::vector<double> predict(const Forest& forest, std::span<const double> x) {
  if (forest.n_features == 0 || x.size() % forest.n_features != 0) {
    throw Error(ErrorCode::DimensionMismatch, "matrix width does not match model");
  }
  std::vector<double> out;
  out.reserve(x.size() / forest.n_features);
  for (std::size_t off = 0; off < x.size(); off += forest.n_features) {
    out.push_back(predict_one(forest, x.subspan(off, forest.n_features)));
  }
  return out;
}

inline const std::vector<double>& feature_importances(const Forest& forest) {
  return forest.feature_importances;
}

// ---------------------------------------------------------------------------
// Session-grouped folds

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Sessions are shuffled by `seed`, ordered by row count (largest first) and
// assigned greedily to the fold with the fewest rows so far.
inline std::vector<Fold> kfold_by_session(std::span<const std::string> groups,
                                          std::size_t k = 5, std::uint64_t seed = 0) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be >= 2");
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < groups.size(); ++i) rows_of[groups[i]].push_back(i);
  if (rows_of.size() < k) {
    throw Error(ErrorCode::TooFewGroups,
                fmt::format("{} sessions for {} folds", rows_of.size(), k));
  }
  std::vector<const std::vector<std::size_t>*> sessions;
  for (const auto& [id, rows] : rows_of) sessions.push_back(&rows);
  std::mt19937_64 rng(detail::splitmix64(seed));
  for (std::size_t i = sessions.size(); i > 1; --i) {
    std::swap(sessions[i - 1], sessions[detail::uniform_below(rng, i)]);
  }
  std::stable_sort(sessions.begin(), sessions.end(),
                   [](const auto* a, const auto* b) { return a->size() > b->size(); });

  std::vector<std::vector<std::size_t>> test(k);
  for (const auto* rows : sessions) {
    std::size_t target = 0;
    for (std::size_t f = 1; f < k; ++f) {
      if (test[f].size() < test[target].size()) target = f;
    }
    test[target].insert(test[target].end(), rows->begin(), rows->end());
  }

  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), test[g].begin(), test[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kForestFormat = "vqoe-forest";
inline constexpr int kForestFormatVersion = 1;

inline nlohmann::ordered_json forest_to_json(const Forest& forest) {
  nlohmann::ordered_json j;
  j["format"] = kForestFormat;
  j["version"] = kForestFormatVersion;
  j["task"] = to_string(forest.task);
  j["seed"] = forest.seed;
  j["n_features"] = forest.n_features;
  j["feature_names"] = forest.feature_names;
  j["classes"] = forest.classes;
  j["feature_importances"] = forest.feature_importances;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : forest.trees) {
    nlohmann::ordered_json jt;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    jt["feature"] = feature;
    jt["threshold"] = threshold;
    jt["left"] = left;
    jt["right"] = right;
    jt["value"] = value;
    trees.push_back(std::move(jt));
  }
  j["trees"] = std::move(trees);
  return j;
}

inline Forest forest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kForestFormat) {
      throw Error(ErrorCode::BadModel, "not a forest model");
    }
    if (j.at("version").get<int>() != kForestFormatVersion) {
      throw Error(ErrorCode::BadModel, "unsupported model version");
    }
    Forest f;
    const auto task = j.at("task").get<std::string>();
    if (task == "regression") {
      f.task = Task::Regression;
    } else if (task == "classification") {
      f.task = Task::Classification;
    } else {
      throw Error(ErrorCode::BadModel, "unknown task " + task);
    }
    f.seed = j.at("seed").get<std::uint64_t>();
    f.n_features = j.at("n_features").get<std::size_t>();
    f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    f.classes = j.at("classes").get<std::vector<double>>();
    f.feature_importances = j.at("feature_importances").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      const auto n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
          value.size() != n) {
        throw Error(ErrorCode::BadModel, "tree arrays differ in length");
      }
      Tree t;
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (node.feature >= 0) {
          const auto ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
          if (static_cast<std::size_t>(node.feature) >= f.n_features || !ok(node.left) ||
              !ok(node.right) || !std::isfinite(node.threshold)) {
            throw Error(ErrorCode::BadModel, "malformed tree node");
          }
        } else if (f.task == Task::Classification &&
                   (node.value < 0 || node.value >= static_cast<double>(f.classes.size()))) {
          throw Error(ErrorCode::BadModel, "leaf class out of range");
        }
        t.nodes.push_back(node);
      }
      f.trees.push_back(std::move(t));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModel, e.what());
  }
}

inline void save_forest(const Forest& forest, const std::filesystem::path& path) {
  detail::write_file_atomic(path, forest_to_json(forest).dump() + "\n");
}

// Loads a model and checks that it was trained on `expected_features`, in
// order. An empty list skips the check.
inline Forest load_forest(const std::filesystem::path& path,
                          std::span<const std::string> expected_features = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadModel, e.what());
  }
  Forest f = forest_from_json(j);
  if (!expected_features.empty() &&
      !std::equal(f.feature_names.begin(), f.feature_names.end(),
                  expected_features.begin(), expected_features.end())) {
    throw Error(ErrorCode::FeatureMismatch, "model features differ from input features");
  }
  return f;
}

}  // namespace vqoe
