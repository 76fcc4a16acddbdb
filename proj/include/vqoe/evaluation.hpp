#pragma once

// Error metrics, resolution confusion matrices, partition agreement and the
// parameter sweep driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vqoe/confusion.hpp"
#include "vqoe/detail/text.hpp"
#include "vqoe/error.hpp"
#include "vqoe/forest.hpp"
#include "vqoe/session_model.hpp"

namespace vqoe {

// Prediction/truth pairs surviving pairwise exclusion of missing values.
struct PairedValues {
  std::vector<double> pred;
  std::vector<double> truth;
  std::size_t excluded = 0;
};

inline PairedValues pair_values(std::span<const std::optional<double>> pred,
                                std::span<const std::optional<double>> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} predictions vs {} truths", pred.size(), truth.size()));
  }
  PairedValues out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && truth[i]) {
      out.pred.push_back(*pred[i]);
      out.truth.push_back(*truth[i]);
    } else {
      ++out.excluded;
    }
  }
  return out;
}

namespace detail {
inline void check_paired(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} predictions vs {} truths", pred.size(), truth.size()));
  }
  if (pred.empty()) throw Error(ErrorCode::Empty, "no evaluable pairs");
}
}  // namespace detail

inline double mae(std::span<const double> pred, std::span<const double> truth) {
  detail::check_paired(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

struct MraeResult {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t excluded_zero_truth = 0;
};

// Mean of |pred - truth| / truth; rows with zero truth are skipped and counted.
inline MraeResult mrae(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction/truth length");
  }
  MraeResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] <= 0.0) {
      ++r.excluded_zero_truth;
      continue;
    }
    sum += std::abs(pred[i] - truth[i]) / truth[i];
    ++r.used;
  }
  if (r.used == 0) throw Error(ErrorCode::AllExcluded, "every truth value is zero");
  r.value = sum / static_cast<double>(r.used);
  return r;
}

inline double within_tolerance(std::span<const double> pred, std::span<const double> truth,
                               double tol) {
  detail::check_paired(pred, truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(pred[i] - truth[i]) <= tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Resolution

// Maps frame heights to class indices. Binned mode uses `edges` as inclusive
// upper bounds (low <= 240 < medium <= 480 < high by default); per-value mode
// gives every listed height its own class.
struct ResolutionBinning {
  enum class Mode { PerValue, Binned };
  Mode mode = Mode::Binned;
  std::vector<int> edges = {240, 480};
  std::vector<std::string> bin_labels = {"low", "medium", "high"};
  std::vector<int> values;  // per-value mode

  static ResolutionBinning binned(std::vector<int> edges = {240, 480},
                                  std::vector<std::string> labels = {"low", "medium",
                                                                     "high"}) {
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i] <= edges[i - 1]) {
        throw Error(ErrorCode::InvalidArgument, "bin edges must be strictly increasing");
      }
    }
    if (labels.size() != edges.size() + 1) {
      throw Error(ErrorCode::InvalidArgument, "need one label per bin");
    }
    ResolutionBinning b;
    b.edges = std::move(edges);
    b.bin_labels = std::move(labels);
    return b;
  }

  static ResolutionBinning per_value(std::vector<int> heights) {
    std::sort(heights.begin(), heights.end());
    heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
    ResolutionBinning b;
    b.mode = Mode::PerValue;
    b.values = std::move(heights);
    b.edges.clear();
    b.bin_labels.clear();
    return b;
  }

  // Binned when more than five distinct heights are present.
  static ResolutionBinning for_heights(std::span<const int> heights) {
    std::vector<int> distinct(heights.begin(), heights.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    return distinct.size() > 5 ? binned() : per_value(std::move(distinct));
  }

  std::size_t class_count() const {
    return mode == Mode::Binned ? edges.size() + 1 : values.size();
  }

  std::vector<std::string> labels() const {
    if (mode == Mode::Binned) return bin_labels;
    std::vector<std::string> out;
    for (int v : values) out.push_back(std::to_string(v));
    return out;
  }

  std::size_t class_of(int height) const {
    if (mode == Mode::Binned) {
      std::size_t c = 0;
      while (c < edges.size() && height > edges[c]) ++c;
      return c;
    }
    auto it = std::lower_bound(values.begin(), values.end(), height);
    if (it == values.end() || *it != height) {
      throw Error(ErrorCode::UnknownClass, "frame height " + std::to_string(height));
    }
    return static_cast<std::size_t>(it - values.begin());
  }
};

// Rows actual, columns predicted; classes given as indices into binning labels.
inline ConfusionMatrix resolution_confusion(std::span<const std::size_t> pred,
                                            std::span<const std::size_t> truth,
                                            const ResolutionBinning& binning) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction/truth length");
  }
  ConfusionMatrix m(binning.labels());
  const auto k = binning.class_count();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= k || truth[i] >= k) {
      throw Error(ErrorCode::UnknownClass, fmt::format("class index out of range at {}", i));
    }
    m.add(truth[i], pred[i]);
  }
  return m;
}

inline ConfusionMatrix resolution_confusion_from_heights(std::span<const int> pred_heights,
                                                         std::span<const int> truth_heights,
                                                         const ResolutionBinning& binning) {
  std::vector<std::size_t> p, t;
  for (int h : pred_heights) p.push_back(binning.class_of(h));
  for (int h : truth_heights) t.push_back(binning.class_of(h));
  return resolution_confusion(p, t, binning);
}

// ---------------------------------------------------------------------------
// Partition agreement

// Rand index between two labelings of the same items, from the contingency
// table. 1.0 means identical partitions.
inline double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "labelings differ in size");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  auto pairs = [](double k) { return k * (k - 1) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  double sj = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : joint) sj += pairs(v);
  for (const auto& [k, v] : ca) sa += pairs(v);
  for (const auto& [k, v] : cb) sb += pairs(v);
  const double total = pairs(n);
  return (total + 2.0 * sj - sa - sb) / total;
}

// ---------------------------------------------------------------------------
// Reports

struct MetricReport {
  std::string metric;
  std::string method;
  std::size_t n_windows = 0;
  std::size_t excluded = 0;
  std::optional<double> mae;
  std::optional<double> mrae;
  std::size_t mrae_excluded_zero_truth = 0;
  std::optional<double> tolerance;
  std::optional<double> within_tolerance;
  std::optional<ConfusionMatrix> confusion;
  std::vector<double> residuals;  // pred - truth, per evaluated window
};

// Regression metric: MAE, MRAE and (optionally) the within-tolerance fraction.
inline MetricReport evaluate_metric(std::string metric, std::string method,
                                    std::span<const std::optional<double>> pred,
                                    std::span<const std::optional<double>> truth,
                                    std::optional<double> tol = std::nullopt) {
  MetricReport r;
  r.metric = std::move(metric);
  r.method = std::move(method);
  const auto pv = pair_values(pred, truth);
  r.n_windows = pv.pred.size();
  r.excluded = pv.excluded;
  if (pv.pred.empty()) return r;
  r.mae = mae(pv.pred, pv.truth);
  try {
    const auto m = mrae(pv.pred, pv.truth);
    r.mrae = m.value;
    r.mrae_excluded_zero_truth = m.excluded_zero_truth;
  } catch (const Error&) {
    r.mrae_excluded_zero_truth = pv.pred.size();
  }
  if (tol) {
    r.tolerance = tol;
    r.within_tolerance = within_tolerance(pv.pred, pv.truth, *tol);
  }
  for (std::size_t i = 0; i < pv.pred.size(); ++i) r.residuals.push_back(pv.pred[i] - pv.truth[i]);
  return r;
}

// JSON keys: metric, method, n_windows, excluded, mae, mrae,
// mrae_excluded_zero_truth, tolerance, within_tolerance, accuracy, confusion.
inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["method"] = r.method;
  j["n_windows"] = r.n_windows;
  j["excluded"] = r.excluded;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["mae"] = opt(r.mae);
  j["mrae"] = opt(r.mrae);
  j["mrae_excluded_zero_truth"] = r.mrae_excluded_zero_truth;
  j["tolerance"] = opt(r.tolerance);
  j["within_tolerance"] = opt(r.within_tolerance);
  if (r.confusion) {
    j["accuracy"] = r.confusion->accuracy();
    j["confusion"] = r.confusion->to_json();
  }
  return j;
}

inline std::string format_residuals_csv(std::span<const std::int64_t> window_starts,
                                        const MetricReport& r) {
  std::string out = "window_start,residual\n";
  for (std::size_t i = 0; i < r.residuals.size() && i < window_starts.size(); ++i) {
    out += fmt::format("{},{}\n", window_starts[i], r.residuals[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double axis_value = 0.0;
  double mae = 0.0;
  double within_tolerance = 0.0;
  std::size_t n_windows = 0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;

  std::string to_csv() const {
    std::string out = fmt::format("{},mae,within_tolerance,n_windows\n", axis);
    for (const auto& r : rows) {
      out += fmt::format("{},{},{},{}\n", r.axis_value, r.mae, r.within_tolerance,
                         r.n_windows);
    }
    return out;
  }

  // Axis value with the smallest MAE (first on ties).
  double argmin() const {
    const auto it = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.mae < b.mae;
    });
    return it == rows.end() ? 0.0 : it->axis_value;
  }
};

// Runs `runner` once per axis value; runs are independent and may execute in
// parallel, results keep the input order.
inline SweepResult sweep(std::string axis, std::span<const double> values,
                         const std::function<SweepRow(double)>& runner,
                         unsigned n_threads = 1) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs axis values");
  SweepResult result;
  result.axis = std::move(axis);
  result.rows.resize(values.size());
  detail::parallel_for(values.size(), n_threads, [&](std::size_t i) {
    result.rows[i] = runner(values[i]);
    result.rows[i].axis_value = values[i];
  });
  return result;
}

}  // namespace vqoe
