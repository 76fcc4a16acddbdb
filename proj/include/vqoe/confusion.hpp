#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace vqoe {

// Square confusion matrix, rows = actual class, columns = predicted class.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> counts;

  explicit ConfusionMatrix(std::vector<std::string> class_labels = {})
      : labels(std::move(class_labels)),
        counts(labels.size(), std::vector<std::int64_t>(labels.size(), 0)) {}

  void add(std::size_t actual, std::size_t predicted) { ++counts[actual][predicted]; }

  std::int64_t row_total(std::size_t r) const {
    std::int64_t t = 0;
    for (auto c : counts[r]) t += c;
    return t;
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) t += row_total(r);
    return t;
  }

  // Row-normalized percentage; 0 for an empty row.
  double percent(std::size_t r, std::size_t c) const {
    const auto t = row_total(r);
    return t == 0 ? 0.0 : 100.0 * static_cast<double>(counts[r][c]) / static_cast<double>(t);
  }

  double accuracy() const {
    const auto t = total();
    if (t == 0) return 0.0;
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) diag += counts[i][i];
    return static_cast<double>(diag) / static_cast<double>(t);
  }

  // Actual-by-predicted table with row percentages and a Total column.
  std::string to_table() const {
    std::string out = "actual\\predicted";
    for (const auto& l : labels) out += "," + l;
    out += ",total\n";
    for (std::size_t r = 0; r < labels.size(); ++r) {
      out += labels[r];
      for (std::size_t c = 0; c < labels.size(); ++c) {
        out += fmt::format(",{:.2f}%", percent(r, c));
      }
      out += fmt::format(",{}\n", row_total(r));
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["labels"] = labels;
    j["counts"] = counts;
    std::vector<std::vector<double>> pct(labels.size());
    std::vector<std::int64_t> totals;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      for (std::size_t c = 0; c < labels.size(); ++c) pct[r].push_back(percent(r, c));
      totals.push_back(row_total(r));
    }
    j["row_percent"] = pct;
    j["row_totals"] = totals;
    j["accuracy"] = accuracy();
    return j;
  }
};

}  // namespace vqoe
