#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>

#include "json.hpp"
#include "mmw2s/labels.hpp"

namespace mmw2s {

/// Rows = gold, columns = predicted, in label index order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumLabels>, kNumLabels> counts{};

  void accumulate(ResponseLabel gold, ResponseLabel pred) { ++counts[index_of(gold)][index_of(pred)]; }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
      for (auto c : row) n += c;
    }
    return n;
  }
  std::uint64_t trace() const {
    std::uint64_t n = 0;
    for (std::size_t k = 0; k < kNumLabels; ++k) n += counts[k][k];
    return n;
  }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(total()); }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (std::size_t r = 0; r < kNumLabels; ++r) {
      for (std::size_t c = 0; c < kNumLabels; ++c) counts[r][c] += o.counts[r][c];
    }
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline void accumulate(ResponseLabel gold, ResponseLabel pred, ConfusionMatrix& cm) { cm.accumulate(gold, pred); }

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

/// Any 0/0 is 0.
inline std::array<ClassMetrics, kNumLabels> class_metrics(const ConfusionMatrix& cm) {
  std::array<ClassMetrics, kNumLabels> out{};
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    std::uint64_t tp = cm.counts[k][k], fp = 0, fn = 0;
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      if (j == k) continue;
      fp += cm.counts[j][k];
      fn += cm.counts[k][j];
    }
    auto& m = out[k];
    m.support = tp + fn;
    m.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1 = safe_ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  }
  return out;
}

using NormalizedMatrix = std::array<std::array<double, kNumLabels>, kNumLabels>;

/// Nonzero rows divided by their sum; zero rows stay zero.
inline NormalizedMatrix row_normalize(const ConfusionMatrix& cm) {
  NormalizedMatrix out{};
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    std::uint64_t sum = 0;
    for (auto c : cm.counts[r]) sum += c;
    if (sum == 0) continue;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      out[r][c] = static_cast<double>(cm.counts[r][c]) / static_cast<double>(sum);
    }
  }
  return out;
}

struct EvalReport {
  std::array<ClassMetrics, kNumLabels> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  NormalizedMatrix confusion_normalized{};
  /// checkpoint id, modality mask, dataset id, mode, run config.
  nlohmann::json meta = nlohmann::json::object();
};

/// Macro averages are unweighted over all nine classes.
inline EvalReport make_report(const ConfusionMatrix& cm, nlohmann::json meta = nlohmann::json::object()) {
  EvalReport r;
  r.confusion = cm;
  r.per_class = class_metrics(cm);
  r.confusion_normalized = row_normalize(cm);
  for (const auto& m : r.per_class) {
    r.macro_precision += m.precision / static_cast<double>(kNumLabels);
    r.macro_recall += m.recall / static_cast<double>(kNumLabels);
    r.macro_f1 += m.f1 / static_cast<double>(kNumLabels);
  }
  r.accuracy = cm.accuracy();
  r.meta = std::move(meta);
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    const auto& m = r.per_class[k];
    classes.push_back({{"label", label_name(label_at(k))},
                       {"abbrev", kLabelAbbrev[k]},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}});
  }
  return {{"per_class", classes},
          {"macro", {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
          {"accuracy", r.accuracy},
          {"n_scored", r.confusion.total()},
          {"confusion", r.confusion.counts},
          {"confusion_row_normalized", r.confusion_normalized},
          {"meta", r.meta}};
}

/// Per-class table: class, precision, recall, f1, support; then a macro row.
inline std::string report_to_csv(const EvalReport& r) {
  std::string out = "class,precision,recall,f1,support\n";
  char buf[160];
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    const auto& m = r.per_class[k];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%llu\n", kLabelAbbrev[k].data(), m.precision, m.recall, m.f1,
                  static_cast<unsigned long long>(m.support));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "macro,%.6f,%.6f,%.6f,%llu\n", r.macro_precision, r.macro_recall, r.macro_f1,
                static_cast<unsigned long long>(r.confusion.total()));
  out += buf;
  return out;
}

}  // namespace mmw2s
