#pragma once

#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ptnlab/labels.hpp"

namespace ptnlab {

struct EvalRecord {
  std::string case_id;
  Grade truth;
  LabelDistribution prediction;
};

/// Fraction of records whose argmax prediction matches the true grade
/// (argmax ties break to the lowest grade index).
double accuracy(const std::vector<EvalRecord>& records);

/// Mann-Whitney AUC with half credit for ties, computed by rank sums in
/// O(n log n). Throws when either score list is empty.
double rank_auc(const std::vector<double>& positives,
                const std::vector<double>& negatives);

/// Mean of the binary AUCs over the three ordinal splits a|bcd, ab|cd and
/// abc|d. The sample score of a split is the summed probability of the
/// grades above it. A split with an empty side is skipped and reported;
/// all three degenerate is an error.
struct DaucResult {
  double value = 0.0;
  std::array<std::optional<double>, 3> split_auc;
  int skipped_splits = 0;
};

DaucResult dauc(const std::vector<EvalRecord>& records);

struct MetricsSummary {
  double accuracy = 0.0;
  DaucResult dauc;
  std::array<std::array<int, kNumGrades>, kNumGrades> confusion{};  // [truth][pred]
  int count = 0;
};

MetricsSummary summarize(const std::vector<EvalRecord>& records);

nlohmann::ordered_json metrics_to_json(const MetricsSummary& summary);

/// Writes the summary as JSON. Byte-identical output for identical records.
void write_metrics_report(const MetricsSummary& summary,
                          const std::filesystem::path& path);

}  // namespace ptnlab
