#include "ptnlab/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace ptnlab {

double accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("accuracy: no records");
  int correct = 0;
  for (const EvalRecord& r : records)
    if (r.prediction.argmax() == r.truth) ++correct;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double rank_auc(const std::vector<double>& positives,
                const std::vector<double>& negatives) {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("auc: undefined with an empty class");

  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });

  // Rank sum of positives with average ranks across tie groups.
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (size_t k = i; k < j; ++k)
      if (all[k].positive) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

DaucResult dauc(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("dauc: no records");

  DaucResult out;
  double sum = 0.0;
  int available = 0;
  for (int split = 1; split <= 3; ++split) {
    std::vector<double> pos, neg;
    for (const EvalRecord& r : records) {
      // dense-side score: summed probability of the grades above the split
      double score = 0.0;
      for (int g = split; g < kNumGrades; ++g)
        score += r.prediction[static_cast<size_t>(g)];
      (static_cast<int>(r.truth) >= split ? pos : neg).push_back(score);
    }
    if (pos.empty() || neg.empty()) {
      ++out.skipped_splits;
      continue;
    }
    const double auc = rank_auc(pos, neg);
    out.split_auc[static_cast<size_t>(split - 1)] = auc;
    sum += auc;
    ++available;
  }
  if (available == 0)
    throw std::runtime_error("dauc: all three splits are degenerate");
  out.value = sum / static_cast<double>(available);
  return out;
}

MetricsSummary summarize(const std::vector<EvalRecord>& records) {
  MetricsSummary s;
  s.accuracy = accuracy(records);
  s.dauc = dauc(records);
  s.count = static_cast<int>(records.size());
  for (const EvalRecord& r : records)
    ++s.confusion[static_cast<size_t>(r.truth)]
                 [static_cast<size_t>(r.prediction.argmax())];
  return s;
}

nlohmann::ordered_json metrics_to_json(const MetricsSummary& summary) {
  nlohmann::ordered_json j;
  j["count"] = summary.count;
  j["accuracy"] = summary.accuracy;
  j["dauc"] = summary.dauc.value;
  static const char* kSplitNames[3] = {"a_vs_bcd", "ab_vs_cd", "abc_vs_d"};
  nlohmann::ordered_json splits;
  for (size_t k = 0; k < 3; ++k) {
    if (summary.dauc.split_auc[k])
      splits[kSplitNames[k]] = *summary.dauc.split_auc[k];
    else
      splits[kSplitNames[k]] = "skipped";
  }
  j["split_auc"] = std::move(splits);
  j["skipped_splits"] = summary.dauc.skipped_splits;
  j["confusion"] = summary.confusion;
  return j;
}

void write_metrics_report(const MetricsSummary& summary,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("metrics: cannot write " + path.string());
  out << metrics_to_json(summary).dump(2) << '\n';
  if (!out)
    throw std::runtime_error("metrics: write failed " + path.string());
}

}  // namespace ptnlab
