#include "ptnlab/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace ptnlab {

void DistillConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("distill: alpha must be in [0,1]");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("distill: gamma must be in (0,1]");
  if (fine_tune_lr <= 0.0)
    throw std::invalid_argument("distill: fine-tune lr must be positive");
  if (frozen_depth < 0)
    throw std::invalid_argument("distill: frozen depth must be >= 0");
  if (max_rounds < 0)
    throw std::invalid_argument("distill: max rounds must be >= 0");
  if (fine_tune_epochs < 0 || retrain_epochs < 0)
    throw std::invalid_argument("distill: epoch counts must be >= 0");
}

double kld(const LabelDistribution& y, const LabelDistribution& yhat) {
  y.validate();
  yhat.validate();
  double sum = 0.0;
  for (size_t i = 0; i < kNumGrades; ++i) {
    if (y[i] <= 0.0) continue;  // 0 log 0 := 0
    sum += y[i] * (std::log(y[i]) - std::log(std::max(yhat[i], 1e-12)));
  }
  return sum;
}

std::vector<std::string> select_top(
    std::vector<std::pair<std::string, double>> scores, double gamma) {
  if (scores.empty()) throw std::invalid_argument("select_top: empty scores");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("select_top: gamma must be in (0,1]");
  const auto take = static_cast<size_t>(
      std::ceil(gamma * static_cast<double>(scores.size())));
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> ids;
  ids.reserve(take);
  for (size_t i = 0; i < take; ++i) ids.push_back(std::move(scores[i].first));
  std::sort(ids.begin(), ids.end());
  return ids;
}

LabelDistribution blend_labels(const LabelDistribution& y,
                               const LabelDistribution& yhat, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("blend: alpha must be in [0,1]");
  std::array<double, kNumGrades> mixed{};
  for (size_t i = 0; i < kNumGrades; ++i)
    mixed[i] = alpha * y[i] + (1.0 - alpha) * yhat[i];
  double sum = 0.0;
  for (double m : mixed) sum += m;
  if (std::abs(sum - 1.0) > 1e-12)
    for (double& m : mixed) m /= sum;
  return LabelDistribution(mixed);
}

namespace {

struct ValMetrics {
  double accuracy;
  std::optional<double> dauc_value;
};

ValMetrics val_metrics(DensityModel& model, LoadedDataset& data,
                       const EvalOptions& options) {
  std::vector<EvalRecord> records = evaluate_split(
      model.store(), model.config(), data, Split::Val, options);
  ValMetrics out{accuracy(records), std::nullopt};
  try {
    out.dauc_value = dauc(records).value;
  } catch (const std::runtime_error&) {
    // every ordinal split degenerate on a tiny validation set; accuracy
    // still drives convergence
  }
  return out;
}

}  // namespace

DistillState run_distillation(DensityModel& model, LoadedDataset& data,
                              const DistillConfig& config, int batch_size,
                              Rng rng, std::optional<TrainOptions> pretrain,
                              const EvalOptions& eval_options) {
  config.validate();
  const std::vector<size_t> ds_cases = data.case_indices(Split::DS);
  const std::vector<size_t> dr_cases = data.case_indices(Split::DR);
  if (ds_cases.empty())
    throw std::invalid_argument("distill: D_s is empty");
  if (dr_cases.empty())
    throw std::invalid_argument("distill: D_r is empty");

  const int segments =
      model.has_ptn() ? model.config().ptn->window.segments : 10;
  std::vector<size_t> all_cases = ds_cases;
  all_cases.insert(all_cases.end(), dr_cases.begin(), dr_cases.end());

  if (pretrain)
    train_model(model, data.samples(all_cases, segments), *pretrain,
                rng.stream("pretrain"));

  DistillState state;
  const ValMetrics pre = val_metrics(model, data, eval_options);
  state.pretrain_val_accuracy = pre.accuracy;
  state.pretrain_val_dauc = pre.dauc_value;

  model.set_frozen_depth(config.frozen_depth);
  double prev_accuracy = pre.accuracy;

  for (int round = 1; round <= config.max_rounds; ++round) {
    // fine-tune on the single-reader set
    TrainOptions ft;
    ft.learning_rate = config.fine_tune_lr;
    ft.epochs = config.fine_tune_epochs;
    ft.batch_size = batch_size;
    ft.decay_factor = 1.0;
    train_model(model, data.samples(ds_cases, segments), ft,
                rng.stream("fine_tune", static_cast<uint64_t>(round)));

    // score D_r by divergence between the current label and the
    // case-level prediction
    std::vector<std::pair<std::string, double>> scores;
    std::map<std::string, LabelDistribution> predictions;
    for (size_t ci : dr_cases) {
      LoadedCase& c = data.cases()[ci];
      const LabelDistribution pred = predict_case(model, data, c);
      predictions.emplace(c.id, pred);
      scores.emplace_back(c.id, kld(c.label, pred));
    }
    std::map<std::string, double> score_of(scores.begin(), scores.end());

    DistillRound round_info;
    round_info.round = round;
    const std::vector<std::string> selected = select_top(scores, config.gamma);

    std::map<std::string, size_t> dr_by_id;
    for (size_t ci : dr_cases) dr_by_id.emplace(data.cases()[ci].id, ci);
    for (const std::string& id : selected) {
      LoadedCase& c = data.cases()[dr_by_id.at(id)];
      const LabelDistribution& pred = predictions.at(id);
      LabelChange change;
      change.case_id = id;
      change.old_label = c.label;
      change.prediction = pred;
      change.new_label =
          config.hard_labels ? LabelDistribution::one_hot(pred.argmax())
                             : blend_labels(c.label, pred, config.alpha);
      change.score = score_of.at(id);
      c.label = change.new_label;
      round_info.changes.push_back(std::move(change));
    }

    // retrain on the union with the updated labels (warm start)
    TrainOptions rt = ft;
    rt.epochs = config.retrain_epochs;
    train_model(model, data.samples(all_cases, segments), rt,
                rng.stream("retrain", static_cast<uint64_t>(round)));

    const ValMetrics vm = val_metrics(model, data, eval_options);
    round_info.val_accuracy = vm.accuracy;
    round_info.val_dauc = vm.dauc_value;
    state.rounds.push_back(std::move(round_info));

    const double improvement = vm.accuracy - prev_accuracy;
    prev_accuracy = vm.accuracy;
    if (config.convergence_tol >= 0.0 && improvement < config.convergence_tol)
      break;
  }

  model.set_frozen_depth(0);
  return state;
}

DistillState run_hard_label(DensityModel& model, LoadedDataset& data,
                            DistillConfig config, int batch_size, Rng rng,
                            std::optional<TrainOptions> pretrain,
                            const EvalOptions& eval_options) {
  config.hard_labels = true;
  return run_distillation(model, data, config, batch_size, std::move(rng),
                          std::move(pretrain), eval_options);
}

void write_audit_log(const DistillState& state,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("audit: cannot write " + path.string());
  for (const DistillRound& round : state.rounds) {
    for (const LabelChange& change : round.changes) {
      nlohmann::ordered_json j;
      j["round"] = round.round;
      j["case_id"] = change.case_id;
      j["kld"] = change.score;
      j["old_label"] = change.old_label.probs;
      j["prediction"] = change.prediction.probs;
      j["new_label"] = change.new_label.probs;
      j["val_accuracy"] = round.val_accuracy;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("audit: write failed " + path.string());
}

}  // namespace ptnlab
