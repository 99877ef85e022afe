#include "ptnlab/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "ptnlab/checkpoint.hpp"

namespace ptnlab {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

EvalOptions eval_options_from_env() { return EvalOptions{eval_threads_from_env()}; }

void write_loss_curve(const std::vector<double>& losses, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("train: cannot write " + path.string());
  out << "epoch,mean_loss\n";
  for (size_t i = 0; i < losses.size(); ++i)
    out << i << ',' << fmt("%.12g", losses[i]) << '\n';
}

void write_predictions_csv(const std::vector<ViewPrediction>& predictions,
                           const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("eval: cannot write " + path.string());
  out << "case_id,view_id,p_a,p_b,p_c,p_d,grade\n";
  for (const ViewPrediction& vp : predictions) {
    out << vp.case_id << ',' << vp.view_id;
    for (size_t g = 0; g < kNumGrades; ++g)
      out << ',' << fmt("%.12g", vp.prediction[g]);
    out << ',' << grade_char(vp.prediction.argmax()) << '\n';
  }
}

void write_slope_dump(DensityModel& model, const LoadedDataset& data,
                      Split split, const fs::path& path) {
  const int segments = model.config().ptn->window.segments;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("train: cannot write " + path.string());
  out << "image_id";
  for (int s = 0; s < segments + 2; ++s) out << ",s_" << s;
  out << '\n';
  for (size_t ci : data.case_indices(split)) {
    const LoadedCase& c = data.cases()[ci];
    for (size_t vi : c.view_indices) {
      const SlopeSet slopes = model.predict_slopes(data.view(vi).image);
      out << c.id << "_v" << data.view(vi).view_id;
      for (Index s = 0; s < slopes.count(); ++s)
        out << ',' << fmt("%.12g", slopes[s]);
      out << '\n';
    }
  }
}

DensityModel::Config make_model_config(const RunConfig& config, bool use_ptn) {
  DensityModel::Config mc;
  mc.classifier = config.classifier;
  if (use_ptn) mc.ptn = config.ptn;
  return mc;
}

}  // namespace

nlohmann::ordered_json model_config_to_json(const DensityModel::Config& mc) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cls;
  cls["residual_blocks"] = mc.classifier.residual_blocks;
  cls["widths"] = mc.classifier.widths;
  cls["input_size"] = mc.classifier.input_size;
  cls["learning_rate"] = mc.classifier.learning_rate;
  cls["epochs"] = mc.classifier.epochs;
  cls["batch_size"] = mc.classifier.batch_size;
  j["classifier"] = std::move(cls);
  j["ptn_enabled"] = mc.ptn.has_value();
  if (mc.ptn) {
    nlohmann::ordered_json p;
    p["window_u"] = mc.ptn->window.u;
    p["window_v"] = mc.ptn->window.v;
    p["segments"] = mc.ptn->window.segments;
    p["conv_layers"] = mc.ptn->conv_layers;
    p["channels"] = mc.ptn->resolved_channels();
    p["downsample_factor"] = mc.ptn->downsample_factor;
    p["epsilon"] = mc.ptn->epsilon;
    p["lambda"] = mc.ptn->lambda;
    p["slope_floor"] = mc.ptn->slope_floor;
    p["printed_hinge_form"] = mc.ptn->printed_hinge_form;
    j["ptn"] = std::move(p);
  }
  return j;
}

DensityModel::Config model_config_from_json(const nlohmann::json& j) {
  DensityModel::Config mc;
  const auto& cls = j.at("classifier");
  mc.classifier.residual_blocks = cls.at("residual_blocks").get<int>();
  mc.classifier.widths = cls.at("widths").get<std::vector<int>>();
  mc.classifier.input_size = cls.at("input_size").get<int>();
  mc.classifier.learning_rate = cls.at("learning_rate").get<double>();
  mc.classifier.epochs = cls.at("epochs").get<int>();
  mc.classifier.batch_size = cls.at("batch_size").get<int>();
  if (j.at("ptn_enabled").get<bool>()) {
    PtnConfig p;
    const auto& jp = j.at("ptn");
    p.window.u = jp.at("window_u").get<double>();
    p.window.v = jp.at("window_v").get<double>();
    p.window.segments = jp.at("segments").get<int>();
    p.conv_layers = jp.at("conv_layers").get<int>();
    p.channels = jp.at("channels").get<std::vector<int>>();
    p.downsample_factor = jp.at("downsample_factor").get<int>();
    p.epsilon = jp.at("epsilon").get<double>();
    p.lambda = jp.at("lambda").get<double>();
    p.slope_floor = jp.at("slope_floor").get<double>();
    p.printed_hinge_form = jp.at("printed_hinge_form").get<bool>();
    mc.ptn = std::move(p);
  }
  return mc;
}

void cmd_generate(const RunConfig& config) {
  const fs::path data_dir = config.data_dir;
  fs::create_directories(data_dir);
  const DatasetManifest manifest =
      build_dataset(config.data, data_dir, Rng(config.seed).stream("data"));
  write_config_snapshot(config, data_dir / "config.json");

  // per-split, per-grade case counts
  std::map<Split, std::array<int, kNumGrades>> counts;
  std::map<Split, std::set<std::string>> seen;
  for (const ManifestRecord& r : manifest.records) {
    if (seen[r.split].insert(r.case_id).second)
      ++counts[r.split][static_cast<size_t>(r.grade)];
  }
  std::cout << "split      a      b      c      d  total\n";
  for (Split split : {Split::DR, Split::DS, Split::Val, Split::Test}) {
    const auto& row = counts[split];
    int total = 0;
    std::printf("%-6s", split_name(split).c_str());
    for (int g = 0; g < kNumGrades; ++g) {
      std::printf(" %6d", row[static_cast<size_t>(g)]);
      total += row[static_cast<size_t>(g)];
    }
    std::printf(" %6d\n", total);
  }
  std::cout << "manifest: " << (data_dir / "manifest.csv").string() << "\n";
}

TrainOutputs cmd_train(const RunConfig& config, bool use_ptn) {
  const fs::path data_dir = config.data_dir;
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir / "checkpoints");
  fs::create_directories(out_dir / "metrics");
  fs::create_directories(out_dir / "predictions");

  LoadedDataset data = LoadedDataset::load(data_dir / "manifest.csv");
  const DensityModel::Config mc = make_model_config(config, use_ptn);

  ParameterStore store;
  DensityModel model(store, mc, Rng(config.seed).stream("init"));

  std::vector<size_t> train_cases = data.case_indices(Split::DS);
  for (size_t ci : data.case_indices(Split::DR)) train_cases.push_back(ci);
  const int segments = config.ptn.window.segments;

  const TrainResult trained =
      train_model(model, data.samples(train_cases, segments),
                  config.train_options(), Rng(config.seed).stream("train"));

  const std::string tag = use_ptn ? "ptn" : "baseline";
  TrainOutputs out;
  out.checkpoint = out_dir / "checkpoints" / (tag + ".ckpt");
  nlohmann::json meta;
  meta["model"] = model_config_to_json(mc);
  meta["seed"] = config.seed;
  save_checkpoint(store, out.checkpoint, meta);

  out.loss_curve_csv = out_dir / "metrics" / ("loss_" + tag + ".csv");
  write_loss_curve(trained.epoch_loss, out.loss_curve_csv);

  const std::vector<EvalRecord> val_records =
      evaluate_split(store, mc, data, Split::Val, eval_options_from_env());
  out.val_metrics = summarize(val_records);
  out.val_metrics_json = out_dir / "metrics" / ("val_" + tag + ".json");
  write_metrics_report(out.val_metrics, out.val_metrics_json);

  if (use_ptn)
    write_slope_dump(model, data, Split::Val,
                     out_dir / "predictions" / "slopes_val_ptn.csv");

  write_config_snapshot(config, out_dir / "config.json");
  std::cout << "train[" << tag << "]: val accuracy "
            << fmt("%.4f", out.val_metrics.accuracy) << ", val dAUC "
            << fmt("%.4f", out.val_metrics.dauc.value) << "\n";
  return out;
}

DistillOutputs cmd_distill(const RunConfig& config, bool hard_labels,
                           std::optional<int> rounds_override,
                           std::optional<fs::path> checkpoint) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir / "checkpoints");
  fs::create_directories(out_dir / "metrics");
  fs::create_directories(out_dir / "audit");

  const fs::path ckpt_path =
      checkpoint.value_or(out_dir / "checkpoints" / "ptn.ckpt");
  if (!fs::exists(ckpt_path))
    throw std::runtime_error("distill: missing pretrained checkpoint " +
                             ckpt_path.string());

  nlohmann::json meta;
  ParameterStore store = load_checkpoint(ckpt_path, &meta);
  const DensityModel::Config mc = model_config_from_json(meta.at("model"));
  DensityModel model(store, mc, Rng(config.seed).stream("init"));

  LoadedDataset data =
      LoadedDataset::load(fs::path(config.data_dir) / "manifest.csv");

  DistillConfig dc = config.distill;
  dc.hard_labels = hard_labels;
  if (rounds_override) dc.max_rounds = *rounds_override;

  const DistillState state = run_distillation(
      model, data, dc, config.classifier.batch_size,
      Rng(config.seed).stream("distill"), std::nullopt,
      eval_options_from_env());

  const std::string mode = hard_labels ? "hard" : "soft";
  DistillOutputs out;
  out.state = state;
  out.checkpoint = out_dir / "checkpoints" / ("distill_" + mode + ".ckpt");
  save_checkpoint(store, out.checkpoint, meta);

  out.audit_log = out_dir / "audit" / ("distill_" + mode + ".jsonl");
  write_audit_log(state, out.audit_log);

  auto dauc_json = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json rounds_json;
  rounds_json["mode"] = mode;
  rounds_json["pretrain"] = {{"val_accuracy", state.pretrain_val_accuracy},
                             {"val_dauc", dauc_json(state.pretrain_val_dauc)}};
  auto rounds = nlohmann::ordered_json::array();
  for (const DistillRound& r : state.rounds)
    rounds.push_back({{"round", r.round},
                      {"val_accuracy", r.val_accuracy},
                      {"val_dauc", dauc_json(r.val_dauc)},
                      {"labels_changed", r.changes.size()}});
  rounds_json["rounds"] = std::move(rounds);
  out.rounds_json = out_dir / "metrics" / ("distill_" + mode + "_rounds.json");
  std::ofstream rj(out.rounds_json);
  if (!rj)
    throw std::runtime_error("distill: cannot write " +
                             out.rounds_json.string());
  rj << rounds_json.dump(2) << '\n';

  write_config_snapshot(config, out_dir / "config.json");
  const double final_acc = state.rounds.empty()
                               ? state.pretrain_val_accuracy
                               : state.rounds.back().val_accuracy;
  std::cout << "distill[" << mode << "]: rounds " << state.rounds.size()
            << ", val accuracy " << fmt("%.4f", final_acc) << "\n";
  return out;
}

EvalOutputs cmd_eval(const RunConfig& config, const fs::path& checkpoint,
                     Split split) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir / "metrics");
  fs::create_directories(out_dir / "predictions");
  if (!fs::exists(checkpoint))
    throw std::runtime_error("eval: missing checkpoint " + checkpoint.string());

  nlohmann::json meta;
  ParameterStore store = load_checkpoint(checkpoint, &meta);
  const DensityModel::Config mc = model_config_from_json(meta.at("model"));
  DensityModel model(store, mc, Rng(0));

  LoadedDataset data =
      LoadedDataset::load(fs::path(config.data_dir) / "manifest.csv");
  if (data.case_indices(split).empty())
    throw std::runtime_error("eval: no grades for split " + split_name(split));

  const std::string tag = checkpoint.stem().string() + "_" + split_name(split);
  EvalOutputs out;
  out.predictions_csv = out_dir / "predictions" / (tag + ".csv");
  write_predictions_csv(predict_views(model, data, split),
                        out.predictions_csv);

  const std::vector<EvalRecord> records =
      evaluate_split(store, mc, data, split, eval_options_from_env());
  out.metrics = summarize(records);
  out.metrics_json = out_dir / "metrics" / (tag + ".json");
  write_metrics_report(out.metrics, out.metrics_json);

  write_config_snapshot(config, out_dir / "config.json");
  std::cout << "eval[" << tag << "]: accuracy "
            << fmt("%.4f", out.metrics.accuracy) << ", dAUC "
            << fmt("%.4f", out.metrics.dauc.value);
  if (out.metrics.dauc.skipped_splits > 0)
    std::cout << " (skipped " << out.metrics.dauc.skipped_splits
              << " degenerate split(s))";
  std::cout << "\n";
  return out;
}

namespace {

struct MethodResult {
  bool ok = false;
  std::string error;
  double val_accuracy = 0.0, val_dauc = 0.0;
  double test_accuracy = 0.0, test_dauc = 0.0;
};

struct SeedResults {
  uint64_t seed = 0;
  std::map<std::string, MethodResult> methods;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

ReproduceOutputs cmd_reproduce(const RunConfig& config,
                               const std::vector<uint64_t>& seeds) {
  if (seeds.empty())
    throw std::invalid_argument("reproduce: needs at least one seed");
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);

  const std::vector<std::string> method_names = {
      "Baseline", "PTN", "PTN + label distillation", "PTN + hard labeling"};

  std::vector<SeedResults> all;
  for (uint64_t seed : seeds) {
    SeedResults sr;
    sr.seed = seed;

    RunConfig rc = config;
    rc.seed = seed;
    const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
    rc.data_dir = (seed_dir / "data").string();
    rc.out_dir = seed_dir.string();

    auto run_method = [&](const std::string& name, auto&& fn) {
      MethodResult r;
      try {
        const fs::path ckpt = fn();
        const EvalOutputs val_out = cmd_eval(rc, ckpt, Split::Val);
        r.val_accuracy = val_out.metrics.accuracy;
        r.val_dauc = val_out.metrics.dauc.value;
        const EvalOutputs test_out = cmd_eval(rc, ckpt, Split::Test);
        r.test_accuracy = test_out.metrics.accuracy;
        r.test_dauc = test_out.metrics.dauc.value;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      sr.methods[name] = r;
    };

    try {
      cmd_generate(rc);
      run_method("Baseline", [&] { return cmd_train(rc, false).checkpoint; });
      run_method("PTN", [&] { return cmd_train(rc, true).checkpoint; });
      run_method("PTN + label distillation",
                 [&] { return cmd_distill(rc, false).checkpoint; });
      run_method("PTN + hard labeling",
                 [&] { return cmd_distill(rc, true).checkpoint; });
    } catch (const std::exception& e) {
      for (const std::string& name : method_names)
        if (!sr.methods.count(name))
          sr.methods[name] = MethodResult{false, e.what()};
    }
    all.push_back(std::move(sr));
  }

  ReproduceOutputs out;
  out.report_md = out_dir / "report.md";
  out.report_json = out_dir / "report.json";

  nlohmann::ordered_json jreport;
  jreport["seeds"] = seeds;
  auto jmethods = nlohmann::ordered_json::array();

  std::ofstream md(out.report_md);
  if (!md)
    throw std::runtime_error("reproduce: cannot write " +
                             out.report_md.string());
  md << "# Reproduction report\n\n";
  md << "Seeds: ";
  for (size_t i = 0; i < seeds.size(); ++i)
    md << (i ? ", " : "") << seeds[i];
  md << "\n\nMean (std) over " << seeds.size() << " trial(s) per cell.\n\n";
  md << "| Method | Val accuracy | Val dAUC | Test accuracy | Test dAUC |\n";
  md << "|---|---|---|---|---|\n";

  for (const std::string& name : method_names) {
    std::vector<double> va, vd, ta, td;
    std::vector<std::string> errors;
    for (const SeedResults& sr : all) {
      const MethodResult& r = sr.methods.at(name);
      if (r.ok) {
        va.push_back(r.val_accuracy);
        vd.push_back(r.val_dauc);
        ta.push_back(r.test_accuracy);
        td.push_back(r.test_dauc);
      } else {
        errors.push_back("seed " + std::to_string(sr.seed) + ": " + r.error);
      }
    }

    nlohmann::ordered_json jm;
    jm["method"] = name;
    jm["completed_seeds"] = va.size();
    jm["failures"] = errors;
    if (!va.empty()) {
      auto cell = [&](const std::vector<double>& xs) {
        const auto [m, s] = mean_std(xs);
        return fmt("%.4f", m) + " (" + fmt("%.4f", s) + ")";
      };
      md << "| " << name << " | " << cell(va) << " | " << cell(vd) << " | "
         << cell(ta) << " | " << cell(td) << " |\n";
      const auto [vam, vas] = mean_std(va);
      const auto [vdm, vds] = mean_std(vd);
      const auto [tam, tas] = mean_std(ta);
      const auto [tdm, tds] = mean_std(td);
      jm["val_accuracy"] = {{"mean", vam}, {"std", vas}, {"per_seed", va}};
      jm["val_dauc"] = {{"mean", vdm}, {"std", vds}, {"per_seed", vd}};
      jm["test_accuracy"] = {{"mean", tam}, {"std", tas}, {"per_seed", ta}};
      jm["test_dauc"] = {{"mean", tdm}, {"std", tds}, {"per_seed", td}};
    } else {
      md << "| " << name << " | failed | failed | failed | failed |\n";
    }
    jmethods.push_back(std::move(jm));
  }
  jreport["methods"] = std::move(jmethods);

  if (!md) throw std::runtime_error("reproduce: report write failed");
  md.close();
  std::ofstream js(out.report_json);
  if (!js)
    throw std::runtime_error("reproduce: cannot write " +
                             out.report_json.string());
  js << jreport.dump(2) << '\n';

  std::cout << "reproduce: report at " << out.report_md.string() << "\n";
  return out;
}

}  // namespace ptnlab
