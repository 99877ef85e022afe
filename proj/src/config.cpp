#include "ptnlab/config.hpp"

#include <fstream>

namespace ptnlab {

RunConfig default_run_config() { return RunConfig{}; }

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;

  nlohmann::ordered_json data;
  data["d_r"] = c.data.counts.d_r;
  data["d_s"] = c.data.counts.d_s;
  data["val"] = c.data.counts.val;
  data["test"] = c.data.counts.test;
  data["image_size"] = c.data.image_size;
  data["views_per_case"] = c.data.views_per_case;
  data["grade_mix"] = c.data.grade_mix;
  auto sites = nlohmann::ordered_json::array();
  for (const SiteModel& s : c.data.sites.empty() ? default_sites()
                                                 : c.data.sites) {
    sites.push_back({{"id", s.id},
                     {"gamma", s.gamma},
                     {"gain", s.gain},
                     {"offset", s.offset}});
  }
  data["sites"] = std::move(sites);
  auto readers = nlohmann::ordered_json::array();
  for (const ReaderModel& r : c.data.readers.empty() ? default_readers()
                                                     : c.data.readers) {
    readers.push_back({{"id", r.id},
                       {"threshold_offsets", r.threshold_offsets},
                       {"noise_std", r.noise_std},
                       {"gold", r.gold}});
  }
  data["readers"] = std::move(readers);
  j["data"] = std::move(data);

  nlohmann::ordered_json ptn;
  ptn["window_u"] = c.ptn.window.u;
  ptn["window_v"] = c.ptn.window.v;
  ptn["segments"] = c.ptn.window.segments;
  ptn["conv_layers"] = c.ptn.conv_layers;
  ptn["channels"] = c.ptn.resolved_channels();
  ptn["downsample_factor"] = c.ptn.downsample_factor;
  ptn["epsilon"] = c.ptn.epsilon;
  ptn["lambda"] = c.ptn.lambda;
  ptn["slope_floor"] = c.ptn.slope_floor;
  ptn["printed_hinge_form"] = c.ptn.printed_hinge_form;
  j["ptn"] = std::move(ptn);

  nlohmann::ordered_json cls;
  cls["residual_blocks"] = c.classifier.residual_blocks;
  cls["widths"] = c.classifier.widths;
  cls["input_size"] = c.classifier.input_size;
  cls["learning_rate"] = c.classifier.learning_rate;
  cls["epochs"] = c.classifier.epochs;
  cls["batch_size"] = c.classifier.batch_size;
  j["classifier"] = std::move(cls);

  nlohmann::ordered_json distill;
  distill["alpha"] = c.distill.alpha;
  distill["gamma"] = c.distill.gamma;
  distill["fine_tune_lr"] = c.distill.fine_tune_lr;
  distill["frozen_depth"] = c.distill.frozen_depth;
  distill["max_rounds"] = c.distill.max_rounds;
  distill["convergence_tol"] = c.distill.convergence_tol;
  distill["fine_tune_epochs"] = c.distill.fine_tune_epochs;
  distill["retrain_epochs"] = c.distill.retrain_epochs;
  j["distill"] = std::move(distill);
  return j;
}

namespace {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void apply_json_overrides(RunConfig& c, const nlohmann::json& j) {
  maybe(j, "seed", c.seed);
  maybe(j, "data_dir", c.data_dir);
  maybe(j, "out_dir", c.out_dir);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    maybe(d, "d_r", c.data.counts.d_r);
    maybe(d, "d_s", c.data.counts.d_s);
    maybe(d, "val", c.data.counts.val);
    maybe(d, "test", c.data.counts.test);
    maybe(d, "image_size", c.data.image_size);
    maybe(d, "views_per_case", c.data.views_per_case);
    maybe(d, "grade_mix", c.data.grade_mix);
    if (d.contains("sites")) {
      c.data.sites.clear();
      for (const auto& js : d.at("sites")) {
        SiteModel s;
        maybe(js, "id", s.id);
        maybe(js, "gamma", s.gamma);
        maybe(js, "gain", s.gain);
        maybe(js, "offset", s.offset);
        c.data.sites.push_back(s);
      }
    }
    if (d.contains("readers")) {
      c.data.readers.clear();
      for (const auto& jr : d.at("readers")) {
        ReaderModel r;
        maybe(jr, "id", r.id);
        maybe(jr, "threshold_offsets", r.threshold_offsets);
        maybe(jr, "noise_std", r.noise_std);
        maybe(jr, "gold", r.gold);
        c.data.readers.push_back(r);
      }
    }
  }

  if (j.contains("ptn")) {
    const auto& p = j.at("ptn");
    maybe(p, "window_u", c.ptn.window.u);
    maybe(p, "window_v", c.ptn.window.v);
    maybe(p, "segments", c.ptn.window.segments);
    maybe(p, "conv_layers", c.ptn.conv_layers);
    maybe(p, "channels", c.ptn.channels);
    maybe(p, "downsample_factor", c.ptn.downsample_factor);
    maybe(p, "epsilon", c.ptn.epsilon);
    maybe(p, "lambda", c.ptn.lambda);
    maybe(p, "slope_floor", c.ptn.slope_floor);
    maybe(p, "printed_hinge_form", c.ptn.printed_hinge_form);
  }

  if (j.contains("classifier")) {
    const auto& cls = j.at("classifier");
    maybe(cls, "residual_blocks", c.classifier.residual_blocks);
    maybe(cls, "widths", c.classifier.widths);
    maybe(cls, "input_size", c.classifier.input_size);
    maybe(cls, "learning_rate", c.classifier.learning_rate);
    maybe(cls, "epochs", c.classifier.epochs);
    maybe(cls, "batch_size", c.classifier.batch_size);
  }

  if (j.contains("distill")) {
    const auto& d = j.at("distill");
    maybe(d, "alpha", c.distill.alpha);
    maybe(d, "gamma", c.distill.gamma);
    maybe(d, "fine_tune_lr", c.distill.fine_tune_lr);
    maybe(d, "frozen_depth", c.distill.frozen_depth);
    maybe(d, "max_rounds", c.distill.max_rounds);
    maybe(d, "convergence_tol", c.distill.convergence_tol);
    maybe(d, "fine_tune_epochs", c.distill.fine_tune_epochs);
    maybe(d, "retrain_epochs", c.distill.retrain_epochs);
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
  RunConfig config = default_run_config();
  if (path) {
    std::ifstream in(*path);
    if (!in)
      throw std::runtime_error("config: cannot read " + path->string());
    nlohmann::json j;
    in >> j;
    apply_json_overrides(config, j);
  }
  return config;
}

void write_config_snapshot(const RunConfig& config,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path.string());
  out << run_config_to_json(config).dump(2) << '\n';
}

}  // namespace ptnlab
