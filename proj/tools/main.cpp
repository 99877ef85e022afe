#include <CLI11.hpp>

#include <iostream>

#include "ptnlab/commands.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::string data_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration JSON");
  cmd->add_option("--seed", flags.seed, "root random seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--data", flags.data_dir, "dataset directory");
}

ptnlab::RunConfig resolve_config(const CommonFlags& flags) {
  std::optional<std::filesystem::path> path;
  if (!flags.config_path.empty()) path = flags.config_path;
  ptnlab::RunConfig config = ptnlab::load_run_config(path);
  // flags win over file values
  if (flags.seed_set) config.seed = flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (!flags.data_dir.empty()) config.data_dir = flags.data_dir;
  return config;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ptnlab: photometric transformer + label distillation lab"};
  app.require_subcommand(1);

  CommonFlags generate_flags, train_flags, distill_flags, eval_flags,
      reproduce_flags;

  CLI::App* generate = app.add_subcommand("generate", "build the synthetic dataset");
  add_common(generate, generate_flags);

  CLI::App* train = app.add_subcommand("train", "train baseline or PTN model");
  add_common(train, train_flags);
  std::string ptn_mode = "off";
  train->add_option("--ptn", ptn_mode, "on|off: photometric transformer")
      ->check(CLI::IsMember({"on", "off"}));

  CLI::App* distill = app.add_subcommand("distill", "label distillation loop");
  add_common(distill, distill_flags);
  std::string distill_mode = "soft";
  distill->add_option("--mode", distill_mode, "soft|hard pseudo labels")
      ->check(CLI::IsMember({"soft", "hard"}));
  int rounds = -1;
  distill->add_option("--rounds", rounds, "max distillation rounds");
  std::string distill_ckpt;
  distill->add_option("--checkpoint", distill_ckpt,
                      "pretrained checkpoint (default: out/checkpoints/ptn.ckpt)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common(eval, eval_flags);
  std::string eval_ckpt, eval_split = "test";
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--split", eval_split, "D_r|D_s|val|test");

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "full pipeline over a seed list");
  add_common(reproduce, reproduce_flags);
  std::string seeds_csv = "1,2,3,4,5";
  reproduce->add_option("--seeds", seeds_csv, "comma-separated seed list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      ptnlab::cmd_generate(resolve_config(generate_flags));
    } else if (train->parsed()) {
      ptnlab::cmd_train(resolve_config(train_flags), ptn_mode == "on");
    } else if (distill->parsed()) {
      std::optional<int> rounds_override;
      if (rounds >= 0) rounds_override = rounds;
      std::optional<std::filesystem::path> ckpt;
      if (!distill_ckpt.empty()) ckpt = distill_ckpt;
      ptnlab::cmd_distill(resolve_config(distill_flags),
                          distill_mode == "hard", rounds_override, ckpt);
    } else if (eval->parsed()) {
      ptnlab::cmd_eval(resolve_config(eval_flags), eval_ckpt,
                       ptnlab::split_from_name(eval_split));
    } else if (reproduce->parsed()) {
      const auto seeds = parse_seed_list(seeds_csv);
      ptnlab::cmd_reproduce(resolve_config(reproduce_flags), seeds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
