#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "safer/app/commands.hpp"
#include "safer/app/config.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool need_config = true) {
  auto* opt = cmd->add_option("--config", f.config, "run configuration file");
  if (need_config) opt->required();
  cmd->add_option("--seed", f.seed, "overrides run.seed");
  cmd->add_option("--threads", f.threads, "overrides run.threads (0 = all cores)");
  cmd->add_flag("--deterministic", f.deterministic, "ordered reductions (always on; recorded in the manifest)");
  cmd->add_option("--out", f.out, "output directory, overrides run.out");
}

// File values first, then flags.
safer::app::RunConfig resolve(const CommonFlags& f) {
  auto c = safer::app::load_config(f.config);
  if (f.seed) safer::app::apply_setting(c, "run.seed", std::to_string(*f.seed));
  if (f.threads) c.threads = *f.threads;
  if (f.deterministic) c.deterministic = true;
  if (!f.out.empty()) c.out = f.out;
#ifdef _OPENMP
  if (c.threads > 0) omp_set_num_threads(c.threads);
#endif
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-averse matrix factorization for implicit-feedback recommendation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", safer::app::version_string());

  CommonFlags split_f, train_f, eval_f, sweep_f;
  auto* split = app.add_subcommand("split", "split an interaction log into train/validation/test users");
  add_common(split, split_f);

  auto* train = app.add_subcommand("train", "train a model and write checkpoint, log and manifest");
  add_common(train, train_f);

  auto* evaluate = app.add_subcommand("evaluate", "fold-in evaluation of a checkpoint");
  add_common(evaluate, eval_f);
  std::string checkpoint;
  std::string which = "test";
  evaluate->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  evaluate->add_option("--set", which, "test or validation");

  auto* sweep = app.add_subcommand("sweep", "grid search scored on the validation users");
  add_common(sweep, sweep_f);
  std::string grid;
  sweep->add_option("--grid", grid, "grid file: section.key = v1, v2, ...")->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic two-population interaction log");
  safer::SyntheticConfig sc;
  std::string synth_out;
  synth->add_option("--users", sc.num_users);
  synth->add_option("--items", sc.num_items);
  synth->add_option("--latent-dim", sc.latent_dim);
  synth->add_option("--tail-fraction", sc.tail_fraction);
  synth->add_option("--min-items", sc.head_min_items);
  synth->add_option("--max-items", sc.head_max_items);
  synth->add_option("--tail-min-items", sc.tail_min_items);
  synth->add_option("--tail-max-items", sc.tail_max_items);
  synth->add_option("--sharpness", sc.sharpness);
  synth->add_option("--seed", sc.seed);
  synth->add_option("--out", synth_out, "output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : safer::app::kUsage;
  }

  using namespace safer::app;
  if (*split) return run_guarded([&] { return cmd_split(resolve(split_f)); });
  if (*train) return run_guarded([&] { return cmd_train(resolve(train_f)); });
  if (*evaluate) return run_guarded([&] { return cmd_evaluate(resolve(eval_f), checkpoint, which); });
  if (*sweep) return run_guarded([&] { return cmd_sweep(resolve(sweep_f), grid); });
  if (*synth) return run_guarded([&] { return cmd_synth(sc, synth_out); });
  return kUsage;
}
