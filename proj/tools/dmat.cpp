// SPDX-License-Identifier: Apache-2.0
//
// dmat run|ablate|embed|check-grad. Exit status: 0 success, 1 config error,
// 2 runtime failure.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "dmat/config.hpp"
#include "dmat/embedding.hpp"
#include "dmat/errors.hpp"
#include "dmat/experiment.hpp"
#include "dmat/gradcheck.hpp"
#include "dmat/nn.hpp"

namespace {

using dmat::config::RunConfig;

RunConfig load(const std::string& path, const std::optional<std::string>& out,
               const std::optional<std::uint64_t>& seed) {
  RunConfig c = dmat::config::parse_config(path);
  if (out) c.out = *out;
  if (seed) c.train.seed = *seed;
  return c;
}

int cmd_run(const RunConfig& c) {
  const auto s = dmat::experiment::run_experiment(c);
  std::printf("%s on %s: target accuracy %.4f +/- %.4f over %zu trials -> %s\n",
              std::string(dmat::model::variant_name(c.train.variant)).c_str(), c.name.c_str(),
              s.mean_tgt_acc, s.std_tgt_acc, s.trials.size(), c.out.string().c_str());
  return 0;
}

int cmd_ablate(const std::vector<RunConfig>& configs, const std::filesystem::path& out) {
  const auto rows = dmat::experiment::ablation_matrix(configs, out);
  for (const auto& r : rows) {
    std::printf("%-12s", std::string(dmat::model::variant_name(r.variant)).c_str());
    for (std::size_t i = 0; i < r.mean.size(); ++i) std::printf("  %.4f+/-%.4f", r.mean[i], r.std[i]);
    if (r.avg) std::printf("  avg %.4f", *r.avg);
    std::printf("\n");
  }
  std::printf("table: %s\n", (out / "ablation.csv").string().c_str());
  return 0;
}

// Trains trial 0 (or loads a checkpoint) and exports the T1 projection.
int cmd_embed(const RunConfig& c, const std::optional<std::string>& checkpoint) {
  const auto ds = dmat::config::make_datasets(c, c.train.seed);
  dmat::nn::Architecture arch = c.train.arch;
  arch.input_dim = ds.source.input_dim();
  arch.num_classes = ds.source.num_classes;
  std::optional<dmat::model::DualModel> model;
  if (checkpoint) {
    model = dmat::model::build_dual_model(arch, 0);
    dmat::nn::load_parameters(*checkpoint, model->parameters());
  } else {
    model = dmat::train::train(c.train, ds.source, ds.target.features).model;
  }
  const std::size_t n = std::min({c.embed_per_domain, ds.source.size(), ds.target.size()});
  const auto path = c.out / "embedding.csv";
  dmat::embedding::export_embeddings(*model, ds.source, ds.target, n, path);
  std::printf("wrote %zu points per domain to %s\n", n, path.string().c_str());
  return 0;
}

int cmd_check_grad(std::size_t trials, std::uint64_t seed) {
  bool ok = true;
  for (const auto& e : dmat::gradcheck::run_suite(trials, seed)) {
    std::printf("%-28s %4zu cases %6zu entries %3zu kinks  max rel err %.3e  %s\n", e.name.c_str(),
                e.cases, e.checked, e.skipped, e.max_rel_error, e.passed() ? "ok" : "FAIL");
    ok = ok && e.passed();
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-module adversarial domain adaptation experiments"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  std::optional<std::string> out, checkpoint;
  std::optional<std::uint64_t> seed;
  std::size_t grad_trials = 100;

  auto add_common = [&](CLI::App* sub, bool many_configs) {
    if (many_configs)
      sub->add_option("--config", config_paths, "Run config (repeat for several datasets)")->required();
    else
      sub->add_option("--config", config_paths, "Run config")->required()->expected(1);
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Base seed (overrides the config)");
  };
  auto* run = app.add_subcommand("run", "Train all trials of one config");
  add_common(run, false);
  auto* ablate = app.add_subcommand("ablate", "Run all seven variants");
  add_common(ablate, true);
  auto* embed = app.add_subcommand("embed", "Export a 2-D PCA projection of T1 features");
  add_common(embed, false);
  embed->add_option("--checkpoint", checkpoint, "Load parameters instead of training");
  auto* check = app.add_subcommand("check-grad", "Finite-difference gradient suite");
  check->add_option("--trials", grad_trials, "Random cases per entry")->check(CLI::PositiveNumber);
  check->add_option("--seed", seed, "Suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*check) return cmd_check_grad(grad_trials, seed.value_or(1));
    if (*ablate) {
      std::vector<RunConfig> configs;
      for (const auto& p : config_paths) configs.push_back(load(p, std::nullopt, seed));
      return cmd_ablate(configs, out ? std::filesystem::path(*out) : configs.front().out);
    }
    const RunConfig c = load(config_paths.front(), out, seed);
    if (*run) return cmd_run(c);
    return cmd_embed(c, checkpoint);
  } catch (const dmat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
