#include <iostream>

#include "CLI11.hpp"
#include "revib/commands.hpp"

using namespace revib;
using namespace revib::cli;

namespace {

struct Common {
  std::string config_path;
  int threads = 1;
};

RunConfig resolve_config(const Common& common) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{} : load_run_config(common.config_path);
  apply_seed_override(cfg);
  cfg.train.threads = common.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revib: trajectory forecasting with linear base, self-bias and re-bias terms"};
  app.require_subcommand(0, 1);
  bool dump = false;
  app.add_flag("--dump-config", dump, "Print the full default configuration as JSON");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "Run configuration (JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--threads", common.threads, "Worker threads (1 gives bit-stable output)")
        ->check(CLI::PositiveNumber);
  };

  // prepare
  PrepareOptions prep;
  std::string prep_out;
  std::vector<std::string> prep_inputs;
  auto* prepare = app.add_subcommand("prepare", "Window scene files into a sample cache");
  add_common(prepare);
  prepare->add_option("inputs", prep_inputs, "Scene files or directories");
  prepare->add_option("--synthetic", prep.synthetic,
                      "Generate scenes: linear, crossing, follow, group, avoid");
  prepare->add_option("--scenes", prep.scenes, "Synthetic scenes per kind")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--seed", prep.seed, "Synthetic generator seed");
  prepare->add_option("-o,--output", prep_out, "Sample cache path")->required();

  // train
  TrainOptions tr;
  std::string tr_cache, tr_run;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoint and manifest");
  add_common(train_cmd);
  train_cmd->add_option("--cache", tr_cache, "Sample cache")->required();
  train_cmd->add_option("--run", tr_run, "Run directory")->required();

  // shared by eval / predict / diagnose
  std::string run_dir, cache_override, split = "test", output;
  int k = 0;
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--run", run_dir, "Run directory")->required();
    sub->add_option("--cache", cache_override, "Sample cache (default: the one used to train)");
    sub->add_option("--split", split, "train, val, test or all");
    sub->add_option("-k,--k", k, "Draws per sample (default: train.k_eval)");
    sub->add_option("-o,--output", output, "Output path");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  bool baseline = false;
  std::string baseline_name;
  auto* eval = app.add_subcommand("eval", "minADE / minFDE on a split");
  add_run(eval);
  eval->add_option("--baseline", baseline_name,
                   "'linear': K=1 linear-base predictions instead of the model")
      ->check(CLI::IsMember({"linear"}));

  std::string select = "all";
  auto* predict = app.add_subcommand("predict", "Write K predictions per sample as CSV");
  add_run(predict);
  predict->add_option("--samples", select, "'all' or indices/ranges, e.g. 0,3,5-8");

  std::string kind;
  DiagnoseOptions diag;
  std::vector<double> velocity;
  auto* diagnose = app.add_subcommand("diagnose", "Energy shares, angles, grids, PCA, contributions");
  add_run(diagnose);
  diagnose->add_option("kind", kind, "energy | angles | grid | pca | contrib")->required();
  diagnose->add_option("--sample", diag.sample, "grid: sample index within the split");
  diagnose->add_option("--x-min", diag.grid.x_min, "grid: first cell x (relative to the ego)");
  diagnose->add_option("--y-min", diag.grid.y_min, "grid: first cell y (relative to the ego)");
  diagnose->add_option("--nx", diag.grid.nx, "grid: cells along x");
  diagnose->add_option("--ny", diag.grid.ny, "grid: cells along y");
  diagnose->add_option("--resolution", diag.grid.resolution, "grid: cell spacing in meters");
  diagnose->add_flag("!--absolute", diag.grid_relative,
                     "grid: coordinates are absolute instead of ego-relative");
  diagnose->add_option("--manual-velocity", velocity,
                       "grid: manual neighbor velocity vx vy in m/s (default: head-on)")
      ->expected(2);
  diagnose->add_flag("--ablate-re", diag.ablate_re_head, "Zero the re-bias head first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (dump) {
      RunConfig cfg;
      apply_seed_override(cfg);
      std::cout << dump_config(cfg);
      return kExitOk;
    }
    if (*prepare) {
      prep.config = resolve_config(common);
      for (const auto& p : prep_inputs) prep.inputs.emplace_back(p);
      prep.output = prep_out;
      const auto r = cmd_prepare(prep);
      std::cout << "samples " << r.cache.samples.size() << ", agents " << r.cache.report.agents
                << ", agents without a full window " << r.cache.report.agents_without_window
                << ", cache hash " << std::hex << r.hash << std::dec << "\n";
    } else if (*train_cmd) {
      tr.config = resolve_config(common);
      tr.cache = tr_cache;
      tr.run_dir = tr_run;
      tr.log = &std::cerr;
      const auto r = cmd_train(tr);
      std::cout << "initial loss " << r.initial_loss << ", final epoch loss "
                << (r.epoch_loss.empty() ? r.initial_loss : r.epoch_loss.back()) << "\n";
    } else if (*eval) {
      EvalOptions o;
      o.run_dir = run_dir;
      if (!cache_override.empty()) o.cache = cache_override;
      o.split = split;
      o.k = k;
      baseline = baseline_name == "linear";
      o.linear_baseline = baseline;
      o.threads = common.threads;
      if (!output.empty()) o.output = output;
      const auto r = cmd_eval(o);
      std::cout << "minADE_" << r.k << " " << r.mean_ade << "  minFDE_" << r.k << " " << r.mean_fde
                << "  (" << r.samples.size() << " samples, " << r.predictor << ")\n";
    } else if (*predict) {
      PredictOptions o;
      o.run_dir = run_dir;
      if (!cache_override.empty()) o.cache = cache_override;
      o.split = split;
      o.select = select;
      o.k = k;
      if (!output.empty()) o.output = output;
      std::cout << cmd_predict(o) << " rows\n";
    } else if (*diagnose) {
      diag.run_dir = run_dir;
      if (!cache_override.empty()) diag.cache = cache_override;
      diag.split = split;
      diag.kind = parse_diagnose_kind(kind);
      diag.k = k;
      diag.threads = common.threads;
      if (velocity.size() == 2) diag.manual_velocity = std::array<double, 2>{velocity[0], velocity[1]};
      if (!output.empty()) diag.output = output;
      std::cout << cmd_diagnose(diag).summary << "\n";
    } else {
      std::cout << app.help();
      return kExitUsage;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
