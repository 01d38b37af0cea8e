#include "revib/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "revib/checkpoint.hpp"
#include "revib/linear_base.hpp"

namespace revib::cli {
namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<fs::path> scene_files(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const fs::path& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file()) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else {
      throw UsageError("input not found: " + in.string());
    }
  }
  return files;
}

void check_horizon(const RunConfig& cfg, const data::DatasetConfig& cached) {
  if (cached.t_h != cfg.dataset.t_h || cached.t_f != cfg.dataset.t_f) {
    throw ConfigError("sample cache was windowed with t_h=" + std::to_string(cached.t_h) +
                      ", t_f=" + std::to_string(cached.t_f) + " but the run uses t_h=" +
                      std::to_string(cfg.dataset.t_h) + ", t_f=" +
                      std::to_string(cfg.dataset.t_f));
  }
}

data::SampleCache read_cache(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("sample cache not found: " + path.string());
  return data::load_cache(path);
}

int draws(int requested, int fallback) {
  const int k = requested > 0 ? requested : fallback;
  if (k < 1) throw UsageError("K must be >= 1");
  return k;
}

std::uint64_t eval_seed(const RunConfig& cfg, const std::string& split) {
  return nn::derive_seed(cfg.train.seed, "eval:" + split);
}

}  // namespace

void apply_seed_override(RunConfig& cfg) {
  const char* env = std::getenv("REVIB_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw UsageError(std::string("REVIB_SEED is not an integer: ") + env);
  cfg.train.seed = v;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config not found: " + path.string());
  return parse_run_config(read_text(path));
}

PrepareResult cmd_prepare(const PrepareOptions& opts) {
  opts.config.validate();
  if (opts.output.empty()) throw UsageError("prepare needs an output path");
  std::vector<data::Scene> scenes;
  for (const fs::path& file : scene_files(opts.inputs)) scenes.push_back(data::load_scene(file));

  data::SyntheticConfig syn;
  syn.t_h = opts.config.dataset.t_h;
  syn.t_f = opts.config.dataset.t_f;
  syn.dt = opts.config.dataset.dt;
  for (const std::string& kind : opts.synthetic) {
    auto generated =
        data::generate_synthetic(data::parse_synthetic_kind(kind), opts.scenes, opts.seed, syn);
    scenes.insert(scenes.end(), generated.begin(), generated.end());
  }
  if (scenes.empty()) throw UsageError("no scenes found in the given inputs");

  PrepareResult result;
  result.cache.config = opts.config.dataset;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    data::SkipReport report;
    auto samples = data::make_samples(scenes[i], opts.config.dataset, i, &report);
    result.cache.report += report;
    for (auto& s : samples) result.cache.samples.push_back(std::move(s));
  }
  const std::string text = data::serialize_cache(result.cache);
  write_text(opts.output, text);
  result.hash = data::fnv1a64(text);
  return result;
}

TrainResult cmd_train(const TrainOptions& opts) {
  opts.config.validate();
  if (opts.run_dir.empty()) throw UsageError("train needs a run directory");
  const std::string cache_text = read_text(opts.cache);
  const data::SampleCache cache = data::deserialize_cache(cache_text);
  check_horizon(opts.config, cache.config);
  const data::Split parts = data::split(cache.samples, opts.config.dataset.split,
                                        opts.config.train.seed);
  if (parts.train.empty()) throw UsageError("the train split is empty");

  ReModel model(opts.config.model, opts.config.train.seed);
  const TrainResult result = train(model, parts.train, opts.config.train, [&](int e, double l) {
    if (opts.log) *opts.log << "epoch " << e << " loss " << number(l) << std::endl;
  });

  fs::create_directories(opts.run_dir);
  nn::save_checkpoint(opts.run_dir / "checkpoint.bin", model.params());
  json manifest;
  manifest["format"] = "revib-run";
  manifest["version"] = kManifestVersion;
  manifest["config"] = to_json(opts.config);
  manifest["seed"] = opts.config.train.seed;
  manifest["cache"] = opts.cache.string();
  manifest["dataset_hash"] = data::fnv1a64(cache_text);
  manifest["splits"] = {{"train", parts.train.size()},
                        {"val", parts.val.size()},
                        {"test", parts.test.size()}};
  manifest["initial_loss"] = result.initial_loss;
  manifest["epoch_loss"] = result.epoch_loss;
  manifest["steps"] = result.steps;
  write_text(opts.run_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

const std::vector<data::Sample>& LoadedRun::samples(const std::string& name) const {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "test") return split.test;
  if (name == "all") return cache.samples;
  throw UsageError("unknown split '" + name + "' (train, val, test, all)");
}

LoadedRun load_run(const fs::path& run_dir, const std::optional<fs::path>& cache) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw UsageError("no manifest in " + run_dir.string());
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run manifest is not valid JSON: ") + e.what());
  }
  if (manifest.value("format", "") != "revib-run" ||
      manifest.value("version", 0) != kManifestVersion) {
    throw ConfigError("unsupported run manifest in " + run_dir.string());
  }
  LoadedRun run;
  run.config = run_config_from_json(manifest.at("config"));
  run.model = std::make_unique<ReModel>(run.config.model, run.config.train.seed);
  const fs::path ckpt = run_dir / "checkpoint.bin";
  if (!fs::exists(ckpt)) throw UsageError("no checkpoint in " + run_dir.string());
  nn::load_checkpoint(ckpt, run.model->params());
  run.cache = read_cache(cache ? *cache : fs::path(manifest.at("cache").get<std::string>()));
  check_horizon(run.config, run.cache.config);
  run.split = data::split(run.cache.samples, run.config.dataset.split, run.config.train.seed);
  return run;
}

metrics::MetricReport cmd_eval(const EvalOptions& opts) {
  const LoadedRun run = load_run(opts.run_dir, opts.cache);
  const auto& samples = run.samples(opts.split);
  metrics::MetricReport report;
  if (opts.linear_baseline) {
    report = metrics::evaluate(*run.model, samples, 1, 0, metrics::Predictor::kLinearBase,
                               opts.threads);
  } else {
    report = metrics::evaluate(*run.model, samples, draws(opts.k, run.config.train.k_eval),
                               eval_seed(run.config, opts.split), metrics::Predictor::kModel,
                               opts.threads);
  }
  const std::string stem =
      "metrics_" + opts.split + (opts.linear_baseline ? "_linear" : "");
  const fs::path json_path = opts.output ? *opts.output : opts.run_dir / (stem + ".json");
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  write_text(json_path, metrics::report_json(report));
  write_text(csv_path, metrics::report_csv(report));
  return report;
}

std::vector<std::size_t> parse_selection(const std::string& select, std::size_t count) {
  std::vector<std::size_t> out;
  if (select == "all") {
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    return out;
  }
  auto index = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("bad sample selector '" + select + "'");
    }
    const std::size_t v = std::stoul(s);
    if (v >= count) {
      throw UsageError("sample " + s + " out of range (split has " + std::to_string(count) + ")");
    }
    return v;
  };
  std::stringstream ss(select);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(index(part));
      continue;
    }
    const std::size_t lo = index(part.substr(0, dash)), hi = index(part.substr(dash + 1));
    if (hi < lo) throw UsageError("bad sample range '" + part + "'");
    for (std::size_t i = lo; i <= hi; ++i) out.push_back(i);
  }
  if (out.empty()) throw UsageError("empty sample selector");
  return out;
}

std::size_t cmd_predict(const PredictOptions& opts) {
  const LoadedRun run = load_run(opts.run_dir, opts.cache);
  const auto& samples = run.samples(opts.split);
  const int k = draws(opts.k, run.config.train.k_eval);
  const std::uint64_t seed = eval_seed(run.config, opts.split);
  std::ostringstream out;
  out << "sample,scene,ego_id,start_frame,k,step,x,y\n";
  std::size_t rows = 0;
  for (std::size_t i : parse_selection(opts.select, samples.size())) {
    const data::Sample& s = samples[i];
    const auto sets = run.model->predict(s, k, nn::derive_seed(seed, std::to_string(i)));
    for (std::size_t j = 0; j < sets.size(); ++j) {
      for (std::size_t t = 0; t < sets[j].sum.dim(0); ++t) {
        out << i << ',' << s.scene << ',' << s.ego_id << ',' << s.start_frame << ',' << j << ','
            << run.config.dataset.t_h + 1 + static_cast<int>(t) << ','
            << number(sets[j].sum(t, 0)) << ',' << number(sets[j].sum(t, 1)) << '\n';
        ++rows;
      }
    }
  }
  write_text(opts.output ? *opts.output : opts.run_dir / ("predictions_" + opts.split + ".csv"),
             out.str());
  return rows;
}

DiagnoseKind parse_diagnose_kind(const std::string& name) {
  if (name == "energy") return DiagnoseKind::kEnergy;
  if (name == "angles") return DiagnoseKind::kAngles;
  if (name == "grid") return DiagnoseKind::kGrid;
  if (name == "pca") return DiagnoseKind::kPca;
  if (name == "contrib") return DiagnoseKind::kContrib;
  throw UsageError("unknown diagnostic '" + name + "' (energy, angles, grid, pca, contrib)");
}

std::string to_string(DiagnoseKind kind) {
  switch (kind) {
    case DiagnoseKind::kEnergy:
      return "energy";
    case DiagnoseKind::kAngles:
      return "angles";
    case DiagnoseKind::kGrid:
      return "grid";
    case DiagnoseKind::kPca:
      return "pca";
    case DiagnoseKind::kContrib:
      return "contrib";
  }
  return "?";
}

DiagnoseResult cmd_diagnose(const DiagnoseOptions& opts) {
  LoadedRun run = load_run(opts.run_dir, opts.cache);
  if (opts.ablate_re_head) run.model->zero_re_head();
  const ReModel& model = *run.model;
  const auto& samples = run.samples(opts.split);
  if (samples.empty()) throw UsageError("split '" + opts.split + "' is empty");
  const int k = draws(opts.k, run.config.train.k_eval);
  const std::uint64_t seed = eval_seed(run.config, opts.split);
  auto k_sets = [&](std::size_t i) {
    return model.predict(samples[i], k, nn::derive_seed(seed, std::to_string(i)));
  };

  DiagnoseResult result;
  switch (opts.kind) {
    case DiagnoseKind::kEnergy: {
      std::vector<std::vector<BiasSet>> sets;
      for (std::size_t i = 0; i < samples.size(); ++i) sets.push_back(k_sets(i));
      const auto shares = diagnostics::bias_energy_shares(sets);
      result.csv = diagnostics::shares_csv(shares);
      result.summary = "energy shares (%): linear " + number(shares.linear) + ", self " +
                       number(shares.self) + ", re " + number(shares.re);
      break;
    }
    case DiagnoseKind::kAngles: {
      if (k < 2) throw UsageError("angles need K >= 2");
      std::vector<diagnostics::VibrationAngles> angles;
      double sum = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        angles.push_back(diagnostics::vibration_angles(k_sets(i)));
        sum += angles.back().theta_s + angles.back().theta_r;
      }
      result.csv = diagnostics::angles_csv(angles);
      result.summary = "mean theta_s + theta_r: " + number(sum / samples.size()) + " rad";
      break;
    }
    case DiagnoseKind::kGrid: {
      if (opts.sample >= samples.size()) {
        throw UsageError("sample " + std::to_string(opts.sample) + " out of range");
      }
      const data::Sample& s = samples[opts.sample];
      const int t_h = run.config.dataset.t_h;
      const double dt = run.config.dataset.dt;
      std::array<double, 2> v{0.0, 0.0};
      if (opts.manual_velocity) {
        v = *opts.manual_velocity;
      } else {
        const auto w = linear::fit(s.ego_obs);
        v = {-w.slope(0) / dt, -w.slope(1) / dt};
      }
      diagnostics::GridSpec grid = opts.grid;
      if (opts.grid_relative) {
        grid.x_min += s.ego_obs(t_h - 1, 0);
        grid.y_min += s.ego_obs(t_h - 1, 1);
      }
      diagnostics::InterventionOptions io;
      io.threads = opts.threads;
      const auto cells = diagnostics::social_modification_grid(
          model, s, diagnostics::manual_trajectory(t_h, dt, v[0], v[1]), grid, io);
      result.csv = diagnostics::grid_csv(cells);
      double peak = 0.0;
      for (const auto& c : cells.cells) peak = std::max(peak, c.c);
      result.summary = "max c over grid: " + number(peak) + " m";
      break;
    }
    case DiagnoseKind::kPca: {
      std::vector<Tensor> rows;
      std::vector<std::pair<std::size_t, long>> owner;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto feats = diagnostics::resonance_features(model, samples[i]);
        for (std::size_t j = 0; j < feats.size(); ++j) {
          rows.push_back(feats[j]);
          owner.emplace_back(i, samples[i].neighbor_ids[j]);
        }
      }
      if (rows.size() < 2) throw UsageError("PCA needs at least 2 resonance features");
      Tensor x({rows.size(), rows.front().numel()});
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < x.dim(1); ++c) x(r, c) = rows[r].storage()[c];
      const auto pca = diagnostics::feature_pca(x);
      std::ostringstream out;
      out << "sample_id,neighbor_id,pc1,pc2\n";
      for (std::size_t r = 0; r < rows.size(); ++r) {
        out << owner[r].first << ',' << owner[r].second << ',' << number(pca.projection(r, 0))
            << ',' << number(pca.projection(r, 1)) << '\n';
      }
      result.csv = out.str();
      result.summary = "explained variance: " + number(pca.explained[0]) + ", " +
                       number(pca.explained[1]);
      break;
    }
    case DiagnoseKind::kContrib: {
      nn::NoGradGuard guard;
      const Tensor& w =
          model.params()[model.resonance().transformer().src_projection().weight].value();
      std::ostringstream out;
      out << "sample_id,partition,neighbors,resonance_energy,position_energy\n";
      double total_r = 0.0, total_p = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto m =
            model.resonance().build(model.params(), samples[i].ego_obs, samples[i].neighbors);
        const auto parts = diagnostics::contribution_split(w, m.value.value());
        for (std::size_t p = 0; p < parts.size(); ++p) {
          if (m.counts[p] == 0) continue;
          out << i << ',' << p << ',' << m.counts[p] << ',' << number(parts[p].resonance) << ','
              << number(parts[p].position) << '\n';
          total_r += parts[p].resonance;
          total_p += parts[p].position;
        }
      }
      result.csv = out.str();
      result.summary =
          "resonance energy " + number(total_r) + ", position energy " + number(total_p);
      break;
    }
  }
  write_text(opts.output ? *opts.output
                         : opts.run_dir / ("diag_" + to_string(opts.kind) + "_" + opts.split +
                                           ".csv"),
             result.csv);
  return result;
}

}  // namespace revib::cli
