#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "revib/config.hpp"
#include "revib/diagnostics.hpp"
#include "revib/errors.hpp"
#include "revib/metrics.hpp"
#include "revib/synthetic.hpp"

namespace revib::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Bad invocation or missing input; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// REVIB_SEED, when set, replaces the configured seed.
void apply_seed_override(RunConfig& cfg);
RunConfig load_run_config(const fs::path& path);

struct PrepareOptions {
  std::vector<fs::path> inputs;       // scene files or directories of them
  std::vector<std::string> synthetic; // scene kinds to generate
  int scenes = 100;                   // per synthetic kind
  std::uint64_t seed = 0;
  fs::path output;
  RunConfig config;
};

struct PrepareResult {
  data::SampleCache cache;
  std::uint64_t hash = 0;  // fnv1a64 of the written cache bytes
};

PrepareResult cmd_prepare(const PrepareOptions& opts);

// Run directory layout:
//   manifest.json   config, seed, cache path and hash, split sizes, loss curve
//   checkpoint.bin  parameters
struct TrainOptions {
  fs::path cache;
  fs::path run_dir;
  RunConfig config;
  std::ostream* log = nullptr;  // one line per epoch when set
};

TrainResult cmd_train(const TrainOptions& opts);

// A trained run reloaded from its directory.
struct LoadedRun {
  RunConfig config;
  std::unique_ptr<ReModel> model;
  data::SampleCache cache;
  data::Split split;

  const std::vector<data::Sample>& samples(const std::string& name) const;
};

LoadedRun load_run(const fs::path& run_dir, const std::optional<fs::path>& cache = std::nullopt);

struct EvalOptions {
  fs::path run_dir;
  std::optional<fs::path> cache;
  std::string split = "test";
  int k = 0;  // 0 means train.k_eval
  bool linear_baseline = false;
  int threads = 1;
  std::optional<fs::path> output;  // JSON report; a CSV is written beside it
};

metrics::MetricReport cmd_eval(const EvalOptions& opts);

struct PredictOptions {
  fs::path run_dir;
  std::optional<fs::path> cache;
  std::string split = "test";
  std::string select = "all";  // "all" or indices/ranges such as "0,4,7-9"
  int k = 0;
  std::optional<fs::path> output;
};

std::vector<std::size_t> parse_selection(const std::string& select, std::size_t count);
// Returns the number of CSV data rows (samples x K x t_f).
std::size_t cmd_predict(const PredictOptions& opts);

enum class DiagnoseKind { kEnergy, kAngles, kGrid, kPca, kContrib };
DiagnoseKind parse_diagnose_kind(const std::string& name);
std::string to_string(DiagnoseKind kind);

struct DiagnoseOptions {
  fs::path run_dir;
  std::optional<fs::path> cache;
  std::string split = "test";
  DiagnoseKind kind = DiagnoseKind::kEnergy;
  int k = 0;
  std::size_t sample = 0;  // grid: which sample of the split
  diagnostics::GridSpec grid;
  bool grid_relative = true;  // grid coordinates relative to the ego's present position
  std::optional<std::array<double, 2>> manual_velocity;  // default: head-on to the ego
  bool ablate_re_head = false;
  int threads = 1;
  std::optional<fs::path> output;
};

struct DiagnoseResult {
  std::string csv;
  std::string summary;  // human-readable one-liner
};

DiagnoseResult cmd_diagnose(const DiagnoseOptions& opts);

}  // namespace revib::cli
