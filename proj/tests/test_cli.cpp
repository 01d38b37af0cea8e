#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "revib/commands.hpp"

using namespace revib;
using namespace revib::cli;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() /
              ("revib_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RunConfig tiny_run() {
  RunConfig cfg;
  cfg.model.transformer = {8, 2, 1, 0};
  cfg.train.epochs = 1;
  cfg.train.batch_size = 16;
  cfg.train.k_train = 2;
  cfg.train.k_eval = 3;
  cfg.train.seed = 5;
  return cfg;
}

PrepareOptions tiny_prepare(const fs::path& out) {
  PrepareOptions p;
  p.synthetic = {"linear", "avoid"};
  p.scenes = 6;
  p.seed = 3;
  p.output = out;
  return p;
}

}  // namespace

TEST(Config, DumpParseRoundTrip) {
  RunConfig cfg = tiny_run();
  cfg.train.adam.lr = 2.5e-4;
  cfg.model.n_theta = 6;
  cfg.dataset.stride = 2;
  const std::string text = dump_config(cfg);
  EXPECT_EQ(dump_config(parse_run_config(text)), text);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(back.train.adam.lr, 2.5e-4);
  EXPECT_EQ(back.model.n_theta, 6);
  EXPECT_EQ(back.dataset.stride, 2);
}

TEST(Config, MissingKeysTakeDefaultsAndUnknownKeysFail) {
  const RunConfig d = parse_run_config("{}");
  EXPECT_EQ(d.train.k_train, 20);
  EXPECT_EQ(d.model.d(), RunConfig{}.model.d());
  EXPECT_THROW(parse_run_config(R"({"train": {"epoch": 3}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"modle": {}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"model": {"n_heads": 3}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
}

TEST(Config, ModelHorizonFollowsDataset) {
  const RunConfig c = parse_run_config(R"({"dataset": {"t_h": 6, "t_f": 10}})");
  EXPECT_EQ(c.model.t_h, 6);
  EXPECT_EQ(c.model.t_f, 10);
}

TEST(Config, SeedOverrideFromEnvironment) {
  RunConfig cfg = tiny_run();
  ::setenv("REVIB_SEED", "1234", 1);
  apply_seed_override(cfg);
  EXPECT_EQ(cfg.train.seed, 1234u);
  ::setenv("REVIB_SEED", "12x", 1);
  EXPECT_THROW(apply_seed_override(cfg), UsageError);
  ::unsetenv("REVIB_SEED");
  apply_seed_override(cfg);
  EXPECT_EQ(cfg.train.seed, 1234u);
}

TEST(Commands, PrepareRejectsMissingAndEmptyInputs) {
  TempDir dir("prep_empty");
  PrepareOptions p;
  p.output = dir.path() / "cache.txt";
  p.inputs = {dir.path()};
  EXPECT_THROW(cmd_prepare(p), UsageError);
  p.inputs = {dir.path() / "nope.txt"};
  EXPECT_THROW(cmd_prepare(p), UsageError);
  PrepareOptions bad = tiny_prepare(dir.path() / "c.txt");
  bad.synthetic = {"zigzag"};
  EXPECT_THROW(cmd_prepare(bad), ConfigError);
}

TEST(Commands, PrepareIsDeterministicAndReloadsByteEqual) {
  TempDir dir("prep");
  const auto a = cmd_prepare(tiny_prepare(dir.path() / "a.txt"));
  const auto b = cmd_prepare(tiny_prepare(dir.path() / "b.txt"));
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(read_bytes(dir.path() / "a.txt"), read_bytes(dir.path() / "b.txt"));
  EXPECT_EQ(a.hash, data::fnv1a64(read_bytes(dir.path() / "a.txt")));
  const auto reloaded = data::load_cache(dir.path() / "a.txt");
  EXPECT_EQ(data::serialize_cache(reloaded), read_bytes(dir.path() / "a.txt"));
  EXPECT_EQ(reloaded.samples.size(), a.cache.samples.size());
}

TEST(Commands, PrepareReadsSceneFiles) {
  TempDir dir("prep_files");
  {
    std::ofstream f(dir.path() / "walk.txt");
    for (int t = 0; t < 25; ++t) {
      f << t * 10 << " 1 " << 0.5 * t << " 0\n";
      f << t * 10 << " 2 " << 10.0 - 0.5 * t << " 1\n";
    }
  }
  PrepareOptions p;
  p.inputs = {dir.path()};
  p.output = dir.path() / "cache.txt";
  const auto r = cmd_prepare(p);
  // 25 frames, windows of 20: 6 starts per agent, two agents.
  EXPECT_EQ(r.cache.samples.size(), 12u);
  EXPECT_EQ(r.cache.samples.front().neighbors.size(), 1u);
}

class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("run");
    cmd_prepare(tiny_prepare(dir_->path() / "cache.txt"));
    TrainOptions t;
    t.cache = dir_->path() / "cache.txt";
    t.run_dir = dir_->path() / "run";
    t.config = tiny_run();
    cmd_train(t);
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path run() { return dir_->path() / "run"; }
  static TempDir* dir_;
};

TempDir* TrainedRun::dir_ = nullptr;

TEST_F(TrainedRun, ManifestAndCheckpointWritten) {
  ASSERT_TRUE(fs::exists(run() / "manifest.json"));
  ASSERT_TRUE(fs::exists(run() / "checkpoint.bin"));
  const auto doc = nlohmann::json::parse(read_bytes(run() / "manifest.json"));
  EXPECT_EQ(doc.at("format"), "revib-run");
  EXPECT_EQ(doc.at("epoch_loss").size(), 1u);
  const auto loaded = load_run(run());
  EXPECT_EQ(loaded.config.train.seed, 5u);
  EXPECT_EQ(loaded.split.train.size() + loaded.split.val.size() + loaded.split.test.size(),
            loaded.cache.samples.size());
  EXPECT_THROW(loaded.samples("holdout"), UsageError);
  EXPECT_THROW(load_run(dir_->path() / "missing"), UsageError);
}

TEST_F(TrainedRun, RetrainingIsByteIdentical) {
  TrainOptions t;
  t.cache = dir_->path() / "cache.txt";
  t.run_dir = dir_->path() / "run2";
  t.config = tiny_run();
  cmd_train(t);
  EXPECT_EQ(read_bytes(run() / "checkpoint.bin"), read_bytes(t.run_dir / "checkpoint.bin"));
}

TEST_F(TrainedRun, EvalIsIdempotentAndBaselineMatchesLinearOnly) {
  EvalOptions e;
  e.run_dir = run();
  e.split = "all";
  const auto m1 = cmd_eval(e);
  const std::string csv1 = read_bytes(run() / "metrics_all.csv");
  const auto m2 = cmd_eval(e);
  EXPECT_EQ(m1.mean_ade, m2.mean_ade);
  EXPECT_EQ(csv1, read_bytes(run() / "metrics_all.csv"));
  EXPECT_EQ(m1.k, 3);

  e.linear_baseline = true;
  const auto lin = cmd_eval(e);
  EXPECT_TRUE(fs::exists(run() / "metrics_all_linear.json"));
  const auto loaded = load_run(run());
  RunConfig only = loaded.config;
  only.model.use_self_bias = false;
  only.model.use_re_bias = false;
  ReModel linear_only(only.model, 0);
  const auto ref = metrics::evaluate(linear_only, loaded.samples("all"), 1, 0);
  EXPECT_NEAR(lin.mean_ade, ref.mean_ade, 1e-12);
  EXPECT_NEAR(lin.mean_fde, ref.mean_fde, 1e-12);
}

TEST_F(TrainedRun, PredictRowCountAndSelection) {
  PredictOptions p;
  p.run_dir = run();
  p.split = "all";
  p.select = "0,2-3";
  p.k = 2;
  p.output = dir_->path() / "pred.csv";
  EXPECT_EQ(cmd_predict(p), 3u * 2u * 12u);
  std::ifstream in(*p.output);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "sample,scene,ego_id,start_frame,k,step,x,y");
  EXPECT_EQ(parse_selection("all", 4), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(parse_selection("3,0-1", 4), (std::vector<std::size_t>{3, 0, 1}));
  EXPECT_THROW(parse_selection("4", 4), UsageError);
  EXPECT_THROW(parse_selection("2-1", 4), UsageError);
}

TEST_F(TrainedRun, DiagnoseWritesEveryKind) {
  for (const char* kind : {"energy", "angles", "grid", "pca", "contrib"}) {
    DiagnoseOptions d;
    d.run_dir = run();
    d.split = "all";
    d.kind = parse_diagnose_kind(kind);
    d.grid = {-1, -1, 3, 3, 1.0};
    d.k = 3;
    const auto r = cmd_diagnose(d);
    EXPECT_FALSE(r.csv.empty()) << kind;
    EXPECT_TRUE(fs::exists(run() / ("diag_" + std::string(kind) + "_all.csv"))) << kind;
  }
  EXPECT_THROW(parse_diagnose_kind("heat"), UsageError);
}
