#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "revib/errors.hpp"
#include "revib/linear_base.hpp"
#include "revib/synthetic.hpp"

using namespace revib;
using namespace revib::data;
using nn::Tensor;

namespace {

Scene parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scene(in, "test");
}

// Random scene with per-agent coverage gaps.
Scene random_scene(std::mt19937_64& rng, int agents, int frames, double dropout) {
  Scene s;
  s.name = "random";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < agents; ++a) {
    const int begin = static_cast<int>(u(rng) * frames / 3);
    const int end = frames - static_cast<int>(u(rng) * frames / 3);
    for (int f = begin; f < end; ++f) {
      if (u(rng) < dropout) continue;
      s.records.push_back({10L * f, a, u(rng) * 10, u(rng) * 10});
    }
  }
  if (s.records.empty()) s.records.push_back({0, 0, 0.0, 0.0});
  return s;
}

// Every (agent, start frame) pair with t_h + t_f consecutive frames.
std::size_t brute_force_windows(const Scene& s, int total, long step) {
  std::map<long, std::set<long>> frames;
  long lo = 1L << 40, hi = -(1L << 40);
  for (const Record& r : s.records) {
    frames[r.agent].insert(r.frame);
    lo = std::min(lo, r.frame);
    hi = std::max(hi, r.frame);
  }
  std::size_t count = 0;
  for (const auto& [agent, fs] : frames)
    for (long start = lo; start <= hi; start += step) {
      bool ok = true;
      for (int i = 0; i < total && ok; ++i) ok = fs.count(start + i * step) > 0;
      count += ok;
    }
  return count;
}

SyntheticConfig syn_cfg() { return {}; }

}  // namespace

TEST(LoadScene, FourRecords) {
  const Scene s = parse("# header\n0 1 0.0 0.0\n0 2 1.0 1.0\n10 1 0.5 0.0\n\n10 2 1.5 1.0\n");
  EXPECT_EQ(s.records.size(), 4u);
  EXPECT_EQ(s.records[3].agent, 2);
  EXPECT_EQ(s.records[3].x, 1.5);
}

TEST(LoadScene, MalformedLineReportsLineNumber) {
  try {
    parse("a b c d\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse("0 1 0 0\n0 1 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadScene, DuplicateRecordRejected) {
  try {
    parse("0 1 0 0\n# c\n0 1 5 5\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadScene, EmptyFileRejected) {
  EXPECT_THROW(parse("# only a comment\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(LoadScene, LargeFileCountsNonCommentLines) {
  std::ostringstream text;
  std::size_t lines = 0;
  for (int f = 0; f < 1000; ++f) {
    if (f % 97 == 0) text << "# comment " << f << "\n";
    for (int a = 0; a < 10; ++a) {
      text << f * 10 << ' ' << a << ' ' << f * 0.1 << ' ' << a * 0.5 << '\n';
      ++lines;
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "revib_large_scene.txt";
  std::ofstream(path) << text.str();
  const Scene s = load_scene(path);
  EXPECT_EQ(s.records.size(), lines);
  EXPECT_EQ(s.name, "revib_large_scene");
  std::filesystem::remove(path);
}

TEST(LoadScene, WriteParseRoundTrip) {
  std::mt19937_64 rng(1);
  const Scene s = random_scene(rng, 3, 20, 0.1);
  std::ostringstream out;
  write_scene(out, s);
  const Scene back = parse(out.str());
  ASSERT_EQ(back.records.size(), s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    EXPECT_EQ(back.records[i].frame, s.records[i].frame);
    EXPECT_EQ(back.records[i].x, s.records[i].x);
  }
}

TEST(MakeSamples, SingleAgentExactWindow) {
  Scene s;
  for (int f = 0; f < 20; ++f) s.records.push_back({f * 10L, 7, f * 1.0, 0.0});
  const auto samples = make_samples(s, {});
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_TRUE(samples[0].neighbors.empty());
  EXPECT_EQ(samples[0].ego_obs.shape(), (nn::Shape{8, 2}));
  EXPECT_EQ(samples[0].ego_future.shape(), (nn::Shape{12, 2}));
  EXPECT_EQ(samples[0].ego_future(0, 0), 8.0);
  EXPECT_EQ(samples[0].ego_id, 7);
}

TEST(MakeSamples, OneFrameShortGivesNothing) {
  Scene s;
  for (int f = 0; f < 19; ++f) s.records.push_back({f * 10L, 1, f * 1.0, 0.0});
  SkipReport report;
  EXPECT_TRUE(make_samples(s, {}, 0, &report).empty());
  EXPECT_EQ(report.agents, 1u);
  EXPECT_EQ(report.agents_without_window, 1u);
}

TEST(MakeSamples, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(2);
  Scene s;
  for (int a = 0; a < 5; ++a)
    for (int f = 0; f < 40; ++f) s.records.push_back({f * 10L, a, a + 0.1 * f, 0.0});
  EXPECT_EQ(make_samples(s, {}).size(), brute_force_windows(s, 20, 10));
  for (int trial = 0; trial < 10; ++trial) {
    const Scene r = random_scene(rng, 5, 40, 0.03);
    EXPECT_EQ(make_samples(r, {}).size(), brute_force_windows(r, 20, frame_step(r)));
  }
}

TEST(MakeSamples, StrideSkipsStarts) {
  Scene s;
  for (int f = 0; f < 30; ++f) s.records.push_back({f * 10L, 1, f * 1.0, 0.0});
  DatasetConfig cfg;
  cfg.stride = 3;
  const auto samples = make_samples(s, cfg);
  ASSERT_EQ(samples.size(), 4u);  // starts 0, 3, 6, 9 (in frame steps)
  EXPECT_EQ(samples[1].start_frame, 30);
}

TEST(MakeSamplesProperty, CompletenessInvariants) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Scene s = random_scene(rng, 6, 45, 0.05);
    std::map<std::pair<long, long>, std::pair<double, double>> at;
    for (const Record& r : s.records) at[{r.agent, r.frame}] = {r.x, r.y};
    const long step = frame_step(s);
    long prev_agent = -1, prev_start = -1;
    for (const Sample& smp : make_samples(s, {})) {
      EXPECT_EQ(smp.ego_obs.dim(0), 8u);
      EXPECT_EQ(smp.ego_future.dim(0), 12u);
      EXPECT_TRUE(smp.ego_id > prev_agent || (smp.ego_id == prev_agent && smp.start_frame > prev_start));
      prev_agent = smp.ego_id;
      prev_start = smp.start_frame;
      for (std::size_t j = 0; j < smp.neighbors.size(); ++j) {
        EXPECT_NE(smp.neighbor_ids[j], smp.ego_id);
        for (std::size_t t = 0; t < 8; ++t) {
          auto it = at.find({smp.neighbor_ids[j], smp.start_frame + static_cast<long>(t) * step});
          ASSERT_NE(it, at.end());
          EXPECT_EQ(smp.neighbors[j](t, 0), it->second.first);
        }
      }
      // Every agent with a full observation window is a neighbor.
      std::set<long> agents;
      for (const Record& r : s.records) agents.insert(r.agent);
      std::size_t complete = 0;
      for (long a : agents) {
        if (a == smp.ego_id) continue;
        bool ok = true;
        for (int t = 0; t < 8 && ok; ++t) ok = at.count({a, smp.start_frame + t * step}) > 0;
        complete += ok;
      }
      EXPECT_EQ(complete, smp.neighbors.size());
    }
  }
}

TEST(Split, AllTrain) {
  std::vector<Sample> samples(10);
  for (std::size_t i = 0; i < 10; ++i) samples[i].scene_index = i % 4;
  const Split s = split(samples, {1.0, 0.0, 0.0}, 5);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_TRUE(s.val.empty() && s.test.empty());
}

TEST(Split, SceneCountsAndDisjointness) {
  std::vector<Sample> samples;
  for (std::size_t scene = 0; scene < 100; ++scene)
    for (int k = 0; k < 3; ++k) {
      Sample s;
      s.scene_index = scene;
      s.ego_id = k;
      samples.push_back(s);
    }
  const Split s = split(samples, {0.7, 0.15, 0.15}, 11);
  auto scenes = [](const std::vector<Sample>& v) {
    std::set<std::size_t> out;
    for (const Sample& x : v) out.insert(x.scene_index);
    return out;
  };
  const auto a = scenes(s.train), b = scenes(s.val), c = scenes(s.test);
  EXPECT_EQ(a.size(), 70u);
  EXPECT_EQ(b.size(), 15u);
  EXPECT_EQ(c.size(), 15u);
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), samples.size());
  for (std::size_t x : a) EXPECT_FALSE(b.count(x) || c.count(x));
  for (std::size_t x : b) EXPECT_FALSE(c.count(x));
  const Split again = split(samples, {0.7, 0.15, 0.15}, 11);
  EXPECT_EQ(scenes(again.val), b);
}

TEST(Split, RatiosMustSumToOne) {
  EXPECT_THROW(split({}, {0.5, 0.2, 0.2}, 1), ConfigError);
  DatasetConfig cfg;
  cfg.split = {0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.t_h = 7;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SampleCache, RoundTripIsByteStable) {
  std::mt19937_64 rng(4);
  SampleCache cache;
  for (std::size_t i = 0; i < 3; ++i) {
    const Scene s = random_scene(rng, 4, 30, 0.02);
    auto samples = make_samples(s, cache.config, i, &cache.report);
    cache.samples.insert(cache.samples.end(), samples.begin(), samples.end());
  }
  ASSERT_FALSE(cache.samples.empty());
  const std::string text = serialize_cache(cache);
  const SampleCache back = deserialize_cache(text);
  EXPECT_EQ(serialize_cache(back), text);
  EXPECT_EQ(back.samples.size(), cache.samples.size());
  EXPECT_EQ(back.samples[0].ego_obs, cache.samples[0].ego_obs);
  EXPECT_EQ(back.report.samples, cache.report.samples);
  EXPECT_THROW(deserialize_cache("{\"format\": \"other\"}"), Error);
}

TEST(Synthetic, LinearFutureIsLinearExtrapolation) {
  for (const Scene& s : generate_synthetic(SyntheticKind::kLinear, 20, 3, syn_cfg())) {
    for (const Sample& smp : make_samples(s, {})) {
      const auto pair = linear::linear_base(smp.ego_obs, 12);
      EXPECT_LT(nn::max_abs_diff(pair.base, smp.ego_future), 1e-9);
    }
  }
}

TEST(Synthetic, SameSeedSameScenes) {
  for (auto kind : {SyntheticKind::kLinear, SyntheticKind::kCrossing, SyntheticKind::kFollow,
                    SyntheticKind::kGroup, SyntheticKind::kAvoid}) {
    const auto a = generate_synthetic(kind, 5, 9, syn_cfg());
    const auto b = generate_synthetic(kind, 5, 9, syn_cfg());
    const auto c = generate_synthetic(kind, 5, 10, syn_cfg());
    ASSERT_EQ(a.size(), 5u);
    std::ostringstream sa, sb, sc;
    for (const Scene& s : a) write_scene(sa, s);
    for (const Scene& s : b) write_scene(sb, s);
    for (const Scene& s : c) write_scene(sc, s);
    EXPECT_EQ(sa.str(), sb.str()) << to_string(kind);
    EXPECT_NE(sa.str(), sc.str()) << to_string(kind);
  }
}

TEST(Synthetic, UnknownKindIsConfigError) {
  EXPECT_THROW(parse_synthetic_kind("zigzag"), ConfigError);
  EXPECT_THROW(generate_synthetic(SyntheticKind::kAvoid, 0, 1, syn_cfg()), ConfigError);
}

TEST(Synthetic, AvoidDeviatesIffConvergingNeighbor) {
  const SyntheticConfig cfg = syn_cfg();
  std::size_t deviating = 0, straight = 0;
  for (const ScenePlan& plan : plan_synthetic(SyntheticKind::kAvoid, 60, 4, cfg)) {
    const auto samples = make_samples(render(plan, cfg), {});
    ASSERT_EQ(samples.size(), plan.agents.size());
    for (const Sample& smp : samples) {
      const AgentPlan* me = nullptr;
      for (const AgentPlan& a : plan.agents)
        if (a.id == smp.ego_id) me = &a;
      bool any = false;
      for (const AgentPlan& a : plan.agents) any |= a.id != me->id && converging(*me, a, cfg);
      const double dev =
          nn::max_abs_diff(linear::linear_base(smp.ego_obs, cfg.t_f).base, smp.ego_future);
      if (any) {
        EXPECT_GT(dev, 0.05);
        ++deviating;
      } else {
        EXPECT_LT(dev, 1e-9);
        ++straight;
      }
    }
  }
  EXPECT_GT(deviating, 10u);
  EXPECT_GT(straight, 10u);
}

TEST(Synthetic, AvoidWithNeighborRemovedIsLinear) {
  const SyntheticConfig cfg = syn_cfg();
  std::size_t checked = 0;
  for (ScenePlan plan : plan_synthetic(SyntheticKind::kAvoid, 40, 5, cfg)) {
    const AgentPlan ego = plan.agents[0];
    if (!converging(ego, plan.agents[1], cfg)) continue;
    plan.agents.erase(plan.agents.begin() + 1);
    for (const Sample& smp : make_samples(render(plan, cfg), {})) {
      if (smp.ego_id != ego.id) continue;
      EXPECT_LT(nn::max_abs_diff(linear::linear_base(smp.ego_obs, cfg.t_f).base, smp.ego_future),
                1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 5u);
}

TEST(Synthetic, EveryKindWindowsIntoFullSamples) {
  for (auto kind : {SyntheticKind::kCrossing, SyntheticKind::kFollow, SyntheticKind::kGroup}) {
    for (const Scene& s : generate_synthetic(kind, 5, 6, syn_cfg())) {
      std::set<long> agents;
      for (const Record& r : s.records) agents.insert(r.agent);
      const auto samples = make_samples(s, {});
      EXPECT_EQ(samples.size(), agents.size());
      for (const Sample& smp : samples) EXPECT_EQ(smp.neighbors.size(), agents.size() - 1);
    }
  }
}
