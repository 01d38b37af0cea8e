#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "revib/tensor.hpp"

namespace revib::data {

using nn::Tensor;

struct Record {
  long frame = 0;
  long agent = 0;
  double x = 0.0;  // meters
  double y = 0.0;
};

// Frame-indexed positions of every agent in one recording.
struct Scene {
  std::string name;
  std::vector<Record> records;
  double frame_interval = 0.4;  // seconds between consecutive sampled frames
};

// One ego observation window with its future and the complete-window
// neighbors. Trajectories are [steps, 2] tensors in meters.
struct Sample {
  Tensor ego_obs;
  Tensor ego_future;
  std::vector<Tensor> neighbors;
  std::vector<long> neighbor_ids;
  long ego_id = 0;
  long start_frame = 0;
  std::size_t scene_index = 0;
  std::string scene;
};

struct DatasetConfig {
  int t_h = 8;
  int t_f = 12;
  double dt = 0.4;
  int stride = 1;
  std::array<double, 3> split{0.7, 0.15, 0.15};

  void validate() const;
};

// Plain text, one "frame_id agent_id x y" record per line; '#' starts a
// comment line. Duplicate (frame, agent) pairs and malformed lines are
// rejected with their line number.
Scene parse_scene(std::istream& in, const std::string& name);
Scene load_scene(const std::filesystem::path& path);
void write_scene(std::ostream& out, const Scene& scene);

struct SkipReport {
  std::size_t agents = 0;
  std::size_t agents_without_window = 0;
  std::size_t samples = 0;

  SkipReport& operator+=(const SkipReport& o);
};

// Frame spacing of a scene: gcd of the gaps between its distinct frame ids.
long frame_step(const Scene& scene);

// One sample per (agent, window start) with t_h + t_f consecutive frames.
// Output order: agent id ascending, then start frame ascending.
std::vector<Sample> make_samples(const Scene& scene, const DatasetConfig& cfg,
                                 std::size_t scene_index = 0, SkipReport* report = nullptr);

struct Split {
  std::vector<Sample> train, val, test;
};

// Scene-level assignment (0 = train, 1 = val, 2 = test) for scenes
// 0..n_scenes-1. Counts are round(n * ratio) for train and val, the rest test.
std::vector<int> assign_scenes(std::size_t n_scenes, const std::array<double, 3>& ratios,
                               std::uint64_t seed);
// Splits by scene_index so no scene contributes to two splits.
Split split(const std::vector<Sample>& samples, const std::array<double, 3>& ratios,
            std::uint64_t seed);

// Sample cache: a single JSON document with a format/version header.
inline constexpr int kSampleCacheVersion = 1;

struct SampleCache {
  DatasetConfig config;
  std::vector<Sample> samples;
  SkipReport report;
};

std::string serialize_cache(const SampleCache& cache);
SampleCache deserialize_cache(const std::string& text);
void save_cache(const std::filesystem::path& path, const SampleCache& cache);
SampleCache load_cache(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace revib::data
