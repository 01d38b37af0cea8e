#include "revib/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "revib/config.hpp"
#include "revib/errors.hpp"

namespace revib::data {
namespace {

using nlohmann::json;

bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_id(const std::string& tok, long& out) {
  double v = 0.0;
  if (!parse_double(tok, v) || v != std::floor(v) || std::abs(v) > 9.0e15) return false;
  out = static_cast<long>(v);
  return true;
}

json trajectory_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) rows.push_back({t(i, 0), t(i, 1)});
  return rows;
}

Tensor trajectory_from_json(const json& rows) {
  Tensor t({rows.size(), 2});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t(i, 0) = rows.at(i).at(0).get<double>();
    t(i, 1) = rows.at(i).at(1).get<double>();
  }
  return t;
}

}  // namespace

void DatasetConfig::validate() const {
  if (t_h < 2) throw ConfigError("t_h must be >= 2");
  if (t_h % 2 != 0) throw ConfigError("t_h must be even for the haar transform");
  if (t_f < 1) throw ConfigError("t_f must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("frame interval dt must be positive");
  for (double r : split)
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

Scene parse_scene(std::istream& in, const std::string& name) {
  Scene scene;
  scene.name = name;
  std::set<std::pair<long, long>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
    if (tokens.size() != 4) {
      throw ParseError("expected 4 columns 'frame_id agent_id x y', got " +
                           std::to_string(tokens.size()),
                       line_no);
    }
    Record r;
    if (!parse_id(tokens[0], r.frame) || !parse_id(tokens[1], r.agent) ||
        !parse_double(tokens[2], r.x) || !parse_double(tokens[3], r.y)) {
      throw ParseError("malformed record '" + line + "'", line_no);
    }
    if (!seen.emplace(r.frame, r.agent).second) {
      throw ParseError("duplicate record for frame " + std::to_string(r.frame) + ", agent " +
                           std::to_string(r.agent),
                       line_no);
    }
    scene.records.push_back(r);
  }
  if (scene.records.empty()) throw ParseError("empty scene " + name, 0);
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_scene(in, path.stem().string());
}

void write_scene(std::ostream& out, const Scene& scene) {
  std::ostringstream os;
  os.precision(17);
  os << "# frame_id agent_id x y\n";
  for (const Record& r : scene.records) {
    os << r.frame << ' ' << r.agent << ' ' << r.x << ' ' << r.y << '\n';
  }
  out << os.str();
}

SkipReport& SkipReport::operator+=(const SkipReport& o) {
  agents += o.agents;
  agents_without_window += o.agents_without_window;
  samples += o.samples;
  return *this;
}

long frame_step(const Scene& scene) {
  std::set<long> frames;
  for (const Record& r : scene.records) frames.insert(r.frame);
  long step = 0;
  long prev = 0;
  bool first = true;
  for (long f : frames) {
    if (!first) step = std::gcd(step, f - prev);
    prev = f;
    first = false;
  }
  return step > 0 ? step : 1;
}

std::vector<Sample> make_samples(const Scene& scene, const DatasetConfig& cfg,
                                 std::size_t scene_index, SkipReport* report) {
  cfg.validate();
  const long step = frame_step(scene);
  std::map<long, std::map<long, std::pair<double, double>>> tracks;  // agent -> frame -> xy
  for (const Record& r : scene.records) tracks[r.agent][r.frame] = {r.x, r.y};

  auto has_window = [&](const std::map<long, std::pair<double, double>>& track, long start,
                        int length) {
    for (int i = 0; i < length; ++i)
      if (!track.count(start + i * step)) return false;
    return true;
  };
  auto window = [&](const std::map<long, std::pair<double, double>>& track, long start,
                    int length) {
    Tensor t({static_cast<std::size_t>(length), 2});
    for (int i = 0; i < length; ++i) {
      const auto& p = track.at(start + i * step);
      t(static_cast<std::size_t>(i), 0) = p.first;
      t(static_cast<std::size_t>(i), 1) = p.second;
    }
    return t;
  };

  SkipReport local;
  std::vector<Sample> out;
  const int total = cfg.t_h + cfg.t_f;
  for (const auto& [agent, track] : tracks) {
    ++local.agents;
    const long first_frame = track.begin()->first;
    bool any = false;
    for (const auto& [frame, pos] : track) {
      if (((frame - first_frame) / step) % cfg.stride != 0) continue;
      if (!has_window(track, frame, total)) continue;
      any = true;
      Sample s;
      const Tensor full = window(track, frame, total);
      s.ego_obs = Tensor({static_cast<std::size_t>(cfg.t_h), 2},
                         std::vector<double>(full.data().begin(),
                                             full.data().begin() + 2 * cfg.t_h));
      s.ego_future = Tensor({static_cast<std::size_t>(cfg.t_f), 2},
                            std::vector<double>(full.data().begin() + 2 * cfg.t_h,
                                                full.data().end()));
      s.ego_id = agent;
      s.start_frame = frame;
      s.scene_index = scene_index;
      s.scene = scene.name;
      for (const auto& [other, other_track] : tracks) {
        if (other == agent || !has_window(other_track, frame, cfg.t_h)) continue;
        s.neighbors.push_back(window(other_track, frame, cfg.t_h));
        s.neighbor_ids.push_back(other);
      }
      out.push_back(std::move(s));
    }
    if (!any) ++local.agents_without_window;
  }
  local.samples = out.size();
  if (report) *report += local;
  return out;
}

std::vector<int> assign_scenes(std::size_t n_scenes, const std::array<double, 3>& ratios,
                               std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  std::vector<std::size_t> order(n_scenes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n_scenes; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n = static_cast<double>(n_scenes);
  const std::size_t n_train = std::min(n_scenes, static_cast<std::size_t>(std::llround(n * ratios[0])));
  const std::size_t n_val =
      std::min(n_scenes - n_train, static_cast<std::size_t>(std::llround(n * ratios[1])));
  std::vector<int> assignment(n_scenes, 2);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    if (i < n_train) {
      assignment[order[i]] = 0;
    } else if (i < n_train + n_val) {
      assignment[order[i]] = 1;
    }
  }
  return assignment;
}

Split split(const std::vector<Sample>& samples, const std::array<double, 3>& ratios,
            std::uint64_t seed) {
  std::set<std::size_t> scene_ids;
  for (const Sample& s : samples) scene_ids.insert(s.scene_index);
  const std::vector<std::size_t> ids(scene_ids.begin(), scene_ids.end());
  const std::vector<int> assignment = assign_scenes(ids.size(), ratios, seed);
  std::map<std::size_t, int> where;
  for (std::size_t i = 0; i < ids.size(); ++i) where[ids[i]] = assignment[i];
  Split out;
  for (const Sample& s : samples) {
    switch (where.at(s.scene_index)) {
      case 0:
        out.train.push_back(s);
        break;
      case 1:
        out.val.push_back(s);
        break;
      default:
        out.test.push_back(s);
        break;
    }
  }
  return out;
}

std::string serialize_cache(const SampleCache& cache) {
  json doc;
  doc["format"] = "revib-samples";
  doc["version"] = kSampleCacheVersion;
  doc["dataset"] = to_json(cache.config);
  doc["report"] = {{"agents", cache.report.agents},
                   {"agents_without_window", cache.report.agents_without_window},
                   {"samples", cache.report.samples}};
  json samples = json::array();
  for (const Sample& s : cache.samples) {
    json neighbors = json::array();
    for (std::size_t j = 0; j < s.neighbors.size(); ++j) {
      neighbors.push_back({{"id", s.neighbor_ids[j]}, {"obs", trajectory_json(s.neighbors[j])}});
    }
    samples.push_back({{"scene", s.scene},
                       {"scene_index", s.scene_index},
                       {"ego_id", s.ego_id},
                       {"start_frame", s.start_frame},
                       {"obs", trajectory_json(s.ego_obs)},
                       {"future", trajectory_json(s.ego_future)},
                       {"neighbors", std::move(neighbors)}});
  }
  doc["samples"] = std::move(samples);
  return doc.dump() + "\n";
}

SampleCache deserialize_cache(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sample cache is not valid JSON: ") + e.what(), 0);
  }
  if (doc.value("format", "") != "revib-samples") {
    throw ParseError("not a revib sample cache", 0);
  }
  if (doc.value("version", -1) != kSampleCacheVersion) {
    throw ParseError("unsupported sample cache version", 0);
  }
  SampleCache cache;
  cache.config = dataset_config_from_json(doc.at("dataset"));
  const json& rep = doc.at("report");
  cache.report.agents = rep.at("agents").get<std::size_t>();
  cache.report.agents_without_window = rep.at("agents_without_window").get<std::size_t>();
  cache.report.samples = rep.at("samples").get<std::size_t>();
  for (const json& js : doc.at("samples")) {
    Sample s;
    s.scene = js.at("scene").get<std::string>();
    s.scene_index = js.at("scene_index").get<std::size_t>();
    s.ego_id = js.at("ego_id").get<long>();
    s.start_frame = js.at("start_frame").get<long>();
    s.ego_obs = trajectory_from_json(js.at("obs"));
    s.ego_future = trajectory_from_json(js.at("future"));
    for (const json& jn : js.at("neighbors")) {
      s.neighbor_ids.push_back(jn.at("id").get<long>());
      s.neighbors.push_back(trajectory_from_json(jn.at("obs")));
    }
    cache.samples.push_back(std::move(s));
  }
  return cache;
}

void save_cache(const std::filesystem::path& path, const SampleCache& cache) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << serialize_cache(cache);
}

SampleCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open sample cache " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_cache(buf.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace revib::data
