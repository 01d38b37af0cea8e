#include "revib/synthetic.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "revib/errors.hpp"
#include "revib/layers.hpp"

namespace revib::data {
namespace {

constexpr double kPi = std::numbers::pi;

struct Rng {
  std::mt19937_64 engine;
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
};

AgentPlan walker(long id, double x, double y, double heading, double speed) {
  AgentPlan a;
  a.id = id;
  a.x = x;
  a.y = y;
  a.vx = speed * std::cos(heading);
  a.vy = speed * std::sin(heading);
  return a;
}

// Position of a planned agent `tau` seconds after the present step.
std::pair<double, double> kinematics(const AgentPlan& a, double tau) {
  if (a.turn_rate == 0.0) return {a.x + a.vx * tau, a.y + a.vy * tau};
  const double speed = std::hypot(a.vx, a.vy);
  const double h0 = std::atan2(a.vy, a.vx);
  const double w = a.turn_rate;
  const double r = speed / w;
  return {a.x + r * (std::sin(h0 + w * tau) - std::sin(h0)),
          a.y - r * (std::cos(h0 + w * tau) - std::cos(h0))};
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

ScenePlan plan_scene(SyntheticKind kind, int index, Rng& rng) {
  ScenePlan plan;
  plan.kind = kind;
  plan.name = to_string(kind) + "_" + std::to_string(index);
  switch (kind) {
    case SyntheticKind::kLinear: {
      const int n = rng.integer(2, 4);
      for (int i = 0; i < n; ++i) {
        plan.agents.push_back(walker(i, rng.uniform(-8, 8), rng.uniform(-8, 8),
                                     rng.uniform(0, 2 * kPi), rng.uniform(0.8, 1.6)));
      }
      break;
    }
    case SyntheticKind::kCrossing: {
      const double base = rng.uniform(0, 2 * kPi);
      const int n = rng.integer(2, 4);
      for (int i = 0; i < n; ++i) {
        const double heading = base + (i % 2 ? kPi / 2 : 0.0);
        const double speed = rng.uniform(0.9, 1.5);
        // Reaches the crossing point around the middle of the horizon.
        const double t_meet = rng.uniform(0.5, 4.0);
        plan.agents.push_back(walker(i, -speed * t_meet * std::cos(heading),
                                     -speed * t_meet * std::sin(heading), heading, speed));
      }
      break;
    }
    case SyntheticKind::kFollow: {
      const double heading = rng.uniform(0, 2 * kPi);
      AgentPlan leader = walker(0, rng.uniform(-5, 5), rng.uniform(-5, 5), heading,
                                rng.uniform(1.0, 1.5));
      leader.turn_rate = rng.uniform(-0.3, 0.3);
      AgentPlan follower = leader;
      follower.id = 1;
      follower.turn_rate = 0.0;
      follower.follows = 0;
      follower.lag = rng.integer(2, 4);
      plan.agents = {leader, follower};
      break;
    }
    case SyntheticKind::kGroup: {
      const double heading = rng.uniform(0, 2 * kPi);
      const double speed = rng.uniform(0.9, 1.4);
      const double cx = rng.uniform(-5, 5), cy = rng.uniform(-5, 5);
      const int n = rng.integer(2, 3);
      for (int i = 0; i < n; ++i) {
        const double lateral = 0.7 * (i - (n - 1) / 2.0);
        plan.agents.push_back(walker(i, cx - lateral * std::sin(heading),
                                     cy + lateral * std::cos(heading), heading, speed));
      }
      break;
    }
    case SyntheticKind::kAvoid: {
      const double heading = (rng.coin() ? 0.0 : kPi) + rng.uniform(-0.25, 0.25);
      const double ex = rng.uniform(-5, 5), ey = rng.uniform(-5, 5);
      plan.agents.push_back(walker(0, ex, ey, heading, rng.uniform(1.0, 1.6)));
      const bool close = rng.coin();
      const double ahead = close ? rng.uniform(1.5, 10.0) : rng.uniform(25.0, 60.0);
      const double lateral = rng.uniform(-0.5, 0.5);
      plan.agents.push_back(walker(1,
                                   ex + ahead * std::cos(heading) - lateral * std::sin(heading),
                                   ey + ahead * std::sin(heading) + lateral * std::cos(heading),
                                   heading + kPi + rng.uniform(-0.15, 0.15),
                                   rng.uniform(1.0, 1.6)));
      if (rng.coin()) {
        const double ang = rng.uniform(0, 2 * kPi);
        const double dist = rng.uniform(25.0, 60.0);
        plan.agents.push_back(walker(2, ex + dist * std::cos(ang), ey + dist * std::sin(ang),
                                     rng.uniform(0, 2 * kPi), rng.uniform(1.0, 1.6)));
      }
      break;
    }
  }
  return plan;
}

}  // namespace

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "linear") return SyntheticKind::kLinear;
  if (name == "crossing") return SyntheticKind::kCrossing;
  if (name == "follow") return SyntheticKind::kFollow;
  if (name == "group") return SyntheticKind::kGroup;
  if (name == "avoid") return SyntheticKind::kAvoid;
  throw ConfigError("unknown synthetic scene kind: " + name);
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kLinear:
      return "linear";
    case SyntheticKind::kCrossing:
      return "crossing";
    case SyntheticKind::kFollow:
      return "follow";
    case SyntheticKind::kGroup:
      return "group";
    case SyntheticKind::kAvoid:
      return "avoid";
  }
  return "?";
}

bool converging(const AgentPlan& agent, const AgentPlan& other, const SyntheticConfig& cfg,
                double* t_close) {
  const double rx = other.x - agent.x, ry = other.y - agent.y;
  const double ux = other.vx - agent.vx, uy = other.vy - agent.vy;
  const double uu = ux * ux + uy * uy;
  if (uu < 1e-12) return false;
  const double t = -(rx * ux + ry * uy) / uu;
  if (t_close) *t_close = t;
  if (!(t > 0.0) || t > cfg.t_f * cfg.dt) return false;
  return std::hypot(rx + ux * t, ry + uy * t) < cfg.avoid_radius;
}

std::vector<ScenePlan> plan_synthetic(SyntheticKind kind, int n_scenes, std::uint64_t seed,
                                      const SyntheticConfig& cfg) {
  if (n_scenes < 1) throw ConfigError("n_scenes must be >= 1");
  if (cfg.t_h < 2 || cfg.t_f < 1) throw ConfigError("synthetic horizon too short");
  std::vector<ScenePlan> plans;
  for (int i = 0; i < n_scenes; ++i) {
    Rng rng{std::mt19937_64(nn::derive_seed(seed, to_string(kind) + "#" + std::to_string(i)))};
    plans.push_back(plan_scene(kind, i, rng));
  }
  return plans;
}

Scene render(const ScenePlan& plan, const SyntheticConfig& cfg) {
  Scene scene;
  scene.name = plan.name;
  scene.frame_interval = cfg.dt;
  std::map<long, const AgentPlan*> by_id;
  for (const AgentPlan& a : plan.agents) by_id[a.id] = &a;
  const int steps = cfg.t_h + cfg.t_f;

  for (const AgentPlan& a : plan.agents) {
    const AgentPlan* source = &a;
    int lag = 0;
    if (a.follows >= 0) {
      auto it = by_id.find(a.follows);
      if (it == by_id.end()) throw ConfigError("follower refers to a missing leader");
      source = it->second;
      lag = a.lag;
    }
    // Sidesteps: one per converging neighbor, to the right of the heading.
    struct Dodge {
      double rx, ry, t_close;
    };
    std::vector<Dodge> dodges;
    if (plan.kind == SyntheticKind::kAvoid) {
      const double speed = std::hypot(a.vx, a.vy);
      for (const AgentPlan& other : plan.agents) {
        double t_close = 0.0;
        if (other.id == a.id || !converging(a, other, cfg, &t_close) || speed == 0.0) continue;
        dodges.push_back({a.vy / speed, -a.vx / speed, t_close});
      }
    }
    for (int s = 1; s <= steps; ++s) {
      const double tau = (s - cfg.t_h - lag) * cfg.dt;
      auto [x, y] = kinematics(*source, tau);
      const int future_step = s - cfg.t_h;
      for (const Dodge& dg : dodges) {
        if (future_step <= 0) break;
        const double g = smoothstep(future_step * cfg.dt / dg.t_close);
        x += cfg.avoid_amplitude * g * dg.rx;
        y += cfg.avoid_amplitude * g * dg.ry;
      }
      scene.records.push_back({cfg.frame_step * (s - 1), a.id, x, y});
    }
  }
  return scene;
}

std::vector<Scene> generate_synthetic(SyntheticKind kind, int n_scenes, std::uint64_t seed,
                                      const SyntheticConfig& cfg) {
  std::vector<Scene> scenes;
  for (const ScenePlan& plan : plan_synthetic(kind, n_scenes, seed, cfg)) {
    scenes.push_back(render(plan, cfg));
  }
  return scenes;
}

}  // namespace revib::data
