#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "revib/dataio.hpp"

namespace revib::data {

// Desk-scale scene families:
//   linear    constant-velocity walkers
//   crossing  two streams on perpendicular paths, no reaction
//   follow    a turning leader and a follower replaying its path with a lag
//   group     side-by-side walkers sharing one velocity
//   avoid     constant-velocity walkers that sidestep to their right when,
//             at the present step, another agent is on a converging course
enum class SyntheticKind { kLinear, kCrossing, kFollow, kGroup, kAvoid };

SyntheticKind parse_synthetic_kind(const std::string& name);
std::string to_string(SyntheticKind kind);

struct AgentPlan {
  long id = 0;
  double x = 0.0, y = 0.0;    // position at the present step t_h, meters
  double vx = 0.0, vy = 0.0;  // meters per second
  double turn_rate = 0.0;     // rad/s, follow-kind leaders only
  long follows = -1;          // follow kind: id of the leader
  int lag = 0;                // follow kind: steps behind the leader
};

struct ScenePlan {
  std::string name;
  SyntheticKind kind = SyntheticKind::kLinear;
  std::vector<AgentPlan> agents;
};

struct SyntheticConfig {
  int t_h = 8;
  int t_f = 12;
  double dt = 0.4;
  long frame_step = 10;
  double avoid_radius = 1.5;     // closest-approach distance that triggers a sidestep
  double avoid_amplitude = 1.0;  // sidestep size, meters
};

std::vector<ScenePlan> plan_synthetic(SyntheticKind kind, int n_scenes, std::uint64_t seed,
                                      const SyntheticConfig& cfg);
// Positions for steps 1 .. t_h + t_f of every planned agent.
Scene render(const ScenePlan& plan, const SyntheticConfig& cfg);
std::vector<Scene> generate_synthetic(SyntheticKind kind, int n_scenes, std::uint64_t seed,
                                      const SyntheticConfig& cfg);

// True when agent `other` is on a converging course with `agent` at the
// present step: closest approach within the horizon and closer than
// cfg.avoid_radius. Returns the time of closest approach in `t_close`.
bool converging(const AgentPlan& agent, const AgentPlan& other, const SyntheticConfig& cfg,
                double* t_close = nullptr);

}  // namespace revib::data
