#pragma once

#include <string>
#include <vector>

#include "saginmp/config.hpp"

namespace saginmp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Per-(UE, path) link snapshot for the current slot.
struct LinkState {
  int ue = 0;
  int path = 0;
  bool up = true;
  double capacity_bps = 0.0;
  double prop_delay_s = 0.0;  // one-way
  double snr_db = 0.0;
  double dist_ue_uav_m = 0.0;  // d_n^m
  double dist_uav_sat_m = 0.0; // d_{m,l}
  double loss_prob = 0.0;
  bool handover_active = false;
};

enum class ConstraintId { C1, C2, C3 };

struct Violation {
  ConstraintId id;
  int entity;  // UE index for C1, UAV/path index for C2/C3
  std::string detail;
};

struct WorldState {
  int t = 0;
  std::vector<Vec2> ue_pos;
  std::vector<Vec2> uav_pos;
  std::vector<int> uav_leg;         // current waypoint leg per UAV
  std::vector<double> uav_leg_frac; // progress along the leg, [0,1)
  std::vector<std::vector<Vec2>> uav_waypoints;
  Vec2 sat_ground;
  std::vector<LinkState> links;            // N*M, row-major by UE
  std::vector<int> switch_burst_remaining; // N*M countdowns after a path switch
  std::vector<int> active_ue_count;        // per path, set by record_admissions
  std::uint64_t noise_seed = 0;
  bool clamped_this_slot = false;  // a C1 clamp happened during the last advance

  LinkState& link(int n, int m) { return links[static_cast<size_t>(n) * num_paths + m]; }
  const LinkState& link(int n, int m) const {
    return links[static_cast<size_t>(n) * num_paths + m];
  }
  int num_ues = 0;
  int num_paths = 0;
};

// Builds the slot-0 world: seeded UE placement, per-UAV patrol loops, SAT at
// the start of its pass, link states computed.
WorldState make_world(const ScenarioConfig& cfg);

// Advances one slot: moves UAVs along their waypoint loops, advances the SAT
// ground track, recomputes every LinkState. Deterministic given (cfg, seed).
// Positions are clamped into bounds; a clamp is flagged, not rejected.
WorldState advance_slot(const WorldState& world, const ScenarioConfig& cfg);

// Returns every violated constraint among C1 (UE in area), C2 (per-UAV
// concurrent services <= Y^U), C3 (UAV-SAT visibility).
std::vector<Violation> constraints_ok(const WorldState& world, const ScenarioConfig& cfg);

// Con_1 of the loss classifier: scheduling action changed for this UE, or
// either distance threshold is exceeded.
bool handover_signal(int n, int m, const WorldState& world, int prev_action, int cur_action,
                     const ScenarioConfig& cfg);

// Marks a scheduler-driven path switch: link (n, m) carries a short loss
// burst starting this slot.
void notify_path_switch(WorldState& world, int n, int m, const ScenarioConfig& cfg);

// Records this slot's path assignments (for C2 accounting). assignment[n] is
// the chosen path for UE n, or -1 for none.
void record_admissions(WorldState& world, const std::vector<int>& assignment);

// Full-precision text dump, byte-stable for determinism checks.
std::string serialize_world(const WorldState& world);

}  // namespace saginmp
