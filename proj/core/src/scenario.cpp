#include "saginmp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "saginmp/rng.hpp"

namespace saginmp {

namespace {

constexpr double kLightSpeed = 299792458.0;

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double dist2d(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// SAT lateral ground offset: triangle over the service period, largest at the
// period edges (pass enters/leaves), zero mid-pass.
double sat_offset(int t, const ScenarioConfig& cfg) {
  const double frac = static_cast<double>(t % cfg.slots_per_period) / cfg.slots_per_period;
  return cfg.sat_track_amplitude_m * std::fabs(2.0 * frac - 1.0);
}

// 0: normal, 1: degraded excursion, 2: link-down tail
int sat_handover_phase(int t, const PathConfig& p) {
  if (p.handover_duration_slots <= 0 || p.handover_period_slots <= 0) return 0;
  const int pos = (t + p.handover_offset_slots) % p.handover_period_slots;
  if (pos < p.handover_period_slots - p.handover_duration_slots) return 0;
  const int down = std::min(p.handover_down_slots, p.handover_duration_slots);
  return pos >= p.handover_period_slots - down ? 2 : 1;
}

void recompute_links(WorldState& w, const ScenarioConfig& cfg) {
  const Vec2 sat = w.sat_ground;
  for (int n = 0; n < w.num_ues; ++n) {
    for (int m = 0; m < w.num_paths; ++m) {
      LinkState& l = w.link(n, m);
      l.ue = n;
      l.path = m;
      const PathConfig& pc = cfg.paths[m];
      l.dist_ue_uav_m = std::hypot(dist2d(w.ue_pos[n], w.uav_pos[m]), cfg.uav_altitude_m);
      switch (sat_handover_phase(w.t, pc)) {
        case 1:
          l.dist_uav_sat_m = cfg.sat_far_distance_m;
          break;
        case 2:
          l.dist_uav_sat_m = cfg.sat_down_distance_m;
          break;
        default:
          l.dist_uav_sat_m = std::hypot(dist2d(w.uav_pos[m], sat), cfg.sat_altitude_m);
      }
      l.capacity_bps = pc.capacity_bps;
      l.prop_delay_s = pc.base_delay_s + (l.dist_ue_uav_m + l.dist_uav_sat_m) / kLightSpeed;
      l.up = l.dist_uav_sat_m <= cfg.visibility_limit_m && l.dist_ue_uav_m <= cfg.ue_uav_range_m;

      double snr = cfg.snr_max_db;
      if (l.dist_ue_uav_m > cfg.snr_ref_distance_m)
        snr -= cfg.snr_decay_db_per_decade * std::log10(l.dist_ue_uav_m / cfg.snr_ref_distance_m);
      if (l.dist_uav_sat_m > cfg.d_th_sat_m) snr -= cfg.handover_snr_drop_db;
      if (cfg.snr_noise_db > 0.0) {
        const std::uint64_t s = Rng::derive_seed(
            w.noise_seed, (static_cast<std::uint64_t>(w.t) * w.num_ues + n) * w.num_paths + m);
        Rng r(s);
        snr += cfg.snr_noise_db * (2.0 * r.uniform() - 1.0);
      }
      l.snr_db = std::min(snr, cfg.snr_max_db);

      const bool switch_burst = w.switch_burst_remaining[static_cast<size_t>(n) * w.num_paths + m] > 0;
      l.handover_active = l.dist_ue_uav_m > cfg.d_th_m || l.dist_uav_sat_m > cfg.d_th_sat_m ||
                          switch_burst;
      if (l.dist_ue_uav_m > cfg.d_th_m || l.dist_uav_sat_m > cfg.d_th_sat_m) {
        l.loss_prob = cfg.handover_loss_prob;
      } else if (switch_burst) {
        l.loss_prob = cfg.switch_loss_prob;
      } else {
        l.loss_prob = pc.random_loss_prob >= 0.0 ? pc.random_loss_prob : cfg.random_loss_prob;
      }
    }
  }
}

}  // namespace

WorldState make_world(const ScenarioConfig& cfg) {
  cfg.validate();
  WorldState w;
  w.num_ues = cfg.num_ues;
  w.num_paths = cfg.num_paths;
  w.t = 0;
  w.noise_seed = Rng::derive_seed(cfg.rng_seed, 0xabcdefULL);

  Rng rng(Rng::derive_seed(cfg.rng_seed, 0x5eedULL));
  w.ue_pos.resize(cfg.num_ues);
  for (auto& p : w.ue_pos) {
    p.x = rng.uniform(0.0, cfg.area_side_m);
    p.y = rng.uniform(0.0, cfg.area_side_m);
  }

  // Each UAV patrols a rectangular loop inside its own stripe of the area.
  w.uav_pos.resize(cfg.num_paths);
  w.uav_waypoints.resize(cfg.num_paths);
  w.uav_leg.assign(cfg.num_paths, 0);
  w.uav_leg_frac.assign(cfg.num_paths, 0.0);
  const double margin = 0.1 * cfg.area_side_m;
  for (int m = 0; m < cfg.num_paths; ++m) {
    const double y0 = cfg.area_side_m * (m + 0.25) / cfg.num_paths;
    const double y1 = cfg.area_side_m * (m + 0.75) / cfg.num_paths;
    w.uav_waypoints[m] = {{margin, y0},
                          {cfg.area_side_m - margin, y0},
                          {cfg.area_side_m - margin, y1},
                          {margin, y1}};
    w.uav_pos[m] = w.uav_waypoints[m][0];
  }

  w.links.assign(static_cast<size_t>(cfg.num_ues) * cfg.num_paths, LinkState{});
  w.switch_burst_remaining.assign(w.links.size(), 0);
  w.active_ue_count.assign(cfg.num_paths, 0);
  w.sat_ground = {cfg.area_side_m / 2.0 + sat_offset(0, cfg), cfg.area_side_m / 2.0};
  recompute_links(w, cfg);
  return w;
}

WorldState advance_slot(const WorldState& world, const ScenarioConfig& cfg) {
  WorldState w = world;
  w.t = world.t + 1;
  w.clamped_this_slot = false;

  // UAVs advance along their loops
  for (int m = 0; m < w.num_paths; ++m) {
    double travel = cfg.uav_speed_mps * cfg.slot_length_s;
    const auto& wps = w.uav_waypoints[m];
    if (wps.size() >= 2 && travel > 0.0) {
      int leg = w.uav_leg[m];
      double frac = w.uav_leg_frac[m];
      while (travel > 0.0) {
        const Vec2 a = wps[leg];
        const Vec2 b = wps[(leg + 1) % wps.size()];
        const double len = std::max(dist2d(a, b), 1e-9);
        const double remain = (1.0 - frac) * len;
        if (travel < remain) {
          frac += travel / len;
          travel = 0.0;
        } else {
          travel -= remain;
          leg = (leg + 1) % static_cast<int>(wps.size());
          frac = 0.0;
        }
      }
      const Vec2 a = wps[leg];
      const Vec2 b = wps[(leg + 1) % wps.size()];
      w.uav_leg[m] = leg;
      w.uav_leg_frac[m] = frac;
      w.uav_pos[m] = {a.x + (b.x - a.x) * frac, a.y + (b.y - a.y) * frac};
    }
    // clamp to bounds (surfaced via flag; constraints_ok reports C1 for UEs)
    const double cx = clamp(w.uav_pos[m].x, 0.0, cfg.area_side_m);
    const double cy = clamp(w.uav_pos[m].y, 0.0, cfg.area_side_m);
    if (cx != w.uav_pos[m].x || cy != w.uav_pos[m].y) w.clamped_this_slot = true;
    w.uav_pos[m] = {cx, cy};
  }

  for (auto& p : w.ue_pos) {
    const double cx = clamp(p.x, 0.0, cfg.area_side_m);
    const double cy = clamp(p.y, 0.0, cfg.area_side_m);
    if (cx != p.x || cy != p.y) w.clamped_this_slot = true;
    p = {cx, cy};
  }

  w.sat_ground = {cfg.area_side_m / 2.0 + sat_offset(w.t, cfg), cfg.area_side_m / 2.0};

  for (auto& c : w.switch_burst_remaining)
    if (c > 0) --c;

  recompute_links(w, cfg);
  return w;
}

std::vector<Violation> constraints_ok(const WorldState& world, const ScenarioConfig& cfg) {
  std::vector<Violation> out;
  for (int n = 0; n < world.num_ues; ++n) {
    const Vec2 p = world.ue_pos[n];
    if (p.x < 0.0 || p.x > cfg.area_side_m || p.y < 0.0 || p.y > cfg.area_side_m) {
      out.push_back({ConstraintId::C1, n, "UE outside service area"});
    }
  }
  for (int m = 0; m < world.num_paths; ++m) {
    if (world.active_ue_count[m] > cfg.uav_capacity) {
      out.push_back({ConstraintId::C2, m, "UAV concurrent services exceed Y^U"});
    }
  }
  for (int m = 0; m < world.num_paths; ++m) {
    // all UEs share the same UAV-SAT segment for path m
    if (world.num_ues > 0 && world.link(0, m).dist_uav_sat_m > cfg.visibility_limit_m) {
      out.push_back({ConstraintId::C3, m, "UAV outside SAT visibility range"});
    }
  }
  return out;
}

bool handover_signal(int n, int m, const WorldState& world, int prev_action, int cur_action,
                     const ScenarioConfig& cfg) {
  const LinkState& l = world.link(n, m);
  return prev_action != cur_action || l.dist_ue_uav_m > cfg.d_th_m ||
         l.dist_uav_sat_m > cfg.d_th_sat_m;
}

void notify_path_switch(WorldState& world, int n, int m, const ScenarioConfig& cfg) {
  if (cfg.switch_burst_slots <= 0) return;
  world.switch_burst_remaining[static_cast<size_t>(n) * world.num_paths + m] =
      cfg.switch_burst_slots;
  // burst applies from this slot on
  LinkState& l = world.link(n, m);
  l.handover_active = true;
  if (l.loss_prob < cfg.switch_loss_prob && l.dist_ue_uav_m <= cfg.d_th_m &&
      l.dist_uav_sat_m <= cfg.d_th_sat_m)
    l.loss_prob = cfg.switch_loss_prob;
}

void record_admissions(WorldState& world, const std::vector<int>& assignment) {
  std::fill(world.active_ue_count.begin(), world.active_ue_count.end(), 0);
  for (int n = 0; n < static_cast<int>(assignment.size()); ++n) {
    const int m = assignment[n];
    if (m >= 0 && m < world.num_paths) ++world.active_ue_count[m];
  }
}

std::string serialize_world(const WorldState& w) {
  std::ostringstream os;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g,", v);
    os << buf;
  };
  os << "t=" << w.t << ";ue=";
  for (const auto& p : w.ue_pos) {
    put(p.x);
    put(p.y);
  }
  os << ";uav=";
  for (const auto& p : w.uav_pos) {
    put(p.x);
    put(p.y);
  }
  os << ";sat=";
  put(w.sat_ground.x);
  put(w.sat_ground.y);
  os << ";links=";
  for (const auto& l : w.links) {
    os << l.ue << "/" << l.path << "/" << (l.up ? 1 : 0) << "/";
    put(l.capacity_bps);
    put(l.prop_delay_s);
    put(l.snr_db);
    put(l.dist_ue_uav_m);
    put(l.dist_uav_sat_m);
    put(l.loss_prob);
    os << (l.handover_active ? 1 : 0) << "|";
  }
  return os.str();
}

}  // namespace saginmp
