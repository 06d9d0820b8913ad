#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saginmp/cc.hpp"
#include "saginmp/config.hpp"
#include "saginmp/gpasp.hpp"
#include "saginmp/metrics.hpp"
#include "saginmp/rhrm.hpp"
#include "saginmp/sched.hpp"
#include "saginmp/transport.hpp"

namespace saginmp {

struct EpisodeRow {
  std::string scheduler;
  std::string cc;
  std::uint64_t seed = 0;
  int episode = 0;
  EpisodeMetrics metrics;
  double total_reward = 0.0;
};

// Long-lived state of one (scheme, seed) run: the scheduler keeps its online
// estimates across episodes, the monitor spans the deployment, the model is
// shared (training) or loaded (evaluation).
struct RunContext {
  SchemeSpec scheme;
  std::unique_ptr<Scheduler> scheduler;  // null when the scheme uses gpasp
  GpaspModel* model = nullptr;
  ActMode act_mode = ActMode::Greedy;
  RewardMonitor monitor{RhrmConfig{}};
  int full_retrain_requests = 0;  // escalations seen during the last episode
};

struct EpisodeArtifacts {
  std::vector<TraceRow> packet_trace;
  struct CwndRow {
    int slot, ue, path;
    double cwnd, sst;
    const char* phase;
    const char* event;
  };
  std::vector<CwndRow> cwnd_trace;
  std::vector<MonitorLogRow> monitor_log;
};

// Runs one episode: advance world -> schedule -> send -> deliver -> feedback
// -> congestion control -> reward/monitor, then summarizes.
EpisodeMetrics run_episode(const Config& cfg, RunContext& ctx, std::uint64_t episode_seed,
                           double* total_reward, std::vector<Trajectory>* trajectories,
                           EpisodeArtifacts* artifacts);

struct ExperimentResult {
  std::vector<EpisodeRow> rows;
  std::string out_dir;
};

// Full experiment: every scheme x seed x episode, CSV/JSON export, figure
// data files. In training mode runs the GPASP training loop per seed and
// saves checkpoints.
ExperimentResult run_experiment(const Config& cfg);

// Parses an episodes.csv produced by run_experiment (round-trip reader).
std::vector<EpisodeRow> read_episode_csv(const std::string& path);

// The CLI entry point (also used directly by tests).
int run_cli(const std::vector<std::string>& args);

double aggregate_capacity_bound(const ScenarioConfig& scen);

}  // namespace saginmp
