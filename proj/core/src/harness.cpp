#include "saginmp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace saginmp {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct SlotAgg {
  int acked = 0;
  long long bytes = 0;
  std::vector<double> rtts;
  bool loss = false;
};

Mat window_to_mat(const std::deque<std::vector<double>>& win, int cols) {
  Mat m(static_cast<int>(win.size()), cols);
  for (size_t i = 0; i < win.size(); ++i)
    for (int j = 0; j < cols; ++j) m(static_cast<int>(i), j) = win[i][j];
  return m;
}

}  // namespace

double aggregate_capacity_bound(const ScenarioConfig& scen) {
  double s = 0.0;
  for (const auto& p : scen.paths) s += p.capacity_bps;
  return std::max(s, 1.0);
}

EpisodeMetrics run_episode(const Config& cfg, RunContext& ctx, std::uint64_t episode_seed,
                           double* total_reward, std::vector<Trajectory>* trajectories,
                           EpisodeArtifacts* artifacts) {
  ScenarioConfig scen = cfg.scenario;
  scen.rng_seed = episode_seed;
  const int N = scen.num_ues;
  const int M = scen.num_paths;
  const double tau = scen.slot_length_s;
  const int horizon =
      cfg.experiment.horizon > 0 ? cfg.experiment.horizon : scen.slots_per_period;
  const bool use_gpasp = ctx.scheme.scheduler == "gpasp";
  const bool collect = trajectories != nullptr;
  if (use_gpasp && ctx.model == nullptr)
    throw std::invalid_argument("run_episode: gpasp scheme needs a model");

  WorldState world = make_world(scen);
  TransportEngine engine(scen, cfg.transport, episode_seed);
  engine.set_tracing(artifacts != nullptr);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) engine.subflow(n, m).sst = cfg.cc.initial_sst_mss;

  std::vector<std::unique_ptr<CongestionController>> controllers;
  for (int n = 0; n < N; ++n)
    controllers.push_back(make_controller(ctx.scheme.cc, cfg.cc, cfg.transport, scen));
  const bool con1_action_disjunct = ctx.scheme.cc != "phacc_no_gpasp";

  Rng rng_sched(Rng::derive_seed(episode_seed, 0x5c4edULL));
  Rng rng_act(Rng::derive_seed(episode_seed, 0xac7ULL));

  const double cap_bound = aggregate_capacity_bound(scen);
  const double cap_ue = cap_bound / N;

  std::vector<double> tp_feat(static_cast<size_t>(N) * M, 0.0);
  std::vector<int> last_loss_slot(static_cast<size_t>(N) * M, -1000000);
  std::vector<bool> was_up(static_cast<size_t>(N) * M, false);
  std::vector<int> cur_action(N, -1);
  std::vector<int> last_action_change(N, -1000000);
  std::vector<int> last_send_slot(static_cast<size_t>(N) * M, -1);

  const int L = cfg.gpasp.history_len;
  const int dh = 6 * M + cfg.gpasp.noise_channels;
  std::vector<std::deque<std::vector<double>>> window(N);
  if (use_gpasp || collect) {
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < L; ++i) window[n].push_back(std::vector<double>(dh, 0.0));
  }

  struct PendingStep {
    bool active = false;
    Mat obs;
    int action = 0;
    std::vector<double> eps;
    double logp = 0.0;
    std::vector<bool> up_mask;
  };
  std::vector<PendingStep> pending(N);
  std::vector<Trajectory> trajs(N);
  std::vector<long long> max_seq_deliv(N, 0);

  double total_r = 0.0;

  for (int slot = 0; slot < horizon; ++slot) {
    if (slot > 0) world = advance_slot(world, scen);
    const double now = slot * tau;

    std::vector<Mat> obs_now(use_gpasp || collect ? N : 0);
    for (int n = 0; n < static_cast<int>(obs_now.size()); ++n)
      obs_now[n] = window_to_mat(window[n], dh);

    // per-(ue, path) feature vectors, shared by every scheduler
    std::vector<std::vector<FeatureVec>> features(N, std::vector<FeatureVec>(M));
    std::vector<std::vector<bool>> ups(N, std::vector<bool>(M, false));
    for (int n = 0; n < N; ++n) {
      for (int m = 0; m < M; ++m) {
        const LinkState& l = world.link(n, m);
        const Subflow& sf = engine.subflow(n, m);
        FeatureContext fc;
        fc.srtt_s = sf.has_rtt ? sf.srtt_s : 0.0;
        fc.snr_db = l.snr_db;
        fc.snr_max_db = scen.snr_max_db;
        fc.tp_bps = tp_feat[static_cast<size_t>(n) * M + m];
        fc.path_capacity_bps = scen.paths[m].capacity_bps;
        fc.cwnd = sf.cwnd;
        fc.in_flight = sf.in_flight;
        fc.recent_loss =
            slot - last_loss_slot[static_cast<size_t>(n) * M + m] <= cfg.sched.recent_loss_slots;
        fc.up = l.up;
        fc.srtt_cap_s = cfg.sched.srtt_norm_cap_s;
        fc.cwnd_cap = cfg.sched.max_cwnd_norm;
        features[n][m] = make_path_features(fc);
        ups[n][m] = l.up;
      }
    }

    // scheduling
    std::vector<int> choice(N, -1);
    for (int n = 0; n < N; ++n) {
      pending[n].active = false;
      if (use_gpasp) {
        const ActResult ar = ctx.model->act(obs_now[n], ups[n], ctx.act_mode, rng_act);
        if (ar.ok) {
          choice[n] = ar.action;
          if (collect) {
            pending[n].active = true;
            pending[n].obs = obs_now[n];
            pending[n].action = ar.action;
            pending[n].eps = ar.eps;
            pending[n].logp = ar.logp;
            pending[n].up_mask = ups[n];
          }
        }
      } else {
        choice[n] = ctx.scheduler->select(n, features[n], ups[n], rng_sched);
      }
    }

    // admission (C2): keep the first Y^U selections per UAV
    std::vector<int> used(M, 0);
    for (int n = 0; n < N; ++n) {
      const int m = choice[n];
      if (m < 0) continue;
      if (used[m] >= scen.uav_capacity)
        choice[n] = -1;
      else
        ++used[m];
    }
    record_admissions(world, choice);

    // scheduler-driven path switches carry a short loss burst
    for (int n = 0; n < N; ++n) {
      if (choice[n] >= 0 && cur_action[n] >= 0 && choice[n] != cur_action[n]) {
        notify_path_switch(world, n, choice[n], scen);
        last_action_change[n] = slot;
      }
      if (choice[n] >= 0) cur_action[n] = choice[n];
    }

    // cwnd-gated transmission on the chosen path, with idle-restart
    // window revalidation before a burst onto a long-unused subflow
    for (int n = 0; n < N; ++n) {
      if (choice[n] < 0) continue;
      const int m = choice[n];
      const size_t i = static_cast<size_t>(n) * M + m;
      if (last_send_slot[i] >= 0 && slot - last_send_slot[i] > cfg.cc.idle_restart_slots) {
        std::vector<Subflow*> sfs(M);
        for (int k = 0; k < M; ++k) sfs[k] = &engine.subflow(n, k);
        controllers[n]->on_subflow_activated(sfs, m, now);
      }
      const LinkState& l = world.link(n, m);
      if (engine.try_send(n, m, l, now, cfg.transport.app_packets_per_slot, features[n][m]) > 0)
        last_send_slot[i] = slot;
    }

    const TransportEngine::SlotResult res = engine.deliver_step(world, slot);

    std::vector<SlotAgg> agg(static_cast<size_t>(N) * M);
    std::vector<long long> ue_bytes(N, 0);
    std::vector<int> ue_arrivals(N, 0), ue_late(N, 0);
    for (const Feedback& fb : res.acks) {
      SlotAgg& a = agg[static_cast<size_t>(fb.ue) * M + fb.path];
      ++a.acked;
      a.bytes += fb.bytes;
      a.rtts.push_back(fb.rtt_s);
      ue_bytes[fb.ue] += fb.bytes;
      if (ctx.scheduler) ctx.scheduler->on_feedback(fb.ue, fb);
    }
    for (const Feedback& fb : res.losses) {
      agg[static_cast<size_t>(fb.ue) * M + fb.path].loss = true;
      last_loss_slot[static_cast<size_t>(fb.ue) * M + fb.path] = slot;
      if (ctx.scheduler) ctx.scheduler->on_feedback(fb.ue, fb);
    }

    // reordering proxy for the per-slot reward: late-arrival fraction
    for (int n = 0; n < N; ++n) {
      const ArrivalLog& log = engine.arrival_log(n);
      const size_t total_arr = log.seq_ranks.size();
      size_t idx = total_arr;
      // walk backwards over this slot's arrivals (appended this slot)
      int fresh = 0;
      for (const Feedback& fb : res.acks)
        if (fb.ue == n) ++fresh;
      ue_arrivals[n] = fresh;
      std::vector<long long> seqs;
      for (size_t k = idx - fresh; k < idx; ++k) seqs.push_back(log.seq_ranks[k].first);
      for (long long s : seqs) {
        if (s < max_seq_deliv[n])
          ++ue_late[n];
        else
          max_seq_deliv[n] = s;
      }
    }

    // congestion control, one pass per UE across its subflows
    for (int n = 0; n < N; ++n) {
      std::vector<Subflow*> sfs(M);
      std::vector<SubflowSlotObs> obs(M);
      for (int m = 0; m < M; ++m) {
        const size_t i = static_cast<size_t>(n) * M + m;
        sfs[m] = &engine.subflow(n, m);
        const LinkState& l = world.link(n, m);
        SubflowSlotObs& o = obs[m];
        o.acked = agg[i].acked;
        o.acked_bytes = agg[i].bytes;
        o.rtts = agg[i].rtts;
        o.loss_event = agg[i].loss;
        const bool action_recent =
            slot - last_action_change[n] <= cfg.cc.handover_memory_slots;
        o.con1 = (con1_action_disjunct && action_recent) || l.dist_ue_uav_m > scen.d_th_m ||
                 l.dist_uav_sat_m > scen.d_th_sat_m;
        o.link_up = l.up;
        o.reconnected = l.up && !was_up[i];
        o.snr_db = l.snr_db;
        o.snr_max_db = scen.snr_max_db;
      }
      std::vector<CcTraceEvent> events;
      controllers[n]->on_slot_ue(slot, (slot + 1) * tau, sfs, obs,
                                 artifacts ? &events : nullptr);
      if (artifacts) {
        for (int m = 0; m < M; ++m) {
          artifacts->cwnd_trace.push_back({slot, n, m, sfs[m]->cwnd, sfs[m]->sst,
                                           events[m].phase, events[m].event});
        }
      }
    }

    // trackers that roll at slot end
    for (int n = 0; n < N; ++n) {
      for (int m = 0; m < M; ++m) {
        const size_t i = static_cast<size_t>(n) * M + m;
        const bool up = world.link(n, m).up;
        engine.record_window_history(n, m, up);
        was_up[i] = up;
        const double tp_slot = 8.0 * static_cast<double>(agg[i].bytes) / tau;
        tp_feat[i] = 0.8 * tp_feat[i] + 0.2 * tp_slot;
      }
    }

    // per-slot reward (objective decomposition) and monitoring
    double r_mean = 0.0;
    std::vector<double> r_ue(N, 0.0);
    for (int n = 0; n < N; ++n) {
      const double goodput_norm = (8.0 * static_cast<double>(ue_bytes[n]) / tau) / cap_ue;
      const double late_frac =
          ue_arrivals[n] > 0 ? static_cast<double>(ue_late[n]) / ue_arrivals[n] : 0.0;
      r_ue[n] = cfg.metrics.omega1 * goodput_norm - cfg.metrics.omega2 * late_frac;
      r_mean += r_ue[n];
    }
    r_mean /= N;
    total_r += r_mean;

    const MonitorDecision dec = ctx.monitor.observe(r_mean - cfg.rhrm.reward_lower_bound);
    if (dec == MonitorDecision::LightRefit) {
      if (auto* nnpe = dynamic_cast<NnpeScheduler*>(ctx.scheduler.get())) {
        for (int n = 0; n < N; ++n) nnpe->refit_from_buffer(n);
      }
    } else if (dec == MonitorDecision::FullRetrain) {
      ++ctx.full_retrain_requests;
    }
    if (ctx.scheduler) ctx.scheduler->on_slot_end();

    // observation windows + trajectory assembly
    if (use_gpasp || collect) {
      for (int n = 0; n < N; ++n) {
        std::vector<double> row(dh, 0.0);
        for (int m = 0; m < M; ++m) {
          const size_t i = static_cast<size_t>(n) * M + m;
          const LinkState& l = world.link(n, m);
          const Subflow& sf = engine.subflow(n, m);
          row[6 * m + 0] = std::clamp(sf.srtt_s / cfg.sched.srtt_norm_cap_s, 0.0, 1.0);
          row[6 * m + 1] = std::clamp(l.snr_db / scen.snr_max_db, 0.0, 1.0);
          row[6 * m + 2] = std::clamp(tp_feat[i] / scen.paths[m].capacity_bps, 0.0, 1.0);
          row[6 * m + 3] = agg[i].loss ? 1.0 : 0.0;
          row[6 * m + 4] = std::clamp(sf.cwnd / cfg.sched.max_cwnd_norm, 0.0, 1.0);
          row[6 * m + 5] =
              std::clamp(engine.queue_backlog_s(m, (slot + 1) * tau) / 0.5, 0.0, 1.0);
        }
        for (int k = 0; k < cfg.gpasp.noise_channels; ++k) {
          Rng nr(Rng::derive_seed(episode_seed,
                                  0xbeef0000ULL + static_cast<std::uint64_t>(slot) * 131 +
                                      static_cast<std::uint64_t>(n) * 17 + k));
          row[6 * M + k] = nr.uniform();
        }
        window[n].push_back(std::move(row));
        while (static_cast<int>(window[n].size()) > L) window[n].pop_front();

        if (collect && pending[n].active) {
          StepRecord sr;
          sr.obs = std::move(pending[n].obs);
          sr.next_obs = window_to_mat(window[n], dh);
          sr.action = pending[n].action;
          sr.reward = r_ue[n];
          sr.eps = std::move(pending[n].eps);
          sr.logp_old = pending[n].logp;
          sr.done = slot == horizon - 1;
          sr.up_mask = std::move(pending[n].up_mask);
          trajs[n].push_back(std::move(sr));
          pending[n].active = false;
        }
      }
    }
  }

  if (artifacts) {
    artifacts->packet_trace = engine.trace();
    artifacts->monitor_log = ctx.monitor.log();
  }
  if (total_reward) *total_reward = total_r;
  if (trajectories) {
    trajectories->clear();
    for (auto& tr : trajs)
      if (!tr.empty()) trajectories->push_back(std::move(tr));
  }

  const double duration = horizon * tau;
  return summarize(engine.packet_samples(), N, duration, cap_bound, cfg.metrics);
}

// ---------------- experiment orchestration ----------------

namespace {

const std::vector<std::string> kSchedulerNames = {"random", "rr", "minrtt", "nnpe", "gpasp"};
const std::vector<std::string> kCcNames = {"phacc", "phacc_no_gpasp", "olia"};

void check_names(const Config& cfg) {
  auto in = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (const auto& s : cfg.experiment.schemes) {
    if (!in(kSchedulerNames, s.scheduler))
      throw std::invalid_argument("unknown scheduler '" + s.scheduler +
                                  "' (valid: random, rr, minrtt, nnpe, gpasp)");
    if (!in(kCcNames, s.cc))
      throw std::invalid_argument("unknown congestion controller '" + s.cc +
                                  "' (valid: phacc, phacc_no_gpasp, olia)");
  }
}

std::string scheme_label(const SchemeSpec& s) { return s.scheduler + "+" + s.cc; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string episodes_csv_header() {
  return "scheduler,cc,seed,episode," + EpisodeMetrics::csv_header() + ",total_reward";
}

std::string episode_row_csv(const EpisodeRow& r) {
  std::ostringstream os;
  os << r.scheduler << "," << r.cc << "," << r.seed << "," << r.episode << ","
     << r.metrics.csv_row() << "," << fmt(r.total_reward);
  return os.str();
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};
Stats stats_of(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / v.size());
  return s;
}

void write_figure_files(const fs::path& dir, const std::vector<EpisodeRow>& rows) {
  // group rows by scheme, preserving first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EpisodeRow*>> by_scheme;
  for (const auto& r : rows) {
    const std::string key = r.scheduler + "+" + r.cc;
    if (!by_scheme.count(key)) order.push_back(key);
    by_scheme[key].push_back(&r);
  }

  {
    std::ostringstream os;
    os << "scheme,episode,goodput_bps_mean\n";
    for (const auto& key : order) {
      std::map<int, std::vector<double>> per_ep;
      for (const auto* r : by_scheme[key]) per_ep[r->episode].push_back(r->metrics.goodput_bps);
      for (const auto& [ep, v] : per_ep) os << key << "," << ep << "," << fmt(stats_of(v).mean) << "\n";
    }
    write_text(dir / "fig_throughput_convergence.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "scheme,plr_mean,plr_std,ofo_rate_mean,ofo_rate_std\n";
    for (const auto& key : order) {
      std::vector<double> plr, ofo;
      for (const auto* r : by_scheme[key]) {
        plr.push_back(r->metrics.plr);
        ofo.push_back(r->metrics.ofo_rate);
      }
      const Stats sp = stats_of(plr), so = stats_of(ofo);
      os << key << "," << fmt(sp.mean) << "," << fmt(sp.stddev) << "," << fmt(so.mean) << ","
         << fmt(so.stddev) << "\n";
    }
    write_text(dir / "fig_plr_ofo.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "scheme,mean_delay_s,jitter_s,pdr\n";
    for (const auto& key : order) {
      std::vector<double> d, j, p;
      for (const auto* r : by_scheme[key]) {
        d.push_back(r->metrics.mean_delay_s);
        j.push_back(r->metrics.jitter_s);
        p.push_back(r->metrics.pdr);
      }
      os << key << "," << fmt(stats_of(d).mean) << "," << fmt(stats_of(j).mean) << ","
         << fmt(stats_of(p).mean) << "\n";
    }
    write_text(dir / "fig_delay_jitter_pdr.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "scheme,seed,episode,f_ofo\n";
    for (const auto& key : order)
      for (const auto* r : by_scheme[key])
        os << key << "," << r->seed << "," << r->episode << "," << fmt(r->metrics.f_ofo) << "\n";
    write_text(dir / "fig_ofo_distribution.csv", os.str());
  }
}

void write_aggregate_json(const fs::path& dir, const std::vector<EpisodeRow>& rows) {
  nlohmann::json out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EpisodeRow*>> by_scheme;
  for (const auto& r : rows) {
    const std::string key = r.scheduler + "+" + r.cc;
    if (!by_scheme.count(key)) order.push_back(key);
    by_scheme[key].push_back(&r);
  }
  for (const auto& key : order) {
    auto collect = [&](auto getter) {
      std::vector<double> v;
      for (const auto* r : by_scheme[key]) v.push_back(getter(*r));
      return stats_of(v);
    };
    nlohmann::json sj;
    auto put = [&](const char* name, Stats s) {
      sj[name] = {{"mean", s.mean}, {"std", s.stddev}};
    };
    put("goodput_bps", collect([](const EpisodeRow& r) { return r.metrics.goodput_bps; }));
    put("f_ofo", collect([](const EpisodeRow& r) { return r.metrics.f_ofo; }));
    put("ofo_rate", collect([](const EpisodeRow& r) { return r.metrics.ofo_rate; }));
    put("plr", collect([](const EpisodeRow& r) { return r.metrics.plr; }));
    put("pdr", collect([](const EpisodeRow& r) { return r.metrics.pdr; }));
    put("mean_delay_s", collect([](const EpisodeRow& r) { return r.metrics.mean_delay_s; }));
    put("jitter_s", collect([](const EpisodeRow& r) { return r.metrics.jitter_s; }));
    put("objective", collect([](const EpisodeRow& r) { return r.metrics.objective; }));
    put("total_reward", collect([](const EpisodeRow& r) { return r.total_reward; }));
    out[key] = sj;
  }
  write_text(dir / "aggregate.json", out.dump(2));
}

void export_artifacts(const fs::path& dir, const std::string& label, std::uint64_t seed, int ep,
                      const Config& cfg, const EpisodeArtifacts& art) {
  fs::create_directories(dir / "traces");
  if (cfg.experiment.export_packet_trace) {
    std::ostringstream os;
    os << "slot,ue,path,seq,event,rtt_s,bytes\n";
    for (const auto& r : art.packet_trace)
      os << r.slot << "," << r.ue << "," << r.path << "," << r.seq << "," << r.event << ","
         << fmt(r.rtt_s) << "," << r.bytes << "\n";
    write_text(dir / "traces" /
                   (label + "_seed" + std::to_string(seed) + "_ep" + std::to_string(ep) +
                    "_packets.csv"),
               os.str());
  }
  if (cfg.experiment.export_cwnd_trace) {
    std::ostringstream os;
    os << "slot,ue,path,cwnd,sst,phase,event\n";
    for (const auto& r : art.cwnd_trace)
      os << r.slot << "," << r.ue << "," << r.path << "," << fmt(r.cwnd) << "," << fmt(r.sst)
         << "," << r.phase << "," << r.event << "\n";
    write_text(dir / "traces" /
                   (label + "_seed" + std::to_string(seed) + "_ep" + std::to_string(ep) +
                    "_cwnd.csv"),
               os.str());
  }
  if (cfg.experiment.export_monitor_log) {
    std::ostringstream os;
    os << "step,rwd,srwd,dev,F,cnt,decision\n";
    for (const auto& r : art.monitor_log)
      os << r.step << "," << fmt(r.rwd) << "," << fmt(r.srwd) << "," << fmt(r.dev) << ","
         << fmt(r.fluct) << "," << r.cnt << "," << to_string(r.decision) << "\n";
    write_text(dir / "traces" /
                   (label + "_seed" + std::to_string(seed) + "_ep" + std::to_string(ep) +
                    "_monitor.csv"),
               os.str());
  }
}

}  // namespace

ExperimentResult run_experiment(const Config& cfg) {
  cfg.validate();
  check_names(cfg);
  ExperimentResult result;
  const fs::path out(cfg.experiment.out_dir);
  fs::create_directories(out);
  result.out_dir = out.string();

  write_text(out / "config.json", dump_config(cfg));

  std::vector<std::string> failures;
  const bool want_artifacts = cfg.experiment.export_packet_trace ||
                              cfg.experiment.export_cwnd_trace ||
                              cfg.experiment.export_monitor_log;

  if (cfg.experiment.train) {
    // GPASP training: one independent model per seed
    for (const std::uint64_t seed : cfg.experiment.seeds) {
      GpaspConfig gc = cfg.gpasp;
      gc.init_seed = Rng::derive_seed(cfg.gpasp.init_seed, seed);
      GpaspModel model(gc, cfg.scenario.num_paths);

      RunContext ctx;
      ctx.scheme = {"gpasp", cfg.experiment.schemes.front().cc};
      ctx.model = &model;
      ctx.act_mode = ActMode::Sample;
      ctx.monitor = RewardMonitor(cfg.rhrm);

      std::ostringstream log;
      log << "episode,step,total_reward,loss_pi,loss_v,entropy,loss_aux,lambda,g_rl,g_aux\n";
      try {
        for (int ep = 0; ep < cfg.experiment.episodes; ++ep) {
          std::vector<Trajectory> trajs;
          double tr = 0.0;
          const EpisodeMetrics m =
              run_episode(cfg, ctx, Rng::derive_seed(seed, ep + 1), &tr, &trajs, nullptr);
          int epochs = cfg.gpasp.epochs;
          if (ctx.full_retrain_requests > 0) {
            epochs += cfg.gpasp.epochs;  // RHRM full-retrain escalation
            ctx.full_retrain_requests = 0;
          }
          for (int e = 0; e < epochs; ++e) {
            const TrainReport rep = model.train_step(trajs);
            log << ep << "," << e << "," << fmt(tr) << "," << fmt(rep.loss_pi) << ","
                << fmt(rep.loss_v) << "," << fmt(rep.entropy) << "," << fmt(rep.loss_aux) << ","
                << fmt(rep.lambda) << "," << fmt(rep.g_rl) << "," << fmt(rep.g_aux) << "\n";
          }
          result.rows.push_back({"gpasp", ctx.scheme.cc, seed, ep, m, tr});
        }
        model.save_checkpoint((out / ("checkpoint_seed" + std::to_string(seed) + ".bin")).string());
        if (seed == cfg.experiment.seeds.front())
          model.save_checkpoint((out / "checkpoint.bin").string());
        if (cfg.experiment.export_training_log)
          write_text(out / ("training_log_seed" + std::to_string(seed) + ".csv"), log.str());
      } catch (const std::exception& e) {
        failures.push_back("train seed " + std::to_string(seed) + ": " + e.what());
      }
    }
  } else {
    std::optional<GpaspModel> model;
    bool needs_gpasp = false;
    for (const auto& s : cfg.experiment.schemes) needs_gpasp |= s.scheduler == "gpasp";
    if (needs_gpasp) {
      if (!cfg.experiment.checkpoint.empty())
        model.emplace(GpaspModel::load_checkpoint(cfg.experiment.checkpoint));
      else
        model.emplace(cfg.gpasp, cfg.scenario.num_paths);
    }

    for (const auto& scheme : cfg.experiment.schemes) {
      for (const std::uint64_t seed : cfg.experiment.seeds) {
        try {
          RunContext ctx;
          ctx.scheme = scheme;
          ctx.act_mode = ActMode::Greedy;
          ctx.monitor = RewardMonitor(cfg.rhrm);
          ctx.monitor.set_logging(cfg.experiment.export_monitor_log);
          if (scheme.scheduler == "gpasp")
            ctx.model = &*model;
          else
            ctx.scheduler = make_scheduler(scheme.scheduler, cfg.scenario.num_ues, cfg.sched);

          for (int ep = 0; ep < cfg.experiment.episodes; ++ep) {
            EpisodeArtifacts art;
            double tr = 0.0;
            const EpisodeMetrics m = run_episode(cfg, ctx, Rng::derive_seed(seed, ep + 1), &tr,
                                                 nullptr, want_artifacts ? &art : nullptr);
            result.rows.push_back({scheme.scheduler, scheme.cc, seed, ep, m, tr});
            if (want_artifacts) export_artifacts(out, scheme_label(scheme), seed, ep, cfg, art);
          }
        } catch (const std::exception& e) {
          failures.push_back(scheme_label(scheme) + " seed " + std::to_string(seed) + ": " +
                             e.what());
        }
      }
    }
  }

  {
    std::ostringstream os;
    os << episodes_csv_header() << "\n";
    for (const auto& r : result.rows) os << episode_row_csv(r) << "\n";
    write_text(out / "episodes.csv", os.str());
  }

  // figure data and aggregates are derived from the CSV itself
  const std::vector<EpisodeRow> parsed = read_episode_csv((out / "episodes.csv").string());
  write_aggregate_json(out, parsed);
  write_figure_files(out, parsed);

  if (!failures.empty()) {
    std::ostringstream os;
    for (const auto& f : failures) os << f << "\n";
    write_text(out / "failures.txt", os.str());
  }
  return result;
}

std::vector<EpisodeRow> read_episode_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty episode csv: " + path);
  if (line != episodes_csv_header())
    throw std::runtime_error("unexpected episode csv header in " + path);
  std::vector<EpisodeRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 15) throw std::runtime_error("bad episode csv row: " + line);
    EpisodeRow r;
    r.scheduler = cells[0];
    r.cc = cells[1];
    r.seed = std::stoull(cells[2]);
    r.episode = std::stoi(cells[3]);
    r.metrics.throughput_packets = std::stoll(cells[4]);
    r.metrics.f_ofo = std::stod(cells[5]);
    r.metrics.ofo_rate = std::stod(cells[6]);
    r.metrics.goodput_bps = std::stod(cells[7]);
    r.metrics.plr = std::stod(cells[8]);
    r.metrics.pdr = std::stod(cells[9]);
    r.metrics.mean_delay_s = std::stod(cells[10]);
    r.metrics.jitter_s = std::stod(cells[11]);
    r.metrics.objective = std::stod(cells[12]);
    r.metrics.empty = cells[13] == "1";
    r.total_reward = std::stod(cells[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"saginmp: multi-access multipath transport simulator for UAV/satellite networks"};
  std::string config_path;
  std::string scheduler, ccname, seeds_str, out_dir, checkpoint;
  int episodes = -1, horizon = -1;
  bool train = false, export_traces = false;

  app.add_option("--config", config_path, "JSON config file (// comments allowed)")->required();
  app.add_option("--scheduler", scheduler,
                 "override scheduler for a single scheme: random|rr|minrtt|nnpe|gpasp");
  app.add_option("--cc", ccname, "override congestion control: phacc|phacc_no_gpasp|olia");
  app.add_option("--seeds", seeds_str, "comma-separated seed list, e.g. 1,2,3");
  app.add_option("--episodes", episodes, "episodes per (scheme, seed)");
  app.add_option("--horizon", horizon, "slots per episode (<= slots_per_period)");
  app.add_flag("--train", train, "GPASP training mode (writes checkpoints)");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--export-traces", export_traces,
               "write per-packet, per-slot cwnd and monitor traces");
  app.add_option("--checkpoint", checkpoint, "GPASP checkpoint to evaluate");

  std::vector<const char*> argv;
  static const char* prog = "saginmp";
  argv.push_back(prog);
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Config cfg = load_config(config_path);
    if (!scheduler.empty() || !ccname.empty()) {
      SchemeSpec s = cfg.experiment.schemes.front();
      if (!scheduler.empty()) s.scheduler = scheduler;
      if (!ccname.empty()) s.cc = ccname;
      cfg.experiment.schemes = {s};
    }
    if (!seeds_str.empty()) {
      std::vector<std::uint64_t> seeds;
      std::stringstream ss(seeds_str);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
      }
      if (seeds.empty()) throw std::invalid_argument("--seeds: no seeds parsed");
      cfg.experiment.seeds = seeds;
    }
    if (episodes > 0) cfg.experiment.episodes = episodes;
    if (horizon > 0) cfg.experiment.horizon = horizon;
    if (train) cfg.experiment.train = true;
    if (!out_dir.empty()) cfg.experiment.out_dir = out_dir;
    if (export_traces) {
      cfg.experiment.export_packet_trace = true;
      cfg.experiment.export_cwnd_trace = true;
      cfg.experiment.export_monitor_log = true;
    }
    if (!checkpoint.empty()) cfg.experiment.checkpoint = checkpoint;

    cfg.validate();
    check_names(cfg);
    run_experiment(cfg);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace saginmp
