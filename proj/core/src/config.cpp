#include "saginmp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace saginmp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in section '" + section + "'");
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_scenario(const json& j, ScenarioConfig& s) {
  reject_unknown(j, {"area_side_m", "num_ues", "num_paths", "sat_altitude_m", "slot_length_s",
                     "slots_per_period", "uav_capacity", "visibility_limit_m", "d_th_m",
                     "d_th_sat_m", "uav_altitude_m", "uav_speed_mps", "ue_uav_range_m",
                     "sat_track_amplitude_m", "sat_far_distance_m", "sat_down_distance_m", "snr_max_db",
                     "snr_decay_db_per_decade", "snr_ref_distance_m", "snr_noise_db",
                     "handover_snr_drop_db", "paths",
                     "random_loss_prob", "handover_loss_prob", "switch_loss_prob",
                     "switch_burst_slots", "mss_bytes", "rng_seed"},
                 "scenario");
  get(j, "area_side_m", s.area_side_m);
  get(j, "num_ues", s.num_ues);
  get(j, "num_paths", s.num_paths);
  get(j, "sat_altitude_m", s.sat_altitude_m);
  get(j, "slot_length_s", s.slot_length_s);
  get(j, "slots_per_period", s.slots_per_period);
  get(j, "uav_capacity", s.uav_capacity);
  get(j, "visibility_limit_m", s.visibility_limit_m);
  get(j, "d_th_m", s.d_th_m);
  get(j, "d_th_sat_m", s.d_th_sat_m);
  get(j, "uav_altitude_m", s.uav_altitude_m);
  get(j, "uav_speed_mps", s.uav_speed_mps);
  get(j, "ue_uav_range_m", s.ue_uav_range_m);
  get(j, "sat_track_amplitude_m", s.sat_track_amplitude_m);
  get(j, "sat_far_distance_m", s.sat_far_distance_m);
  get(j, "sat_down_distance_m", s.sat_down_distance_m);
  get(j, "snr_max_db", s.snr_max_db);
  get(j, "snr_decay_db_per_decade", s.snr_decay_db_per_decade);
  get(j, "snr_ref_distance_m", s.snr_ref_distance_m);
  get(j, "snr_noise_db", s.snr_noise_db);
  get(j, "handover_snr_drop_db", s.handover_snr_drop_db);
  get(j, "random_loss_prob", s.random_loss_prob);
  get(j, "handover_loss_prob", s.handover_loss_prob);
  get(j, "switch_loss_prob", s.switch_loss_prob);
  get(j, "switch_burst_slots", s.switch_burst_slots);
  get(j, "mss_bytes", s.mss_bytes);
  get(j, "rng_seed", s.rng_seed);
  if (j.contains("paths")) {
    s.paths.clear();
    for (const auto& pj : j.at("paths")) {
      reject_unknown(pj, {"capacity_bps", "base_delay_s", "handover_period_slots",
                          "handover_duration_slots", "handover_offset_slots",
                          "handover_down_slots", "random_loss_prob"},
                     "scenario.paths[]");
      PathConfig p;
      get(pj, "capacity_bps", p.capacity_bps);
      get(pj, "base_delay_s", p.base_delay_s);
      get(pj, "handover_period_slots", p.handover_period_slots);
      get(pj, "handover_duration_slots", p.handover_duration_slots);
      get(pj, "handover_offset_slots", p.handover_offset_slots);
      get(pj, "handover_down_slots", p.handover_down_slots);
      get(pj, "random_loss_prob", p.random_loss_prob);
      s.paths.push_back(p);
    }
  }
}

json dump_scenario(const ScenarioConfig& s) {
  json j;
  j["area_side_m"] = s.area_side_m;
  j["num_ues"] = s.num_ues;
  j["num_paths"] = s.num_paths;
  j["sat_altitude_m"] = s.sat_altitude_m;
  j["slot_length_s"] = s.slot_length_s;
  j["slots_per_period"] = s.slots_per_period;
  j["uav_capacity"] = s.uav_capacity;
  j["visibility_limit_m"] = s.visibility_limit_m;
  j["d_th_m"] = s.d_th_m;
  j["d_th_sat_m"] = s.d_th_sat_m;
  j["uav_altitude_m"] = s.uav_altitude_m;
  j["uav_speed_mps"] = s.uav_speed_mps;
  j["ue_uav_range_m"] = s.ue_uav_range_m;
  j["sat_track_amplitude_m"] = s.sat_track_amplitude_m;
  j["sat_far_distance_m"] = s.sat_far_distance_m;
  j["sat_down_distance_m"] = s.sat_down_distance_m;
  j["snr_max_db"] = s.snr_max_db;
  j["snr_decay_db_per_decade"] = s.snr_decay_db_per_decade;
  j["snr_ref_distance_m"] = s.snr_ref_distance_m;
  j["snr_noise_db"] = s.snr_noise_db;
  j["handover_snr_drop_db"] = s.handover_snr_drop_db;
  j["random_loss_prob"] = s.random_loss_prob;
  j["handover_loss_prob"] = s.handover_loss_prob;
  j["switch_loss_prob"] = s.switch_loss_prob;
  j["switch_burst_slots"] = s.switch_burst_slots;
  j["mss_bytes"] = s.mss_bytes;
  j["rng_seed"] = s.rng_seed;
  j["paths"] = json::array();
  for (const auto& p : s.paths) {
    json pj;
    pj["capacity_bps"] = p.capacity_bps;
    pj["base_delay_s"] = p.base_delay_s;
    pj["handover_period_slots"] = p.handover_period_slots;
    pj["handover_duration_slots"] = p.handover_duration_slots;
    pj["handover_offset_slots"] = p.handover_offset_slots;
    pj["handover_down_slots"] = p.handover_down_slots;
    pj["random_loss_prob"] = p.random_loss_prob;
    j["paths"].push_back(pj);
  }
  return j;
}

}  // namespace

void fill_default_paths(ScenarioConfig& s) {
  while (static_cast<int>(s.paths.size()) < s.num_paths) {
    PathConfig p;
    const int i = static_cast<int>(s.paths.size());
    p.capacity_bps = 12e6 / (1 + i);
    p.base_delay_s = 0.004 + 0.004 * i;
    p.handover_offset_slots = 30 * i;
    s.paths.push_back(p);
  }
}

void ScenarioConfig::validate() const {
  auto bad = [](const std::string& m) { throw std::invalid_argument("scenario config: " + m); };
  if (area_side_m <= 0) bad("area_side_m must be > 0");
  if (num_ues < 1) bad("num_ues must be >= 1");
  if (num_paths < 1) bad("num_paths must be >= 1");
  if (slot_length_s <= 0) bad("slot_length_s must be > 0");
  if (slots_per_period < 1) bad("slots_per_period must be >= 1");
  if (uav_capacity < 1) bad("uav_capacity must be >= 1");
  if (visibility_limit_m <= 0) bad("visibility_limit_m must be > 0");
  if (mss_bytes <= 0) bad("mss_bytes must be > 0");
  for (double p : {random_loss_prob, handover_loss_prob, switch_loss_prob})
    if (p < 0.0 || p > 1.0) bad("loss probabilities must lie in [0,1]");
  if (static_cast<int>(paths.size()) < num_paths)
    bad("needs one path entry per path; see fill_default_paths");
  if (static_cast<int>(paths.size()) > num_paths) bad("more path entries than num_paths");
}

void CcConfig::validate() const {
  auto bad = [](const std::string& m) { throw std::invalid_argument("cc config: " + m); };
  if (!(gamma > 0.5 && gamma < 1.0)) bad("gamma must lie in (0.5, 1)");
  if (sigma < 0.0 || sigma > 1.0) bad("sigma must lie in [0,1]");
  if (edbss_mmax <= 1.0) bad("edbss_mmax must be > 1");
  if (edbss_a <= 0 || edbss_b <= 0 || edbss_rho <= 0) bad("edbss parameters must be positive");
  if (name != "phacc" && name != "phacc_no_gpasp" && name != "olia")
    bad("unknown controller '" + name + "' (valid: phacc, phacc_no_gpasp, olia)");
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw std::invalid_argument("experiment config: " + m); };
  if (seeds.empty()) bad("seeds must be nonempty");
  if (episodes < 1) bad("episodes must be >= 1");
  if (schemes.empty()) bad("schemes must be nonempty");
}

void Config::validate() const {
  scenario.validate();
  cc.validate();
  experiment.validate();
  if (experiment.horizon > scenario.slots_per_period)
    throw std::invalid_argument("experiment config: horizon must be <= slots_per_period");
}

Config parse_config(const std::string& text) {
  json j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  reject_unknown(j, {"scenario", "transport", "cc", "sched", "gpasp", "rhrm", "metrics", "experiment"},
                 "<top>");
  Config cfg;
  if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.scenario);
  if (j.contains("transport")) {
    const auto& t = j.at("transport");
    reject_unknown(t, {"app_packets_per_slot", "timeout_srtt_factor", "timeout_min_s",
                       "timeout_max_s", "window_history_len", "rtt_window_slots",
                       "queue_limit_packets"},
                   "transport");
    get(t, "app_packets_per_slot", cfg.transport.app_packets_per_slot);
    get(t, "timeout_srtt_factor", cfg.transport.timeout_srtt_factor);
    get(t, "timeout_min_s", cfg.transport.timeout_min_s);
    get(t, "timeout_max_s", cfg.transport.timeout_max_s);
    get(t, "window_history_len", cfg.transport.window_history_len);
    get(t, "rtt_window_slots", cfg.transport.rtt_window_slots);
    get(t, "queue_limit_packets", cfg.transport.queue_limit_packets);
  }
  if (j.contains("cc")) {
    const auto& c = j.at("cc");
    reject_unknown(c, {"name", "gamma", "delta_r_s", "sigma", "rho", "edbss_a", "edbss_b",
                       "edbss_gamma", "edbss_rho", "edbss_mmax", "initial_sst_mss", "tp_ewma_old",
                       "w_ema_newest", "handover_memory_slots", "idle_restart_slots"},
                   "cc");
    get(c, "name", cfg.cc.name);
    get(c, "gamma", cfg.cc.gamma);
    get(c, "delta_r_s", cfg.cc.delta_r_s);
    get(c, "sigma", cfg.cc.sigma);
    get(c, "rho", cfg.cc.rho);
    get(c, "edbss_a", cfg.cc.edbss_a);
    get(c, "edbss_b", cfg.cc.edbss_b);
    get(c, "edbss_gamma", cfg.cc.edbss_gamma);
    get(c, "edbss_rho", cfg.cc.edbss_rho);
    get(c, "edbss_mmax", cfg.cc.edbss_mmax);
    get(c, "initial_sst_mss", cfg.cc.initial_sst_mss);
    get(c, "tp_ewma_old", cfg.cc.tp_ewma_old);
    get(c, "w_ema_newest", cfg.cc.w_ema_newest);
    get(c, "handover_memory_slots", cfg.cc.handover_memory_slots);
    get(c, "idle_restart_slots", cfg.cc.idle_restart_slots);
  }
  if (j.contains("sched")) {
    const auto& s = j.at("sched");
    reject_unknown(s, {"name", "ridge_scale", "decay", "decay_enabled", "srtt_norm_cap_s",
                       "max_cwnd_norm", "feedback_buffer", "recent_loss_slots"},
                   "sched");
    get(s, "name", cfg.sched.name);
    get(s, "ridge_scale", cfg.sched.ridge_scale);
    get(s, "decay", cfg.sched.decay);
    get(s, "decay_enabled", cfg.sched.decay_enabled);
    get(s, "srtt_norm_cap_s", cfg.sched.srtt_norm_cap_s);
    get(s, "max_cwnd_norm", cfg.sched.max_cwnd_norm);
    get(s, "feedback_buffer", cfg.sched.feedback_buffer);
    get(s, "recent_loss_slots", cfg.sched.recent_loss_slots);
  }
  if (j.contains("gpasp")) {
    const auto& g = j.at("gpasp");
    reject_unknown(g, {"history_len", "noise_channels", "heads", "head_dim", "attn_dim",
                       "latent_dim", "hidden", "lr", "momentum", "gamma_disc", "lambda_gae",
                       "clip", "value_coef", "entropy_coef", "epochs", "gradnorm_eta",
                       "gradnorm_lambda0", "lambda_min", "lambda_max", "gradnorm_eps",
                       "ema_beta", "logvar_min", "logvar_max", "init_seed"},
                   "gpasp");
    get(g, "history_len", cfg.gpasp.history_len);
    get(g, "noise_channels", cfg.gpasp.noise_channels);
    get(g, "heads", cfg.gpasp.heads);
    get(g, "head_dim", cfg.gpasp.head_dim);
    get(g, "attn_dim", cfg.gpasp.attn_dim);
    get(g, "latent_dim", cfg.gpasp.latent_dim);
    get(g, "hidden", cfg.gpasp.hidden);
    get(g, "lr", cfg.gpasp.lr);
    get(g, "momentum", cfg.gpasp.momentum);
    get(g, "gamma_disc", cfg.gpasp.gamma_disc);
    get(g, "lambda_gae", cfg.gpasp.lambda_gae);
    get(g, "clip", cfg.gpasp.clip);
    get(g, "value_coef", cfg.gpasp.value_coef);
    get(g, "entropy_coef", cfg.gpasp.entropy_coef);
    get(g, "epochs", cfg.gpasp.epochs);
    get(g, "gradnorm_eta", cfg.gpasp.gradnorm_eta);
    get(g, "gradnorm_lambda0", cfg.gpasp.gradnorm_lambda0);
    get(g, "lambda_min", cfg.gpasp.lambda_min);
    get(g, "lambda_max", cfg.gpasp.lambda_max);
    get(g, "gradnorm_eps", cfg.gpasp.gradnorm_eps);
    get(g, "ema_beta", cfg.gpasp.ema_beta);
    get(g, "logvar_min", cfg.gpasp.logvar_min);
    get(g, "logvar_max", cfg.gpasp.logvar_max);
    get(g, "init_seed", cfg.gpasp.init_seed);
  }
  if (j.contains("rhrm")) {
    const auto& r = j.at("rhrm");
    reject_unknown(r, {"alpha0", "mul0", "thr0", "min_samples", "window", "beta", "delta",
                       "lambda_sev", "reward_lower_bound"},
                   "rhrm");
    get(r, "alpha0", cfg.rhrm.alpha0);
    get(r, "mul0", cfg.rhrm.mul0);
    get(r, "thr0", cfg.rhrm.thr0);
    get(r, "min_samples", cfg.rhrm.min_samples);
    get(r, "window", cfg.rhrm.window);
    get(r, "beta", cfg.rhrm.beta);
    get(r, "delta", cfg.rhrm.delta);
    get(r, "lambda_sev", cfg.rhrm.lambda_sev);
    get(r, "reward_lower_bound", cfg.rhrm.reward_lower_bound);
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    reject_unknown(m, {"omega1", "omega2"}, "metrics");
    get(m, "omega1", cfg.metrics.omega1);
    get(m, "omega2", cfg.metrics.omega2);
  }
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    reject_unknown(e, {"schemes", "episodes", "seeds", "horizon", "train", "out_dir",
                       "export_packet_trace", "export_cwnd_trace", "export_training_log",
                       "export_monitor_log", "checkpoint"},
                   "experiment");
    if (e.contains("schemes")) {
      cfg.experiment.schemes.clear();
      for (const auto& sj : e.at("schemes")) {
        reject_unknown(sj, {"scheduler", "cc"}, "experiment.schemes[]");
        SchemeSpec s;
        get(sj, "scheduler", s.scheduler);
        get(sj, "cc", s.cc);
        cfg.experiment.schemes.push_back(s);
      }
    }
    get(e, "episodes", cfg.experiment.episodes);
    get(e, "seeds", cfg.experiment.seeds);
    get(e, "horizon", cfg.experiment.horizon);
    get(e, "train", cfg.experiment.train);
    get(e, "out_dir", cfg.experiment.out_dir);
    get(e, "export_packet_trace", cfg.experiment.export_packet_trace);
    get(e, "export_cwnd_trace", cfg.experiment.export_cwnd_trace);
    get(e, "export_training_log", cfg.experiment.export_training_log);
    get(e, "export_monitor_log", cfg.experiment.export_monitor_log);
    get(e, "checkpoint", cfg.experiment.checkpoint);
  }

  fill_default_paths(cfg.scenario);
  cfg.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config& cfg) {
  json j;
  j["scenario"] = dump_scenario(cfg.scenario);
  j["transport"] = {{"app_packets_per_slot", cfg.transport.app_packets_per_slot},
                    {"timeout_srtt_factor", cfg.transport.timeout_srtt_factor},
                    {"timeout_min_s", cfg.transport.timeout_min_s},
                    {"timeout_max_s", cfg.transport.timeout_max_s},
                    {"window_history_len", cfg.transport.window_history_len},
                    {"rtt_window_slots", cfg.transport.rtt_window_slots},
                    {"queue_limit_packets", cfg.transport.queue_limit_packets}};
  j["cc"] = {{"name", cfg.cc.name},
             {"gamma", cfg.cc.gamma},
             {"delta_r_s", cfg.cc.delta_r_s},
             {"sigma", cfg.cc.sigma},
             {"rho", cfg.cc.rho},
             {"edbss_a", cfg.cc.edbss_a},
             {"edbss_b", cfg.cc.edbss_b},
             {"edbss_gamma", cfg.cc.edbss_gamma},
             {"edbss_rho", cfg.cc.edbss_rho},
             {"edbss_mmax", cfg.cc.edbss_mmax},
             {"initial_sst_mss", cfg.cc.initial_sst_mss},
             {"tp_ewma_old", cfg.cc.tp_ewma_old},
             {"w_ema_newest", cfg.cc.w_ema_newest},
             {"handover_memory_slots", cfg.cc.handover_memory_slots},
             {"idle_restart_slots", cfg.cc.idle_restart_slots}};
  j["sched"] = {{"name", cfg.sched.name},
                {"ridge_scale", cfg.sched.ridge_scale},
                {"decay", cfg.sched.decay},
                {"decay_enabled", cfg.sched.decay_enabled},
                {"srtt_norm_cap_s", cfg.sched.srtt_norm_cap_s},
                {"max_cwnd_norm", cfg.sched.max_cwnd_norm},
                {"feedback_buffer", cfg.sched.feedback_buffer},
                {"recent_loss_slots", cfg.sched.recent_loss_slots}};
  j["gpasp"] = {{"history_len", cfg.gpasp.history_len},
                {"noise_channels", cfg.gpasp.noise_channels},
                {"heads", cfg.gpasp.heads},
                {"head_dim", cfg.gpasp.head_dim},
                {"attn_dim", cfg.gpasp.attn_dim},
                {"latent_dim", cfg.gpasp.latent_dim},
                {"hidden", cfg.gpasp.hidden},
                {"lr", cfg.gpasp.lr},
                {"momentum", cfg.gpasp.momentum},
                {"gamma_disc", cfg.gpasp.gamma_disc},
                {"lambda_gae", cfg.gpasp.lambda_gae},
                {"clip", cfg.gpasp.clip},
                {"value_coef", cfg.gpasp.value_coef},
                {"entropy_coef", cfg.gpasp.entropy_coef},
                {"epochs", cfg.gpasp.epochs},
                {"gradnorm_eta", cfg.gpasp.gradnorm_eta},
                {"gradnorm_lambda0", cfg.gpasp.gradnorm_lambda0},
                {"lambda_min", cfg.gpasp.lambda_min},
                {"lambda_max", cfg.gpasp.lambda_max},
                {"gradnorm_eps", cfg.gpasp.gradnorm_eps},
                {"ema_beta", cfg.gpasp.ema_beta},
                {"logvar_min", cfg.gpasp.logvar_min},
                {"logvar_max", cfg.gpasp.logvar_max},
                {"init_seed", cfg.gpasp.init_seed}};
  j["rhrm"] = {{"alpha0", cfg.rhrm.alpha0},
               {"mul0", cfg.rhrm.mul0},
               {"thr0", cfg.rhrm.thr0},
               {"min_samples", cfg.rhrm.min_samples},
               {"window", cfg.rhrm.window},
               {"beta", cfg.rhrm.beta},
               {"delta", cfg.rhrm.delta},
               {"lambda_sev", cfg.rhrm.lambda_sev},
               {"reward_lower_bound", cfg.rhrm.reward_lower_bound}};
  j["metrics"] = {{"omega1", cfg.metrics.omega1}, {"omega2", cfg.metrics.omega2}};
  json schemes = json::array();
  for (const auto& s : cfg.experiment.schemes)
    schemes.push_back({{"scheduler", s.scheduler}, {"cc", s.cc}});
  j["experiment"] = {{"schemes", schemes},
                     {"episodes", cfg.experiment.episodes},
                     {"seeds", cfg.experiment.seeds},
                     {"horizon", cfg.experiment.horizon},
                     {"train", cfg.experiment.train},
                     {"out_dir", cfg.experiment.out_dir},
                     {"export_packet_trace", cfg.experiment.export_packet_trace},
                     {"export_cwnd_trace", cfg.experiment.export_cwnd_trace},
                     {"export_training_log", cfg.experiment.export_training_log},
                     {"export_monitor_log", cfg.experiment.export_monitor_log},
                     {"checkpoint", cfg.experiment.checkpoint}};
  return j.dump(2);
}

}  // namespace saginmp
