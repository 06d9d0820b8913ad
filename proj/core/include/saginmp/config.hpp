#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace saginmp {

// Per-path channel/topology parameters. One path == one UAV relay.
struct PathConfig {
  double capacity_bps = 8e6;        // bottleneck drain rate of the shared relay queue
  double base_delay_s = 0.006;      // fixed processing/propagation floor (one way)
  int handover_period_slots = 120;  // serving-SAT cycle for this path
  int handover_duration_slots = 3;  // slots at the end of each cycle with the SAT far
  int handover_offset_slots = 0;    // stagger between paths
  int handover_down_slots = 0;      // tail of the window with the link fully down
  double random_loss_prob = -1.0;   // < 0: use the scenario-wide value
};

struct ScenarioConfig {
  double area_side_m = 1000.0;  // L_E
  int num_ues = 9;              // N
  int num_paths = 4;            // M
  double sat_altitude_m = 550000.0;
  double slot_length_s = 0.02;  // tau
  int slots_per_period = 500;   // N_T  (T = N_T * tau)
  int uav_capacity = 9;         // Y^U, max concurrent UEs per UAV
  double visibility_limit_m = 556000.0;  // d_max (UAV-SAT)
  double d_th_m = 900.0;                 // UE-UAV handover threshold
  double d_th_sat_m = 552000.0;          // UAV-SAT handover threshold d'_th

  double uav_altitude_m = 150.0;
  double uav_speed_mps = 15.0;
  double ue_uav_range_m = 2000.0;        // access link up-range
  double sat_track_amplitude_m = 35000.0;  // lateral ground-track excursion over a period
  double sat_far_distance_m = 554000.0;    // d_ml during a handover window
  double sat_down_distance_m = 558000.0;   // d_ml during the down tail (beyond d_max)

  double snr_max_db = 30.0;
  double snr_decay_db_per_decade = 20.0;
  double snr_ref_distance_m = 100.0;
  double snr_noise_db = 0.5;        // bounded uniform noise amplitude
  double handover_snr_drop_db = 8.0;  // extra loss while the SAT leg exceeds d'_th

  std::vector<PathConfig> paths;  // size num_paths (filled with defaults if shorter)

  double random_loss_prob = 0.002;
  double handover_loss_prob = 0.25;  // replaces loss prob while handover_active
  double switch_loss_prob = 0.08;    // burst after a scheduler path switch
  int switch_burst_slots = 2;

  int mss_bytes = 1500;
  std::uint64_t rng_seed = 1;

  double period_s() const { return slot_length_s * slots_per_period; }
  void validate() const;  // throws std::invalid_argument on violated invariants
};

// Fills missing per-path entries with staggered heterogeneous defaults so a
// hand-built config is usable without listing every path.
void fill_default_paths(ScenarioConfig& s);

struct TransportConfig {
  int app_packets_per_slot = -1;  // -1: saturating source
  double timeout_srtt_factor = 4.0;
  double timeout_min_s = 0.2;
  double timeout_max_s = 2.0;
  int window_history_len = 64;  // bound on W_n^m
  int rtt_window_slots = 50;    // sliding window for D (min RTT) and T (max RTT)
  int queue_limit_packets = 50; // drop-tail bound on each relay FIFO
};

struct CcConfig {
  std::string name = "phacc";  // phacc | phacc_no_gpasp | olia
  double gamma = 0.85;         // conservative reduction factor, (0.5, 1)
  double delta_r_s = 0.02;     // RTT deviation allowance
  double sigma = 0.3;          // lambda smoothing factor
  double rho = 1.0;            // load-balancing degree: ceiling on lambda
  double edbss_a = 10.0;
  double edbss_b = 0.5;
  double edbss_gamma = 1.0;  // boost amplitude
  double edbss_rho = 50.0;   // boost decay scale (MSS)
  double edbss_mmax = 2.0;
  double initial_sst_mss = 16.0;
  double tp_ewma_old = 0.8;      // weight on old value in C update
  double w_ema_newest = 0.25;    // EMA factor on newest W sample
  int handover_memory_slots = 5; // how long an action change keeps Con_1 alive
  int idle_restart_slots = 3;    // unused subflows re-enter the init path
  void validate() const;
};

struct SchedConfig {
  std::string name = "minrtt";  // random | rr | minrtt | nnpe | gpasp
  double ridge_scale = 1e-6;    // ridge = ridge_scale * trace-scale
  double decay = 0.999;         // per-slot decay of (G, v)
  bool decay_enabled = true;
  double srtt_norm_cap_s = 0.5;
  double max_cwnd_norm = 256.0;
  int feedback_buffer = 512;  // ring used by RHRM LightRefit
  int recent_loss_slots = 5;
};

struct GpaspConfig {
  int history_len = 8;     // L
  int noise_channels = 0;  // extra uniform-noise observation channels
  int heads = 2;           // K
  int head_dim = 16;       // d_k
  int attn_dim = 32;       // d_o: projection width after head concat
  int latent_dim = 16;     // d_z
  int hidden = 64;         // MLP width
  double lr = 3e-3;        // alpha
  double momentum = 0.0;   // optional; 0 = plain gradient descent
  double gamma_disc = 0.95;
  double lambda_gae = 0.95;
  double clip = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  int epochs = 3;  // gradient steps per collected episode batch
  double gradnorm_eta = 0.1;
  double gradnorm_lambda0 = 1.0;
  double lambda_min = 1e-3;
  double lambda_max = 10.0;
  double gradnorm_eps = 1e-8;
  double ema_beta = 0.95;
  double logvar_min = -10.0;
  double logvar_max = 4.0;
  std::uint64_t init_seed = 7;
};

struct RhrmConfig {
  double alpha0 = 0.1;
  double mul0 = 2.0;
  double thr0 = 3.0;
  int min_samples = 5;  // n-hat
  int window = 20;      // W-hat
  double beta = 0.2;    // reference update factor
  double delta = 0.05;  // stability threshold
  double lambda_sev = 0.5;
  double reward_lower_bound = -2.0;  // shift so monitored rewards are nonnegative
};

struct MetricsConfig {
  double omega1 = 1.0;
  double omega2 = 1.0;
};

struct SchemeSpec {
  std::string scheduler = "minrtt";
  std::string cc = "phacc";
};

struct ExperimentConfig {
  std::vector<SchemeSpec> schemes = {{"minrtt", "phacc"}};
  int episodes = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int horizon = 0;  // 0: use slots_per_period
  bool train = false;
  std::string out_dir = "out";
  bool export_packet_trace = false;
  bool export_cwnd_trace = false;
  bool export_training_log = true;
  bool export_monitor_log = false;
  std::string checkpoint;  // load path for gpasp evaluation
  void validate() const;
};

struct Config {
  ScenarioConfig scenario;
  TransportConfig transport;
  CcConfig cc;
  SchedConfig sched;
  GpaspConfig gpasp;
  RhrmConfig rhrm;
  MetricsConfig metrics;
  ExperimentConfig experiment;

  void validate() const;
};

// Loads a JSON config file (// comments allowed). Missing keys keep their
// documented defaults; unknown keys are rejected to catch typos.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);
std::string dump_config(const Config& cfg);  // re-serialization (round-trips)

}  // namespace saginmp
