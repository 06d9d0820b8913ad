#pragma once

#include <string>
#include <vector>

#include "saginmp/config.hpp"
#include "saginmp/matrix.hpp"
#include "saginmp/rng.hpp"
#include "saginmp/tensor.hpp"

namespace saginmp {

// ---- pure pieces (unit-testable, used inside train_step) ----

// z = mu + exp(0.5 * logvar) (.) eps
std::vector<double> reparameterize(const std::vector<double>& mu,
                                   const std::vector<double>& logvar,
                                   const std::vector<double>& eps);

struct GaeResult {
  std::vector<double> advantage;
  std::vector<double> value_target;
};
// delta_t = r_t + gamma * v_next_t * (1 - done_t) - v_t
// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1};  Vhat = A + v
GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<double>& next_values, const std::vector<bool>& dones,
              double gamma, double lambda);

// Per-dimension Gaussian divergence of predicted (hat) against target (bar):
// 0.5 * sum_i( log(s2hat/s2bar) + (s2bar + (mubar-muhat)^2)/s2hat - 1 )
double gaussian_divergence(const std::vector<double>& mu_hat, const std::vector<double>& lv_hat,
                           const std::vector<double>& mu_bar, const std::vector<double>& lv_bar);

// lambda' = clip(lambda * (g_rl / (g_aux + eps))^eta, lo, hi)
double gradnorm_update(double lambda, double g_rl, double g_aux, double eta, double eps,
                       double lo, double hi);

// target <- beta * target + (1 - beta) * online, elementwise
void ema_update(std::vector<Mat>& target, const std::vector<Mat>& online, double beta);

// ---- model ----

struct LatentGaussian {
  std::vector<double> mu;
  std::vector<double> logvar;
};

struct StepRecord {
  Mat obs;       // L x d_h window at decision time
  Mat next_obs;  // window after the step
  int action = 0;
  double reward = 0.0;
  std::vector<double> eps;  // reparameterization noise used at collection
  double logp_old = 0.0;
  bool done = false;
  std::vector<bool> up_mask;
};
using Trajectory = std::vector<StepRecord>;

struct TrainReport {
  double loss_pi = 0.0;
  double loss_v = 0.0;
  double entropy = 0.0;
  double loss_aux = 0.0;
  double lambda = 0.0;
  double g_rl = 0.0;
  double g_aux = 0.0;
  double total = 0.0;
  bool aborted = false;  // non-finite loss: parameters untouched
};

enum class ActMode { Sample, Greedy };

struct ActResult {
  bool ok = false;  // false: every path masked
  int action = -1;
  double logp = 0.0;
  double value = 0.0;
  std::vector<double> eps;
  LatentGaussian latent;
};

// Self-attention probabilistic encoder + PPO + self-predictive auxiliary
// loss, GradNorm balancing, EMA targets. One shared policy serves all UEs.
class GpaspModel {
 public:
  GpaspModel(const GpaspConfig& cfg, int num_paths);

  int obs_rows() const { return cfg_.history_len; }
  int obs_cols() const { return d_h_; }
  int num_paths() const { return M_; }
  const GpaspConfig& config() const { return cfg_; }

  // Encoder forward (online weights), no gradient bookkeeping.
  LatentGaussian encode(const Mat& obs) const;

  // Collection: online encoder, target policy (Sample) or online policy
  // (Greedy, z = mu). Down paths are masked out of the categorical.
  ActResult act(const Mat& obs, const std::vector<bool>& up, ActMode mode, Rng& rng) const;

  // One joint descent step on the batch (GradNorm before, EMA after).
  TrainReport train_step(const std::vector<Trajectory>& batch);

  double gradnorm_lambda() const { return lambda_; }
  void set_gradnorm_lambda(double l) { lambda_ = l; }

  void save_checkpoint(const std::string& path) const;
  static GpaspModel load_checkpoint(const std::string& path);

  // parameter access for tests / EMA verification
  struct ParamEntry {
    std::string name;
    int group;  // 0 encoder(phi) 1 policy(nu) 2 value(omega) 3 transition(theta)
    Mat value;
    Mat grad;
  };
  std::vector<ParamEntry>& params() { return params_; }
  const std::vector<ParamEntry>& params() const { return params_; }
  std::vector<Mat>& targets() { return target_; }
  const std::vector<Mat>& targets() const { return target_; }

  // Exposed for the decision-latency comparison and tests.
  struct PolicyEval {
    std::vector<double> logits;
    double value = 0.0;
  };
  PolicyEval policy_on_latent(const std::vector<double>& z, bool use_target_policy) const;

 private:
  struct EncVars {
    ad::Tape::Var mu;
    ad::Tape::Var logvar;
  };
  // builds the encoder subgraph; bind=true binds online parameters (grads
  // flow), bind=false uses the given weight set as constants
  EncVars encode_on_tape(ad::Tape& t, ad::Tape::Var h, bool bind,
                         const std::vector<Mat>* weights) const;
  ad::Tape::Var mlp_on_tape(ad::Tape& t, ad::Tape::Var x, int first, int count, bool bind,
                            const std::vector<Mat>* weights) const;
  ad::Tape::Var weight(ad::Tape& t, int idx, bool bind, const std::vector<Mat>* weights) const;

  int find(const std::string& name) const;
  std::vector<Mat> values_snapshot() const;
  double group_grad_norm(int group) const;

  GpaspConfig cfg_;
  int M_;
  int d_h_;
  std::vector<ParamEntry> params_;
  std::vector<Mat> target_;    // aligned with params_ (theta entries unused)
  std::vector<Mat> velocity_;  // momentum state
  double lambda_;

  // cached parameter indices
  std::vector<int> wq_, wk_, wv_;
  int wo_ = -1, q_ = -1;
  int enc_mlp_ = -1;  // first index of encoder MLP chain
  int emu_w_ = -1, emu_b_ = -1, elv_w_ = -1, elv_b_ = -1;
  int pol_ = -1, pol_out_w_ = -1, pol_out_b_ = -1;
  int val_ = -1, val_out_w_ = -1, val_out_b_ = -1;
  int trans_ = -1, tmu_w_ = -1, tmu_b_ = -1, tlv_w_ = -1, tlv_b_ = -1;
};

}  // namespace saginmp
