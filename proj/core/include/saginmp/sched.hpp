#pragma once

#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "saginmp/config.hpp"
#include "saginmp/matrix.hpp"
#include "saginmp/rng.hpp"
#include "saginmp/transport.hpp"

namespace saginmp {

// Normalization inputs for one (UE, path) feature vector. The constants are
// fixed per scenario so the estimator sees scale-stable features.
struct FeatureContext {
  double srtt_s = 0.0;
  double snr_db = 0.0;
  double snr_max_db = 1.0;
  double tp_bps = 0.0;
  double path_capacity_bps = 1.0;
  double cwnd = 1.0;
  double in_flight = 0.0;
  bool recent_loss = false;
  bool up = false;
  double srtt_cap_s = 0.5;
  double cwnd_cap = 256.0;
};

// [srtt, snr, throughput, cwnd headroom, recent loss, up flag, bias 1.0]
FeatureVec make_path_features(const FeatureContext& c);

// Closed-form preference estimator: G = sum S S^T (+ ridge), v = sum S c/t.
class PreferenceEstimate {
 public:
  explicit PreferenceEstimate(int dim = kPathFeatureDim, double ridge_scale = 1e-6);

  // G += S S^T, v += S * (c / t_tilde). Rejects t_tilde <= 0 and feature
  // vectors of the wrong dimension.
  void record_feedback(std::span<const double> s, int c, double t_tilde_s);
  // theta = (G + ridge I)^{-1} v, solved densely.
  std::vector<double> estimate() const;
  void decay(double factor);
  void clear();

  long long count() const { return count_; }
  int dim() const { return dim_; }
  const Mat& gram() const { return g_; }
  const std::vector<double>& moment() const { return v_; }

 private:
  int dim_;
  double ridge_scale_;
  Mat g_;
  std::vector<double> v_;
  long long count_ = 0;
  // theta is a pure function of (G, v); cache it between updates
  mutable std::vector<double> theta_cache_;
  mutable bool dirty_ = true;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual const char* name() const = 0;
  // Picks a path for `ue` given per-path features and up flags; -1 if no
  // path is up.
  virtual int select(int ue, const std::vector<FeatureVec>& features,
                     const std::vector<bool>& up, Rng& rng) = 0;
  virtual void on_feedback(int ue, const Feedback& fb) { (void)ue, (void)fb; }
  virtual void on_slot_end() {}
};

class RandomScheduler : public Scheduler {
 public:
  const char* name() const override { return "random"; }
  int select(int ue, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
             Rng& rng) override;
};

class RoundRobinScheduler : public Scheduler {
 public:
  explicit RoundRobinScheduler(int num_ues);
  const char* name() const override { return "rr"; }
  int select(int ue, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
             Rng& rng) override;

 private:
  std::vector<int> next_;
};

class MinRttScheduler : public Scheduler {
 public:
  const char* name() const override { return "minrtt"; }
  int select(int ue, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
             Rng& rng) override;
};

// NNPE: argmax_m S^m . theta with a minRTT fallback until d_S samples have
// been observed for the UE.
class NnpeScheduler : public Scheduler {
 public:
  NnpeScheduler(int num_ues, const SchedConfig& cfg);
  const char* name() const override { return "nnpe"; }
  int select(int ue, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
             Rng& rng) override;
  void on_feedback(int ue, const Feedback& fb) override;
  void on_slot_end() override;

  PreferenceEstimate& estimate(int ue) { return est_[ue]; }
  // RHRM LightRefit: rebuild (G, v) from the recent feedback ring.
  void refit_from_buffer(int ue);

 private:
  SchedConfig cfg_;
  std::vector<PreferenceEstimate> est_;
  std::vector<std::deque<Feedback>> recent_;
};

// random | rr | minrtt | nnpe. The gpasp adapter is wired by the harness.
std::unique_ptr<Scheduler> make_scheduler(const std::string& name, int num_ues,
                                          const SchedConfig& cfg);

}  // namespace saginmp
