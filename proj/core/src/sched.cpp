#include "saginmp/sched.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saginmp {

FeatureVec make_path_features(const FeatureContext& c) {
  FeatureVec f{};
  f[0] = std::clamp(c.srtt_s / std::max(1e-9, c.srtt_cap_s), 0.0, 1.0);
  f[1] = std::clamp(c.snr_db / std::max(1e-9, c.snr_max_db), 0.0, 1.0);
  f[2] = std::clamp(c.tp_bps / std::max(1.0, c.path_capacity_bps), 0.0, 1.0);
  f[3] = std::clamp((std::floor(c.cwnd) - c.in_flight) / std::max(1.0, c.cwnd_cap), 0.0, 1.0);
  f[4] = c.recent_loss ? 1.0 : 0.0;
  f[5] = c.up ? 1.0 : 0.0;
  f[6] = 1.0;
  return f;
}

PreferenceEstimate::PreferenceEstimate(int dim, double ridge_scale)
    : dim_(dim), ridge_scale_(ridge_scale), g_(dim, dim), v_(dim, 0.0) {}

void PreferenceEstimate::record_feedback(std::span<const double> s, int c, double t_tilde_s) {
  if (!(t_tilde_s > 0.0))
    throw std::invalid_argument("record_feedback: response time must be positive");
  if (static_cast<int>(s.size()) < dim_)
    throw std::invalid_argument("record_feedback: feature vector shorter than the estimator");
  const double y = static_cast<double>(c) / t_tilde_s;
  for (int i = 0; i < dim_; ++i) {
    v_[i] += s[i] * y;
    for (int j = 0; j < dim_; ++j) g_(i, j) += s[i] * s[j];
  }
  ++count_;
  dirty_ = true;
}

std::vector<double> PreferenceEstimate::estimate() const {
  if (!dirty_) return theta_cache_;
  Mat a = g_;
  if (ridge_scale_ > 0.0) {
    double tr = 0.0;
    for (int i = 0; i < dim_; ++i) tr += g_(i, i);
    const double ridge = ridge_scale_ * std::max(tr / dim_, 1.0);
    for (int i = 0; i < dim_; ++i) a(i, i) += ridge;
  }
  theta_cache_ = solve_spd(std::move(a), v_);
  dirty_ = false;
  return theta_cache_;
}

void PreferenceEstimate::decay(double factor) {
  for (auto& x : g_.a) x *= factor;
  for (auto& x : v_) x *= factor;
  dirty_ = true;
}

void PreferenceEstimate::clear() {
  g_.fill(0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  count_ = 0;
  dirty_ = true;
}

int RandomScheduler::select(int, const std::vector<FeatureVec>&, const std::vector<bool>& up,
                            Rng& rng) {
  std::vector<int> ups;
  for (int m = 0; m < static_cast<int>(up.size()); ++m)
    if (up[m]) ups.push_back(m);
  if (ups.empty()) return -1;
  return ups[rng.uniform_index(ups.size())];
}

RoundRobinScheduler::RoundRobinScheduler(int num_ues) : next_(num_ues, 0) {}

int RoundRobinScheduler::select(int ue, const std::vector<FeatureVec>&,
                                const std::vector<bool>& up, Rng&) {
  const int m_count = static_cast<int>(up.size());
  for (int k = 0; k < m_count; ++k) {
    const int m = (next_[ue] + k) % m_count;
    if (up[m]) {
      next_[ue] = (m + 1) % m_count;
      return m;
    }
  }
  return -1;
}

namespace {
int min_srtt_path(const std::vector<FeatureVec>& f, const std::vector<bool>& up) {
  int best = -1;
  for (int m = 0; m < static_cast<int>(up.size()); ++m) {
    if (!up[m]) continue;
    if (best < 0 || f[m][0] < f[best][0]) best = m;
  }
  return best;
}
}  // namespace

int MinRttScheduler::select(int, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
                            Rng&) {
  return min_srtt_path(f, up);
}

NnpeScheduler::NnpeScheduler(int num_ues, const SchedConfig& cfg) : cfg_(cfg) {
  est_.assign(num_ues, PreferenceEstimate(kPathFeatureDim, cfg.ridge_scale));
  recent_.resize(num_ues);
}

int NnpeScheduler::select(int ue, const std::vector<FeatureVec>& f, const std::vector<bool>& up,
                          Rng&) {
  const PreferenceEstimate& e = est_[ue];
  if (e.count() < e.dim()) return min_srtt_path(f, up);  // cold start
  const std::vector<double> theta = e.estimate();
  int best = -1;
  double best_score = 0.0;
  for (int m = 0; m < static_cast<int>(up.size()); ++m) {
    if (!up[m]) continue;
    double s = 0.0;
    for (int i = 0; i < kPathFeatureDim; ++i) s += f[m][i] * theta[i];
    if (best < 0 || s > best_score) {
      best = m;
      best_score = s;
    }
  }
  return best;
}

void NnpeScheduler::on_feedback(int ue, const Feedback& fb) {
  est_[ue].record_feedback(fb.features, fb.c, fb.t_tilde_s);
  auto& ring = recent_[ue];
  ring.push_back(fb);
  while (static_cast<int>(ring.size()) > cfg_.feedback_buffer) ring.pop_front();
}

void NnpeScheduler::on_slot_end() {
  if (!cfg_.decay_enabled) return;
  for (auto& e : est_) e.decay(cfg_.decay);
}

void NnpeScheduler::refit_from_buffer(int ue) {
  est_[ue].clear();
  for (const auto& fb : recent_[ue]) est_[ue].record_feedback(fb.features, fb.c, fb.t_tilde_s);
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, int num_ues,
                                          const SchedConfig& cfg) {
  if (name == "random") return std::make_unique<RandomScheduler>();
  if (name == "rr") return std::make_unique<RoundRobinScheduler>(num_ues);
  if (name == "minrtt") return std::make_unique<MinRttScheduler>();
  if (name == "nnpe") return std::make_unique<NnpeScheduler>(num_ues, cfg);
  throw std::invalid_argument("unknown scheduler '" + name +
                              "' (valid: random, rr, minrtt, nnpe, gpasp)");
}

}  // namespace saginmp
