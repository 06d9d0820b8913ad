#include "saginmp/rhrm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saginmp {

namespace {
constexpr double kGuard = 1e-9;  // denominator guard for near-zero references
}

const char* to_string(MonitorDecision d) {
  switch (d) {
    case MonitorDecision::Continue:
      return "continue";
    case MonitorDecision::LightRefit:
      return "light_refit";
    case MonitorDecision::FullRetrain:
      return "full_retrain";
  }
  return "?";
}

RewardMonitor::RewardMonitor(const RhrmConfig& cfg) : cfg_(cfg) { reset(); }

void RewardMonitor::reset() {
  win_.clear();
  srwd_ = 0.0;
  dev_ = 0.0;
  cnt_ = 0;
  arwd_ = 0.0;
  alpha_ = cfg_.alpha0;
  mul_ = cfg_.mul0;
  thr_ = cfg_.thr0;
  fluct_ = 0.0;
}

MonitorDecision RewardMonitor::observe(double rwd) {
  if (!std::isfinite(rwd)) throw std::invalid_argument("RewardMonitor: reward must be finite");
  ++step_;
  bool initialized = false;
  if (win_.empty()) {
    srwd_ = rwd;
    dev_ = 0.5 * rwd;
    cnt_ = 0;
    arwd_ = 0.0;
    alpha_ = cfg_.alpha0;
    mul_ = cfg_.mul0;
    thr_ = cfg_.thr0;
    initialized = true;
  }

  win_.push_back(rwd);
  arwd_ = 0.0;
  for (double v : win_) arwd_ += v;
  arwd_ /= static_cast<double>(win_.size());

  // the init call keeps dev at exactly 0.5*rwd; later calls smooth it
  if (!initialized) dev_ = (1.0 - alpha_) * dev_ + alpha_ * std::fabs(rwd - srwd_);

  MonitorDecision decision = MonitorDecision::Continue;
  if (static_cast<int>(win_.size()) < cfg_.min_samples) {
    if (logging_) log_.push_back({step_, rwd, srwd_, dev_, fluct_, cnt_, decision});
    return decision;
  }

  if (static_cast<int>(win_.size()) >= cfg_.window) {
    win_.pop_front();
    arwd_ = 0.0;
    for (double v : win_) arwd_ += v;
    arwd_ /= static_cast<double>(win_.size());
  }

  fluct_ = std::min(dev_ / std::max(std::fabs(srwd_), kGuard), 1.0);
  alpha_ = cfg_.alpha0 * (1.0 + fluct_);
  mul_ = cfg_.mul0 * (1.0 - fluct_);
  thr_ = cfg_.thr0 * (1.0 + fluct_);

  if (std::fabs(arwd_ - srwd_) / std::max(std::fabs(srwd_), kGuard) < cfg_.delta) {
    srwd_ = (1.0 - cfg_.beta) * srwd_ + cfg_.beta * arwd_;
  }

  if (rwd > arwd_ + mul_ * dev_) {
    if (cnt_ < 0) cnt_ = 0;
    ++cnt_;
  }
  if (rwd < arwd_ - mul_ * dev_) {
    if (cnt_ > 0) cnt_ = 0;
    --cnt_;
  }

  if (std::llabs(cnt_) > thr_) {
    decision = fluct_ < cfg_.lambda_sev ? MonitorDecision::LightRefit
                                        : MonitorDecision::FullRetrain;
    cnt_ = 0;  // otherwise every further sample re-triggers
  }
  if (logging_) log_.push_back({step_, rwd, srwd_, dev_, fluct_, cnt_, decision});
  return decision;
}

}  // namespace saginmp
