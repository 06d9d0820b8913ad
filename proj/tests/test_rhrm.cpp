#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "doctest.h"
#include "saginmp/rhrm.hpp"
#include "saginmp/rng.hpp"

using namespace saginmp;

namespace {
RhrmConfig defaults() { return RhrmConfig{}; }  // alpha0=0.1 mul0=2 thr0=3 n=5 W=20
}

TEST_SUITE("rhrm") {

TEST_CASE("first observation initializes srwd=r, dev=0.5r and continues") {
  RewardMonitor mon(defaults());
  CHECK(mon.observe(10.0) == MonitorDecision::Continue);
  CHECK(mon.srwd() == 10.0);  // exact
  CHECK(mon.dev() == 5.0);    // exact
  CHECK(mon.cnt() == 0);
}

TEST_CASE("a constant reward stream never escalates over 1e4 observations") {
  RewardMonitor mon(defaults());
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(mon.observe(10.0) == MonitorDecision::Continue);
  }
  // once the deviation has fully decayed, the adaptive knobs sit at their
  // baselines exactly (F = 0)
  CHECK(mon.fluctuation() == 0.0);
  CHECK(mon.alpha() == defaults().alpha0);
  CHECK(mon.mul() == defaults().mul0);
  CHECK(mon.thr() == defaults().thr0);
}

TEST_CASE("a step change escalates within thr + n observations (hand-simulated trace)") {
  RewardMonitor mon(defaults());
  for (int i = 0; i < 40; ++i) REQUIRE(mon.observe(10.0) == MonitorDecision::Continue);
  int fired_at = -1;
  MonitorDecision fired = MonitorDecision::Continue;
  for (int j = 1; j <= 30; ++j) {
    const MonitorDecision d = mon.observe(2.0);
    if (d != MonitorDecision::Continue) {
      fired_at = j;
      fired = d;
      break;
    }
  }
  // frozen from an independent hand-execution of the monitor recursion with
  // the default parameters: the 4th post-step observation fires, mildly
  REQUIRE(fired_at == 4);
  CHECK(fired == MonitorDecision::LightRefit);
  // and within the generic bound thr + n (thr <= 2*thr0)
  CHECK(fired_at <= static_cast<int>(2 * defaults().thr0 + defaults().min_samples));
  CHECK(mon.cnt() == 0);  // escalation resets the counter
}

TEST_CASE("severe relative deviations escalate to full retraining") {
  RhrmConfig cfg = defaults();
  RewardMonitor mon(cfg);
  for (int i = 0; i < 40; ++i) mon.observe(1.0);
  // collapse far below the reference: dev/srwd saturates past lambda before
  // the counter crosses the threshold
  MonitorDecision last = MonitorDecision::Continue;
  for (int j = 0; j < 40 && last == MonitorDecision::Continue; ++j) last = mon.observe(-5.0);
  CHECK(last == MonitorDecision::FullRetrain);
}

TEST_CASE("reset restores the fresh-monitor behavior and keeps parameters") {
  RhrmConfig cfg = defaults();
  cfg.mul0 = 3.5;
  RewardMonitor a(cfg);
  for (int i = 0; i < 25; ++i) a.observe(5.0 + (i % 3));
  a.reset();
  RewardMonitor fresh(cfg);
  const MonitorDecision da = a.observe(7.0);
  const MonitorDecision df = fresh.observe(7.0);
  CHECK(da == df);
  CHECK(da == MonitorDecision::Continue);  // warm-up gate
  CHECK(a.srwd() == fresh.srwd());
  CHECK(a.dev() == fresh.dev());
  CHECK(a.config().mul0 == 3.5);
}

TEST_CASE("counter moves one step at a time and passes through zero on sign flips") {
  Rng rng(13);
  RewardMonitor mon(defaults());
  long long prev = 0;
  for (int i = 0; i < 5000; ++i) {
    const double r = rng.uniform(0.0, 20.0);
    mon.observe(r);
    const long long c = mon.cnt();
    CHECK(std::llabs(c - prev) <= 1 + std::llabs(prev));  // either +-1 or a reset toward 0
    const bool up_ok = c >= 0 ? c <= prev + 1 : c == -1;
    const bool dn_ok = c <= 0 ? c >= prev - 1 : c == 1;
    if (prev > 0) CHECK(up_ok);
    if (prev < 0) CHECK(dn_ok);
    prev = c;
  }
}

TEST_CASE("escalation needs more than thr0 consecutive out-of-band observations") {
  RewardMonitor mon(defaults());
  for (int i = 0; i < 40; ++i) mon.observe(10.0);
  int out_of_band = 0;
  for (int j = 0; j < 30; ++j) {
    const MonitorDecision d = mon.observe(2.0);
    ++out_of_band;
    if (d != MonitorDecision::Continue) break;
  }
  CHECK(out_of_band > static_cast<int>(defaults().thr0));
}

TEST_CASE("larger fluctuation tightens the band multiplier") {
  RhrmConfig cfg = defaults();
  // mul = mul0 (1 - F) is monotone by construction; exercise it through the
  // public state after quiet vs noisy streams
  RewardMonitor quiet(cfg), noisy(cfg);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    quiet.observe(10.0);
    noisy.observe(10.0 + rng.uniform(-6.0, 6.0));
  }
  CHECK(noisy.fluctuation() > quiet.fluctuation());
  CHECK(noisy.mul() < quiet.mul());
  CHECK(noisy.thr() > quiet.thr());
}

TEST_CASE("non-finite rewards are rejected") {
  RewardMonitor mon(defaults());
  CHECK_THROWS_AS(mon.observe(std::nan("")), std::invalid_argument);
}

}  // TEST_SUITE
