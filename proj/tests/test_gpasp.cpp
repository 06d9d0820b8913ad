#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "saginmp/gpasp.hpp"
#include "support/fd_check.hpp"

using namespace saginmp;
using namespace saginmp::testing;
using ad::Tape;

namespace {

GpaspConfig tiny_cfg() {
  GpaspConfig g;
  g.history_len = 3;
  g.heads = 2;
  g.head_dim = 4;
  g.attn_dim = 6;
  g.latent_dim = 4;
  g.hidden = 8;
  g.epochs = 1;
  return g;
}

Mat random_obs(Rng& rng, const GpaspModel& m) {
  return random_mat(rng, m.obs_rows(), m.obs_cols(), 0.0, 1.0);
}

Trajectory make_trajectory(Rng& rng, GpaspModel& model, int len) {
  Trajectory tr;
  const std::vector<bool> up(model.num_paths(), true);
  for (int i = 0; i < len; ++i) {
    StepRecord s;
    s.obs = random_obs(rng, model);
    s.next_obs = random_obs(rng, model);
    const ActResult ar = model.act(s.obs, up, ActMode::Sample, rng);
    REQUIRE(ar.ok);
    s.action = ar.action;
    s.eps = ar.eps;
    s.logp_old = ar.logp;
    s.reward = rng.uniform(-1.0, 1.0);
    s.done = i + 1 == len;
    s.up_mask = up;
    tr.push_back(std::move(s));
  }
  return tr;
}

int out_bias_index(const GpaspModel& m, const std::string& name) {
  for (size_t i = 0; i < m.params().size(); ++i)
    if (m.params()[i].name == name) return static_cast<int>(i);
  REQUIRE(false);
  return -1;
}

}  // namespace

TEST_SUITE("gpasp") {

TEST_CASE("reparameterize: zero noise returns the mean, unit noise adds one std") {
  CHECK(reparameterize({1.5}, {0.0}, {0.0})[0] == doctest::Approx(1.5));
  CHECK(reparameterize({1.5}, {0.0}, {1.0})[0] == doctest::Approx(2.5));
  const double lv = 0.6;
  CHECK(reparameterize({0.0}, {lv}, {2.0})[0] == doctest::Approx(2.0 * std::exp(0.5 * lv)));
}

TEST_CASE("reparameterize gradients match finite differences") {
  Rng rng(5);
  Mat eps = random_mat(rng, 1, 4);
  const FdReport rep = fd_check(
      [&](Tape& t, const std::vector<Tape::Var>& v) {
        // z = mu + exp(0.5 lv) . eps
        const Tape::Var sigma = t.exp_(t.scale(v[1], 0.5));
        const Tape::Var z = t.add(v[0], t.mul(sigma, t.leaf(eps)));
        Rng wrng(9);
        Mat w = random_mat(wrng, 1, 4);
        return t.sum(t.mul(z, t.leaf(std::move(w))));
      },
      {random_mat(rng, 1, 4), random_mat(rng, 1, 4)},
      1e-4);
  CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("gae: base case, lambda zero, and brute-force expansion") {
  SUBCASE("single step episode") {
    const GaeResult g = gae({2.0}, {0.5}, {1.0}, {true}, 0.9, 0.8);
    CHECK(g.advantage[0] == doctest::Approx(2.0 - 0.5));  // done zeroes the bootstrap
    const GaeResult g2 = gae({2.0}, {0.5}, {1.0}, {false}, 0.9, 0.8);
    CHECK(g2.advantage[0] == doctest::Approx(2.0 + 0.9 * 1.0 - 0.5));
  }
  SUBCASE("lambda = 0 reduces to the one-step TD error") {
    Rng rng(2);
    const int n = 6;
    std::vector<double> r(n), v(n), nv(n);
    std::vector<bool> d(n, false);
    d[n - 1] = true;
    for (int i = 0; i < n; ++i) {
      r[i] = rng.uniform(-1, 1);
      v[i] = rng.uniform(-1, 1);
      nv[i] = rng.uniform(-1, 1);
    }
    const GaeResult g = gae(r, v, nv, d, 0.95, 0.0);
    for (int i = 0; i < n; ++i) {
      const double delta = r[i] + (d[i] ? 0.0 : 0.95 * nv[i]) - v[i];
      CHECK(g.advantage[i] == doctest::Approx(delta));
    }
  }
  SUBCASE("random episodes match the direct summation oracle to 1e-10") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      const int n = 1 + static_cast<int>(rng.uniform_index(10));
      std::vector<double> r(n), v(n), nv(n);
      std::vector<bool> d(n, false);
      d[n - 1] = true;
      for (int i = 0; i < n; ++i) {
        r[i] = rng.uniform(-2, 2);
        v[i] = rng.uniform(-2, 2);
        nv[i] = rng.uniform(-2, 2);
      }
      const double gamma = rng.uniform(0.5, 0.99), lam = rng.uniform(0.0, 1.0);
      const GaeResult g = gae(r, v, nv, d, gamma, lam);
      for (int t0 = 0; t0 < n; ++t0) {
        double want = 0.0, w = 1.0;
        for (int k = t0; k < n; ++k) {
          const double delta = r[k] + (d[k] ? 0.0 : gamma * nv[k]) - v[k];
          want += w * delta;
          if (d[k]) break;
          w *= gamma * lam;
        }
        CHECK(std::fabs(g.advantage[t0] - want) < 1e-10);
        CHECK(g.value_target[t0] == doctest::Approx(g.advantage[t0] + v[t0]));
      }
    }
  }
}

TEST_CASE("gaussian divergence: zero iff equal, worked value, nonnegative") {
  CHECK(gaussian_divergence({0.3, -1.0}, {0.2, 0.5}, {0.3, -1.0}, {0.2, 0.5}) ==
        doctest::Approx(0.0));
  // unit gap, unit variances, one dimension
  CHECK(gaussian_divergence({0.0}, {0.0}, {1.0}, {0.0}) == doctest::Approx(0.5));
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> mh = {rng.uniform(-3, 3)}, lh = {rng.uniform(-2, 2)};
    std::vector<double> mb = {rng.uniform(-3, 3)}, lb = {rng.uniform(-2, 2)};
    CHECK(gaussian_divergence(mh, lh, mb, lb) >= -1e-12);
  }
}

TEST_CASE("gradnorm update: fixed point, worked value, clamping") {
  CHECK(gradnorm_update(0.7, 2.0, 2.0, 0.5, 0.0, 0.001, 10.0) == doctest::Approx(0.7));
  CHECK(gradnorm_update(1.0, 4.0, 1.0, 0.5, 0.0, 0.001, 10.0) == doctest::Approx(2.0));
  CHECK(gradnorm_update(1.0, 5.0, 0.0, 1.0, 1e-8, 0.001, 10.0) == doctest::Approx(10.0));
  Rng rng(9);
  double lam = 1.0;
  for (int i = 0; i < 2000; ++i) {
    lam = gradnorm_update(lam, rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0.1, 1.0),
                          1e-8, 0.001, 10.0);
    CHECK(lam >= 0.001);
    CHECK(lam <= 10.0);
  }
}

TEST_CASE("ema update endpoints and arithmetic") {
  std::vector<Mat> target = {Mat::from(1, 2, {0.0, 2.0})};
  const std::vector<Mat> online = {Mat::from(1, 2, {1.0, 4.0})};
  SUBCASE("beta = 0 copies online") {
    ema_update(target, online, 0.0);
    CHECK(target[0].a[0] == doctest::Approx(1.0));
    CHECK(target[0].a[1] == doctest::Approx(4.0));
  }
  SUBCASE("beta = 1 freezes the target") {
    ema_update(target, online, 1.0);
    CHECK(target[0].a[0] == doctest::Approx(0.0));
  }
  SUBCASE("beta = 0.9 takes a tenth of the online value") {
    ema_update(target, online, 0.9);
    CHECK(target[0].a[0] == doctest::Approx(0.1));
  }
  SUBCASE("shape mismatch is rejected") {
    std::vector<Mat> bad = {Mat::zeros(2, 2)};
    CHECK_THROWS_AS(ema_update(bad, online, 0.5), std::invalid_argument);
  }
}

TEST_CASE("encoder: pooled output of identical positions ignores the query weights") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel a(cfg, 2);
  GpaspModel b(cfg, 2);  // same seed: identical weights
  // perturb only the pooling query of b
  for (auto& p : b.params()) {
    if (p.name == "enc.q")
      for (auto& x : p.value.a) x += 0.7;
  }
  Mat h(cfg.history_len, a.obs_cols());
  Rng rng(4);
  std::vector<double> row(a.obs_cols());
  for (auto& x : row) x = rng.uniform(0.0, 1.0);
  for (int i = 0; i < cfg.history_len; ++i)
    for (int j = 0; j < a.obs_cols(); ++j) h(i, j) = row[j];
  const LatentGaussian ga = a.encode(h);
  const LatentGaussian gb = b.encode(h);
  for (size_t i = 0; i < ga.mu.size(); ++i) {
    CHECK(ga.mu[i] == doctest::Approx(gb.mu[i]).epsilon(1e-12));
    CHECK(ga.logvar[i] == doctest::Approx(gb.logvar[i]).epsilon(1e-12));
  }
}

TEST_CASE("encoder with a single position reduces to a plain feed-forward map") {
  GpaspConfig cfg = tiny_cfg();
  cfg.history_len = 1;
  GpaspModel m(cfg, 2);
  Rng rng(8);
  const Mat h = random_mat(rng, 1, m.obs_cols(), 0.0, 1.0);

  // hand-built reference: softmax over one position is 1, so
  // pooled = concat_k(head_k) Wo with head_k = h Wv_k
  auto val = [&](const std::string& name) -> const Mat& {
    for (const auto& p : m.params())
      if (p.name == name) return p.value;
    throw std::logic_error("missing " + name);
  };
  Mat concat(1, cfg.heads * cfg.head_dim);
  for (int k = 0; k < cfg.heads; ++k) {
    const Mat head = matmul(h, val("enc.wv" + std::to_string(k)));
    for (int j = 0; j < cfg.head_dim; ++j) concat(0, k * cfg.head_dim + j) = head(0, j);
  }
  Mat x = matmul(concat, val("enc.wo"));
  for (int l = 1; l <= 2; ++l) {
    x = matmul(x, val(l == 1 ? "enc.w1" : "enc.w2"));
    const Mat& bias = val(l == 1 ? "enc.b1" : "enc.b2");
    for (int j = 0; j < x.cols; ++j) x(0, j) = std::tanh(x(0, j) + bias(0, j));
  }
  Mat mu = matmul(x, val("enc.mu_w"));
  for (int j = 0; j < mu.cols; ++j) mu(0, j) += val("enc.mu_b")(0, j);

  const LatentGaussian g = m.encode(h);
  for (int j = 0; j < mu.cols; ++j) CHECK(g.mu[j] == doctest::Approx(mu(0, j)).epsilon(1e-12));
  for (double lv : g.logvar) {
    CHECK(lv >= cfg.logvar_min);
    CHECK(lv <= cfg.logvar_max);
  }
}

TEST_CASE("act: greedy argmax, masking, and sampling frequencies") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel m(cfg, 3);
  // zero the policy weights so the output bias fixes the logits exactly;
  // keep the targets in sync so Sample mode sees the same logits
  for (size_t i = 0; i < m.params().size(); ++i) {
    auto& p = m.params()[i];
    if (p.name.rfind("pol.", 0) == 0) {
      for (auto& x : p.value.a) x = 0.0;
      m.targets()[i] = p.value;
    }
  }
  auto& bias = m.params()[out_bias_index(m, "pol.out_b")];
  bias.value.a = {0.0, 5.0, 0.0};
  m.targets()[out_bias_index(m, "pol.out_b")].a = {0.0, 5.0, 0.0};

  Rng rng(17);
  const Mat h = random_mat(rng, cfg.history_len, m.obs_cols(), 0.0, 1.0);

  SUBCASE("greedy picks the dominant logit") {
    const ActResult ar = m.act(h, {true, true, true}, ActMode::Greedy, rng);
    REQUIRE(ar.ok);
    CHECK(ar.action == 1);
  }
  SUBCASE("all paths down yields the no-path result") {
    const ActResult ar = m.act(h, {false, false, false}, ActMode::Greedy, rng);
    CHECK_FALSE(ar.ok);
  }
  SUBCASE("masked paths are never selected") {
    for (int i = 0; i < 10000; ++i) {
      const ActResult ar = m.act(h, {true, false, true}, ActMode::Sample, rng);
      REQUIRE(ar.ok);
      REQUIRE(ar.action != 1);
    }
  }
  SUBCASE("sampling frequencies match the softmax within 3 sigma") {
    bias.value.a = {0.3, -0.2, 1.0};
    m.targets()[out_bias_index(m, "pol.out_b")].a = {0.3, -0.2, 1.0};
    const int n = 100000;
    std::vector<int> count(3, 0);
    for (int i = 0; i < n; ++i) {
      const ActResult ar = m.act(h, {true, true, true}, ActMode::Sample, rng);
      ++count[ar.action];
    }
    // exact softmax oracle over the bias logits
    const double logits[3] = {0.3, -0.2, 1.0};
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    for (int k = 0; k < 3; ++k) {
      const double p = std::exp(logits[k]) / z;
      const double sigma = std::sqrt(n * p * (1.0 - p));
      CHECK(std::fabs(count[k] - n * p) < 3.0 * sigma);
    }
  }
}

TEST_CASE("train_step: zero learning rate reports losses without touching parameters") {
  GpaspConfig cfg = tiny_cfg();
  cfg.lr = 0.0;
  GpaspModel m(cfg, 2);
  Rng rng(22);
  const std::vector<Trajectory> batch = {make_trajectory(rng, m, 6)};
  const std::vector<Mat> before = [&] {
    std::vector<Mat> v;
    for (const auto& p : m.params()) v.push_back(p.value);
    return v;
  }();
  const TrainReport rep = m.train_step(batch);
  CHECK_FALSE(rep.aborted);
  CHECK(std::isfinite(rep.loss_pi));
  CHECK(std::isfinite(rep.loss_aux));
  CHECK(rep.g_rl >= 0.0);
  for (size_t i = 0; i < before.size(); ++i)
    for (int k = 0; k < before[i].size(); ++k)
      CHECK(m.params()[i].value.a[k] == before[i].a[k]);
}

TEST_CASE("train_step is deterministic from identical state and batch") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel a(cfg, 2);
  GpaspModel b(cfg, 2);
  Rng rng1(33), rng2(33);
  const std::vector<Trajectory> batch1 = {make_trajectory(rng1, a, 8)};
  const std::vector<Trajectory> batch2 = {make_trajectory(rng2, b, 8)};
  a.train_step(batch1);
  b.train_step(batch2);
  for (size_t i = 0; i < a.params().size(); ++i)
    for (int k = 0; k < a.params()[i].value.size(); ++k)
      CHECK(a.params()[i].value.a[k] == b.params()[i].value.a[k]);
}

TEST_CASE("targets move only by the EMA rule (stop-gradient)") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel m(cfg, 2);
  Rng rng(44);
  const std::vector<Trajectory> batch = {make_trajectory(rng, m, 5)};
  const std::vector<Mat> targets_before = m.targets();
  m.train_step(batch);
  for (size_t i = 0; i < m.params().size(); ++i) {
    if (m.params()[i].group == 3) continue;  // transition model has no target
    for (int k = 0; k < m.targets()[i].size(); ++k) {
      const double want = cfg.ema_beta * targets_before[i].a[k] +
                          (1.0 - cfg.ema_beta) * m.params()[i].value.a[k];
      CHECK(m.targets()[i].a[k] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("perturbing the target encoder changes the aux loss but receives no update") {
  GpaspConfig cfg = tiny_cfg();
  cfg.lr = 0.0;
  cfg.ema_beta = 1.0;  // freeze targets so the only influence is through the loss value
  GpaspModel a(cfg, 2);
  GpaspModel b(cfg, 2);
  for (size_t i = 0; i < b.params().size(); ++i) {
    if (b.params()[i].group == 0)
      for (auto& x : b.targets()[i].a) x += 0.4;
  }
  Rng rng1(55), rng2(55);
  const std::vector<Trajectory> b1 = {make_trajectory(rng1, a, 5)};
  const std::vector<Trajectory> b2 = {make_trajectory(rng2, b, 5)};
  const std::vector<Mat> tb = b.targets();
  const TrainReport ra = a.train_step(b1);
  const TrainReport rb = b.train_step(b2);
  CHECK(ra.loss_aux != doctest::Approx(rb.loss_aux).epsilon(1e-12));
  for (size_t i = 0; i < b.params().size(); ++i)
    for (int k = 0; k < tb[i].size(); ++k) CHECK(b.targets()[i].a[k] == tb[i].a[k]);
}

TEST_CASE("non-finite losses abort the step and leave parameters untouched") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel m(cfg, 2);
  Rng rng(77);
  std::vector<Trajectory> batch = {make_trajectory(rng, m, 4)};
  batch[0][1].reward = std::numeric_limits<double>::infinity();
  const std::vector<Mat> before = [&] {
    std::vector<Mat> v;
    for (const auto& p : m.params()) v.push_back(p.value);
    return v;
  }();
  const TrainReport rep = m.train_step(batch);
  CHECK(rep.aborted);
  for (size_t i = 0; i < before.size(); ++i)
    for (int k = 0; k < before[i].size(); ++k)
      CHECK(m.params()[i].value.a[k] == before[i].a[k]);
}

TEST_CASE("checkpoints round-trip every parameter bit-for-bit") {
  GpaspConfig cfg = tiny_cfg();
  GpaspModel m(cfg, 2);
  Rng rng(66);
  m.train_step({make_trajectory(rng, m, 6)});

  const std::string path =
      (std::filesystem::temp_directory_path() / "saginmp_ckpt_test.bin").string();
  m.save_checkpoint(path);
  const GpaspModel loaded = GpaspModel::load_checkpoint(path);
  REQUIRE(loaded.params().size() == m.params().size());
  for (size_t i = 0; i < m.params().size(); ++i) {
    CHECK(loaded.params()[i].name == m.params()[i].name);
    for (int k = 0; k < m.params()[i].value.size(); ++k) {
      CHECK(loaded.params()[i].value.a[k] == m.params()[i].value.a[k]);
      CHECK(loaded.targets()[i].a[k] == m.targets()[i].a[k]);
    }
  }
  CHECK(loaded.gradnorm_lambda() == m.gradnorm_lambda());
  std::filesystem::remove(path);
}

}  // TEST_SUITE
