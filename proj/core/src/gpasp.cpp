#include "saginmp/gpasp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace saginmp {

using ad::Tape;

// ---------------- pure pieces ----------------

std::vector<double> reparameterize(const std::vector<double>& mu,
                                   const std::vector<double>& logvar,
                                   const std::vector<double>& eps) {
  if (mu.size() != logvar.size() || mu.size() != eps.size())
    throw std::invalid_argument("reparameterize: dimension mismatch");
  std::vector<double> z(mu.size());
  for (size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
  return z;
}

GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<double>& next_values, const std::vector<bool>& dones,
              double gamma, double lambda) {
  const size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || dones.size() != n)
    throw std::invalid_argument("gae: length mismatch");
  GaeResult out;
  out.advantage.assign(n, 0.0);
  out.value_target.assign(n, 0.0);
  double acc = 0.0;
  for (size_t k = n; k-- > 0;) {
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_values[k] * not_done - values[k];
    acc = delta + gamma * lambda * not_done * acc;
    out.advantage[k] = acc;
    out.value_target[k] = acc + values[k];
  }
  return out;
}

double gaussian_divergence(const std::vector<double>& mu_hat, const std::vector<double>& lv_hat,
                           const std::vector<double>& mu_bar, const std::vector<double>& lv_bar) {
  if (mu_hat.size() != lv_hat.size() || mu_hat.size() != mu_bar.size() ||
      mu_hat.size() != lv_bar.size())
    throw std::invalid_argument("gaussian_divergence: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < mu_hat.size(); ++i) {
    const double var_hat = std::exp(lv_hat[i]);
    const double var_bar = std::exp(lv_bar[i]);
    const double dmu = mu_bar[i] - mu_hat[i];
    s += lv_hat[i] - lv_bar[i] + (var_bar + dmu * dmu) / var_hat - 1.0;
  }
  return 0.5 * s;
}

double gradnorm_update(double lambda, double g_rl, double g_aux, double eta, double eps,
                       double lo, double hi) {
  const double ratio = g_rl / (g_aux + eps);
  return std::clamp(lambda * std::pow(ratio, eta), lo, hi);
}

void ema_update(std::vector<Mat>& target, const std::vector<Mat>& online, double beta) {
  if (target.size() != online.size())
    throw std::invalid_argument("ema_update: parameter count mismatch");
  for (size_t i = 0; i < target.size(); ++i) {
    if (!target[i].same_shape(online[i]))
      throw std::invalid_argument("ema_update: shape mismatch");
    for (int k = 0; k < target[i].size(); ++k)
      target[i].a[k] = beta * target[i].a[k] + (1.0 - beta) * online[i].a[k];
  }
}

// ---------------- model ----------------

namespace {
constexpr const char* kCkptMagic = "SAGINMP-GPASP-CKPT-1\n";

double xavier_bound(int in, int out) { return std::sqrt(6.0 / (in + out)); }
}  // namespace

int GpaspModel::find(const std::string& name) const {
  for (size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<int>(i);
  throw std::logic_error("gpasp parameter not found: " + name);
}

GpaspModel::GpaspModel(const GpaspConfig& cfg, int num_paths)
    : cfg_(cfg), M_(num_paths), lambda_(cfg.gradnorm_lambda0) {
  if (num_paths < 1) throw std::invalid_argument("GpaspModel: need at least one path");
  d_h_ = 6 * M_ + cfg_.noise_channels;
  const int L = cfg_.history_len;
  (void)L;
  const int K = cfg_.heads, dk = cfg_.head_dim, da = cfg_.attn_dim, dz = cfg_.latent_dim,
            H = cfg_.hidden;

  Rng rng(cfg_.init_seed);
  auto add = [&](const std::string& name, int grp, int r, int c, bool is_bias) {
    ParamEntry e;
    e.name = name;
    e.group = grp;
    e.value = Mat::zeros(r, c);
    e.grad = Mat::zeros(r, c);
    if (!is_bias) {
      const double b = xavier_bound(r, c);
      for (auto& x : e.value.a) x = rng.uniform(-b, b);
    }
    params_.push_back(std::move(e));
    return static_cast<int>(params_.size()) - 1;
  };

  for (int k = 0; k < K; ++k) wq_.push_back(add("enc.wq" + std::to_string(k), 0, d_h_, dk, false));
  for (int k = 0; k < K; ++k) wk_.push_back(add("enc.wk" + std::to_string(k), 0, d_h_, dk, false));
  for (int k = 0; k < K; ++k) wv_.push_back(add("enc.wv" + std::to_string(k), 0, d_h_, dk, false));
  wo_ = add("enc.wo", 0, K * dk, da, false);
  q_ = add("enc.q", 0, d_h_, 1, false);
  enc_mlp_ = add("enc.w1", 0, da, H, false);
  add("enc.b1", 0, 1, H, true);
  add("enc.w2", 0, H, H, false);
  add("enc.b2", 0, 1, H, true);
  emu_w_ = add("enc.mu_w", 0, H, dz, false);
  emu_b_ = add("enc.mu_b", 0, 1, dz, true);
  elv_w_ = add("enc.lv_w", 0, H, dz, false);
  elv_b_ = add("enc.lv_b", 0, 1, dz, true);

  pol_ = add("pol.w1", 1, dz, H, false);
  add("pol.b1", 1, 1, H, true);
  add("pol.w2", 1, H, H, false);
  add("pol.b2", 1, 1, H, true);
  pol_out_w_ = add("pol.out_w", 1, H, M_, false);
  pol_out_b_ = add("pol.out_b", 1, 1, M_, true);

  val_ = add("val.w1", 2, dz, H, false);
  add("val.b1", 2, 1, H, true);
  add("val.w2", 2, H, H, false);
  add("val.b2", 2, 1, H, true);
  val_out_w_ = add("val.out_w", 2, H, 1, false);
  val_out_b_ = add("val.out_b", 2, 1, 1, true);

  trans_ = add("trans.w1", 3, dz + M_, H, false);
  add("trans.b1", 3, 1, H, true);
  add("trans.w2", 3, H, H, false);
  add("trans.b2", 3, 1, H, true);
  tmu_w_ = add("trans.mu_w", 3, H, dz, false);
  tmu_b_ = add("trans.mu_b", 3, 1, dz, true);
  tlv_w_ = add("trans.lv_w", 3, H, dz, false);
  tlv_b_ = add("trans.lv_b", 3, 1, dz, true);

  target_.reserve(params_.size());
  velocity_.reserve(params_.size());
  for (const auto& p : params_) {
    target_.push_back(p.value);
    velocity_.push_back(Mat::zeros(p.value.rows, p.value.cols));
  }
}

Tape::Var GpaspModel::weight(Tape& t, int idx, bool bind, const std::vector<Mat>* weights) const {
  if (bind) return t.param(params_[idx].value, const_cast<Mat*>(&params_[idx].grad));
  const Mat& v = weights ? (*weights)[idx] : params_[idx].value;
  return t.leaf(v);
}

Tape::Var GpaspModel::mlp_on_tape(Tape& t, Tape::Var x, int first, int count, bool bind,
                                  const std::vector<Mat>* weights) const {
  Tape::Var h = x;
  for (int l = 0; l < count; ++l) {
    const Tape::Var w = weight(t, first + 2 * l, bind, weights);
    const Tape::Var b = weight(t, first + 2 * l + 1, bind, weights);
    h = t.tanh_(t.add_rowvec(t.matmul(h, w), b));
  }
  return h;
}

GpaspModel::EncVars GpaspModel::encode_on_tape(Tape& t, Tape::Var h, bool bind,
                                               const std::vector<Mat>* weights) const {
  if (t.val(h).rows != cfg_.history_len || t.val(h).cols != d_h_)
    throw std::invalid_argument("encode: observation window has the wrong shape");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim));
  std::vector<Tape::Var> heads;
  for (int k = 0; k < cfg_.heads; ++k) {
    const Tape::Var qm = t.matmul(h, weight(t, wq_[k], bind, weights));
    const Tape::Var km = t.matmul(h, weight(t, wk_[k], bind, weights));
    const Tape::Var vm = t.matmul(h, weight(t, wv_[k], bind, weights));
    const Tape::Var scores = t.scale(t.matmul(qm, t.transpose(km)), inv_sqrt_dk);
    const Tape::Var attn = t.softmax_rows(scores);
    heads.push_back(t.matmul(attn, vm));
  }
  const Tape::Var att = t.matmul(t.concat_cols(heads), weight(t, wo_, bind, weights));
  // learned-query pooling over positions
  const Tape::Var scores = t.matmul(h, weight(t, q_, bind, weights));  // L x 1
  const Tape::Var beta = t.softmax_rows(t.transpose(scores));          // 1 x L
  const Tape::Var pooled = t.matmul(beta, att);                        // 1 x d_attn
  const Tape::Var hid = mlp_on_tape(t, pooled, enc_mlp_, 2, bind, weights);
  EncVars out;
  out.mu = t.add_rowvec(t.matmul(hid, weight(t, emu_w_, bind, weights)),
                        weight(t, emu_b_, bind, weights));
  out.logvar = t.clamp(t.add_rowvec(t.matmul(hid, weight(t, elv_w_, bind, weights)),
                                    weight(t, elv_b_, bind, weights)),
                       cfg_.logvar_min, cfg_.logvar_max);
  return out;
}

LatentGaussian GpaspModel::encode(const Mat& obs) const {
  Tape t;
  const Tape::Var h = t.leaf(obs);
  const EncVars e = encode_on_tape(t, h, false, nullptr);
  LatentGaussian g;
  g.mu = t.val(e.mu).a;
  g.logvar = t.val(e.logvar).a;
  return g;
}

GpaspModel::PolicyEval GpaspModel::policy_on_latent(const std::vector<double>& z,
                                                    bool use_target_policy) const {
  auto run_mlp = [&](Mat x, int first, int out_w, int out_b, const std::vector<Mat>* src) {
    auto val = [&](int idx) -> const Mat& { return src ? (*src)[idx] : params_[idx].value; };
    for (int l = 0; l < 2; ++l) {
      x = matmul(x, val(first + 2 * l));
      const Mat& b = val(first + 2 * l + 1);
      for (int j = 0; j < x.cols; ++j) x(0, j) = std::tanh(x(0, j) + b(0, j));
    }
    Mat o = matmul(x, val(out_w));
    const Mat& b = val(out_b);
    for (int j = 0; j < o.cols; ++j) o(0, j) += b(0, j);
    return o;
  };
  Mat zm(1, static_cast<int>(z.size()));
  zm.a = z;
  PolicyEval pe;
  const Mat logits =
      run_mlp(zm, pol_, pol_out_w_, pol_out_b_, use_target_policy ? &target_ : nullptr);
  pe.logits = logits.a;
  const Mat v = run_mlp(zm, val_, val_out_w_, val_out_b_, nullptr);  // online value head
  pe.value = v(0, 0);
  return pe;
}

ActResult GpaspModel::act(const Mat& obs, const std::vector<bool>& up, ActMode mode,
                          Rng& rng) const {
  ActResult res;
  if (static_cast<int>(up.size()) != M_)
    throw std::invalid_argument("act: up-mask size must equal the path count");
  bool any_up = false;
  for (bool u : up) any_up = any_up || u;
  if (!any_up) return res;

  const LatentGaussian g = encode(obs);
  const int dz = static_cast<int>(g.mu.size());
  res.latent = g;
  std::vector<double> z;
  if (mode == ActMode::Greedy) {
    z = g.mu;
    res.eps.assign(dz, 0.0);
  } else {
    res.eps.resize(dz);
    for (auto& e : res.eps) e = rng.normal();
    z = reparameterize(g.mu, g.logvar, res.eps);
  }

  const PolicyEval pe = policy_on_latent(z, mode == ActMode::Sample);
  std::vector<double> logits = pe.logits;
  for (int m = 0; m < M_; ++m)
    if (!up[m]) logits[m] = -1e9;

  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  std::vector<double> p(M_);
  for (int m = 0; m < M_; ++m) {
    p[m] = std::exp(logits[m] - mx);
    s += p[m];
  }
  for (auto& v : p) v /= s;

  int a = 0;
  if (mode == ActMode::Greedy) {
    for (int m = 1; m < M_; ++m)
      if (p[m] > p[a]) a = m;
  } else {
    const double u = rng.uniform();
    double acc = 0.0;
    a = M_ - 1;
    for (int m = 0; m < M_; ++m) {
      acc += p[m];
      if (u < acc) {
        a = m;
        break;
      }
    }
    if (!up[a]) {  // numerical tail landed on a masked path: take the first up
      for (int m = 0; m < M_; ++m)
        if (up[m]) {
          a = m;
          break;
        }
    }
  }
  res.ok = true;
  res.action = a;
  res.logp = std::log(std::max(p[a], 1e-300));
  res.value = pe.value;
  return res;
}

std::vector<Mat> GpaspModel::values_snapshot() const {
  std::vector<Mat> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

double GpaspModel::group_grad_norm(int group) const {
  double s = 0.0;
  for (const auto& p : params_) {
    if (p.group != group) continue;
    for (double g : p.grad.a) s += g * g;
  }
  return std::sqrt(s);
}

TrainReport GpaspModel::train_step(const std::vector<Trajectory>& batch) {
  TrainReport rep;
  rep.lambda = lambda_;
  int total = 0;
  for (const auto& tr : batch) total += static_cast<int>(tr.size());
  if (total == 0) throw std::invalid_argument("train_step: empty batch");

  const int dz = cfg_.latent_dim;

  // flatten, preserving per-trajectory GAE boundaries via done flags
  std::vector<const StepRecord*> steps;
  steps.reserve(total);
  std::vector<bool> dones;
  for (const auto& tr : batch) {
    for (size_t i = 0; i < tr.size(); ++i) {
      steps.push_back(&tr[i]);
      dones.push_back(i + 1 == tr.size() ? true : tr[i].done);
    }
  }
  const int T = static_cast<int>(steps.size());

  for (auto& p : params_) p.grad.fill(0.0);

  Tape t;
  // online encoder on every observation, latent rebuilt with the stored noise
  std::vector<Tape::Var> zs;
  zs.reserve(T);
  for (const StepRecord* s : steps) {
    const Tape::Var h = t.leaf(s->obs);
    const EncVars e = encode_on_tape(t, h, true, nullptr);
    Mat eps(1, dz);
    eps.a = s->eps;
    const Tape::Var sigma = t.exp_(t.scale(e.logvar, 0.5));
    zs.push_back(t.add(e.mu, t.mul(sigma, t.leaf(std::move(eps)))));
  }
  const Tape::Var Z = t.stack_rows(zs);

  // value head (in-graph; its forward values also feed GAE)
  const Tape::Var vh = mlp_on_tape(t, Z, val_, 2, true, nullptr);
  const Tape::Var V = t.add_rowvec(t.matmul(vh, weight(t, val_out_w_, true, nullptr)),
                                   weight(t, val_out_b_, true, nullptr));

  // numeric pass: target encoder on next observations, bootstrap values
  std::vector<double> rewards(T), values(T), next_values(T);
  Mat mubar(T, dz), lvbar(T, dz);
  for (int i = 0; i < T; ++i) {
    rewards[i] = steps[i]->reward;
    values[i] = t.val(V)(i, 0);
    Tape tt;
    const Tape::Var hn = tt.leaf(steps[i]->next_obs);
    const EncVars en = encode_on_tape(tt, hn, false, &target_);
    const std::vector<double>& mb = tt.val(en.mu).a;
    const std::vector<double>& lb = tt.val(en.logvar).a;
    for (int j = 0; j < dz; ++j) {
      mubar(i, j) = mb[j];
      lvbar(i, j) = lb[j];
    }
    // z-bar = target mean; bootstrap with the online value head
    next_values[i] = policy_on_latent(mb, false).value;
  }
  const GaeResult g = gae(rewards, values, next_values, dones, cfg_.gamma_disc, cfg_.lambda_gae);

  Mat adv(T, 1), vhat(T, 1), lp_old(T, 1), mask(T, M_), onehot(T, M_);
  std::vector<int> actions(T);
  for (int i = 0; i < T; ++i) {
    adv(i, 0) = g.advantage[i];
    vhat(i, 0) = g.value_target[i];
    lp_old(i, 0) = steps[i]->logp_old;
    actions[i] = steps[i]->action;
    for (int m = 0; m < M_; ++m) {
      const bool up = steps[i]->up_mask.empty() ? true : steps[i]->up_mask[m];
      mask(i, m) = up ? 0.0 : -1e9;
      onehot(i, m) = steps[i]->action == m ? 1.0 : 0.0;
    }
  }

  // policy loss (clipped surrogate), entropy, value loss
  const Tape::Var ph = mlp_on_tape(t, Z, pol_, 2, true, nullptr);
  const Tape::Var logits =
      t.add(t.add_rowvec(t.matmul(ph, weight(t, pol_out_w_, true, nullptr)),
                         weight(t, pol_out_b_, true, nullptr)),
            t.leaf(mask));
  const Tape::Var logp_full = t.log_softmax_rows(logits);
  const Tape::Var logp_a = t.pick_per_row(logp_full, actions);
  const Tape::Var ratio = t.exp_(t.sub(logp_a, t.leaf(std::move(lp_old))));
  const Tape::Var adv_leaf = t.leaf(std::move(adv));
  const Tape::Var surr1 = t.mul(ratio, adv_leaf);
  const Tape::Var surr2 = t.mul(t.clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip), adv_leaf);
  const Tape::Var l_pi = t.neg(t.mean(t.minimum(surr1, surr2)));
  const Tape::Var probs = t.exp_(logp_full);
  const Tape::Var entropy = t.neg(t.mean(t.rowsum(t.mul(probs, logp_full))));
  const Tape::Var l_v = t.scale(t.mean(t.square(t.sub(V, t.leaf(std::move(vhat))))), 0.5);
  const Tape::Var l_rl = t.add(t.add(l_pi, t.scale(l_v, cfg_.value_coef)),
                               t.scale(entropy, -cfg_.entropy_coef));

  // self-predictive auxiliary loss; targets are constants (stop-gradient)
  const Tape::Var x_trans = t.concat_cols({Z, t.leaf(std::move(onehot))});
  const Tape::Var th = mlp_on_tape(t, x_trans, trans_, 2, true, nullptr);
  const Tape::Var muhat = t.add_rowvec(t.matmul(th, weight(t, tmu_w_, true, nullptr)),
                                       weight(t, tmu_b_, true, nullptr));
  const Tape::Var lvhat = t.clamp(t.add_rowvec(t.matmul(th, weight(t, tlv_w_, true, nullptr)),
                                               weight(t, tlv_b_, true, nullptr)),
                                  cfg_.logvar_min, cfg_.logvar_max);
  const Tape::Var lvbar_leaf = t.leaf(std::move(lvbar));
  const Tape::Var mubar_leaf = t.leaf(std::move(mubar));
  const Tape::Var log_ratio = t.sub(lvhat, lvbar_leaf);
  const Tape::Var num = t.add(t.exp_(lvbar_leaf), t.square(t.sub(mubar_leaf, muhat)));
  const Tape::Var per_dim = t.add_scalar(t.add(log_ratio, t.mul(num, t.exp_(t.neg(lvhat)))), -1.0);
  const Tape::Var l_aux = t.scale(t.mean(t.rowsum(per_dim)), 0.5);

  rep.loss_pi = t.val(l_pi).a[0];
  rep.loss_v = t.val(l_v).a[0];
  rep.entropy = t.val(entropy).a[0];
  rep.loss_aux = t.val(l_aux).a[0];

  if (!std::isfinite(rep.loss_pi + rep.loss_v + rep.entropy + rep.loss_aux)) {
    rep.aborted = true;
    rep.total = rep.loss_pi + rep.loss_v - cfg_.entropy_coef * rep.entropy;
    return rep;
  }

  // two backward sweeps give the per-task encoder gradient norms
  t.backward(l_rl);
  rep.g_rl = group_grad_norm(0);
  std::vector<Mat> grl;
  grl.reserve(params_.size());
  for (auto& p : params_) {
    grl.push_back(p.grad);
    p.grad.fill(0.0);
  }
  t.zero_grads();
  t.backward(l_aux);
  rep.g_aux = group_grad_norm(0);

  lambda_ = gradnorm_update(lambda_, rep.g_rl, rep.g_aux, cfg_.gradnorm_eta, cfg_.gradnorm_eps,
                            cfg_.lambda_min, cfg_.lambda_max);
  rep.lambda = lambda_;
  rep.total = rep.loss_pi + cfg_.value_coef * rep.loss_v - cfg_.entropy_coef * rep.entropy +
              lambda_ * rep.loss_aux;

  bool finite = true;
  for (size_t i = 0; i < params_.size(); ++i) {
    for (int k = 0; k < params_[i].grad.size(); ++k) {
      const double gt = grl[i].a[k] + lambda_ * params_[i].grad.a[k];
      if (!std::isfinite(gt)) finite = false;
    }
  }
  if (!finite) {
    rep.aborted = true;
    for (auto& p : params_) p.grad.fill(0.0);
    return rep;
  }

  for (size_t i = 0; i < params_.size(); ++i) {
    for (int k = 0; k < params_[i].grad.size(); ++k) {
      const double gt = grl[i].a[k] + lambda_ * params_[i].grad.a[k];
      if (cfg_.momentum > 0.0) {
        velocity_[i].a[k] = cfg_.momentum * velocity_[i].a[k] + gt;
        params_[i].value.a[k] -= cfg_.lr * velocity_[i].a[k];
      } else {
        params_[i].value.a[k] -= cfg_.lr * gt;
      }
    }
    params_[i].grad.fill(0.0);
  }

  // EMA targets for encoder, policy, value (the transition model has none)
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].group == 3) continue;
    for (int k = 0; k < target_[i].size(); ++k)
      target_[i].a[k] =
          cfg_.ema_beta * target_[i].a[k] + (1.0 - cfg_.ema_beta) * params_[i].value.a[k];
  }
  return rep;
}

// ---------------- checkpoint ----------------

namespace {
void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_mat(std::ofstream& f, const Mat& m) {
  write_u32(f, static_cast<std::uint32_t>(m.rows));
  write_u32(f, static_cast<std::uint32_t>(m.cols));
  f.write(reinterpret_cast<const char*>(m.a.data()),
          static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}
Mat read_mat(std::ifstream& f) {
  const int r = static_cast<int>(read_u32(f));
  const int c = static_cast<int>(read_u32(f));
  Mat m(r, c);
  f.read(reinterpret_cast<char*>(m.a.data()),
         static_cast<std::streamsize>(m.a.size() * sizeof(double)));
  return m;
}
}  // namespace

void GpaspModel::save_checkpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kCkptMagic, static_cast<std::streamsize>(std::strlen(kCkptMagic)));

  nlohmann::json hj;
  hj["num_paths"] = M_;
  hj["history_len"] = cfg_.history_len;
  hj["noise_channels"] = cfg_.noise_channels;
  hj["heads"] = cfg_.heads;
  hj["head_dim"] = cfg_.head_dim;
  hj["attn_dim"] = cfg_.attn_dim;
  hj["latent_dim"] = cfg_.latent_dim;
  hj["hidden"] = cfg_.hidden;
  hj["lr"] = cfg_.lr;
  hj["momentum"] = cfg_.momentum;
  hj["gamma_disc"] = cfg_.gamma_disc;
  hj["lambda_gae"] = cfg_.lambda_gae;
  hj["clip"] = cfg_.clip;
  hj["value_coef"] = cfg_.value_coef;
  hj["entropy_coef"] = cfg_.entropy_coef;
  hj["epochs"] = cfg_.epochs;
  hj["gradnorm_eta"] = cfg_.gradnorm_eta;
  hj["gradnorm_lambda0"] = cfg_.gradnorm_lambda0;
  hj["lambda_min"] = cfg_.lambda_min;
  hj["lambda_max"] = cfg_.lambda_max;
  hj["gradnorm_eps"] = cfg_.gradnorm_eps;
  hj["ema_beta"] = cfg_.ema_beta;
  hj["logvar_min"] = cfg_.logvar_min;
  hj["logvar_max"] = cfg_.logvar_max;
  hj["init_seed"] = cfg_.init_seed;
  const std::string header = hj.dump();
  write_u32(f, static_cast<std::uint32_t>(header.size()));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));

  write_u32(f, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    write_u32(f, static_cast<std::uint32_t>(p.name.size()));
    f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(f, static_cast<std::uint32_t>(p.group));
    write_mat(f, p.value);
  }
  for (const auto& m : target_) write_mat(f, m);
  f.write(reinterpret_cast<const char*>(&lambda_), sizeof(lambda_));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

GpaspModel GpaspModel::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic(std::strlen(kCkptMagic), '\0');
  f.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kCkptMagic) throw std::runtime_error("bad checkpoint magic in " + path);

  const std::uint32_t hlen = read_u32(f);
  std::string header(hlen, '\0');
  f.read(header.data(), hlen);
  const nlohmann::json hj = nlohmann::json::parse(header);

  GpaspConfig cfg;
  cfg.history_len = hj.at("history_len");
  cfg.noise_channels = hj.at("noise_channels");
  cfg.heads = hj.at("heads");
  cfg.head_dim = hj.at("head_dim");
  cfg.attn_dim = hj.at("attn_dim");
  cfg.latent_dim = hj.at("latent_dim");
  cfg.hidden = hj.at("hidden");
  cfg.lr = hj.at("lr");
  cfg.momentum = hj.at("momentum");
  cfg.gamma_disc = hj.at("gamma_disc");
  cfg.lambda_gae = hj.at("lambda_gae");
  cfg.clip = hj.at("clip");
  cfg.value_coef = hj.at("value_coef");
  cfg.entropy_coef = hj.at("entropy_coef");
  cfg.epochs = hj.at("epochs");
  cfg.gradnorm_eta = hj.at("gradnorm_eta");
  cfg.gradnorm_lambda0 = hj.at("gradnorm_lambda0");
  cfg.lambda_min = hj.at("lambda_min");
  cfg.lambda_max = hj.at("lambda_max");
  cfg.gradnorm_eps = hj.at("gradnorm_eps");
  cfg.ema_beta = hj.at("ema_beta");
  cfg.logvar_min = hj.at("logvar_min");
  cfg.logvar_max = hj.at("logvar_max");
  cfg.init_seed = hj.at("init_seed");

  GpaspModel model(cfg, hj.at("num_paths"));
  const std::uint32_t n = read_u32(f);
  if (n != model.params_.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (auto& p : model.params_) {
    const std::uint32_t nl = read_u32(f);
    std::string name(nl, '\0');
    f.read(name.data(), nl);
    const std::uint32_t grp = read_u32(f);
    if (name != p.name || static_cast<int>(grp) != p.group)
      throw std::runtime_error("checkpoint layout mismatch at " + name);
    const Mat m = read_mat(f);
    if (!m.same_shape(p.value)) throw std::runtime_error("checkpoint shape mismatch at " + name);
    p.value = m;
  }
  for (auto& m : model.target_) m = read_mat(f);
  f.read(reinterpret_cast<char*>(&model.lambda_), sizeof(model.lambda_));
  if (!f) throw std::runtime_error("checkpoint truncated: " + path);
  return model;
}

}  // namespace saginmp
