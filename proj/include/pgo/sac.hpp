#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgo/checkpoint.hpp"
#include "pgo/diffnet.hpp"
#include "pgo/encoder.hpp"
#include "pgo/env.hpp"
#include "pgo/synth.hpp"

namespace pgo {

struct NetConfig {
  int dense = 512;  ///< width of the input dense layer
  int lstm = 512;   ///< recurrent width
};

namespace detail {

inline dn::Mat to_col(const Eigen::Vector2d& v) {
  dn::Mat m(2, 1);
  m(0, 0) = v(0);
  m(1, 0) = v(1);
  return m;
}

/// Networks consume squashed actions in (-1, 1); replay stores pre-squash.
inline dn::Mat squashed(const Eigen::Vector2d& u) {
  dn::Mat m(2, 1);
  m(0, 0) = std::tanh(u(0));
  m(1, 0) = std::tanh(u(1));
  return m;
}

}  // namespace detail

/**
 * @brief Tanh-Gaussian policy: [s_t ; a_{t-1}] -> dense(ReLU) -> LSTM ->
 * (mu, log_std) heads with log_std clamped to [-20, 2].
 */
struct PolicyNet {
  dn::DenseParams fc;
  dn::LstmParams lstm;
  dn::DenseParams mu;
  dn::DenseParams log_std;

  PolicyNet(const NetConfig& c, const std::string& prefix)
      : fc(prefix + ".fc", c.dense, kStateDim + 2, dn::Act::relu),
        lstm(prefix + ".lstm", c.lstm, c.dense),
        mu(prefix + ".mu", 2, c.lstm, dn::Act::identity),
        log_std(prefix + ".log_std", 2, c.lstm, dn::Act::identity) {}

  void init(Rng& rng) {
    fc.init(rng);
    lstm.init(rng);
    mu.init(rng);
    log_std.init(rng);
  }

  std::vector<dn::ParameterBlock*> blocks() {
    return {&fc.W,  &fc.b,  &lstm.Wx, &lstm.Wh,    &lstm.b,
            &mu.W,  &mu.b,  &log_std.W, &log_std.b};
  }

  struct Out {
    dn::Mat mu, log_std;
  };

  Out step(const dn::Mat& x, dn::LstmState& s) const {
    const dn::Mat h = lstm.step(fc.forward(x), s);
    Out o;
    o.mu = mu.forward(h);
    o.log_std =
        log_std.forward(h).cwiseMax(dn::kLogStdMin).cwiseMin(dn::kLogStdMax);
    return o;
  }

  struct StepIds {
    int mu, log_std, h, c;
  };

  StepIds step_on(dn::Tape& t, int x, int h, int c) const {
    const int d = fc.forward_on(t, x);
    const auto [h2, c2] = lstm.step_on(t, d, h, c);
    StepIds o;
    o.mu = mu.forward_on(t, h2);
    o.log_std =
        t.clamp(log_std.forward_on(t, h2), dn::kLogStdMin, dn::kLogStdMax);
    o.h = h2;
    o.c = c2;
    return o;
  }
};

/**
 * @brief Scalar critic: [s_t ; a_t ; a_{t-1}] -> dense(ReLU) -> LSTM ->
 * linear head.
 */
struct QNet {
  dn::DenseParams fc;
  dn::LstmParams lstm;
  dn::DenseParams out;

  QNet(const NetConfig& c, const std::string& prefix)
      : fc(prefix + ".fc", c.dense, kStateDim + 4, dn::Act::relu),
        lstm(prefix + ".lstm", c.lstm, c.dense),
        out(prefix + ".out", 1, c.lstm, dn::Act::identity) {}

  void init(Rng& rng) {
    fc.init(rng);
    lstm.init(rng);
    out.init(rng);
  }

  std::vector<dn::ParameterBlock*> blocks() {
    return {&fc.W, &fc.b, &lstm.Wx, &lstm.Wh, &lstm.b, &out.W, &out.b};
  }

  void copy_values_from(const QNet& other) {
    fc.W.value = other.fc.W.value;
    fc.b.value = other.fc.b.value;
    lstm.Wx.value = other.lstm.Wx.value;
    lstm.Wh.value = other.lstm.Wh.value;
    lstm.b.value = other.lstm.b.value;
    out.W.value = other.out.W.value;
    out.b.value = other.out.b.value;
  }

  /// Advance the recurrent state with a stored transition's input.
  void advance(const dn::Mat& x, dn::LstmState& s) const {
    lstm.step(fc.forward(x), s);
  }

  /// Evaluate Q on a branch input without advancing the chain state.
  double branch(const dn::Mat& x, const dn::LstmState& s) const {
    dn::LstmState tmp = s;
    const dn::Mat h = lstm.step(fc.forward(x), tmp);
    return out.forward(h)(0, 0);
  }

  std::pair<int, int> advance_on(dn::Tape& t, int x, int h, int c) const {
    return lstm.step_on(t, fc.forward_on(t, x), h, c);
  }

  int branch_on(dn::Tape& t, int x, int h, int c) const {
    const auto [h2, c2] = lstm.step_on(t, fc.forward_on(t, x), h, c);
    (void)c2;
    return out.forward_on(t, h2);
  }
};

struct AgentConfig {
  NetConfig net{};
  double gamma = 1.0;
  double tau = 1e-2;
  double lr = 3e-4;
  int batch = 128;              ///< sequences per update
  double target_entropy = -2.0; ///< -dim(action)
  double init_alpha = 1.0;
  int updates_per_episode = 0;  ///< 0: one per collected env step
  int bptt_window = 0;          ///< 0: full episode
  int replay_capacity = 256;    ///< episodes
  bool twin_critic = true;
  std::uint64_t seed = 0;
};

/// One whole episode; recurrent updates need contiguous sequences.
struct EpisodeRecord {
  std::vector<StateFeatures> features;   ///< length T+1 (s_0 .. s_T)
  std::vector<Eigen::Vector2d> actions;  ///< length T, pre-squash
  std::vector<double> rewards;           ///< length T

  int length() const { return static_cast<int>(actions.size()); }
};

/// Ring of whole episodes with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {}

  void push(EpisodeRecord ep) {
    if (static_cast<int>(episodes_.size()) < capacity_) {
      episodes_.push_back(std::move(ep));
    } else {
      episodes_[next_] = std::move(ep);
      next_ = (next_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return episodes_.size(); }
  const EpisodeRecord& operator[](std::size_t i) const { return episodes_[i]; }

  const EpisodeRecord& sample(Rng& rng) const {
    return episodes_[rng.uniform_int(episodes_.size())];
  }

 private:
  int capacity_;
  std::size_t next_ = 0;
  std::vector<EpisodeRecord> episodes_;
};

struct ActResult {
  Eigen::Vector2d u;  ///< pre-squash action (environment applies tanh)
  double logprob = 0.0;
};

struct UpdateDiagnostics {
  bool skipped = false;
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double alpha = 0.0;
  double mean_logprob = 0.0;
};

/**
 * @brief Recurrent soft actor-critic with a jointly trained encoder.
 *
 * Updates replay whole stored episodes: policy and critic trunks unroll
 * over the stored (state, action) sequence, while fresh-sample
 * evaluations run as branch steps that read the chain's recurrent state
 * without advancing it. Bellman targets come from EMA target critics
 * computed without gradient recording.
 */
class Agent {
 public:
  explicit Agent(const AgentConfig& cfg)
      : cfg_(cfg), policy_(cfg.net, "policy"), q1_(cfg.net, "q1"),
        q2_(cfg.net, "q2"), q1_target_(cfg.net, "q1t"),
        q2_target_(cfg.net, "q2t"),
        log_alpha_("log_alpha", 1, 1) {
    Rng rng(Rng::mix(cfg.seed, 0x5eed));
    encoder_.init(rng);
    policy_.init(rng);
    q1_.init(rng);
    q2_.init(rng);
    q1_target_.copy_values_from(q1_);
    q2_target_.copy_values_from(q2_);
    log_alpha_.value(0, 0) = std::log(cfg.init_alpha);
    opt_policy_ = std::make_unique<dn::AdamOptimizer>(policy_.blocks(), cfg.lr);
    std::vector<dn::ParameterBlock*> qb = q1_.blocks();
    const auto q2b = q2_.blocks();
    qb.insert(qb.end(), q2b.begin(), q2b.end());
    opt_critic_ = std::make_unique<dn::AdamOptimizer>(qb, cfg.lr);
    opt_encoder_ =
        std::make_unique<dn::AdamOptimizer>(encoder_.blocks(), cfg.lr);
    opt_alpha_ = std::make_unique<dn::AdamOptimizer>(
        std::vector<dn::ParameterBlock*>{&log_alpha_}, cfg.lr);
  }

  // The optimizers capture parameter-block addresses, so the agent must
  // stay where it was constructed.
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const AgentConfig& config() const { return cfg_; }
  EncoderParams& encoder() { return encoder_; }
  const EncoderParams& encoder() const { return encoder_; }
  PolicyNet& policy() { return policy_; }
  QNet& q1() { return q1_; }
  QNet& q2() { return q2_; }
  QNet& q1_target() { return q1_target_; }
  QNet& q2_target() { return q2_target_; }
  double alpha() const { return std::exp(log_alpha_.value(0, 0)); }

  /**
   * @brief One action from the current recurrent policy.
   *
   * Stochastic mode draws u = mu + std * eps (rng required);
   * deterministic mode returns mu. The returned action is pre-squash.
   */
  ActResult act(const dn::Mat& state, const Eigen::Vector2d& prev_u,
                dn::LstmState& s, bool deterministic, Rng* rng) const {
    dn::Mat x(kStateDim + 2, 1);
    x << state, detail::squashed(prev_u);
    const PolicyNet::Out o = policy_.step(x, s);
    ActResult r;
    if (deterministic) {
      r.u = Eigen::Vector2d(o.mu(0, 0), o.mu(1, 0));
    } else {
      if (!rng) throw std::runtime_error("stochastic act needs an rng");
      r.u = Eigen::Vector2d(
          o.mu(0, 0) + std::exp(o.log_std(0, 0)) * rng->gaussian(),
          o.mu(1, 0) + std::exp(o.log_std(1, 0)) * rng->gaussian());
    }
    r.logprob = dn::tanh_gaussian_logprob(o.mu, o.log_std, detail::to_col(r.u));
    return r;
  }

  UpdateDiagnostics update(const ReplayBuffer& buffer, Rng& rng);

  void save(const std::string& path) {
    std::vector<const dn::ParameterBlock*> blocks;
    for (auto* b : all_blocks()) blocks.push_back(b);
    std::map<std::string, std::string> meta;
    meta["dense"] = std::to_string(cfg_.net.dense);
    meta["lstm"] = std::to_string(cfg_.net.lstm);
    meta["twin_critic"] = cfg_.twin_critic ? "1" : "0";
    save_checkpoint(path, blocks, meta);
  }

  static std::unique_ptr<Agent> load(const std::string& path) {
    const Checkpoint ck = load_checkpoint(path);
    AgentConfig cfg;
    const auto dense = ck.meta.find("dense");
    const auto lstm = ck.meta.find("lstm");
    if (dense == ck.meta.end() || lstm == ck.meta.end()) {
      throw std::runtime_error(path + ": checkpoint lacks width metadata");
    }
    cfg.net.dense = std::stoi(dense->second);
    cfg.net.lstm = std::stoi(lstm->second);
    const auto twin = ck.meta.find("twin_critic");
    if (twin != ck.meta.end()) cfg.twin_critic = twin->second == "1";
    auto a = std::make_unique<Agent>(cfg);
    restore_blocks(ck, a->all_blocks());
    return a;
  }

  std::vector<dn::ParameterBlock*> all_blocks() {
    std::vector<dn::ParameterBlock*> v = encoder_.blocks();
    for (auto* net : {&policy_}) {
      const auto b = net->blocks();
      v.insert(v.end(), b.begin(), b.end());
    }
    for (auto* net : {&q1_, &q2_, &q1_target_, &q2_target_}) {
      const auto b = net->blocks();
      v.insert(v.end(), b.begin(), b.end());
    }
    v.push_back(&log_alpha_);
    return v;
  }

 private:
  friend struct AgentTestAccess;

  AgentConfig cfg_;
  EncoderParams encoder_;
  PolicyNet policy_;
  QNet q1_, q2_, q1_target_, q2_target_;
  dn::ParameterBlock log_alpha_;
  std::unique_ptr<dn::AdamOptimizer> opt_policy_, opt_critic_, opt_encoder_,
      opt_alpha_;
};

// ---------------------------------------------------------------------------
// Update implementation.
// ---------------------------------------------------------------------------

inline UpdateDiagnostics Agent::update(const ReplayBuffer& buffer, Rng& rng) {
  UpdateDiagnostics diag;
  if (buffer.size() == 0) {
    diag.skipped = true;
    return diag;
  }
  const double alpha_now = alpha();
  const double gamma = cfg_.gamma;

  struct Sequence {
    const EpisodeRecord* ep = nullptr;
    int t0 = 0, t1 = 0;
    std::vector<dn::Mat> eps;       // fresh noise per step [0, t1)
    std::vector<dn::Mat> atil;      // fresh pre-squash samples
    std::vector<double> lp;         // their log-probs
    std::vector<double> y;          // Bellman targets for [t0, t1)
    dn::LstmState pol_burn{1};      // policy state after inputs [0, t0)
    dn::LstmState q1_burn{1}, q2_burn{1};
  };

  std::vector<Sequence> batch(static_cast<std::size_t>(cfg_.batch));
  int total_steps = 0;

  // Phase A: sampling, no-grad unrolls, Bellman targets.
  for (Sequence& seq : batch) {
    seq.ep = &buffer.sample(rng);
    const EpisodeRecord& ep = *seq.ep;
    const int T = ep.length();
    const int w = cfg_.bptt_window;
    if (w <= 0 || w >= T) {
      seq.t0 = 0;
      seq.t1 = T;
    } else {
      seq.t0 = static_cast<int>(rng.uniform_int(T - w + 1));
      seq.t1 = seq.t0 + w;
    }
    total_steps += seq.t1 - seq.t0;

    dn::LstmState pol(cfg_.net.lstm);
    dn::LstmState t1s(cfg_.net.lstm), t2s(cfg_.net.lstm);
    seq.pol_burn = dn::LstmState(cfg_.net.lstm);
    seq.q1_burn = dn::LstmState(cfg_.net.lstm);
    seq.q2_burn = dn::LstmState(cfg_.net.lstm);
    std::vector<double> soft_value(seq.t1, 0.0);  // V[t] valid for t >= 1

    for (int t = 0; t < seq.t1; ++t) {
      if (t == seq.t0) seq.pol_burn = pol;
      const dn::Mat s = encode_state(ep.features[t], encoder_);
      const dn::Mat a_prev = t > 0 ? detail::squashed(ep.actions[t - 1])
                                   : dn::Mat(dn::Mat::Zero(2, 1));
      dn::Mat x(kStateDim + 2, 1);
      x << s, a_prev;
      const PolicyNet::Out o = policy_.step(x, pol);

      dn::Mat eps(2, 1);
      eps(0, 0) = rng.gaussian();
      eps(1, 0) = rng.gaussian();
      const dn::Mat u =
          o.mu + o.log_std.array().exp().matrix().cwiseProduct(eps);
      seq.eps.push_back(eps);
      seq.atil.push_back(u);
      seq.lp.push_back(dn::tanh_gaussian_logprob(o.mu, o.log_std, u));

      if (t >= 1) {
        dn::Mat xb(kStateDim + 4, 1);
        xb << s, u.array().tanh().matrix(), a_prev;
        const double qb1 = q1_target_.branch(xb, t1s);
        const double qb2 =
            cfg_.twin_critic ? q2_target_.branch(xb, t2s) : qb1;
        soft_value[t] = std::min(qb1, qb2) - alpha_now * seq.lp.back();
      }
      dn::Mat xq(kStateDim + 4, 1);
      xq << s, detail::squashed(ep.actions[t]), a_prev;
      q1_target_.advance(xq, t1s);
      if (cfg_.twin_critic) q2_target_.advance(xq, t2s);
    }

    // Online-critic burn-in for truncated windows.
    if (seq.t0 > 0) {
      for (int t = 0; t < seq.t0; ++t) {
        const dn::Mat s = encode_state(ep.features[t], encoder_);
        const dn::Mat a_prev = t > 0 ? detail::squashed(ep.actions[t - 1])
                                     : dn::Mat(dn::Mat::Zero(2, 1));
        dn::Mat xq(kStateDim + 4, 1);
        xq << s, detail::squashed(ep.actions[t]), a_prev;
        q1_.advance(xq, seq.q1_burn);
        if (cfg_.twin_critic) q2_.advance(xq, seq.q2_burn);
      }
    }

    seq.y.resize(seq.t1 - seq.t0);
    for (int t = seq.t0; t < seq.t1; ++t) {
      const bool terminal = t == T - 1;
      double y = ep.rewards[t];
      if (!terminal) y += gamma * soft_value[t + 1];
      seq.y[t - seq.t0] = y;
    }
  }

  const double inv_steps = 1.0 / static_cast<double>(total_steps);

  // Phase B: critic loss tape (online critics + encoder get gradients).
  {
    dn::Tape t;
    int loss = -1;
    for (Sequence& seq : batch) {
      const EpisodeRecord& ep = *seq.ep;
      int h1 = t.constant(seq.q1_burn.h), c1 = t.constant(seq.q1_burn.c);
      int h2 = t.constant(seq.q2_burn.h), c2 = t.constant(seq.q2_burn.c);
      for (int step = seq.t0; step < seq.t1; ++step) {
        const int s = encode_on(t, encoder_, ep.features[step]);
        const dn::Mat a_prev =
            step > 0 ? detail::squashed(ep.actions[step - 1])
                     : dn::Mat(dn::Mat::Zero(2, 1));
        const int x = t.vstack3(
            s, t.constant(detail::squashed(ep.actions[step])),
            t.constant(a_prev));
        dn::Mat ym(1, 1);
        ym(0, 0) = seq.y[step - seq.t0];
        const int ynode = t.constant(ym);

        const auto [nh1, nc1] = q1_.advance_on(t, x, h1, c1);
        const int q1v = q1_.out.forward_on(t, nh1);
        int term = t.square(t.sub(q1v, ynode));
        h1 = nh1;
        c1 = nc1;
        if (cfg_.twin_critic) {
          const auto [nh2, nc2] = q2_.advance_on(t, x, h2, c2);
          const int q2v = q2_.out.forward_on(t, nh2);
          term = t.add(term, t.square(t.sub(q2v, ynode)));
          h2 = nh2;
          c2 = nc2;
        }
        loss = loss < 0 ? term : t.add(loss, term);
      }
    }
    loss = t.scale(loss, inv_steps);
    diag.critic_loss = t.value(loss)(0, 0);
    t.backward(loss);
  }
  opt_critic_->step();
  for (auto* b : q1_.blocks()) b->zero_grad();
  for (auto* b : q2_.blocks()) b->zero_grad();

  // Phase C: policy loss tape. Critic chains run on-tape so the branch
  // Q(s_t, a~_t) is differentiated through the recurrent history; the
  // resulting critic-parameter gradients are discarded below.
  double lp_sum = 0.0;
  {
    dn::Tape t;
    int loss = -1;
    for (Sequence& seq : batch) {
      const EpisodeRecord& ep = *seq.ep;
      int ph = t.constant(seq.pol_burn.h), pc = t.constant(seq.pol_burn.c);
      int h1 = t.constant(seq.q1_burn.h), c1 = t.constant(seq.q1_burn.c);
      int h2 = t.constant(seq.q2_burn.h), c2 = t.constant(seq.q2_burn.c);
      for (int step = seq.t0; step < seq.t1; ++step) {
        const int s = encode_on(t, encoder_, ep.features[step]);
        const dn::Mat a_prev =
            step > 0 ? detail::squashed(ep.actions[step - 1])
                     : dn::Mat(dn::Mat::Zero(2, 1));
        const int a_prev_id = t.constant(a_prev);
        const int xp = t.vstack(s, a_prev_id);
        const PolicyNet::StepIds po = policy_.step_on(t, xp, ph, pc);
        ph = po.h;
        pc = po.c;
        const int u = t.reparam(po.mu, po.log_std, seq.eps[step]);
        const int a_sq = t.tanh_op(u);
        const int lp = t.logprob(po.mu, po.log_std, u);
        lp_sum += t.value(lp)(0, 0);

        const int xb = t.vstack3(s, a_sq, a_prev_id);
        const int q1b = q1_.branch_on(t, xb, h1, c1);
        int minq = q1b;
        if (cfg_.twin_critic) {
          const int q2b = q2_.branch_on(t, xb, h2, c2);
          minq = t.min2(q1b, q2b);
        }
        const int term = t.sub(t.scale(lp, alpha_now), minq);
        loss = loss < 0 ? term : t.add(loss, term);

        const int xq = t.vstack3(
            s, t.constant(detail::squashed(ep.actions[step])), a_prev_id);
        std::tie(h1, c1) = q1_.advance_on(t, xq, h1, c1);
        if (cfg_.twin_critic) {
          std::tie(h2, c2) = q2_.advance_on(t, xq, h2, c2);
        }
      }
    }
    loss = t.scale(loss, inv_steps);
    diag.policy_loss = t.value(loss)(0, 0);
    t.backward(loss);
  }
  opt_policy_->step();
  opt_policy_->zero_grad();
  // Critic gradients from the policy tape are deliberately dropped.
  for (auto* b : q1_.blocks()) b->zero_grad();
  for (auto* b : q2_.blocks()) b->zero_grad();
  opt_encoder_->step();
  opt_encoder_->zero_grad();

  // Temperature: d/d(log_alpha) of -log_alpha * mean(lp + target_entropy).
  diag.mean_logprob = lp_sum * inv_steps;
  log_alpha_.grad(0, 0) = -(diag.mean_logprob + cfg_.target_entropy);
  opt_alpha_->step();
  opt_alpha_->zero_grad();
  diag.alpha = alpha();

  for (auto& pair :
       {std::make_pair(&q1_target_, &q1_), std::make_pair(&q2_target_, &q2_)}) {
    QNet* tgt = pair.first;
    QNet* onl = pair.second;
    auto tb = tgt->blocks();
    auto ob = onl->blocks();
    for (std::size_t k = 0; k < tb.size(); ++k) {
      dn::ema_update(*tb[k], *ob[k], cfg_.tau);
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Rollout, training loop, evaluation.
// ---------------------------------------------------------------------------

struct RolloutResult {
  EpisodeRecord episode;
  double cumulative_reward = 0.0;
  double final_oc = 0.0;
};

/// Play one episode to completion; stochastic unless deterministic is set.
inline RolloutResult rollout(Env& env, const Agent& agent, bool deterministic,
                             Rng* rng) {
  RolloutResult r;
  EnvStep s = env.reset();
  dn::LstmState ls(agent.config().net.lstm);
  Eigen::Vector2d prev = Eigen::Vector2d::Zero();
  r.episode.features.push_back(s.features);
  while (!env.done()) {
    const ActResult a = agent.act(s.state, prev, ls, deterministic, rng);
    s = env.step(a.u);
    r.episode.features.push_back(s.features);
    r.episode.actions.push_back(a.u);
    r.episode.rewards.push_back(s.reward);
    r.cumulative_reward += s.reward;
    prev = a.u;
  }
  r.final_oc = s.oc;
  return r;
}

struct TrainResult {
  std::vector<double> episode_rewards;  ///< cumulative reward per episode
  std::vector<double> final_oc;         ///< OC at each episode's end
};

/**
 * @brief Standard training loop: fresh sampled graph each episode,
 * stochastic rollout, replay push, then gradient updates.
 *
 * Graph topology/noise follow synth.seed mixed with the episode index;
 * action noise and batch sampling follow the agent seed. Fixed seeds
 * reproduce the whole reward curve.
 */
inline TrainResult train_agent(Agent& agent, const SynthParams& synth,
                               const EpisodeConfig& episode, int episodes,
                               ReplayBuffer* external_buffer = nullptr) {
  TrainResult out;
  ReplayBuffer local(agent.config().replay_capacity);
  ReplayBuffer& buffer = external_buffer ? *external_buffer : local;
  Rng roll_rng(Rng::mix(agent.config().seed, 1));
  Rng update_rng(Rng::mix(agent.config().seed, 2));
  for (int ep = 0; ep < episodes; ++ep) {
    SynthParams sp = synth;
    sp.seed = Rng::mix(synth.seed, static_cast<std::uint64_t>(ep));
    SynthResult sr = make_manhattan(sp);
    Env env(std::move(sr.graph), episode, &agent.encoder());
    RolloutResult rr = rollout(env, agent, false, &roll_rng);
    out.episode_rewards.push_back(rr.cumulative_reward);
    out.final_oc.push_back(rr.final_oc);
    const int episode_len = rr.episode.length();
    buffer.push(std::move(rr.episode));
    int n_updates = agent.config().updates_per_episode;
    if (n_updates <= 0) n_updates = episode_len;
    for (int k = 0; k < n_updates; ++k) {
      agent.update(buffer, update_rng);
    }
  }
  return out;
}

struct EvalResult {
  std::vector<double> F_runs;
  double mean_F = 0.0;
  double best_F = std::numeric_limits<double>::infinity();
  double mean_reward = 0.0;
  double wall_time = 0.0;
  PoseGraph best_graph;
};

/**
 * @brief Deterministic evaluation: runs episodes with the mean action,
 * finalizes each with the translation solve, reports per-run F.
 */
inline EvalResult evaluate(const Agent& agent, const PoseGraph& graph,
                           const EpisodeConfig& episode, int runs = 10) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalResult out;
  for (int r = 0; r < runs; ++r) {
    Env env(graph, episode, &agent.encoder());
    RolloutResult rr = rollout(env, agent, true, nullptr);
    const FinalizeResult fin = env.finalize();
    out.F_runs.push_back(fin.F);
    out.mean_F += fin.F;
    out.mean_reward += rr.cumulative_reward;
    if (fin.F < out.best_F) {
      out.best_F = fin.F;
      out.best_graph = fin.graph;
    }
  }
  if (runs > 0) {
    out.mean_F /= runs;
    out.mean_reward /= runs;
  }
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace pgo
