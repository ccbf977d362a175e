#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pgo/rng.hpp"

namespace pgo::dn {

using Mat = Eigen::MatrixXd;

/**
 * @brief Named weight array with a congruent gradient accumulator.
 *
 * Vectors are stored as n x 1. Gradients accumulate across backward
 * passes until the owner zeroes them after the optimizer step.
 */
struct ParameterBlock {
  std::string name;
  Mat value;
  Mat grad;

  ParameterBlock() = default;
  ParameterBlock(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)),
        grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

/// Draw every entry from N(0, 2/fan_in) (Kaiming). Biases stay zero.
inline void kaiming_init(ParameterBlock& p, int fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      p.value(r, c) = stddev * rng.gaussian();
    }
  }
}

/// Per-block Adam moments; lazily shaped on first step.
struct AdamState {
  Mat m, v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update. Gradients are left untouched.
inline void adam_step(ParameterBlock& p, AdamState& s) {
  if (s.m.size() == 0) {
    s.m = Mat::Zero(p.value.rows(), p.value.cols());
    s.v = Mat::Zero(p.value.rows(), p.value.cols());
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * p.grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * p.grad.cwiseProduct(p.grad);
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const Mat mhat = s.m / c1;
  const Mat vhat = s.v / c2;
  p.value.array() -=
      s.lr * mhat.array() / (vhat.array().sqrt() + s.eps);
}

/// target <- (1 - tau) * target + tau * online.
inline void ema_update(ParameterBlock& target, const ParameterBlock& online,
                       double tau) {
  target.value = (1.0 - tau) * target.value + tau * online.value;
}

/// Adam over a fixed list of blocks (one moment state per block).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<ParameterBlock*> blocks, double lr = 3e-4)
      : blocks_(std::move(blocks)), states_(blocks_.size()) {
    for (auto& s : states_) s.lr = lr;
  }

  void step() {
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      adam_step(*blocks_[k], states_[k]);
    }
  }

  void zero_grad() {
    for (ParameterBlock* b : blocks_) b->zero_grad();
  }

 private:
  std::vector<ParameterBlock*> blocks_;
  std::vector<AdamState> states_;
};

// ---------------------------------------------------------------------------
// Plain forward kernels (no gradient recording). Rollouts and no-grad
// target computation use these; the tape ops below replicate the same
// math and are checked against finite differences of these kernels.
// ---------------------------------------------------------------------------

enum class Act { identity, relu, tanh };

inline Mat apply_act(Act a, const Mat& x) {
  switch (a) {
    case Act::identity: return x;
    case Act::relu: return x.cwiseMax(0.0);
    case Act::tanh: return x.array().tanh().matrix();
  }
  return x;
}

inline Mat dense_forward(const Mat& W, const Mat& b, const Mat& x, Act act) {
  if (W.cols() != x.rows() || b.rows() != W.rows()) {
    throw std::runtime_error("dense_forward shape mismatch");
  }
  return apply_act(act, W * x + b);
}

inline Mat sigmoid(const Mat& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

/// Hidden/cell pair of one recurrent layer; reset to zeros per episode.
struct LstmState {
  Mat h, c;
  explicit LstmState(int width)
      : h(Mat::Zero(width, 1)), c(Mat::Zero(width, 1)) {}
  void reset() {
    h.setZero();
    c.setZero();
  }
};

/**
 * @brief One LSTM cell step. Gate order in the stacked weights: input,
 * forget, candidate, output.
 */
inline Mat lstm_step(const Mat& Wx, const Mat& Wh, const Mat& b, const Mat& x,
                     LstmState& state) {
  const int H = static_cast<int>(Wh.cols());
  if (Wx.rows() != 4 * H || b.rows() != 4 * H || Wx.cols() != x.rows()) {
    throw std::runtime_error("lstm_step shape mismatch");
  }
  const Mat pre = Wx * x + Wh * state.h + b;
  const Mat i = sigmoid(pre.topRows(H));
  const Mat f = sigmoid(pre.middleRows(H, H));
  const Mat g = pre.middleRows(2 * H, H).array().tanh().matrix();
  const Mat o = sigmoid(pre.bottomRows(H));
  state.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
  state.h = o.cwiseProduct(state.c.array().tanh().matrix());
  return state.h;
}

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

/**
 * @brief Log-density of a tanh-squashed Gaussian at pre-squash point u.
 *
 * log N(u; mu, exp(log_std)) - sum_k log(1 - tanh(u_k)^2 + 1e-6). The
 * epsilon keeps the correction finite as |tanh| approaches 1.
 */
inline double tanh_gaussian_logprob(const Mat& mu, const Mat& log_std,
                                    const Mat& u) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  double lp = 0.0;
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    const double s = std::exp(log_std(k, 0));
    const double z = (u(k, 0) - mu(k, 0)) / s;
    const double a = std::tanh(u(k, 0));
    lp += -0.5 * z * z - log_std(k, 0) - 0.5 * kLog2Pi -
          std::log(1.0 - a * a + kSquashEps);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Tape: reverse-mode recording scoped to one loss evaluation.
// ---------------------------------------------------------------------------

/**
 * @brief Reverse-mode gradient tape.
 *
 * Ops append nodes whose creation order is a topological order, so the
 * backward pass is a single reverse sweep. Parameter leaves accumulate
 * into their ParameterBlock's grad; everything else lives on the tape.
 * One tape serves one loss; build a fresh tape per update.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  int constant(Mat v) { return push(std::move(v), nullptr); }

  /// Leaf whose backward adds the accumulated grad into block.grad.
  /// Repeated registration of one block reuses the same node, so weights
  /// shared across time steps are copied onto the tape exactly once.
  int param(ParameterBlock& block) {
    const auto it = param_ids_.find(&block);
    if (it != param_ids_.end()) return it->second;
    const int id = push(block.value, nullptr);
    ParameterBlock* b = &block;
    nodes_[id].back = [id, b](Tape& t) { b->grad += t.nodes_[id].grad; };
    param_ids_.emplace(&block, id);
    return id;
  }

  int matmul(int a, int b) {
    const int id = push(nodes_[a].value * nodes_[b].value, nullptr);
    nodes_[id].back = [id, a, b](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[a].grad += g * t.nodes_[b].value.transpose();
      t.nodes_[b].grad += t.nodes_[a].value.transpose() * g;
    };
    return id;
  }

  int add(int a, int b) {
    const int id = push(nodes_[a].value + nodes_[b].value, nullptr);
    nodes_[id].back = [id, a, b](Tape& t) {
      t.nodes_[a].grad += t.nodes_[id].grad;
      t.nodes_[b].grad += t.nodes_[id].grad;
    };
    return id;
  }

  int sub(int a, int b) {
    const int id = push(nodes_[a].value - nodes_[b].value, nullptr);
    nodes_[id].back = [id, a, b](Tape& t) {
      t.nodes_[a].grad += t.nodes_[id].grad;
      t.nodes_[b].grad -= t.nodes_[id].grad;
    };
    return id;
  }

  int mul(int a, int b) {
    const int id =
        push(nodes_[a].value.cwiseProduct(nodes_[b].value), nullptr);
    nodes_[id].back = [id, a, b](Tape& t) {
      t.nodes_[a].grad +=
          t.nodes_[id].grad.cwiseProduct(t.nodes_[b].value);
      t.nodes_[b].grad +=
          t.nodes_[id].grad.cwiseProduct(t.nodes_[a].value);
    };
    return id;
  }

  int scale(int a, double k) {
    const int id = push(k * nodes_[a].value, nullptr);
    nodes_[id].back = [id, a, k](Tape& t) {
      t.nodes_[a].grad += k * t.nodes_[id].grad;
    };
    return id;
  }

  /// Matrix times scalar node (1x1): y = W * c.
  int scale_by(int w, int c) {
    if (nodes_[c].value.size() != 1) {
      throw std::runtime_error("scale_by expects a scalar node");
    }
    const int id = push(nodes_[w].value * nodes_[c].value(0, 0), nullptr);
    nodes_[id].back = [id, w, c](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[w].grad += g * t.nodes_[c].value(0, 0);
      t.nodes_[c].grad(0, 0) += (g.array() * t.nodes_[w].value.array()).sum();
    };
    return id;
  }

  int relu(int a) {
    const int id = push(nodes_[a].value.cwiseMax(0.0), nullptr);
    nodes_[id].back = [id, a](Tape& t) {
      t.nodes_[a].grad.array() +=
          t.nodes_[id].grad.array() *
          (t.nodes_[a].value.array() > 0.0).cast<double>();
    };
    return id;
  }

  int tanh_op(int a) {
    const int id = push(nodes_[a].value.array().tanh().matrix(), nullptr);
    nodes_[id].back = [id, a](Tape& t) {
      const auto y = t.nodes_[id].value.array();
      t.nodes_[a].grad.array() += t.nodes_[id].grad.array() * (1.0 - y * y);
    };
    return id;
  }

  int sigmoid_op(int a) {
    const int id = push(dn::sigmoid(nodes_[a].value), nullptr);
    nodes_[id].back = [id, a](Tape& t) {
      const auto y = t.nodes_[id].value.array();
      t.nodes_[a].grad.array() += t.nodes_[id].grad.array() * y * (1.0 - y);
    };
    return id;
  }

  /// Hard clamp; gradient passes through strictly inside the interval.
  int clamp(int a, double lo, double hi) {
    const int id =
        push(nodes_[a].value.cwiseMax(lo).cwiseMin(hi), nullptr);
    nodes_[id].back = [id, a, lo, hi](Tape& t) {
      const auto x = t.nodes_[a].value.array();
      t.nodes_[a].grad.array() +=
          t.nodes_[id].grad.array() *
          ((x > lo) && (x < hi)).cast<double>();
    };
    return id;
  }

  int square(int a) {
    const int id =
        push(nodes_[a].value.cwiseProduct(nodes_[a].value), nullptr);
    nodes_[id].back = [id, a](Tape& t) {
      t.nodes_[a].grad.array() +=
          2.0 * t.nodes_[id].grad.array() * t.nodes_[a].value.array();
    };
    return id;
  }

  int sum(int a) {
    Mat v(1, 1);
    v(0, 0) = nodes_[a].value.sum();
    const int id = push(std::move(v), nullptr);
    nodes_[id].back = [id, a](Tape& t) {
      t.nodes_[a].grad.array() += t.nodes_[id].grad(0, 0);
    };
    return id;
  }

  /// Elementwise minimum; ties send the gradient to a.
  int min2(int a, int b) {
    const int id =
        push(nodes_[a].value.cwiseMin(nodes_[b].value), nullptr);
    nodes_[id].back = [id, a, b](Tape& t) {
      const auto pick_a =
          (t.nodes_[a].value.array() <= t.nodes_[b].value.array())
              .cast<double>();
      t.nodes_[a].grad.array() += t.nodes_[id].grad.array() * pick_a;
      t.nodes_[b].grad.array() +=
          t.nodes_[id].grad.array() * (1.0 - pick_a);
    };
    return id;
  }

  int vstack(int a, int b) {
    // push() may reallocate node storage; take what we need before it.
    const int ra = static_cast<int>(nodes_[a].value.rows());
    Mat v(ra + nodes_[b].value.rows(), 1);
    v << nodes_[a].value, nodes_[b].value;
    const int id = push(std::move(v), nullptr);
    nodes_[id].back = [id, a, b, ra](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[a].grad += g.topRows(ra);
      t.nodes_[b].grad += g.bottomRows(g.rows() - ra);
    };
    return id;
  }

  int vstack3(int a, int b, int c) { return vstack(vstack(a, b), c); }

  int slice_rows(int a, int start, int len) {
    const int id = push(nodes_[a].value.middleRows(start, len), nullptr);
    nodes_[id].back = [id, a, start, len](Tape& t) {
      t.nodes_[a].grad.middleRows(start, len) += t.nodes_[id].grad;
    };
    return id;
  }

  /**
   * @brief Fused LSTM cell; returns the stacked [h'; c'] node (2H x 1).
   *
   * Use slice_rows to split. Mirrors lstm_step exactly; gate values are
   * cached in the closure for the backward sweep.
   */
  int lstm_cell(int wx, int wh, int bias, int x, int h, int c) {
    const Mat& Wx = nodes_[wx].value;
    const Mat& Wh = nodes_[wh].value;
    const int H = static_cast<int>(Wh.cols());
    const Mat pre =
        Wx * nodes_[x].value + Wh * nodes_[h].value + nodes_[bias].value;
    const Mat i = dn::sigmoid(pre.topRows(H));
    const Mat f = dn::sigmoid(pre.middleRows(H, H));
    const Mat g = pre.middleRows(2 * H, H).array().tanh().matrix();
    const Mat o = dn::sigmoid(pre.bottomRows(H));
    const Mat cn = f.cwiseProduct(nodes_[c].value) + i.cwiseProduct(g);
    const Mat tc = cn.array().tanh().matrix();
    Mat out(2 * H, 1);
    out << o.cwiseProduct(tc), cn;
    const int id = push(std::move(out), nullptr);
    nodes_[id].back = [id, wx, wh, bias, x, h, c, H, i, f, g, o,
                       tc](Tape& t) {
      const Mat gh = t.nodes_[id].grad.topRows(H);
      const Mat gcn_direct = t.nodes_[id].grad.bottomRows(H);
      const Mat go = gh.cwiseProduct(tc);
      const Mat gcn =
          (gcn_direct.array() +
           gh.array() * o.array() * (1.0 - tc.array() * tc.array()))
              .matrix();
      const Mat gi = gcn.cwiseProduct(g);
      const Mat gf = gcn.cwiseProduct(t.nodes_[c].value);
      const Mat gg = gcn.cwiseProduct(i);
      Mat dpre(4 * H, 1);
      dpre.topRows(H) = (gi.array() * i.array() * (1.0 - i.array())).matrix();
      dpre.middleRows(H, H) =
          (gf.array() * f.array() * (1.0 - f.array())).matrix();
      dpre.middleRows(2 * H, H) =
          (gg.array() * (1.0 - g.array() * g.array())).matrix();
      dpre.bottomRows(H) =
          (go.array() * o.array() * (1.0 - o.array())).matrix();
      t.nodes_[wx].grad += dpre * t.nodes_[x].value.transpose();
      t.nodes_[wh].grad += dpre * t.nodes_[h].value.transpose();
      t.nodes_[bias].grad += dpre;
      t.nodes_[x].grad += t.nodes_[wx].value.transpose() * dpre;
      t.nodes_[h].grad += t.nodes_[wh].value.transpose() * dpre;
      t.nodes_[c].grad += gcn.cwiseProduct(f);
    };
    return id;
  }

  /// Reparametrized pre-squash sample u = mu + exp(log_std) .* eps.
  int reparam(int mu, int log_std, const Mat& eps) {
    const Mat s = nodes_[log_std].value.array().exp().matrix();
    const int id =
        push(nodes_[mu].value + s.cwiseProduct(eps), nullptr);
    nodes_[id].back = [id, mu, log_std](Tape& t) {
      const Mat& g = t.nodes_[id].grad;
      t.nodes_[mu].grad += g;
      // d u / d log_std = s .* eps = u - mu
      t.nodes_[log_std].grad +=
          g.cwiseProduct(t.nodes_[id].value - t.nodes_[mu].value);
    };
    return id;
  }

  /**
   * @brief Squashed-Gaussian log-density node (scalar).
   *
   * u may itself depend on (mu, log_std) through reparam; the partials
   * here treat the three inputs as independent and the tape composes
   * the chain rule through u's own backward.
   */
  int logprob(int mu, int log_std, int u) {
    Mat v(1, 1);
    v(0, 0) = tanh_gaussian_logprob(nodes_[mu].value, nodes_[log_std].value,
                                    nodes_[u].value);
    const int id = push(std::move(v), nullptr);
    nodes_[id].back = [id, mu, log_std, u](Tape& t) {
      const double g = t.nodes_[id].grad(0, 0);
      const Mat& vmu = t.nodes_[mu].value;
      const Mat& vls = t.nodes_[log_std].value;
      const Mat& vu = t.nodes_[u].value;
      for (Eigen::Index k = 0; k < vu.rows(); ++k) {
        const double s = std::exp(vls(k, 0));
        const double z = (vu(k, 0) - vmu(k, 0)) / s;
        const double a = std::tanh(vu(k, 0));
        t.nodes_[mu].grad(k, 0) += g * (z / s);
        t.nodes_[log_std].grad(k, 0) += g * (z * z - 1.0);
        t.nodes_[u].grad(k, 0) +=
            g * (-z / s + 2.0 * a * (1.0 - a * a) / (1.0 - a * a + kSquashEps));
      }
    };
    return id;
  }

  /// Reverse sweep from a scalar root seeded with d(root)/d(root) = 1.
  void backward(int root) {
    if (nodes_[root].value.size() != 1) {
      throw std::runtime_error("backward root must be scalar");
    }
    nodes_[root].grad(0, 0) = 1.0;
    for (int id = root; id >= 0; --id) {
      if (nodes_[id].back) nodes_[id].back(*this);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;
  };

  int push(Mat v, std::nullptr_t) {
    Node n;
    n.grad = Mat::Zero(v.rows(), v.cols());
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::unordered_map<ParameterBlock*, int> param_ids_;
};

// ---------------------------------------------------------------------------
// Layer parameter bundles and tape builders.
// ---------------------------------------------------------------------------

struct DenseParams {
  ParameterBlock W, b;
  Act act = Act::identity;

  DenseParams() = default;
  DenseParams(const std::string& name, int out, int in, Act a)
      : W(name + ".W", out, in), b(name + ".b", out, 1), act(a) {}

  void init(Rng& rng) { kaiming_init(W, static_cast<int>(W.value.cols()), rng); }

  Mat forward(const Mat& x) const { return dense_forward(W.value, b.value, x, act); }

  int forward_on(Tape& t, int x) const {
    // Parameter leaves are re-registered per call; gradient accumulation
    // into the shared block makes repeated use across time steps valid.
    const int y = t.add(t.matmul(t.param(const_cast<ParameterBlock&>(W)), x),
                        t.param(const_cast<ParameterBlock&>(b)));
    switch (act) {
      case Act::identity: return y;
      case Act::relu: return t.relu(y);
      case Act::tanh: return t.tanh_op(y);
    }
    return y;
  }
};

struct LstmParams {
  ParameterBlock Wx, Wh, b;

  LstmParams() = default;
  LstmParams(const std::string& name, int hidden, int in)
      : Wx(name + ".Wx", 4 * hidden, in), Wh(name + ".Wh", 4 * hidden, hidden),
        b(name + ".b", 4 * hidden, 1) {}

  int hidden() const { return static_cast<int>(Wh.value.cols()); }

  void init(Rng& rng) {
    kaiming_init(Wx, static_cast<int>(Wx.value.cols()), rng);
    kaiming_init(Wh, static_cast<int>(Wh.value.cols()), rng);
  }

  Mat step(const Mat& x, LstmState& s) const {
    return lstm_step(Wx.value, Wh.value, b.value, x, s);
  }

  /// Returns (h', c') node ids.
  std::pair<int, int> step_on(Tape& t, int x, int h, int c) const {
    const int hc = t.lstm_cell(t.param(const_cast<ParameterBlock&>(Wx)),
                               t.param(const_cast<ParameterBlock&>(Wh)),
                               t.param(const_cast<ParameterBlock&>(b)), x, h, c);
    const int H = hidden();
    return {t.slice_rows(hc, 0, H), t.slice_rows(hc, H, H)};
  }
};

}  // namespace pgo::dn
