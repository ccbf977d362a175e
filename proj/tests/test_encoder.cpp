#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "pgo/encoder.hpp"
#include "pgo/synth.hpp"

using namespace pgo;
using dn::Mat;

namespace {
PoseGraph two_pose_graph(double ti, double tj, double tm) {
  PoseGraph g;
  g.nodes.emplace_back(0.0, 0.0, ti);
  g.nodes.emplace_back(1.0, 0.0, tj);
  Edge e;
  e.i = 0;
  e.j = 1;
  e.meas = Pose2(1.0, 0.0, tm);
  g.edges.push_back(e);
  return g;
}
}  // namespace

TEST_CASE("message closed forms") {
  CHECK(message(0.4, 0.4, 0.0, 1.0) == 0.0);
  CHECK(message(0.1, 0.7, 0.6, 3.0) == Catch::Approx(0.0).margin(1e-12));
  // maximal mismatch: half turn off
  CHECK(message(0.0, kPi, 0.0, 1.0) ==
        Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));
  // beta 0.5, error 0.2 rad
  CHECK(message(0.3, 0.3, 0.2, 0.5) ==
        Catch::Approx(std::sqrt(2.0) * std::sin(0.1)).margin(1e-14));

  // Frobenius oracle: || R(ti + tm) - R(tj) ||_F
  const double ti = 0.8, tj = -0.5, tm = 0.25;
  const Eigen::Matrix2d d =
      Rotation2(ti + tm).matrix() - Rotation2(tj).matrix();
  CHECK(message(ti, tj, tm, 1.0) ==
        Catch::Approx(std::sqrt((d.transpose() * d).trace())).margin(1e-12));
}

TEST_CASE("aggregate sums messages on the target node") {
  PoseGraph g;
  g.nodes.emplace_back(0.0, 0.0, 0.0);
  g.nodes.emplace_back(1.0, 0.0, 0.0);
  g.nodes.emplace_back(2.0, 0.0, 0.0);
  auto push = [&](int i, int j, double tm) {
    Edge e;
    e.i = i;
    e.j = j;
    e.meas = Pose2(1.0, 0.0, tm);
    g.edges.push_back(e);
  };
  push(0, 2, 0.1);
  push(1, 2, 0.2);
  const auto cost = aggregate(g, 1.0);
  CHECK(cost[0] == 0.0);
  CHECK(cost[1] == 0.0);
  const double expect = 2.0 * std::sqrt(2.0) *
                        (std::abs(std::sin(0.05)) + std::abs(std::sin(0.1)));
  CHECK(cost[2] == Catch::Approx(expect).margin(1e-12));

  // beta scales linearly
  const auto half = aggregate(g, 0.5);
  CHECK(half[2] == Catch::Approx(0.5 * cost[2]).margin(1e-14));
}

TEST_CASE("mean cost equals node-averaged aggregate on a generated graph") {
  SynthParams p;
  p.n = 10;
  p.lc = 0.9;
  p.sigma_r = 0.4;
  p.seed = 6;
  const auto r = make_manhattan(p);
  const auto node_cost = aggregate(r.graph, 1.0);
  double mean = 0.0;
  for (double c : node_cost) mean += c;
  mean /= static_cast<double>(node_cost.size());

  const StateFeatures f = state_features(r.graph, 0);
  CHECK(f.mean_cost == Catch::Approx(mean).margin(1e-13));
  CHECK(f.mean_cost > 0.0);
}

TEST_CASE("cursor residual is the wrapped angular mismatch") {
  const PoseGraph g = two_pose_graph(3.0, -2.8, 0.2);
  const StateFeatures f = state_features(g, 0);
  CHECK(f.resid == Catch::Approx(2.0 * kPi - 6.0).margin(1e-12));

  CHECK_THROWS(state_features(g, 1));
  CHECK_THROWS(state_features(g, -1));
  PoseGraph empty;
  empty.nodes.emplace_back(0.0, 0.0, 0.0);
  CHECK_THROWS(state_features(empty, 0));
}

TEST_CASE("perfect graph encodes to the bias plus zero residual") {
  const PoseGraph g = two_pose_graph(0.3, 0.9, 0.6);
  EncoderParams p;
  Rng rng(44);
  p.init(rng);
  const Mat s = encode_state(g, 0, p);
  REQUIRE(s.rows() == kStateDim);
  REQUIRE(s.rows() == 21);
  CHECK((s.topRows(kSummaryDim) - p.b_lin.value).lpNorm<Eigen::Infinity>() <
        1e-12);
  CHECK(std::abs(s(kSummaryDim, 0)) < 1e-12);
}

TEST_CASE("state ignores translations entirely") {
  SynthParams sp;
  sp.n = 15;
  sp.lc = 0.5;
  sp.sigma_r = 0.3;
  sp.sigma_t = 0.2;
  sp.seed = 12;
  const auto r = make_manhattan(sp);
  PoseGraph moved = r.graph;
  for (auto& n : moved.nodes) {
    n.x += 42.0;
    n.y -= 17.0;
  }
  const StateFeatures a = state_features(r.graph, 3);
  const StateFeatures b = state_features(moved, 3);
  CHECK(a.mean_cost == b.mean_cost);
  CHECK(a.resid == b.resid);
}

TEST_CASE("encoding depends on the heading configuration, not edge order") {
  SynthParams sp;
  sp.n = 12;
  sp.lc = 0.8;
  sp.sigma_r = 0.3;
  sp.seed = 18;
  const auto r = make_manhattan(sp);
  PoseGraph shuffled = r.graph;
  std::reverse(shuffled.edges.begin(), shuffled.edges.end());
  const StateFeatures a = state_features(r.graph, 0);
  const int moved_cursor = shuffled.num_edges() - 1;
  const StateFeatures b = state_features(shuffled, moved_cursor);
  CHECK(a.mean_cost == Catch::Approx(b.mean_cost).margin(1e-13));
  CHECK(a.resid == b.resid);
}

TEST_CASE("tape encoding matches the plain encoder and its gradients check") {
  EncoderParams p;
  Rng rng(50);
  p.init(rng);
  StateFeatures f;
  f.mean_cost = 0.37;
  f.resid = -0.82;

  dn::Tape t;
  const int s = encode_on(t, p, f);
  const Mat plain = encode_state(f, p);
  CHECK((t.value(s) - plain).lpNorm<Eigen::Infinity>() < 1e-15);

  t.backward(t.sum(t.square(s)));
  auto loss = [&]() {
    return encode_state(f, p).squaredNorm();
  };
  CHECK(test::fd_check_block(p.beta, p.beta.grad, loss) < 1e-6);
  CHECK(test::fd_check_block(p.W_lin, p.W_lin.grad, loss) < 1e-6);
  CHECK(test::fd_check_block(p.b_lin, p.b_lin.grad, loss) < 1e-6);
}

TEST_CASE("beta rescales the summary but not the residual slot") {
  StateFeatures f;
  f.mean_cost = 0.5;
  f.resid = 0.25;
  EncoderParams p;
  p.W_lin.value.setConstant(1.0);
  const Mat base = encode_state(f, p);
  p.beta.value(0, 0) = 2.0;
  const Mat doubled = encode_state(f, p);
  CHECK(doubled(0, 0) == Catch::Approx(2.0 * base(0, 0)).margin(1e-14));
  CHECK(doubled(kSummaryDim, 0) == base(kSummaryDim, 0));
}
