#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <set>

#include "pgo/synth.hpp"

using namespace pgo;

namespace {
bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}
}  // namespace

TEST_CASE("generation is deterministic per seed") {
  SynthParams p;
  p.n = 80;
  p.sigma_r = 0.3;
  p.sigma_t = 0.05;
  p.seed = 1234;
  const auto a = make_manhattan(p);
  const auto b = make_manhattan(p);
  REQUIRE(a.graph.num_edges() == b.graph.num_edges());
  for (int k = 0; k < a.graph.num_edges(); ++k) {
    CHECK(a.graph.edges[k].i == b.graph.edges[k].i);
    CHECK(a.graph.edges[k].j == b.graph.edges[k].j);
    CHECK(same_bits(a.graph.edges[k].meas.theta, b.graph.edges[k].meas.theta));
    CHECK(same_bits(a.graph.edges[k].meas.x, b.graph.edges[k].meas.x));
  }
  p.seed = 1235;
  const auto c = make_manhattan(p);
  bool differs = c.graph.num_edges() != a.graph.num_edges();
  if (!differs) {
    for (int k = 0; k < a.graph.num_edges() && !differs; ++k) {
      differs = !same_bits(a.graph.edges[k].meas.x, c.graph.edges[k].meas.x);
    }
  }
  CHECK(differs);
}

TEST_CASE("noise sigma does not change topology or draw alignment") {
  SynthParams p;
  p.n = 120;
  p.seed = 5;
  p.lc = 0.5;
  SynthParams q = p;
  q.sigma_r = 0.3;
  q.sigma_t = 0.1;
  const auto clean = make_manhattan(p);
  const auto noisy = make_manhattan(q);
  REQUIRE(clean.graph.num_edges() == noisy.graph.num_edges());
  for (int k = 0; k < clean.graph.num_edges(); ++k) {
    CHECK(clean.graph.edges[k].i == noisy.graph.edges[k].i);
    CHECK(clean.graph.edges[k].j == noisy.graph.edges[k].j);
  }
  // ground truth identical
  for (int i = 0; i < p.n; ++i) {
    CHECK(same_bits(clean.ground_truth[i].x, noisy.ground_truth[i].x));
    CHECK(same_bits(clean.ground_truth[i].theta, noisy.ground_truth[i].theta));
  }
}

TEST_CASE("zero-noise measurements are exact") {
  SynthParams p;
  p.n = 150;
  p.seed = 21;
  p.lc = 0.4;
  const auto r = make_manhattan(p);
  // Ground truth satisfies every measurement exactly in grid arithmetic;
  // the only residual is trigonometric rounding in edge evaluation.
  PoseGraph at_gt = r.graph;
  at_gt.nodes = r.ground_truth;
  CHECK(total_cost(at_gt) < 1e-18);
  // Wrapped heading differences leave sin() rounding at the pi boundary, so
  // the chordal sum is epsilon-scale rather than bitwise zero.
  CHECK(orientation_cost(at_gt) < 1e-13);
  // Odometry-chained estimate accumulates only rounding noise.
  CHECK(total_cost(r.graph) < 1e-12);
}

TEST_CASE("headings are exact quadrant angles and steps are unit cells") {
  SynthParams p;
  p.n = 200;
  p.d = 2.5;
  p.seed = 77;
  const auto r = make_manhattan(p);
  const std::set<double> allowed = {0.0, 0.5 * kPi, kPi, -0.5 * kPi};
  for (const Pose2& gt : r.ground_truth) {
    CHECK(allowed.count(gt.theta) == 1);
    // positions on the scaled integer grid
    CHECK(gt.x == std::round(gt.x / p.d) * p.d);
  }
  for (int i = 1; i < p.n; ++i) {
    const double dx = r.ground_truth[i].x - r.ground_truth[i - 1].x;
    const double dy = r.ground_truth[i].y - r.ground_truth[i - 1].y;
    CHECK(std::abs(dx) + std::abs(dy) == Catch::Approx(p.d));
  }
}

TEST_CASE("turn statistics approach 0.5 / 0.25 / 0.25") {
  SynthParams p;
  p.n = 20000;
  p.seed = 9;
  p.lc = 0.0;
  const auto r = make_manhattan(p);
  int straight = 0, left = 0, right = 0;
  for (int i = 1; i < p.n; ++i) {
    const int prev = static_cast<int>(
        std::lround(r.ground_truth[i - 1].theta / (0.5 * kPi)));
    const int cur =
        static_cast<int>(std::lround(r.ground_truth[i].theta / (0.5 * kPi)));
    const int d = ((cur - prev) % 4 + 4) % 4;
    if (d == 0) ++straight;
    else if (d == 1) ++left;
    else ++right;
  }
  CHECK(straight / double(p.n - 1) == Catch::Approx(0.5).margin(0.02));
  CHECK(left / double(p.n - 1) == Catch::Approx(0.25).margin(0.02));
  CHECK(right / double(p.n - 1) == Catch::Approx(0.25).margin(0.02));
}

TEST_CASE("loop closures obey distance, ordering and placement rules") {
  SynthParams p;
  p.n = 400;
  p.seed = 31;
  p.lc = 0.8;
  const auto r = make_manhattan(p);
  int loops = 0;
  int expected_next_odo = 1;
  for (const Edge& e : r.graph.edges) {
    if (e.j == e.i + 1 && e.j == expected_next_odo) {
      ++expected_next_odo;  // odometry edge in chain order
      continue;
    }
    // loop closure: appended right after the odometry edge of its pose j
    ++loops;
    CHECK(e.j == expected_next_odo - 1);
    CHECK(e.i <= e.j - 2);
    const double dx = r.ground_truth[e.j].x - r.ground_truth[e.i].x;
    const double dy = r.ground_truth[e.j].y - r.ground_truth[e.i].y;
    CHECK(std::sqrt(dx * dx + dy * dy) <= 1.5 * p.d + 1e-12);
  }
  CHECK(expected_next_odo == p.n);
  CHECK(loops > 0);

  SynthParams chain = p;
  chain.lc = 0.0;
  CHECK(make_manhattan(chain).graph.num_edges() == p.n - 1);
}

TEST_CASE("information weights are inverse variances with a zero-sigma cap") {
  SynthParams p;
  p.n = 10;
  p.seed = 2;
  p.sigma_t = 0.01;
  p.sigma_r = 0.0;
  const auto r = make_manhattan(p);
  const Eigen::Matrix3d& info = r.graph.edges[0].info;
  CHECK(info(0, 0) == Catch::Approx(1e4));
  CHECK(info(1, 1) == Catch::Approx(1e4));
  CHECK(info(2, 2) == Catch::Approx(1e6));
  CHECK(info(0, 1) == 0.0);

  SynthParams q = p;
  q.sigma_t = 0.5;
  q.sigma_r = 0.3;
  const auto s = make_manhattan(q);
  CHECK(s.graph.edges[0].info(0, 0) == Catch::Approx(4.0));
  CHECK(s.graph.edges[0].info(2, 2) == Catch::Approx(1.0 / 0.09));
}

TEST_CASE("node estimates are the chained noisy odometry") {
  SynthParams p;
  p.n = 40;
  p.seed = 13;
  p.sigma_r = 0.2;
  p.sigma_t = 0.1;
  const auto r = make_manhattan(p);
  const auto init = odometry_init(r.graph);
  for (int i = 0; i < p.n; ++i) {
    CHECK(same_bits(init[i].x, r.graph.nodes[i].x));
    CHECK(same_bits(init[i].y, r.graph.nodes[i].y));
    CHECK(same_bits(init[i].theta, r.graph.nodes[i].theta));
  }
}

TEST_CASE("degenerate parameter checks") {
  SynthParams p;
  p.n = 1;
  CHECK_THROWS(make_manhattan(p));
  p.n = 2;
  const auto r = make_manhattan(p);
  CHECK(r.graph.num_nodes() == 2);
  CHECK(r.graph.num_edges() == 1);
}
