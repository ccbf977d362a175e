#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pgo/graph.hpp"

using namespace pgo;

namespace {

PoseGraph two_pose_graph(double theta_err) {
  PoseGraph g;
  g.nodes.emplace_back(0.0, 0.0, 0.0);
  g.nodes.emplace_back(1.0, 0.0, theta_err);
  Edge e;
  e.i = 0;
  e.j = 1;
  e.meas = Pose2(1.0, 0.0, 0.0);
  g.edges.push_back(e);
  return g;
}

}  // namespace

TEST_CASE("total_cost weighs residuals by the information matrix") {
  PoseGraph g = two_pose_graph(0.0);
  CHECK(total_cost(g) == Catch::Approx(0.0).margin(1e-18));

  // Displace node 1: residual (0.5, -0.25, 0.1), diagonal weights.
  g.nodes[1] = Pose2(1.5, -0.25, 0.1);
  g.edges[0].info = Eigen::Vector3d(4.0, 2.0, 9.0).asDiagonal();
  const double expect = 4.0 * 0.25 + 2.0 * 0.0625 + 9.0 * 0.01;
  CHECK(total_cost(g) == Catch::Approx(expect));
}

TEST_CASE("orientation_cost is the root sum of squared chordal gaps") {
  PoseGraph g;
  for (int i = 0; i < 4; ++i) g.nodes.emplace_back(0.0, 0.0, 0.0);
  const double gaps[3] = {0.2, -0.15, 0.4};
  for (int k = 0; k < 3; ++k) {
    Edge e;
    e.i = k;
    e.j = k + 1;
    e.meas = Pose2(0.0, 0.0, -gaps[k]);  // estimate err of +gaps[k]
    g.edges.push_back(e);
  }
  // Oracle from explicit rotation matrices, no chordal shortcut.
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Matrix2d diff =
        Rotation2(-gaps[k]).matrix() - Rotation2(0.0).matrix();
    s += diff.squaredNorm();
  }
  CHECK(orientation_cost(g) == Catch::Approx(std::sqrt(s)));
  // and against the closed form
  double s2 = 0.0;
  for (double d : gaps) s2 += 8.0 * std::sin(d / 2.0) * std::sin(d / 2.0);
  CHECK(orientation_cost(g) == Catch::Approx(std::sqrt(s2)));
  // information weights are ignored by design
  g.edges[0].info *= 1e6;
  CHECK(orientation_cost(g) == Catch::Approx(std::sqrt(s2)));
}

TEST_CASE("validate rejects bad edges") {
  PoseGraph g = two_pose_graph(0.0);
  CHECK_NOTHROW(g.validate());
  g.edges[0].j = 7;
  CHECK_THROWS_WITH(g.validate(), Catch::Matchers::ContainsSubstring("edge 0"));
  g.edges[0].j = 0;
  CHECK_THROWS_WITH(g.validate(),
                    Catch::Matchers::ContainsSubstring("self-loop"));
}

TEST_CASE("odometry_init chains consecutive measurements") {
  PoseGraph g;
  for (int i = 0; i < 4; ++i) g.nodes.emplace_back(0.0, 0.0, 0.0);
  const Pose2 m01(1.0, 0.0, 0.5), m12(2.0, -0.5, -0.2), m23(0.5, 0.5, 1.0);
  for (const auto& [i, m] :
       {std::pair{0, m01}, std::pair{1, m12}, std::pair{2, m23}}) {
    Edge e;
    e.i = i;
    e.j = i + 1;
    e.meas = m;
    g.edges.push_back(e);
  }
  // extra loop edge must not disturb the chain
  Edge lc;
  lc.i = 0;
  lc.j = 3;
  lc.meas = Pose2(0.0, 0.0, 0.0);
  g.edges.push_back(lc);

  const auto init = odometry_init(g);
  REQUIRE(init.size() == 4);
  const Pose2 p1 = Pose2(0, 0, 0).compose(m01);
  const Pose2 p2 = p1.compose(m12);
  const Pose2 p3 = p2.compose(m23);
  CHECK(init[1].x == Catch::Approx(p1.x));
  CHECK(init[2].y == Catch::Approx(p2.y));
  CHECK(init[3].theta == Catch::Approx(p3.theta));
  CHECK(init[3].x == Catch::Approx(p3.x));
}

TEST_CASE("odometry_init reports the missing link") {
  PoseGraph g;
  for (int i = 0; i < 3; ++i) g.nodes.emplace_back(0.0, 0.0, 0.0);
  Edge e;
  e.i = 0;
  e.j = 1;
  e.meas = Pose2(1.0, 0.0, 0.0);
  g.edges.push_back(e);  // no (1, 2) edge
  CHECK_THROWS_WITH(odometry_init(g),
                    Catch::Matchers::ContainsSubstring("(1, 2)"));
}

TEST_CASE("adjacency splits incoming and outgoing edges") {
  PoseGraph g;
  for (int i = 0; i < 3; ++i) g.nodes.emplace_back(0.0, 0.0, 0.0);
  auto add = [&](int i, int j) {
    Edge e;
    e.i = i;
    e.j = j;
    e.meas = Pose2(1.0, 0.0, 0.0);
    g.edges.push_back(e);
  };
  add(0, 1);
  add(1, 2);
  add(0, 2);
  const Adjacency adj(g);
  CHECK(adj.outgoing[0] == std::vector<int>{0, 2});
  CHECK(adj.incoming[2] == std::vector<int>{1, 2});
  CHECK(adj.incoming[0].empty());
  CHECK(adj.outgoing[2].empty());
}
