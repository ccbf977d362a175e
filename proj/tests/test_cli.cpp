#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pgo/g2o_io.hpp"
#include "pgo/graph.hpp"

// End-to-end checks of the command-line tool (path injected at build time).

namespace {

int run_tool(const std::string& args) {
  const std::string cmd = std::string(TOOL_PATH) + " " + args +
                          " > cli_stdout.txt 2> cli_stderr.txt";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

std::vector<std::string> csv_lines(const std::string& path) {
  std::istringstream is(slurp(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string f;
  std::istringstream ls(line);
  while (std::getline(ls, f, sep)) out.push_back(f);
  return out;
}

// CSV bytes with the time_s column replaced, for rerun comparisons.
std::string without_times(const std::string& path) {
  auto lines = csv_lines(path);
  std::string out;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    auto f = split(lines[k]);
    if (k > 0 && f.size() == 6) f[5] = "-";
    for (std::size_t i = 0; i < f.size(); ++i) {
      out += f[i];
      out += i + 1 < f.size() ? "," : "\n";
    }
  }
  return out;
}

}  // namespace

TEST_CASE("generate writes a graph, its ground truth and manifests") {
  REQUIRE(run_tool("generate --n 12 --seed 3 --lc 0.5 --sigma-r 0.1 "
                   "--sigma-t 0.05 --out cli_g.g2o") == 0);
  const pgo::PoseGraph g = pgo::load_g2o_file("cli_g.g2o").graph;
  const pgo::PoseGraph gt = pgo::load_g2o_file("cli_g_gt.g2o").graph;
  CHECK(g.num_nodes() == 12);
  CHECK(gt.num_nodes() == 12);
  CHECK(gt.num_edges() == g.num_edges());
  CHECK(pgo::total_cost(gt) < 1e-6);  // ground truth nearly explains the data
  REQUIRE(file_exists("cli_g.g2o.manifest.json"));
  const std::string m = slurp("cli_g.g2o.manifest.json");
  CHECK(m.find("\"command\": \"generate\"") != std::string::npos);
  CHECK(m.find("manifest_hash") != std::string::npos);

  SECTION("same seed reproduces the bytes") {
    REQUIRE(run_tool("generate --n 12 --seed 3 --lc 0.5 --sigma-r 0.1 "
                     "--sigma-t 0.05 --out cli_g2.g2o") == 0);
    CHECK(slurp("cli_g2.g2o") == slurp("cli_g.g2o"));
  }
}

TEST_CASE("solve drives a clean graph to zero cost and exports artifacts") {
  REQUIRE(run_tool("generate --n 40 --seed 5 --lc 0.4 --out cli_clean.g2o") ==
          0);
  REQUIRE(run_tool("solve --graph cli_clean.g2o --method gn --max-iters 10 "
                   "--out cli_s.csv --trace cli_t.csv --estimate cli_e.g2o") ==
          0);
  const auto lines = csv_lines("cli_s.csv");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "dataset,method,seed,F,iterations,time_s");
  const auto row = split(lines[1]);
  REQUIRE(row.size() == 6);
  CHECK(row[0] == "cli_clean");
  CHECK(row[1] == "gn");
  CHECK(std::stod(row[3]) <= 1e-10);
  CHECK(std::stol(row[4]) <= 5);

  const auto trace = csv_lines("cli_t.csv");
  CHECK(trace[0] == "iteration,F");
  CHECK(trace.size() == static_cast<std::size_t>(std::stol(row[4])) + 2);

  const pgo::PoseGraph est = pgo::load_g2o_file("cli_e.g2o").graph;
  REQUIRE(est.num_nodes() == 40);
  CHECK(pgo::total_cost(est) <= 1e-10);
}

TEST_CASE("solve reruns match except for the timing column") {
  REQUIRE(run_tool("generate --n 25 --seed 8 --sigma-r 0.2 --sigma-t 0.05 "
                   "--out cli_n.g2o") == 0);
  REQUIRE(run_tool("solve --graph cli_n.g2o --method lm --out cli_r1.csv") ==
          0);
  REQUIRE(run_tool("solve --graph cli_n.g2o --method lm --out cli_r2.csv") ==
          0);
  CHECK(without_times("cli_r1.csv") == without_times("cli_r2.csv"));
  REQUIRE(file_exists("cli_r1.csv.manifest.json"));
  CHECK(slurp("cli_r1.csv.manifest.json").find("deterministic_hash") !=
        std::string::npos);
}

TEST_CASE("train with zero episodes still writes a loadable checkpoint") {
  REQUIRE(run_tool("train --episodes 0 --dense 8 --lstm 8 "
                   "--checkpoint cli_a.ckpt --rewards cli_rw.csv") == 0);
  REQUIRE(file_exists("cli_a.ckpt"));
  CHECK(slurp("cli_rw.csv") == "episode,reward,final_oc\n");
}

TEST_CASE("eval refuses graphs above the node budget unless forced") {
  REQUIRE(file_exists("cli_a.ckpt"));  // from the train case above
  REQUIRE(run_tool("generate --n 40 --seed 6 --sigma-r 0.2 --out cli_b.g2o") ==
          0);
  CHECK(run_tool("eval --graph cli_b.g2o --checkpoint cli_a.ckpt "
                 "--node-budget 30 --runs 1 --cycles 1 --out cli_ev.csv") != 0);
  const std::string err = slurp("cli_stderr.txt");
  CHECK(err.find("node budget") != std::string::npos);
  CHECK(err.find("--force") != std::string::npos);

  REQUIRE(run_tool("eval --graph cli_b.g2o --checkpoint cli_a.ckpt "
                   "--node-budget 30 --force --runs 2 --cycles 1 "
                   "--out cli_ev.csv") == 0);
  const auto lines = csv_lines("cli_ev.csv");
  REQUIRE(lines.size() == 3);
  const auto r0 = split(lines[1]);
  CHECK(r0[1] == "rl");
  const pgo::PoseGraph b = pgo::load_g2o_file("cli_b.g2o").graph;
  CHECK(std::stol(r0[4]) == b.num_edges());  // cycles=1: one pass over edges
}

TEST_CASE("bootstrap reports both stages and their exact time sum") {
  REQUIRE(file_exists("cli_a.ckpt"));
  REQUIRE(run_tool("generate --n 30 --seed 9 --sigma-r 0.2 --sigma-t 0.02 "
                   "--out cli_c.g2o") == 0);
  REQUIRE(run_tool("bootstrap --graph cli_c.g2o --checkpoint cli_a.ckpt "
                   "--method gn --max-iters 5 --runs 1 --cycles 1 "
                   "--out cli_boot.csv --estimate cli_boot.g2o") == 0);
  const auto lines = csv_lines("cli_boot.csv");
  REQUIRE(lines.size() == 4);
  const auto rl = split(lines[1]);
  const auto gn = split(lines[2]);
  const auto both = split(lines[3]);
  CHECK(rl[1] == "rl");
  CHECK(gn[1] == "gn");
  CHECK(both[1] == "rl+gn5");
  CHECK(both[3] == gn[3]);  // combined F is the solver stage's F
  const double sum = std::stod(rl[5]) + std::stod(gn[5]);
  CHECK(std::abs(std::stod(both[5]) - sum) < 1e-3);
  CHECK(pgo::load_g2o_file("cli_boot.g2o").graph.num_nodes() == 30);
}

TEST_CASE("plot overlays trajectories and rejects empty input") {
  REQUIRE(file_exists("cli_clean.g2o"));
  REQUIRE(file_exists("cli_e.g2o"));
  REQUIRE(run_tool("plot --curve raw=cli_clean.g2o --curve solved=cli_e.g2o "
                   "--out cli_p.svg") == 0);
  const std::string svg = slurp("cli_p.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("raw (F=") != std::string::npos);
  CHECK(svg.find("solved (F=") != std::string::npos);

  CHECK(run_tool("plot --out cli_px.svg") != 0);

  SECTION("coincident curves get identical point strings") {
    REQUIRE(run_tool("plot --curve a=cli_clean.g2o --curve b=cli_clean.g2o "
                     "--out cli_p2.svg") == 0);
    const std::string s2 = slurp("cli_p2.svg");
    std::vector<std::string> points;
    std::size_t at = 0;
    while ((at = s2.find("points=\"", at)) != std::string::npos) {
      at += 8;
      points.push_back(s2.substr(at, s2.find('"', at) - at));
    }
    REQUIRE(points.size() == 2);
    CHECK(points[0] == points[1]);
  }
}

TEST_CASE("report aggregates runs by dataset and method") {
  {
    std::ofstream os("cli_in1.csv");
    os << "dataset,method,seed,F,iterations,time_s\n";
    os << "a,gn,0,10,5,0.100000\n";
    os << "a,gn,1,20,5,0.300000\n";
  }
  {
    std::ofstream os("cli_in2.csv");
    os << "dataset,method,seed,F,iterations,time_s\n";
    os << "a,lm,0,5,7,0.200000\n";
  }
  REQUIRE(run_tool("report cli_in1.csv cli_in2.csv --out cli_sum.csv") == 0);
  const std::string sum = slurp("cli_sum.csv");
  CHECK(sum.find("dataset,method,runs,median_F,mean_F,best_F,mean_time_s") ==
        0);
  CHECK(sum.find("a,gn,2,15,15,10,0.200000") != std::string::npos);
  CHECK(sum.find("a,lm,1,5,5,5,0.200000") != std::string::npos);
}

TEST_CASE("config files supply defaults and explicit flags win") {
  {
    std::ofstream os("cli_cfg.txt");
    os << "# shared settings, one section per verb\n";
    os << "[generate]\n";
    os << "n=9\n";
    os << "seed=4\n";
    os << "[solve]\n";
    os << "method=lm\n";
  }
  REQUIRE(run_tool("generate --config cli_cfg.txt --out cli_cf1.g2o") == 0);
  CHECK(pgo::load_g2o_file("cli_cf1.g2o").graph.num_nodes() == 9);
  REQUIRE(run_tool("generate --config cli_cfg.txt --n 11 --out cli_cf2.g2o") ==
          0);
  CHECK(pgo::load_g2o_file("cli_cf2.g2o").graph.num_nodes() == 11);

  // Sections for other verbs are inert; the solve section is picked up too.
  REQUIRE(run_tool("solve --config cli_cfg.txt --graph cli_cf1.g2o "
                   "--out cli_cf_solve.csv") == 0);
  CHECK(slurp("cli_stdout.txt").find(" lm:") != std::string::npos);

  // Unknown keys are rejected rather than silently dropped.
  {
    std::ofstream os("cli_cfg_bad.txt");
    os << "[generate]\n";
    os << "nodes=9\n";
  }
  CHECK(run_tool("generate --config cli_cfg_bad.txt --out cli_cf3.g2o") != 0);
}
