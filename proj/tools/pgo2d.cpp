// Command-line workbench around the pgo library: dataset generation,
// sparse solves, agent training/evaluation, bootstrapped pipelines and
// report/plot export. Every output file gets a .manifest.json sidecar
// recording the command, resolved parameters and input hashes.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pgo/g2o_io.hpp"
#include "pgo/sac.hpp"
#include "pgo/solvers.hpp"
#include "pgo/synth.hpp"

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Small utilities: hashing, formatting, file IO.
// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_time(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string file_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name.resize(dot);
  return name;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// CSV bytes with every time_s field blanked, so rerun hashes can ignore
/// wall-clock jitter while covering everything else.
std::string mask_timing_columns(const std::string& bytes) {
  std::istringstream is(bytes);
  std::ostringstream os;
  std::string line;
  int time_col = -1;
  bool first = true;
  while (std::getline(is, line)) {
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (first) {
      for (std::size_t k = 0; k < fields.size(); ++k) {
        if (fields[k] == "time_s" || fields[k] == "mean_time_s") {
          time_col = static_cast<int>(k);
        }
      }
      first = false;
    } else if (time_col >= 0 && time_col < static_cast<int>(fields.size())) {
      fields[time_col] = "-";
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) os << ',';
      os << fields[k];
    }
    os << '\n';
  }
  return os.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ---------------------------------------------------------------------------
// Run manifests.
// ---------------------------------------------------------------------------

/**
 * Sidecar written next to every output file. The manifest hash covers the
 * command, resolved parameters and input hashes (not timestamps), so equal
 * manifest hashes imply byte-identical outputs up to the masked timing
 * columns, whose jitter is excluded via deterministic_hash.
 */
void write_manifests(const std::string& command,
                     const std::map<std::string, std::string>& params,
                     const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs) {
  json in = json::object();
  std::uint64_t h = fnv1a(command);
  for (const auto& [k, v] : params) {
    h = fnv1a(k + "=" + v + ";", h);
  }
  for (const std::string& p : inputs) {
    const std::string ih = hex64(fnv1a(read_file_bytes(p)));
    in[p] = ih;
    h = fnv1a(p + "=" + ih + ";", h);
  }
  const std::string manifest_hash = hex64(h);

  json out = json::object();
  json det = json::object();
  for (const std::string& p : outputs) {
    const std::string bytes = read_file_bytes(p);
    out[p] = hex64(fnv1a(bytes));
    det[p] = hex64(
        fnv1a(ends_with(p, ".csv") ? mask_timing_columns(bytes) : bytes));
  }

  json m;
  m["command"] = command;
  m["params"] = params;
  m["inputs"] = in;
  m["outputs"] = out;
  m["deterministic_hash"] = det;
  m["manifest_hash"] = manifest_hash;
  m["created"] = iso_now();

  for (const std::string& p : outputs) {
    std::ofstream os(p + ".manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest for " + p);
    os << m.dump(2) << "\n";
  }
}

// ---------------------------------------------------------------------------
// CSV report helpers (schema: dataset,method,seed,F,iterations,time_s).
// ---------------------------------------------------------------------------

constexpr const char* kReportHeader = "dataset,method,seed,F,iterations,time_s";

struct ReportRow {
  std::string dataset, method;
  long seed = 0;
  double F = 0.0;
  long iterations = 0;
  double time_s = 0.0;
};

void write_report(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << kReportHeader << "\n";
  for (const ReportRow& r : rows) {
    os << r.dataset << ',' << r.method << ',' << r.seed << ',' << fmt_g(r.F)
       << ',' << r.iterations << ',' << fmt_time(r.time_s) << "\n";
  }
}

std::vector<ReportRow> read_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error(path + ": empty report");
  }
  if (line != kReportHeader) {
    throw std::runtime_error(path + ": unexpected CSV header: " + line);
  }
  std::vector<ReportRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 6) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 6 columns");
    }
    ReportRow r;
    r.dataset = f[0];
    r.method = f[1];
    r.seed = std::stol(f[2]);
    r.F = std::stod(f[3]);
    r.iterations = std::stol(f[4]);
    r.time_s = std::stod(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Shared pieces.
// ---------------------------------------------------------------------------

void check_node_budget(int nodes, int budget, bool force) {
  if (nodes > budget && !force) {
    throw std::runtime_error(
        "graph has " + std::to_string(nodes) + " nodes, above the node budget " +
        std::to_string(budget) +
        "; pass --force (or raise --node-budget) to run anyway");
  }
}

pgo::SolveReport run_solver(pgo::PoseGraph& g, const std::string& method,
                            int max_iters) {
  pgo::SolverOptions opt;
  opt.max_iters = max_iters;
  if (method == "gn") return pgo::gauss_newton(g, opt);
  if (method == "lm") return pgo::levenberg_marquardt(g, opt);
  throw std::runtime_error("unknown method '" + method + "' (use gn or lm)");
}

struct SynthFlags {
  pgo::SynthParams p;
  void attach(CLI::App* cmd) {
    cmd->add_option("--n", p.n, "number of poses")->capture_default_str();
    cmd->add_option("--d", p.d, "grid step length")->capture_default_str();
    cmd->add_option("--lc", p.lc, "loop-closure probability per pose")
        ->capture_default_str();
    cmd->add_option("--sigma-r", p.sigma_r, "heading noise stddev")
        ->capture_default_str();
    cmd->add_option("--sigma-t", p.sigma_t, "translation noise stddev")
        ->capture_default_str();
    cmd->add_option("--seed", p.seed, "generator seed")->capture_default_str();
  }
  void params(std::map<std::string, std::string>& m) const {
    m["n"] = std::to_string(p.n);
    m["d"] = fmt_g(p.d);
    m["lc"] = fmt_g(p.lc);
    m["sigma_r"] = fmt_g(p.sigma_r);
    m["sigma_t"] = fmt_g(p.sigma_t);
    m["seed"] = std::to_string(p.seed);
  }
};

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

void cmd_generate(const SynthFlags& sf, const std::string& out,
                  std::string gt_out) {
  const pgo::SynthResult r = pgo::make_manhattan(sf.p);
  if (gt_out.empty()) {
    std::string base = out;
    if (ends_with(base, ".g2o")) base.resize(base.size() - 4);
    gt_out = base + "_gt.g2o";
  }
  pgo::save_g2o_file(out, r.graph);
  // The ground-truth file is self-consistent: true poses plus the exact
  // relative transforms they induce, so its cost is zero by construction.
  pgo::PoseGraph gt = r.graph;
  gt.nodes = r.ground_truth;
  for (pgo::Edge& e : gt.edges) {
    e.meas = gt.nodes[static_cast<std::size_t>(e.i)].between(
        gt.nodes[static_cast<std::size_t>(e.j)]);
  }
  pgo::save_g2o_file(gt_out, gt);

  std::map<std::string, std::string> params;
  sf.params(params);
  write_manifests("generate", params, {}, {out, gt_out});
  std::cout << "wrote " << out << " (" << r.graph.num_nodes() << " poses, "
            << r.graph.num_edges() << " edges) and " << gt_out << "\n";
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

void cmd_solve(const std::string& graph_path, const std::string& method,
               int max_iters, const std::string& init,
               const std::string& init_file, const std::string& out,
               const std::string& trace_out, const std::string& estimate_out,
               std::string dataset, long seed) {
  pgo::PoseGraph g = pgo::load_g2o_file(graph_path).graph;
  std::vector<std::string> inputs = {graph_path};
  if (init == "odometry") {
    g.nodes = pgo::odometry_init(g);
  } else if (init == "file") {
    if (init_file.empty()) {
      throw std::runtime_error("--init file requires --init-file");
    }
    const pgo::PoseGraph est = pgo::load_g2o_file(init_file).graph;
    if (est.num_nodes() != g.num_nodes()) {
      throw std::runtime_error("initial estimate has " +
                               std::to_string(est.num_nodes()) +
                               " poses, graph has " +
                               std::to_string(g.num_nodes()));
    }
    g.nodes = est.nodes;
    inputs.push_back(init_file);
  } else if (init != "vertices") {
    throw std::runtime_error("unknown init '" + init +
                             "' (use odometry, vertices or file)");
  }

  const pgo::SolveReport rep = run_solver(g, method, max_iters);
  if (dataset.empty()) dataset = file_stem(graph_path);

  ReportRow row;
  row.dataset = dataset;
  row.method = method;
  row.seed = seed;
  row.F = rep.final_cost();
  row.iterations = rep.iterations;
  row.time_s = rep.wall_time;
  write_report(out, {row});

  std::vector<std::string> outputs = {out};
  if (!trace_out.empty()) {
    std::ofstream os(trace_out);
    if (!os) throw std::runtime_error("cannot write " + trace_out);
    os << "iteration,F\n";
    for (std::size_t k = 0; k < rep.chi2_trace.size(); ++k) {
      os << k << ',' << fmt_g(rep.chi2_trace[k]) << "\n";
    }
    outputs.push_back(trace_out);
  }
  if (!estimate_out.empty()) {
    pgo::save_g2o_file(estimate_out, g);
    outputs.push_back(estimate_out);
  }

  std::map<std::string, std::string> params = {
      {"method", method},
      {"max_iters", std::to_string(max_iters)},
      {"init", init},
      {"dataset", dataset},
      {"seed", std::to_string(seed)}};
  write_manifests("solve", params, inputs, outputs);

  std::cout << dataset << " " << method
            << ": F(init)=" << fmt_g(rep.initial_cost())
            << " F(final)=" << fmt_g(rep.final_cost())
            << " iters=" << rep.iterations << " time=" << fmt_time(rep.wall_time)
            << "s" << (rep.converged ? " (converged)" : "") << "\n";
  if (!rep.message.empty()) std::cout << "note: " << rep.message << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void cmd_train(const SynthFlags& sf, const pgo::EpisodeConfig& ecfg,
               pgo::AgentConfig acfg, int episodes, const std::string& ckpt_out,
               const std::string& rewards_out, int budget, bool force) {
  check_node_budget(sf.p.n, budget, force);
  pgo::Agent agent(acfg);
  const auto t0 = std::chrono::steady_clock::now();
  pgo::TrainResult tr;
  if (episodes > 0) {
    tr = pgo::train_agent(agent, sf.p, ecfg, episodes);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  agent.save(ckpt_out);
  std::vector<std::string> outputs = {ckpt_out};
  if (!rewards_out.empty()) {
    std::ofstream os(rewards_out);
    if (!os) throw std::runtime_error("cannot write " + rewards_out);
    os << "episode,reward,final_oc\n";
    for (std::size_t k = 0; k < tr.episode_rewards.size(); ++k) {
      os << k << ',' << fmt_g(tr.episode_rewards[k]) << ','
         << fmt_g(tr.final_oc[k]) << "\n";
    }
    outputs.push_back(rewards_out);
  }

  std::map<std::string, std::string> params;
  sf.params(params);
  params["cycles"] = std::to_string(ecfg.cycles);
  params["action_range"] = fmt_g(ecfg.action_range);
  params["relative_bonus"] = ecfg.relative_bonus ? "1" : "0";
  params["episodes"] = std::to_string(episodes);
  params["dense"] = std::to_string(acfg.net.dense);
  params["lstm"] = std::to_string(acfg.net.lstm);
  params["batch"] = std::to_string(acfg.batch);
  params["gamma"] = fmt_g(acfg.gamma);
  params["tau"] = fmt_g(acfg.tau);
  params["lr"] = fmt_g(acfg.lr);
  params["target_entropy"] = fmt_g(acfg.target_entropy);
  params["init_alpha"] = fmt_g(acfg.init_alpha);
  params["updates_per_episode"] = std::to_string(acfg.updates_per_episode);
  params["bptt_window"] = std::to_string(acfg.bptt_window);
  params["replay_capacity"] = std::to_string(acfg.replay_capacity);
  params["twin_critic"] = acfg.twin_critic ? "1" : "0";
  params["agent_seed"] = std::to_string(acfg.seed);
  write_manifests("train", params, {}, outputs);

  if (!tr.episode_rewards.empty()) {
    const double first = tr.episode_rewards.front();
    const double last = tr.episode_rewards.back();
    std::cout << "trained " << episodes << " episodes in " << fmt_time(wall)
              << "s; reward " << fmt_g(first) << " -> " << fmt_g(last) << "\n";
  } else {
    std::cout << "wrote untrained checkpoint " << ckpt_out << "\n";
  }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOutcome {
  pgo::EvalResult result;
  int episode_steps = 0;
};

EvalOutcome eval_checkpoint(const pgo::Agent& agent, const pgo::PoseGraph& g,
                            int cycles, double range, int runs) {
  pgo::EpisodeConfig ecfg;
  ecfg.cycles = cycles;
  ecfg.action_range = range;
  EvalOutcome o;
  o.result = pgo::evaluate(agent, g, ecfg, runs);
  o.episode_steps = cycles * g.num_edges();
  return o;
}

void export_trace(const pgo::Agent& agent, const pgo::PoseGraph& g, int cycles,
                  double range, const std::string& path) {
  pgo::EpisodeConfig ecfg;
  ecfg.cycles = cycles;
  ecfg.action_range = range;
  pgo::Env env(g, ecfg, &agent.encoder());
  pgo::EnvStep s = env.reset();
  pgo::dn::LstmState ls(agent.config().net.lstm);
  Eigen::Vector2d prev = Eigen::Vector2d::Zero();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "step,oc,reward,F\n";
  os << 0 << ',' << fmt_g(s.oc) << ",0," << fmt_g(env.finalize().F) << "\n";
  int step = 0;
  while (!env.done()) {
    const pgo::ActResult a = agent.act(s.state, prev, ls, true, nullptr);
    s = env.step(a.u);
    prev = a.u;
    ++step;
    os << step << ',' << fmt_g(s.oc) << ',' << fmt_g(s.reward) << ','
       << fmt_g(env.finalize().F) << "\n";
  }
}

void cmd_eval(const std::string& graph_path, const std::string& ckpt,
              int cycles, int cycles_mult, double range, int runs,
              const std::string& out, const std::string& estimate_out,
              const std::string& trace_out, std::string dataset, int budget,
              bool force) {
  const pgo::PoseGraph g = pgo::load_g2o_file(graph_path).graph;
  check_node_budget(g.num_nodes(), budget, force);
  const std::unique_ptr<pgo::Agent> agent_ptr = pgo::Agent::load(ckpt);
  const pgo::Agent& agent = *agent_ptr;
  const int eff_cycles = cycles * cycles_mult;
  const EvalOutcome o = eval_checkpoint(agent, g, eff_cycles, range, runs);
  if (dataset.empty()) dataset = file_stem(graph_path);

  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < o.result.F_runs.size(); ++k) {
    ReportRow r;
    r.dataset = dataset;
    r.method = "rl";
    r.seed = static_cast<long>(k);
    r.F = o.result.F_runs[k];
    r.iterations = o.episode_steps;
    r.time_s = o.result.wall_time / std::max(1, runs);
    rows.push_back(std::move(r));
  }
  write_report(out, rows);

  std::vector<std::string> outputs = {out};
  if (!estimate_out.empty()) {
    pgo::save_g2o_file(estimate_out, o.result.best_graph);
    outputs.push_back(estimate_out);
  }
  if (!trace_out.empty()) {
    export_trace(agent, g, eff_cycles, range, trace_out);
    outputs.push_back(trace_out);
  }

  std::map<std::string, std::string> params = {
      {"cycles", std::to_string(cycles)},
      {"cycles_mult", std::to_string(cycles_mult)},
      {"action_range", fmt_g(range)},
      {"runs", std::to_string(runs)},
      {"dataset", dataset}};
  write_manifests("eval", params, {graph_path, ckpt}, outputs);

  std::cout << dataset << " rl: mean F=" << fmt_g(o.result.mean_F)
            << " best F=" << fmt_g(o.result.best_F) << " over " << runs
            << " runs, " << fmt_time(o.result.wall_time) << "s\n";
}

// ---------------------------------------------------------------------------
// bootstrap
// ---------------------------------------------------------------------------

void cmd_bootstrap(const std::string& graph_path, const std::string& ckpt,
                   const std::string& method, int max_iters, int cycles,
                   int cycles_mult, double range, int runs,
                   const std::string& out, const std::string& estimate_out,
                   std::string dataset, int budget, bool force) {
  const pgo::PoseGraph g = pgo::load_g2o_file(graph_path).graph;
  check_node_budget(g.num_nodes(), budget, force);
  const std::unique_ptr<pgo::Agent> agent_ptr = pgo::Agent::load(ckpt);
  const pgo::Agent& agent = *agent_ptr;
  const EvalOutcome stage1 =
      eval_checkpoint(agent, g, cycles * cycles_mult, range, runs);

  pgo::PoseGraph boot = stage1.result.best_graph;
  const pgo::SolveReport rep = run_solver(boot, method, max_iters);
  if (dataset.empty()) dataset = file_stem(graph_path);

  ReportRow rl;
  rl.dataset = dataset;
  rl.method = "rl";
  rl.F = stage1.result.best_F;
  rl.iterations = stage1.episode_steps;
  rl.time_s = stage1.result.wall_time;

  ReportRow solver_row;
  solver_row.dataset = dataset;
  solver_row.method = method;
  solver_row.F = rep.final_cost();
  solver_row.iterations = rep.iterations;
  solver_row.time_s = rep.wall_time;

  ReportRow combined;
  combined.dataset = dataset;
  combined.method = "rl+" + method + std::to_string(max_iters);
  combined.F = rep.final_cost();
  combined.iterations = rep.iterations;
  combined.time_s = rl.time_s + solver_row.time_s;

  write_report(out, {rl, solver_row, combined});
  std::vector<std::string> outputs = {out};
  if (!estimate_out.empty()) {
    pgo::save_g2o_file(estimate_out, boot);
    outputs.push_back(estimate_out);
  }

  std::map<std::string, std::string> params = {
      {"method", method},
      {"max_iters", std::to_string(max_iters)},
      {"cycles", std::to_string(cycles)},
      {"cycles_mult", std::to_string(cycles_mult)},
      {"action_range", fmt_g(range)},
      {"runs", std::to_string(runs)},
      {"dataset", dataset}};
  write_manifests("bootstrap", params, {graph_path, ckpt}, outputs);

  std::cout << dataset << " " << combined.method
            << ": F(rl)=" << fmt_g(rl.F) << " F(final)=" << fmt_g(combined.F)
            << " time=" << fmt_time(combined.time_s) << "s\n";
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

void cmd_plot(const std::vector<std::string>& curve_specs,
              const std::string& out) {
  if (curve_specs.empty()) {
    throw std::runtime_error("plot needs at least one --curve name=path.g2o");
  }
  struct Curve {
    std::string name, path;
    pgo::PoseGraph graph;
  };
  std::vector<Curve> curves;
  std::vector<std::string> inputs;
  for (const std::string& spec : curve_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw std::runtime_error("bad --curve '" + spec + "', want name=path.g2o");
    }
    Curve c;
    c.name = spec.substr(0, eq);
    c.path = spec.substr(eq + 1);
    c.graph = pgo::load_g2o_file(c.path).graph;
    if (c.graph.num_nodes() == 0) {
      throw std::runtime_error(c.path + ": no vertices to plot");
    }
    inputs.push_back(c.path);
    curves.push_back(std::move(c));
  }

  double minx = std::numeric_limits<double>::infinity(), miny = minx;
  double maxx = -minx, maxy = -minx;
  for (const Curve& c : curves) {
    for (const pgo::Pose2& p : c.graph.nodes) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
  }
  const double span = std::max({maxx - minx, maxy - miny, 1e-9});
  const double scale = 1000.0 / span;
  const double pad = 50.0;
  auto sx = [&](double x) { return pad + (x - minx) * scale; };
  auto sy = [&](double y) { return pad + (maxy - y) * scale; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr int kPaletteSize = 6;

  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  const double W = pad * 2 + (maxx - minx) * scale;
  const double H = pad * 2 + (maxy - miny) * scale +
                   20.0 * static_cast<double>(curves.size());
  char buf[64];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 ";
  std::snprintf(buf, sizeof(buf), "%.10g %.10g", W, H);
  os << buf << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[k % kPaletteSize]
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.graph.nodes.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g",
                    sx(c.graph.nodes[i].x), sy(c.graph.nodes[i].y));
      os << (i ? " " : "") << buf;
    }
    os << "\"/>\n";
  }
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    const double y = pad * 2 + (maxy - miny) * scale + 18.0 * (k + 1);
    os << "<rect x=\"" << pad << "\" y=\"" << y - 10 << "\" width=\"12\""
       << " height=\"12\" fill=\"" << kPalette[k % kPaletteSize] << "\"/>\n";
    os << "<text x=\"" << pad + 18 << "\" y=\"" << y
       << "\" font-family=\"sans-serif\" font-size=\"14\">" << c.name
       << " (F=" << fmt_g(pgo::total_cost(c.graph)) << ")</text>\n";
  }
  os << "</svg>\n";
  os.close();

  std::map<std::string, std::string> params;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    params["curve" + std::to_string(k)] = curves[k].name + "=" + curves[k].path;
  }
  write_manifests("plot", params, inputs, {out});
  std::cout << "wrote " << out << " (" << curves.size() << " curves)\n";
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void cmd_report(const std::vector<std::string>& csvs, const std::string& out) {
  std::map<std::pair<std::string, std::string>, std::vector<ReportRow>> groups;
  for (const std::string& path : csvs) {
    for (ReportRow& r : read_report(path)) {
      groups[{r.dataset, r.method}].push_back(std::move(r));
    }
  }
  if (groups.empty()) throw std::runtime_error("no rows in input reports");

  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << "dataset,method,runs,median_F,mean_F,best_F,mean_time_s\n";
  std::cout << "dataset          method      runs  median_F      best_F\n";
  for (const auto& [key, rows] : groups) {
    std::vector<double> fs;
    double mean_f = 0.0, mean_t = 0.0, best = rows[0].F;
    for (const ReportRow& r : rows) {
      fs.push_back(r.F);
      mean_f += r.F;
      mean_t += r.time_s;
      best = std::min(best, r.F);
    }
    mean_f /= static_cast<double>(rows.size());
    mean_t /= static_cast<double>(rows.size());
    const double med = median_of(fs);
    os << key.first << ',' << key.second << ',' << rows.size() << ','
       << fmt_g(med) << ',' << fmt_g(mean_f) << ',' << fmt_g(best) << ','
       << fmt_time(mean_t) << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %-10s %5zu  %-12.6g  %-12.6g",
                  key.first.c_str(), key.second.c_str(), rows.size(), med,
                  best);
    std::cout << line << "\n";
  }
  os.close();
  write_manifests("report", {}, csvs, {out});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D pose-graph workbench: generate, solve, train, eval, "
               "bootstrap, plot, report"};
  app.require_subcommand(1);
  // Subcommands inherit fallthrough, so --config may follow the verb.
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "",
                 "key=value config file, one [subcommand] section per verb "
                 "(flags win)");

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a synthetic pose graph");
  SynthFlags gen_sf;
  gen_sf.attach(gen);
  std::string gen_out = "graph.g2o", gen_gt;
  gen->add_option("--out", gen_out, "output g2o path")->capture_default_str();
  gen->add_option("--ground-truth", gen_gt,
                  "ground-truth g2o path (default: <out>_gt.g2o)");
  gen->callback([&]() { cmd_generate(gen_sf, gen_out, gen_gt); });

  // solve ------------------------------------------------------------------
  auto* sol = app.add_subcommand("solve", "run a sparse solver on a graph");
  std::string sol_graph, sol_method = "gn", sol_init = "odometry";
  std::string sol_init_file, sol_out = "solve.csv", sol_trace, sol_est;
  std::string sol_dataset;
  int sol_iters = 100;
  long sol_seed = 0;
  sol->add_option("--graph", sol_graph, "input g2o file")->required();
  sol->add_option("--method", sol_method, "gn or lm")->capture_default_str();
  sol->add_option("--max-iters", sol_iters, "iteration budget")
      ->capture_default_str();
  sol->add_option("--init", sol_init, "odometry, vertices or file")
      ->capture_default_str();
  sol->add_option("--init-file", sol_init_file, "estimate g2o for --init file");
  sol->add_option("--out", sol_out, "report CSV path")->capture_default_str();
  sol->add_option("--trace", sol_trace, "optional chi2 trace CSV");
  sol->add_option("--estimate", sol_est, "optional solved estimate g2o");
  sol->add_option("--dataset", sol_dataset, "dataset label (default: stem)");
  sol->add_option("--seed", sol_seed, "seed column value")->capture_default_str();
  sol->callback([&]() {
    cmd_solve(sol_graph, sol_method, sol_iters, sol_init, sol_init_file,
              sol_out, sol_trace, sol_est, sol_dataset, sol_seed);
  });

  // train ------------------------------------------------------------------
  auto* trn = app.add_subcommand("train", "train an agent on sampled graphs");
  SynthFlags trn_sf;
  trn_sf.p.n = 20;
  trn_sf.p.d = 1.0;
  trn_sf.p.sigma_r = 0.2;
  trn_sf.attach(trn);
  pgo::EpisodeConfig trn_ecfg;
  pgo::AgentConfig trn_acfg;
  trn_acfg.net.dense = 64;
  trn_acfg.net.lstm = 64;
  trn_acfg.batch = 4;
  trn_acfg.bptt_window = 32;
  trn_acfg.updates_per_episode = 8;
  int trn_episodes = 300, trn_budget = 5000;
  bool trn_force = false, trn_single = false;
  std::string trn_ckpt = "agent.ckpt", trn_rewards = "rewards.csv";
  trn->add_option("--cycles", trn_ecfg.cycles, "cursor cycles per episode")
      ->capture_default_str();
  trn->add_option("--range", trn_ecfg.action_range, "action range (radians)")
      ->capture_default_str();
  trn->add_flag("--relative-bonus", trn_ecfg.relative_bonus,
                "scale bonus rungs by the initial orientation cost");
  trn->add_option("--episodes", trn_episodes, "training episodes")
      ->capture_default_str();
  trn->add_option("--dense", trn_acfg.net.dense, "dense layer width")
      ->capture_default_str();
  trn->add_option("--lstm", trn_acfg.net.lstm, "recurrent width")
      ->capture_default_str();
  trn->add_option("--batch", trn_acfg.batch, "sequences per update")
      ->capture_default_str();
  trn->add_option("--gamma", trn_acfg.gamma, "discount")->capture_default_str();
  trn->add_option("--tau", trn_acfg.tau, "target EMA rate")
      ->capture_default_str();
  trn->add_option("--lr", trn_acfg.lr, "Adam learning rate")
      ->capture_default_str();
  trn->add_option("--target-entropy", trn_acfg.target_entropy,
                  "entropy target for alpha")
      ->capture_default_str();
  trn->add_option("--init-alpha", trn_acfg.init_alpha, "initial temperature")
      ->capture_default_str();
  trn->add_option("--updates-per-episode", trn_acfg.updates_per_episode,
                  "gradient updates per episode (0: one per step)")
      ->capture_default_str();
  trn->add_option("--bptt-window", trn_acfg.bptt_window,
                  "truncated backprop window (0: full episode)")
      ->capture_default_str();
  trn->add_option("--replay-capacity", trn_acfg.replay_capacity,
                  "replay size in episodes")
      ->capture_default_str();
  trn->add_flag("--single-critic", trn_single, "disable the twin critic");
  trn->add_option("--agent-seed", trn_acfg.seed, "agent/init seed")
      ->capture_default_str();
  trn->add_option("--checkpoint", trn_ckpt, "output checkpoint path")
      ->capture_default_str();
  trn->add_option("--rewards", trn_rewards, "reward curve CSV path")
      ->capture_default_str();
  trn->add_option("--node-budget", trn_budget, "largest graph without --force")
      ->capture_default_str();
  trn->add_flag("--force", trn_force, "run beyond the node budget");
  trn->callback([&]() {
    trn_acfg.twin_critic = !trn_single;
    cmd_train(trn_sf, trn_ecfg, trn_acfg, trn_episodes, trn_ckpt, trn_rewards,
              trn_budget, trn_force);
  });

  // eval -------------------------------------------------------------------
  auto* evl = app.add_subcommand("eval", "run a trained agent on a graph");
  std::string evl_graph, evl_ckpt, evl_out = "eval.csv", evl_est, evl_trace;
  std::string evl_dataset;
  int evl_cycles = 7, evl_mult = 1, evl_runs = 10, evl_budget = 5000;
  double evl_range = 0.25;
  bool evl_force = false;
  evl->add_option("--graph", evl_graph, "input g2o file")->required();
  evl->add_option("--checkpoint", evl_ckpt, "agent checkpoint")->required();
  evl->add_option("--cycles", evl_cycles, "base cursor cycles")
      ->capture_default_str();
  evl->add_option("--cycles-mult", evl_mult, "episode length multiplier")
      ->capture_default_str();
  evl->add_option("--range", evl_range, "action range (radians)")
      ->capture_default_str();
  evl->add_option("--runs", evl_runs, "evaluation runs")->capture_default_str();
  evl->add_option("--out", evl_out, "report CSV path")->capture_default_str();
  evl->add_option("--estimate", evl_est, "best estimate g2o path");
  evl->add_option("--trace", evl_trace, "per-step episode trace CSV");
  evl->add_option("--dataset", evl_dataset, "dataset label (default: stem)");
  evl->add_option("--node-budget", evl_budget, "largest graph without --force")
      ->capture_default_str();
  evl->add_flag("--force", evl_force, "run beyond the node budget");
  evl->callback([&]() {
    cmd_eval(evl_graph, evl_ckpt, evl_cycles, evl_mult, evl_range, evl_runs,
             evl_out, evl_est, evl_trace, evl_dataset, evl_budget, evl_force);
  });

  // bootstrap --------------------------------------------------------------
  auto* boot = app.add_subcommand(
      "bootstrap", "agent estimate as the initial guess of a sparse solver");
  std::string boot_graph, boot_ckpt, boot_method = "gn", boot_out = "bootstrap.csv";
  std::string boot_est, boot_dataset;
  int boot_iters = 50, boot_cycles = 7, boot_mult = 1, boot_runs = 1;
  int boot_budget = 5000;
  double boot_range = 0.25;
  bool boot_force = false;
  boot->add_option("--graph", boot_graph, "input g2o file")->required();
  boot->add_option("--checkpoint", boot_ckpt, "agent checkpoint")->required();
  boot->add_option("--method", boot_method, "gn or lm")->capture_default_str();
  boot->add_option("--max-iters", boot_iters, "solver iteration budget")
      ->capture_default_str();
  boot->add_option("--cycles", boot_cycles, "base cursor cycles")
      ->capture_default_str();
  boot->add_option("--cycles-mult", boot_mult, "episode length multiplier")
      ->capture_default_str();
  boot->add_option("--range", boot_range, "action range (radians)")
      ->capture_default_str();
  boot->add_option("--runs", boot_runs, "agent runs before picking the best")
      ->capture_default_str();
  boot->add_option("--out", boot_out, "report CSV path")->capture_default_str();
  boot->add_option("--estimate", boot_est, "final estimate g2o path");
  boot->add_option("--dataset", boot_dataset, "dataset label (default: stem)");
  boot->add_option("--node-budget", boot_budget,
                   "largest graph without --force")
      ->capture_default_str();
  boot->add_flag("--force", boot_force, "run beyond the node budget");
  boot->callback([&]() {
    cmd_bootstrap(boot_graph, boot_ckpt, boot_method, boot_iters, boot_cycles,
                  boot_mult, boot_range, boot_runs, boot_out, boot_est,
                  boot_dataset, boot_budget, boot_force);
  });

  // plot -------------------------------------------------------------------
  auto* plt = app.add_subcommand("plot", "SVG overlay of trajectories");
  std::vector<std::string> plt_curves;
  std::string plt_out = "overlay.svg";
  plt->add_option("--curve", plt_curves, "name=path.g2o (repeatable)");
  plt->add_option("--out", plt_out, "output SVG path")->capture_default_str();
  plt->callback([&]() { cmd_plot(plt_curves, plt_out); });

  // report -----------------------------------------------------------------
  auto* rpt = app.add_subcommand("report", "aggregate report CSVs");
  std::vector<std::string> rpt_inputs;
  std::string rpt_out = "summary.csv";
  rpt->add_option("inputs", rpt_inputs, "report CSV files")->required();
  rpt->add_option("--out", rpt_out, "summary CSV path")->capture_default_str();
  rpt->callback([&]() { cmd_report(rpt_inputs, rpt_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
