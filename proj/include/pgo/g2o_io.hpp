#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pgo/graph.hpp"

namespace pgo {

/**
 * @brief Result of parsing a g2o text file.
 *
 * Node ids in the file may be sparse; the graph uses dense indices in
 * order of first appearance and vertex_ids maps each index back to the
 * original id so that saving reproduces the input fields.
 */
struct G2oLoadResult {
  PoseGraph graph;
  std::vector<int> vertex_ids;
  int unknown_tag_count = 0;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& name, int line,
                                    const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

inline double read_double(std::istringstream& ss, const std::string& name,
                          int line, const char* field) {
  double v;
  if (!(ss >> v)) parse_fail(name, line, std::string("expected number for ") + field);
  return v;
}

inline int read_int(std::istringstream& ss, const std::string& name, int line,
                    const char* field) {
  int v;
  if (!(ss >> v)) parse_fail(name, line, std::string("expected integer for ") + field);
  return v;
}

}  // namespace detail

/**
 * @brief Parse g2o text from a stream.
 *
 * Supports VERTEX_SE2 and EDGE_SE2 (upper-triangular information order
 * I11 I12 I13 I22 I23 I33). Lines starting with '#' are comments. Records
 * with any other tag are counted and skipped. Malformed records throw
 * std::runtime_error prefixed with "name:line".
 */
inline G2oLoadResult load_g2o(std::istream& in, const std::string& name) {
  G2oLoadResult out;
  std::unordered_map<int, int> id_to_index;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;  // blank line
    if (tag[0] == '#') continue;
    if (tag == "VERTEX_SE2") {
      const int id = detail::read_int(ss, name, lineno, "vertex id");
      const double x = detail::read_double(ss, name, lineno, "x");
      const double y = detail::read_double(ss, name, lineno, "y");
      const double th = detail::read_double(ss, name, lineno, "theta");
      if (id_to_index.count(id)) {
        detail::parse_fail(name, lineno,
                           "duplicate vertex id " + std::to_string(id));
      }
      id_to_index[id] = static_cast<int>(out.graph.nodes.size());
      out.graph.nodes.emplace_back(x, y, th);
      out.vertex_ids.push_back(id);
    } else if (tag == "EDGE_SE2") {
      const int fi = detail::read_int(ss, name, lineno, "edge endpoint i");
      const int fj = detail::read_int(ss, name, lineno, "edge endpoint j");
      Edge e;
      const double dx = detail::read_double(ss, name, lineno, "dx");
      const double dy = detail::read_double(ss, name, lineno, "dy");
      const double dth = detail::read_double(ss, name, lineno, "dtheta");
      e.meas = Pose2(dx, dy, dth);
      double u[6];
      static const char* fields[6] = {"I11", "I12", "I13", "I22", "I23", "I33"};
      for (int k = 0; k < 6; ++k) {
        u[k] = detail::read_double(ss, name, lineno, fields[k]);
      }
      e.info << u[0], u[1], u[2],
               u[1], u[3], u[4],
               u[2], u[4], u[5];
      const auto it_i = id_to_index.find(fi);
      const auto it_j = id_to_index.find(fj);
      if (it_i == id_to_index.end() || it_j == id_to_index.end()) {
        detail::parse_fail(name, lineno, "edge references undeclared vertex");
      }
      e.i = it_i->second;
      e.j = it_j->second;
      out.graph.edges.push_back(e);
    } else {
      ++out.unknown_tag_count;
    }
  }
  out.graph.validate();
  return out;
}

inline G2oLoadResult load_g2o_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_g2o(in, path);
}

namespace detail {

inline void append_g(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  s += ' ';
  s += buf;
}

}  // namespace detail

/**
 * @brief Write a graph as g2o text.
 *
 * Doubles use %.17g so a reload reproduces every field bit for bit. If
 * ids is given it supplies the original vertex ids; otherwise dense
 * indices are written.
 */
inline void save_g2o(std::ostream& os, const PoseGraph& g,
                     const std::vector<int>* ids = nullptr) {
  if (ids && static_cast<int>(ids->size()) != g.num_nodes()) {
    throw std::runtime_error("vertex id list size mismatch");
  }
  auto vid = [&](int idx) { return ids ? (*ids)[idx] : idx; };
  std::string line;
  for (int i = 0; i < g.num_nodes(); ++i) {
    line = "VERTEX_SE2 " + std::to_string(vid(i));
    detail::append_g(line, g.nodes[i].x);
    detail::append_g(line, g.nodes[i].y);
    detail::append_g(line, g.nodes[i].theta);
    line += '\n';
    os << line;
  }
  for (const Edge& e : g.edges) {
    line = "EDGE_SE2 " + std::to_string(vid(e.i)) + " " +
           std::to_string(vid(e.j));
    detail::append_g(line, e.meas.x);
    detail::append_g(line, e.meas.y);
    detail::append_g(line, e.meas.theta);
    detail::append_g(line, e.info(0, 0));
    detail::append_g(line, e.info(0, 1));
    detail::append_g(line, e.info(0, 2));
    detail::append_g(line, e.info(1, 1));
    detail::append_g(line, e.info(1, 2));
    detail::append_g(line, e.info(2, 2));
    line += '\n';
    os << line;
  }
}

inline void save_g2o_file(const std::string& path, const PoseGraph& g,
                          const std::vector<int>* ids = nullptr) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_g2o(os, g, ids);
}

}  // namespace pgo
