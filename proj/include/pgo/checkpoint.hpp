#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgo/diffnet.hpp"

namespace pgo {

/**
 * @brief Checkpoint file: text header, then raw little-endian doubles.
 *
 * Header lines: magic+version, optional "meta <key> <value...>" lines,
 * one "block <name> <rows> <cols>" line per tensor, then "data" followed
 * by each block's column-major payload in header order.
 */
struct Checkpoint {
  std::map<std::string, dn::Mat> tensors;
  std::map<std::string, std::string> meta;
};

inline constexpr const char* kCheckpointMagic = "pgo2d-checkpoint-v1";

inline void save_checkpoint(const std::string& path,
                            const std::vector<const dn::ParameterBlock*>& blocks,
                            const std::map<std::string, std::string>& meta = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << kCheckpointMagic << "\n";
  for (const auto& [k, v] : meta) os << "meta " << k << " " << v << "\n";
  for (const auto* b : blocks) {
    if (b->name.empty() || b->name.find(' ') != std::string::npos) {
      throw std::runtime_error("block name unusable in checkpoint: '" +
                               b->name + "'");
    }
    os << "block " << b->name << " " << b->value.rows() << " "
       << b->value.cols() << "\n";
  }
  os << "data\n";
  for (const auto* b : blocks) {
    os.write(reinterpret_cast<const char*>(b->value.data()),
             static_cast<std::streamsize>(sizeof(double) * b->value.size()));
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic) {
    throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
  }
  Checkpoint ck;
  std::vector<std::string> order;
  while (std::getline(is, line)) {
    if (line == "data") break;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "meta") {
      std::string key;
      ss >> key;
      std::string rest;
      std::getline(ss, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      ck.meta[key] = rest;
    } else if (tag == "block") {
      std::string name;
      long rows = 0, cols = 0;
      if (!(ss >> name >> rows >> cols) || rows < 0 || cols < 0) {
        throw std::runtime_error(path + ": malformed block header: " + line);
      }
      ck.tensors[name] = dn::Mat::Zero(rows, cols);
      order.push_back(name);
    } else {
      throw std::runtime_error(path + ": unexpected header line: " + line);
    }
  }
  for (const std::string& name : order) {
    dn::Mat& m = ck.tensors[name];
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!is) throw std::runtime_error(path + ": truncated payload at " + name);
  }
  return ck;
}

/// Copy tensors into the given blocks by name; shapes must match exactly.
inline void restore_blocks(const Checkpoint& ck,
                           const std::vector<dn::ParameterBlock*>& blocks) {
  for (dn::ParameterBlock* b : blocks) {
    const auto it = ck.tensors.find(b->name);
    if (it == ck.tensors.end()) {
      throw std::runtime_error("checkpoint is missing tensor " + b->name);
    }
    if (it->second.rows() != b->value.rows() ||
        it->second.cols() != b->value.cols()) {
      throw std::runtime_error("checkpoint shape mismatch for " + b->name);
    }
    b->value = it->second;
  }
}

}  // namespace pgo
