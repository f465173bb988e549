#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "apo/nn/mlp.hpp"

namespace apo::nn {

// Named networks, vectors and string metadata in one text file.
//
//   apo-checkpoint 1
//   meta <key> <value to end of line>
//   net <name> <n_sizes> <size_0> ... <size_{n-1}>
//   activations <act_0> ... <act_{L-1}>
//   layer <index> <rows> <cols> <rows*cols weights row-major> <rows biases>
//   vector <name> <n> <values>
//   end
//
// Reals are written in shortest round-trip form, so save/load is exact.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, MlpNet> nets;
  std::map<std::string, std::vector<double>> vectors;

  std::string serialize() const;
  static Checkpoint parse(const std::string& text);

  // Writes to a sibling temp file and renames, so readers never observe a
  // half-written checkpoint.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

std::string format_real(double x);

}  // namespace apo::nn
