#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/convlstm.hpp"

namespace gridcast {

// Flat container persisted as a little-endian binary file: a versioned magic,
// ordered integer metadata, then named tensors with shape and row-major
// values. Round trips are bit-exact.
struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<double> values;
};

struct Checkpoint {
  std::vector<std::pair<std::string, std::int64_t>> meta;
  std::vector<NamedTensor> tensors;

  bool has_meta(const std::string& key) const;
  std::int64_t meta_value(const std::string& key) const;
  void set_meta(const std::string& key, std::int64_t value);

  const NamedTensor* find_tensor(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Network <-> checkpoint mapping. Extra metadata and tensors (normalization
// stats, window geometry) survive untouched next to the network tensors.
Checkpoint pack_network(const NetworkSpec& spec, const NetworkParams& params);
std::pair<NetworkSpec, NetworkParams> unpack_network(const Checkpoint& ckpt);

}  // namespace gridcast
