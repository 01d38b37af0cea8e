#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "revib/layers.hpp"

namespace revib::nn {

// Binary parameter checkpoint, all integers and doubles little-endian:
//
//   magic   8 bytes  "REVIBCKP"
//   version u32      kCheckpointVersion
//   seed    u64      initialization seed of the store
//   count   u32      number of tensors
//   per tensor, in store order:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rank u32, dims u64 x rank
//     values f64 x prod(dims), row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const ParamStore& ps);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Copies checkpoint values into `ps`; names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParamStore& ps);

}  // namespace revib::nn
