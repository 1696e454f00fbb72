#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgr/model.hpp"

namespace sgr {

// Binary parameter checkpoint, all integers and doubles little-endian:
//
//   magic      8 bytes  "SGRCKPT\0"
//   version    u32      kCheckpointVersion
//   hop, iters, dim, score_hidden, num_relations         u32 x 5
//   f1, f2, attention, edge_update, relation_in_update   u32 x 5
//   edge_dropout                                         f64
//   relation names   u32 count, then per name: u32 length + bytes
//   config echo      u32 length + bytes (key=value lines)
//   parameters       u32 count, then per entry:
//                      u32 name length + bytes, u64 rows, u64 cols,
//                      rows*cols f64 values (row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  int num_relations = 0;
  std::vector<std::string> relation_names;
  std::string config_echo;
  ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& file, const Model& model,
                     const std::vector<std::string>& relation_names,
                     const std::string& config_echo);
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);

Checkpoint load_checkpoint(const std::filesystem::path& file);
Checkpoint read_checkpoint(std::istream& in);

Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace sgr
