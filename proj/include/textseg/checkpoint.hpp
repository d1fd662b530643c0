#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "textseg/model.hpp"

namespace textseg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and floats little-endian:
///
///   "TSEGCKPT"                      8-byte magic
///   u32 version
///   u32 d, h1, h2                   model config block
///   u32 encoder_layers, predictor_layers
///   u32 token_cap, boundary_index
///   u64 seed
///   u32 block_count
///   per block: u32 name_len, name bytes, u32 rows, u32 cols,
///              rows*cols float64 row-major
std::string checkpoint_bytes(const ModelParams& params);

/// Rejects bad magic, unknown versions, label-index changes, and any block
/// whose name or shape differs from what the header's config implies.
ModelParams parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace textseg
