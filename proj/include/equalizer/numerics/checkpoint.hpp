#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "equalizer/numerics/graph.hpp"

namespace equalizer::numerics {

/// Binary parameter checkpoint:
///   8-byte magic "EQLZCKPT", u32 format version, u32 tensor count, then per
///   tensor: u32 name length, name bytes, u32 rank, u64 extents, f64 values.
/// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[8] = {'E', 'Q', 'L', 'Z', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const ParameterStore& params);
ParameterStore read_checkpoint(std::istream& is);

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace equalizer::numerics
