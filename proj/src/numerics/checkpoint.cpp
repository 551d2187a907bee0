#include "equalizer/numerics/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "equalizer/detail/le_io.hpp"
#include "equalizer/error.hpp"

namespace equalizer::numerics {

using detail::read_le;
using detail::write_le;

void write_checkpoint(std::ostream& os, const ParameterStore& params) {
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  write_le(os, kCheckpointVersion);
  write_le(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    const auto& t = params.value(i);
    write_le(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) write_le(os, static_cast<std::uint64_t>(e));
    for (double v : t.data()) detail::write_f64(os, v);
  }
  if (!os) throw FileError("checkpoint write failed");
}

ParameterStore read_checkpoint(std::istream& is) {
  char magic[sizeof kCheckpointMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kCheckpointMagic)) {
    throw ParseError("checkpoint: bad magic");
  }
  std::uint32_t version = 0, count = 0;
  if (!read_le(is, version)) throw ParseError("checkpoint: truncated header");
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
  }
  if (!read_le(is, count)) throw ParseError("checkpoint: truncated header");

  ParameterStore params;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string where = "checkpoint tensor " + std::to_string(k);
    std::uint32_t name_len = 0, rank = 0;
    if (!read_le(is, name_len) || name_len > (1u << 16)) throw ParseError(where + ": bad name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw ParseError(where + ": truncated name");
    if (!read_le(is, rank) || rank == 0 || rank > 8) throw ParseError(where + ": bad rank");
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& e : shape) {
      std::uint64_t v = 0;
      if (!read_le(is, v) || v == 0 || v > (1ull << 32)) throw ParseError(where + ": bad extent");
      e = static_cast<std::size_t>(v);
      total *= e;
      if (total > (1ull << 32)) throw ParseError(where + ": tensor too large");
    }
    std::vector<double> data(total);
    for (auto& v : data) {
      if (!detail::read_f64(is, v)) throw ParseError(where + " ('" + name + "'): truncated data");
    }
    params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(os, params);
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open checkpoint '" + path.string() + "'");
  try {
    return read_checkpoint(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace equalizer::numerics
