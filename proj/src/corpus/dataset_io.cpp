#include "equalizer/corpus/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "equalizer/detail/le_io.hpp"
#include "equalizer/error.hpp"

namespace equalizer::corpus {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPixelCount = kImageChannels * kImageSize * kImageSize;
constexpr std::size_t kMaskCount = kImageSize * kImageSize;
constexpr std::uint64_t kRecordBytes = kPixelCount * 4 + kMaskCount;
constexpr std::uint64_t kBlobHeaderBytes = 8 + 4;

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <class T>
bool parse_number(std::string_view s, T& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string join_caption(const Caption& c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += ' ';
    out += c[i];
  }
  return out;
}

class ManifestReader {
 public:
  explicit ManifestReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw FileError("cannot open " + path.string());
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_.string() + ": " + msg);
  }

  std::string header_line(std::string_view what) {
    std::string line;
    if (!std::getline(in_, line)) fail("missing header line '" + std::string(what) + "'");
    return line;
  }

  bool next(std::string& line) { return static_cast<bool>(std::getline(in_, line)); }

 private:
  fs::path path_;
  std::ifstream in_;
};

}  // namespace

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / kManifestName, std::ios::binary);
  std::ofstream blob(dir / kBlobName, std::ios::binary);
  if (!manifest || !blob) throw FileError("cannot write dataset into " + dir.string());

  manifest << "equalizer-corpus " << kCorpusVersion << '\n';
  manifest << "count " << dataset.images.size() << '\n';
  manifest << "image " << kImageChannels << ' ' << kImageSize << ' ' << kImageSize << '\n';

  blob.write(kBlobMagic.data(), kBlobMagic.size());
  detail::write_le(blob, kCorpusVersion);

  std::uint64_t offset = kBlobHeaderBytes;
  for (const auto& img : dataset.images) {
    if (img.pixels.size() != kPixelCount || img.person_mask.size() != kMaskCount) {
      throw DimensionError("image " + std::to_string(img.id) + " has the wrong extents");
    }
    manifest << img.id << '\t' << to_string(img.split) << '\t' << to_string(img.label) << '\t'
             << to_string(img.appearance) << '\t' << to_string(img.object) << '\t' << offset << '\t'
             << offset + kPixelCount * 4 << '\t';
    for (std::size_t c = 0; c < kCaptionsPerImage; ++c) {
      if (c) manifest << '|';
      manifest << join_caption(img.captions[c]);
    }
    manifest << '\n';
    for (double v : img.pixels.data()) detail::write_f32(blob, static_cast<float>(v));
    for (double v : img.person_mask.data()) {
      const unsigned char b = v != 0.0 ? 1 : 0;
      blob.put(static_cast<char>(b));
    }
    offset += kRecordBytes;
  }
  if (!manifest || !blob) throw FileError("write failed in " + dir.string());
}

Dataset load_dataset(const fs::path& dir, const GenderLexicon& lexicon) {
  const fs::path manifest_path = dir / kManifestName;
  const fs::path blob_path = dir / kBlobName;
  ManifestReader manifest(manifest_path);

  std::uint32_t version = 0;
  std::size_t count = 0;
  {
    const auto first = manifest.header_line("equalizer-corpus");
    auto parts = split_on(first, ' ');
    if (parts.size() != 2 || parts[0] != "equalizer-corpus") manifest.fail("not a corpus manifest");
    if (!parse_number(parts[1], version) || version != kCorpusVersion) {
      manifest.fail("unsupported version '" + std::string(parts[1]) + "', expected " +
                    std::to_string(kCorpusVersion));
    }
    const auto second = manifest.header_line("count");
    parts = split_on(second, ' ');
    if (parts.size() != 2 || parts[0] != "count" || !parse_number(parts[1], count)) manifest.fail("bad count line");
    const auto line = manifest.header_line("image");
    std::ostringstream expect;
    expect << "image " << kImageChannels << ' ' << kImageSize << ' ' << kImageSize;
    if (line != expect.str()) manifest.fail("unsupported image extents '" + line + "'");
  }

  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw FileError("cannot open " + blob_path.string());
  {
    std::string magic(kBlobMagic.size(), '\0');
    std::uint32_t blob_version = 0;
    if (!blob.read(magic.data(), magic.size()) || magic != kBlobMagic) {
      throw ParseError(blob_path.string() + ": bad magic");
    }
    if (!detail::read_le(blob, blob_version) || blob_version != kCorpusVersion) {
      throw ParseError(blob_path.string() + ": unsupported version " + std::to_string(blob_version));
    }
  }

  Dataset dataset;
  dataset.images.reserve(count);
  std::string line;
  for (std::size_t r = 0; r < count; ++r) {
    const std::string where = "record " + std::to_string(r);
    if (!manifest.next(line)) manifest.fail(where + ": missing (manifest truncated)");
    auto fields = split_on(line, '\t');
    if (fields.size() != 8) manifest.fail(where + ": expected 8 fields, found " + std::to_string(fields.size()));

    CaptionedImage img;
    std::uint64_t pixel_offset = 0, mask_offset = 0;
    auto split = parse_split(fields[1]);
    auto label = parse_label(fields[2]);
    auto appearance = parse_appearance(fields[3]);
    auto object = parse_object(fields[4]);
    if (!parse_number(fields[0], img.id)) manifest.fail(where + ": bad id");
    if (!split || !label || !appearance || !object) manifest.fail(where + ": bad enumerated field");
    if (!parse_number(fields[5], pixel_offset) || !parse_number(fields[6], mask_offset)) {
      manifest.fail(where + ": bad offset");
    }
    img.split = *split;
    img.appearance = *appearance;
    img.object = *object;

    auto captions = split_on(fields[7], '|');
    if (captions.size() != kCaptionsPerImage) {
      manifest.fail(where + ": expected " + std::to_string(kCaptionsPerImage) + " captions");
    }
    for (std::size_t c = 0; c < kCaptionsPerImage; ++c) {
      for (auto w : split_on(captions[c], ' ')) {
        if (w.empty()) manifest.fail(where + ": empty word in caption " + std::to_string(c));
        img.captions[c].emplace_back(w);
      }
    }
    img.label = label_image_gender(img.captions, lexicon);
    if (img.label != *label) {
      manifest.fail(where + ": stored label '" + std::string(fields[2]) + "' disagrees with captions ('" +
                    std::string(to_string(img.label)) + "')");
    }

    const std::uint64_t expected = kBlobHeaderBytes + r * kRecordBytes;
    if (pixel_offset != expected || mask_offset != expected + kPixelCount * 4) {
      manifest.fail(where + ": offsets do not match the blob layout");
    }
    std::vector<double> pixels(kPixelCount), mask(kMaskCount);
    for (auto& v : pixels) {
      float f;
      if (!detail::read_f32(blob, f)) throw ParseError(blob_path.string() + ": " + where + " truncated");
      v = f;
    }
    for (auto& v : mask) {
      char b;
      if (!blob.get(b)) throw ParseError(blob_path.string() + ": " + where + " truncated");
      if (b != 0 && b != 1) throw ParseError(blob_path.string() + ": " + where + " has a non-binary mask");
      v = b;
    }
    img.pixels = Tensor({kImageChannels, kImageSize, kImageSize}, std::move(pixels));
    img.person_mask = Tensor({1, kImageSize, kImageSize}, std::move(mask));
    dataset.images.push_back(std::move(img));
  }
  if (manifest.next(line) && !line.empty()) manifest.fail("trailing data after " + std::to_string(count) + " records");
  if (blob.peek() != std::char_traits<char>::eof()) throw ParseError(blob_path.string() + ": trailing bytes");
  return dataset;
}

}  // namespace equalizer::corpus
