#pragma once

#include <filesystem>
#include <string_view>

#include "equalizer/corpus/dataset.hpp"

namespace equalizer::corpus {

inline constexpr std::string_view kManifestName = "manifest.tsv";
inline constexpr std::string_view kBlobName = "images.bin";
inline constexpr std::string_view kBlobMagic = "EQLZBLOB";
inline constexpr std::uint32_t kCorpusVersion = 1;

/// Writes `manifest.tsv` and `images.bin` into `dir` (created if needed).
///
/// Manifest: a header of `equalizer-corpus <version>`, `count <n>` and
/// `image <C> <H> <W>`, then one tab-separated record per image:
/// id, split, label, appearance, object, pixel offset, mask offset, and the
/// five captions separated by `|` with space-separated words.
///
/// Blob: magic, u32 version, then per image C*H*W little-endian f32 pixels
/// followed by H*W mask bytes.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Inverse of save_dataset. Labels are recomputed from the captions with
/// `lexicon` and a disagreement with the stored label is a ParseError.
/// Malformed input raises ParseError naming the file and record index;
/// a missing file raises FileError.
Dataset load_dataset(const std::filesystem::path& dir, const GenderLexicon& lexicon);

}  // namespace equalizer::corpus
