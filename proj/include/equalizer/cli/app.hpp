#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "equalizer/captioner/vocabulary.hpp"
#include "equalizer/corpus/dataset.hpp"
#include "equalizer/corpus/synthetic.hpp"
#include "equalizer/evaluation/evaluate.hpp"
#include "equalizer/training/trainer.hpp"

namespace equalizer::cli {

namespace fs = std::filesystem;

/// Default data root when --data is not given.
inline constexpr const char* kDataEnv = "EQUALIZER_DATA";

inline constexpr const char* kLexiconFile = "lexicon.txt";
inline constexpr const char* kVocabFile = "vocab.txt";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kLogFile = "train_log.txt";
inline constexpr const char* kConfigFile = "config.txt";

/// A generated corpus directory loaded back.
struct DataBundle {
  corpus::Dataset dataset;
  losses::GenderLexicon lexicon;
  captioner::Vocabulary vocab;
};

DataBundle load_data(const fs::path& dir);

struct GenerateOptions {
  corpus::BiasSpec spec;
  fs::path out;
  bool force = false;
};

/// Writes manifest, blob, lexicon and vocabulary. Refuses (FileError) an
/// existing non-empty directory unless `force`.
corpus::CorpusStatistics cmd_generate(const GenerateOptions& options, std::ostream& out);

struct TrainOptions {
  fs::path config;
  fs::path data;
  fs::path out;
  bool force = false;
};

/// Writes checkpoint.bin, train_log.txt and the resolved config.txt.
training::TrainResult cmd_train(const TrainOptions& options, std::ostream& out);

struct EvalCommandOptions {
  std::optional<fs::path> checkpoint;  // required unless gt_echo
  fs::path data;
  std::string split = "bias";
  bool gt_echo = false;
  /// Defaults to the checkpoint's directory.
  std::optional<fs::path> out;
  std::size_t max_len = 16;
  std::size_t workers = 0;
  bool force = false;
};

/// Report stem: report_<split>, or gt_<split> for the echo oracle.
std::string report_stem(const std::string& split, bool gt_echo);

evaluation::EvalReport cmd_eval(const EvalCommandOptions& options, std::ostream& out);

struct AttributeOptions {
  fs::path checkpoint;
  fs::path data;
  std::vector<std::uint32_t> ids;
  fs::path out;
  bool force = false;
};

struct AttributionVerdict {
  std::uint32_t id = 0;
  std::string word;  // empty when the image has no gendered reference caption
  bool hit = false;
  fs::path heat_file, overlay_file;
};

/// Per id: <id>_heat.ppm, <id>_overlay.ppm and one verdict line on `out`.
/// An id absent from the corpus is a LookupError naming it.
std::vector<AttributionVerdict> cmd_attribute(const AttributeOptions& options, std::ostream& out);

struct CompareOptions {
  std::vector<fs::path> runs;
  std::optional<fs::path> out;
};

/// Table with a GT row followed by one row per run directory. Missing
/// reports render as `n/a` with a warning on `warn`.
std::string cmd_compare(const CompareOptions& options, std::ostream& warn);

/// Parses `args` (without the program name) and dispatches. Failures print
/// `error[<kind>]: <message>` on `err` and return a nonzero code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace equalizer::cli
