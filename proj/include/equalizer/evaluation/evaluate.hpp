#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equalizer/corpus/dataset.hpp"
#include "equalizer/evaluation/attribution.hpp"
#include "equalizer/evaluation/metrics.hpp"

namespace equalizer::evaluation {

using corpus::CaptionedImage;

/// Runs fn(0..n-1) across `workers` threads (0 means hardware concurrency).
/// Each index is handled exactly once; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct EvalOptions {
  std::size_t max_len = 16;
  std::size_t workers = 0;
  bool pointing = true;
};

struct ImageResult {
  std::uint32_t id = 0;
  GenderLabel truth = GenderLabel::Neutral;
  CaptionGenderClass predicted = CaptionGenderClass::NoPerson;
  std::string caption;
  bool pointed = false;  // a gendered reference caption was available
  bool hit = false;
};

struct EvalReport {
  std::string split;
  std::size_t images = 0;
  double error_rate = 0.0;
  GenderRatio ratio;
  /// #Female / #Male ground-truth labels over the same images.
  GenderRatio gt_ratio;
  AccuracyBreakdown accuracy;
  /// Indexed by CaptionGenderClass.
  std::array<std::size_t, 5> class_counts{};
  /// NeutralOnly predictions / images.
  double neutral_rate = 0.0;
  std::size_t pointing_hits = 0;
  std::size_t pointing_total = 0;
  double pointing_accuracy = 0.0;
  /// In input order.
  std::vector<ImageResult> results;
};

/// First caption (annotation order) containing a gendered word encoded, and
/// the position of its first gendered token; false when there is none.
bool pointing_reference(const CaptionedImage& image, const captioner::Vocabulary& vocab,
                        const GenderIndex& lexicon, CaptionSequence& caption, std::size_t& position);

/// Greedy-captions every image, classifies the captions and aggregates the
/// metrics. The pointing game uses ground-truth captions. Throws
/// ContractError on an empty image list.
EvalReport evaluate(const Captioner& model, std::span<const CaptionedImage* const> images,
                    const captioner::Vocabulary& vocab, const GenderIndex& lexicon, const EvalOptions& options = {});

/// Oracle captioner that echoes the first gendered reference caption (or the
/// first caption when none is gendered). No pointing game.
EvalReport evaluate_gt_echo(std::span<const CaptionedImage* const> images, const captioner::Vocabulary& vocab,
                            const GenderIndex& lexicon);

/// Aggregates per-image results into a report.
EvalReport summarize(std::vector<ImageResult> results);

inline constexpr std::uint64_t kBalancedSplitSeed = 11;

/// Test-split views by name: `bias` (Male and Female images), `confident`
/// (gendered in at least four captions) and `balanced` (equal Female and
/// Male counts drawn from the confident view, as many as the smaller class
/// allows). Throws ContractError for any other name.
std::vector<const CaptionedImage*> named_test_split(const corpus::Dataset& dataset, std::string_view name,
                                                    const GenderLexicon& lexicon);

/// Mean confusion over every gendered target position of every reference
/// caption, with distributions computed on the person-masked images.
double masked_confusion(const Captioner& model, std::span<const CaptionedImage* const> images,
                        const captioner::Vocabulary& vocab, const GenderIndex& lexicon, std::size_t workers = 0);

}  // namespace equalizer::evaluation
