#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "equalizer/corpus/dataset.hpp"
#include "equalizer/losses/lexicon.hpp"

namespace equalizer::evaluation {

using captioner::TokenId;
using corpus::GenderLabel;
using losses::GenderIndex;
using losses::GenderLexicon;

enum class CaptionGenderClass { FemaleOnly, MaleOnly, NeutralOnly, Mixed, NoPerson };

std::string_view to_string(CaptionGenderClass c);

/// FemaleOnly: some woman word and no man word. MaleOnly symmetric. Mixed
/// when both appear. NeutralOnly when only neutral person words appear.
/// NoPerson otherwise.
CaptionGenderClass classify_caption_gender(std::span<const TokenId> tokens, const GenderIndex& lexicon);
CaptionGenderClass classify_caption_gender(std::span<const std::string> words, const GenderLexicon& lexicon);

struct Prediction {
  GenderLabel truth;
  CaptionGenderClass predicted;
};

/// (#Male predicted FemaleOnly + #Female predicted MaleOnly) / N.
/// Throws ContractError on an empty list.
double error_rate(std::span<const Prediction> predictions);

struct GenderRatio {
  std::size_t female_only = 0;
  std::size_t male_only = 0;
  /// female_only / male_only; +infinity when male_only is 0.
  double value = 0.0;
  bool infinite = false;
};

GenderRatio gender_ratio(std::span<const Prediction> predictions);
GenderRatio make_ratio(std::size_t female, std::size_t male);

/// Predicted columns of the accuracy matrix. NoPerson predictions are folded
/// into Neutral.
enum class PredictedColumn { Male = 0, Female = 1, Neutral = 2, Mixed = 3 };
inline constexpr std::size_t kPredictedColumns = 4;

PredictedColumn column_of(CaptionGenderClass c);

struct AccuracyBreakdown {
  /// rows[0]: ground-truth Male, rows[1]: ground-truth Female. Each row sums
  /// to 1 when its count is nonzero and is all zeros otherwise.
  std::array<std::array<double, kPredictedColumns>, 2> rows{};
  std::array<std::size_t, 2> counts{};

  double male_accuracy() const { return rows[0][0]; }
  double female_accuracy() const { return rows[1][1]; }
};

/// Row-normalised confusion over ground truth {Male, Female}; predictions
/// with other labels are ignored.
AccuracyBreakdown accuracy_breakdown(std::span<const Prediction> predictions);

}  // namespace equalizer::evaluation
