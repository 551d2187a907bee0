#include "equalizer/evaluation/metrics.hpp"

#include <limits>

#include "equalizer/error.hpp"

namespace equalizer::evaluation {

using losses::WordGender;

namespace {

template <class Classify, class Range>
CaptionGenderClass classify_range(const Range& items, Classify classify) {
  bool woman = false, man = false, neutral = false;
  for (const auto& item : items) {
    switch (classify(item)) {
      case WordGender::Woman: woman = true; break;
      case WordGender::Man: man = true; break;
      case WordGender::Neutral: neutral = true; break;
      case WordGender::None: break;
    }
  }
  if (woman && man) return CaptionGenderClass::Mixed;
  if (woman) return CaptionGenderClass::FemaleOnly;
  if (man) return CaptionGenderClass::MaleOnly;
  if (neutral) return CaptionGenderClass::NeutralOnly;
  return CaptionGenderClass::NoPerson;
}

}  // namespace

std::string_view to_string(CaptionGenderClass c) {
  switch (c) {
    case CaptionGenderClass::FemaleOnly: return "female_only";
    case CaptionGenderClass::MaleOnly: return "male_only";
    case CaptionGenderClass::NeutralOnly: return "neutral_only";
    case CaptionGenderClass::Mixed: return "mixed";
    case CaptionGenderClass::NoPerson: return "no_person";
  }
  return "?";
}

CaptionGenderClass classify_caption_gender(std::span<const TokenId> tokens, const GenderIndex& lexicon) {
  return classify_range(tokens, [&](TokenId t) { return lexicon.classify(t); });
}

CaptionGenderClass classify_caption_gender(std::span<const std::string> words, const GenderLexicon& lexicon) {
  return classify_range(words, [&](const std::string& w) { return lexicon.classify(w); });
}

double error_rate(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw ContractError("error rate of an empty prediction list");
  std::size_t swaps = 0;
  for (const auto& p : predictions) {
    swaps += (p.truth == GenderLabel::Male && p.predicted == CaptionGenderClass::FemaleOnly) ||
             (p.truth == GenderLabel::Female && p.predicted == CaptionGenderClass::MaleOnly);
  }
  return static_cast<double>(swaps) / static_cast<double>(predictions.size());
}

GenderRatio make_ratio(std::size_t female, std::size_t male) {
  GenderRatio r;
  r.female_only = female;
  r.male_only = male;
  if (male == 0) {
    r.infinite = true;
    r.value = std::numeric_limits<double>::infinity();
  } else {
    r.value = static_cast<double>(female) / static_cast<double>(male);
  }
  return r;
}

GenderRatio gender_ratio(std::span<const Prediction> predictions) {
  std::size_t female = 0, male = 0;
  for (const auto& p : predictions) {
    female += p.predicted == CaptionGenderClass::FemaleOnly;
    male += p.predicted == CaptionGenderClass::MaleOnly;
  }
  return make_ratio(female, male);
}

PredictedColumn column_of(CaptionGenderClass c) {
  switch (c) {
    case CaptionGenderClass::MaleOnly: return PredictedColumn::Male;
    case CaptionGenderClass::FemaleOnly: return PredictedColumn::Female;
    case CaptionGenderClass::Mixed: return PredictedColumn::Mixed;
    case CaptionGenderClass::NeutralOnly:
    case CaptionGenderClass::NoPerson: return PredictedColumn::Neutral;
  }
  return PredictedColumn::Neutral;
}

AccuracyBreakdown accuracy_breakdown(std::span<const Prediction> predictions) {
  AccuracyBreakdown b;
  std::array<std::array<std::size_t, kPredictedColumns>, 2> counts{};
  for (const auto& p : predictions) {
    std::size_t row;
    if (p.truth == GenderLabel::Male) {
      row = 0;
    } else if (p.truth == GenderLabel::Female) {
      row = 1;
    } else {
      continue;
    }
    ++counts[row][static_cast<std::size_t>(column_of(p.predicted))];
    ++b.counts[row];
  }
  for (std::size_t r = 0; r < 2; ++r) {
    if (b.counts[r] == 0) continue;
    for (std::size_t c = 0; c < kPredictedColumns; ++c) {
      b.rows[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(b.counts[r]);
    }
  }
  return b;
}

}  // namespace equalizer::evaluation
