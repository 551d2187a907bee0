#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equalizer/corpus/dataset.hpp"

namespace equalizer::corpus {

/// Controls the context-gender correlation of a generated corpus.
struct BiasSpec {
  /// Probability that the context object is one stereotyped for the
  /// person's gender appearance.
  double rho = 0.9;
  /// Probability of the female appearance.
  double pi_woman = 1.0 / 3.0;
  std::size_t count = 2800;
  std::uint64_t seed = 7;
  /// Per-caption probability of describing the person with a neutral word.
  double neutral_rate = 0.2;
  double train_fraction = 0.70;
  double val_fraction = 0.15;

  /// Throws ContractError for out-of-range fields.
  void validate() const;
};

/// Rendering constants of the sprite scenes.
struct SceneStyle {
  /// Scales the colour offset between the two head palettes.
  double appearance_contrast = 2.5;
  /// Per-channel uniform jitter of the head colour.
  double head_jitter = 0.08;
  /// Background gradient end colours are drawn per channel from
  /// [background_low, background_low + background_range].
  double background_low = 0.35;
  double background_range = 0.2;
  /// Per-pixel uniform background noise amplitude.
  double background_noise = 0.04;
  /// Probability that a gendered caption uses the secondary word of its set.
  double synonym_rate = 0.25;
};

GenderLexicon default_lexicon();
/// Every word the generator can emit, in a fixed order.
std::vector<std::string> synthetic_words();

/// Train/val/test assignment from a seeded hash of the id.
Split assign_split(std::uint32_t id, const BiasSpec& spec);

/// One scene from its id-derived RNG stream; independent of other scenes.
CaptionedImage generate_scene(std::uint32_t id, const BiasSpec& spec, const SceneStyle& style,
                              const GenderLexicon& lexicon);

Dataset generate_synthetic(const BiasSpec& spec, const SceneStyle& style = {});

struct CorpusStatistics {
  std::size_t count = 0;
  std::size_t train = 0, val = 0, test = 0;
  std::size_t female = 0, male = 0, neutral = 0, excluded = 0;
  /// Fraction of scenes with the female appearance.
  double woman_prior = 0.0;
  /// Fraction of scenes whose object is stereotyped for the appearance.
  double object_gender_correlation = 0.0;
};

CorpusStatistics corpus_statistics(const Dataset& dataset);

}  // namespace equalizer::corpus
