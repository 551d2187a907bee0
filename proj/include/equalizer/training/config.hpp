#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "equalizer/losses/losses.hpp"

namespace equalizer::training {

using losses::LossWeights;

enum class Variant { BaselineFT, Balanced, UpWeight, EqualizerNoACL, EqualizerNoConf, Equalizer };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::BaselineFT,     Variant::Balanced,
                                                        Variant::UpWeight,       Variant::EqualizerNoACL,
                                                        Variant::EqualizerNoConf, Variant::Equalizer};

/// Config spelling: baseline-ft, balanced, upweight, equalizer-no-acl,
/// equalizer-no-conf, equalizer.
std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view s);
/// Row label used in comparison tables.
std::string_view display_name(Variant v);

/// Default loss weights of a variant: CE-only for BaselineFT and Balanced,
/// lambda = 10 for UpWeight, beta = 0 without ACL, mu = 0 without Conf.
LossWeights default_weights(Variant v);

struct TrainConfig {
  Variant variant = Variant::Equalizer;
  LossWeights weights = default_weights(Variant::Equalizer);
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t epochs = 60;
  std::uint64_t seed = 7;
  std::size_t max_len = 16;
  /// An epoch is eligible for best-checkpoint selection only when at least
  /// this fraction of its val captions contains a woman or man word.
  double min_gendered_coverage = 0.9;
  /// Evaluation threads; 0 means hardware concurrency.
  std::size_t workers = 0;

  /// Throws ConfigError naming the violated constraint:
  /// BaselineFT and Balanced need beta = mu = 0 and lambda = 1; UpWeight needs
  /// beta = mu = 0 and lambda > 1; EqualizerNoACL needs beta = 0;
  /// EqualizerNoConf needs mu = 0.
  void validate() const;

  static TrainConfig defaults(Variant v);

  /// Flat `key=value` lines; '#' starts a comment. Keys: variant, alpha,
  /// beta, mu, lambda, epsilon, lr, epochs, batch, seed, max_len,
  /// min_gendered_coverage, workers.
  /// Unset weights take the variant's defaults. Validates before returning.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace equalizer::training
