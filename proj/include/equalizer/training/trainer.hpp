#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "equalizer/captioner/captioner.hpp"
#include "equalizer/corpus/dataset.hpp"
#include "equalizer/losses/losses.hpp"
#include "equalizer/training/config.hpp"

namespace equalizer::training {

using captioner::Captioner;
using losses::GenderIndex;
using losses::LossComponents;
using losses::TrainingPair;
using numerics::Gradients;
using numerics::ParameterStore;

/// Adam moments, one pair of tensors per parameter.
struct OptimizerState {
  std::vector<numerics::Tensor> m;
  std::vector<numerics::Tensor> v;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(const ParameterStore& params);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place.
void adam_update(ParameterStore& params, const Gradients& grads, OptimizerState& state, const AdamSettings& s);

/// Builds the objective for `batch`, backpropagates and applies one Adam
/// step. Throws NumericError carrying the component values when the loss or
/// a gradient is not finite.
LossComponents train_step(Captioner& model, std::span<const TrainingPair> batch, const GenderIndex& lexicon,
                          const TrainConfig& config, OptimizerState& state);

/// Draws Female and Male images with probability 1/2 each, then uniformly
/// within the class, with replacement. Other labels are never drawn.
class BalancedSampler {
 public:
  BalancedSampler(std::span<const corpus::GenderLabel> labels, std::uint64_t seed);

  /// Index into the label list given at construction.
  std::size_t next();

 private:
  std::vector<std::size_t> female_, male_;
  std::mt19937_64 rng_;
};

/// Per-epoch training log record.
struct EpochLog {
  std::size_t epoch = 0;
  LossComponents mean;  // batch-averaged components
  double val_error = 0.0;
  double val_ratio = 0.0;
  bool val_ratio_infinite = false;
  /// Fraction of val captions with a woman or man word.
  double val_gendered = 0.0;
  double val_neutral = 0.0;
  double val_confusion = 0.0;
  bool best = false;

  /// `key=value` pairs separated by spaces.
  std::string to_line() const;
};

struct TrainResult {
  Captioner model;  // selected checkpoint
  std::size_t best_epoch = 0;
  double best_val_error = 0.0;
  std::vector<EpochLog> log;
};

/// Trains the configured variant on the Train split, evaluates the Val bias
/// split after every epoch and keeps the parameters with the lowest val error
/// among epochs meeting min_gendered_coverage (the later epoch wins ties;
/// the final epoch is kept when none qualifies). Each visit of an image uses
/// one of its captions at random. Log lines go to `log` as they are produced. Throws
/// ContractError when the train or val split is empty.
TrainResult train(const corpus::Dataset& dataset, const captioner::Vocabulary& vocab, const GenderIndex& lexicon,
                  const TrainConfig& config, std::ostream* log = nullptr);

/// Model configuration used for a vocabulary.
captioner::ModelConfig model_config(const captioner::Vocabulary& vocab, std::size_t max_len);

}  // namespace equalizer::training
