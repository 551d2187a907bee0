#pragma once

#include <cstdint>

#include "equalizer/captioner/vocabulary.hpp"
#include "equalizer/numerics/graph.hpp"

namespace equalizer::captioner {

using numerics::Graph;
using numerics::NodeId;
using numerics::ParameterStore;
using numerics::Tensor;

struct ModelConfig {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t vocab_size = 0;
  std::size_t max_len = 16;

  std::size_t conv1_extent() const { return (height - kernel) / stride + 1; }
  std::size_t conv2_extent() const { return (conv1_extent() - kernel) / stride + 1; }

  /// Derives a configuration from stored parameter shapes.
  static ModelConfig from_parameters(const ParameterStore& params);
};

struct EncoderNodes {
  NodeId feature;
  /// Last convolutional activation map [C x h x w], kept for attribution.
  NodeId conv_activations;
};

/// Convolutional encoder feeding a recurrent word decoder. The image feature
/// is the decoder's first input step and is also added to every word
/// embedding after it; words follow from BOS.
///
/// Encoder: conv 3x3/2 -> ReLU -> conv 3x3/2 -> ReLU -> spatial mean ->
/// linear projection.
/// Decoder: embedding -> LSTM -> output projection [hidden x V] -> softmax.
class Captioner {
 public:
  /// Validates every parameter shape against `config`.
  Captioner(ModelConfig config, ParameterStore params);

  /// Random initialisation from a seed.
  static Captioner initialize(const ModelConfig& config, std::uint64_t seed);
  /// Every parameter zero.
  static Captioner zeros(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  /// Throws DimensionError unless the image is [C x H x W] per the config.
  EncoderNodes encode(Graph& g, const Tensor& image) const;
  EncoderNodes encode(Graph& g, NodeId image) const;

  /// Per-step word distributions [T x V] under teacher forcing over
  /// caption.tokens; row k is conditioned on tokens[0..k] and predicts
  /// tokens[k + 1].
  NodeId decode_teacher_forced(Graph& g, NodeId feature, const CaptionSequence& caption) const;

  /// Argmax decoding from BOS; stops after EOS or when the sequence holds
  /// max_len tokens (a truncated sequence carries no EOS). PAD and BOS are
  /// never emitted; ties go to the lowest index.
  CaptionSequence greedy(const Tensor& image, std::size_t max_len) const;

  friend bool operator==(const Captioner& a, const Captioner& b) { return a.params_ == b.params_; }

 private:
  ModelConfig config_;
  ParameterStore params_;
};

struct EncodeResult {
  Tensor feature;
  Tensor conv_activations;
};

EncodeResult encode_image(const Tensor& image, const Captioner& model);
/// [T x V] distributions p(w_t | w_0..w_{t-1}, I).
Tensor teacher_forced_distributions(const Tensor& image, const CaptionSequence& caption, const Captioner& model);
CaptionSequence caption_greedy(const Tensor& image, const Captioner& model, std::size_t max_len);

}  // namespace equalizer::captioner
