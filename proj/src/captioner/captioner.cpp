#include "equalizer/captioner/captioner.hpp"

#include <cmath>
#include <random>

#include "equalizer/error.hpp"
#include "equalizer/numerics/ops.hpp"

namespace equalizer::captioner {

namespace ops = numerics;
using numerics::Shape;

namespace {

constexpr double kForgetBias = 3.0;

struct ParamSpec {
  const char* name;
  Shape shape;
};

std::vector<ParamSpec> parameter_layout(const ModelConfig& c) {
  const std::size_t n = c.hidden_dim;
  return {
      {"encoder.conv1.weight", {c.conv1_channels, c.channels, c.kernel, c.kernel}},
      {"encoder.conv1.bias", {c.conv1_channels}},
      {"encoder.conv2.weight", {c.conv2_channels, c.conv1_channels, c.kernel, c.kernel}},
      {"encoder.conv2.bias", {c.conv2_channels}},
      {"encoder.project.weight", {c.embed_dim, c.conv2_channels}},
      {"encoder.project.bias", {c.embed_dim}},
      {"decoder.embed", {c.vocab_size, c.embed_dim}},
      {"decoder.lstm.weight", {4 * n, c.embed_dim + n}},
      {"decoder.lstm.bias", {4 * n}},
      {"decoder.out.weight", {n, c.vocab_size}},
      {"decoder.out.bias", {c.vocab_size}},
  };
}

void validate_config(const ModelConfig& c) {
  if (c.vocab_size <= Vocabulary::kReserved) throw ContractError("model vocabulary must hold real words");
  if (c.kernel > c.height || c.kernel > c.width || c.stride == 0) throw DimensionError("bad encoder geometry");
  if (c.height != c.width) throw DimensionError("encoder expects square images");
  if (c.max_len < 2) throw ContractError("max_len must be at least 2");
}

}  // namespace

ModelConfig ModelConfig::from_parameters(const ParameterStore& params) {
  ModelConfig c;
  const auto& conv1 = params["encoder.conv1.weight"];
  const auto& conv2 = params["encoder.conv2.weight"];
  const auto& embed = params["decoder.embed"];
  const auto& lstm = params["decoder.lstm.weight"];
  if (conv1.rank() != 4 || conv2.rank() != 4 || embed.rank() != 2 || lstm.rank() != 2) {
    throw DimensionError("checkpoint parameter ranks do not describe a captioner");
  }
  c.conv1_channels = conv1.extent(0);
  c.channels = conv1.extent(1);
  c.kernel = conv1.extent(2);
  c.conv2_channels = conv2.extent(0);
  c.vocab_size = embed.extent(0);
  c.embed_dim = embed.extent(1);
  c.hidden_dim = lstm.extent(0) / 4;
  return c;
}

Captioner::Captioner(ModelConfig config, ParameterStore params) : config_(config), params_(std::move(params)) {
  validate_config(config_);
  const auto layout = parameter_layout(config_);
  if (params_.size() != layout.size()) throw DimensionError("captioner parameter count mismatch");
  for (const auto& spec : layout) {
    const auto& t = params_[spec.name];
    if (t.shape() != spec.shape) {
      throw DimensionError(std::string("parameter ") + spec.name + " has shape " + numerics::shape_string(t.shape()) +
                           ", expected " + numerics::shape_string(spec.shape));
    }
    numerics::require_finite(t, spec.name);
  }
}

Captioner Captioner::zeros(const ModelConfig& config) {
  validate_config(config);
  ParameterStore p;
  for (auto& spec : parameter_layout(config)) p.add(spec.name, Tensor(spec.shape, 0.0));
  return Captioner(config, std::move(p));
}

Captioner Captioner::initialize(const ModelConfig& config, std::uint64_t seed) {
  validate_config(config);
  std::mt19937_64 rng(seed);
  ParameterStore p;
  auto normal = [&](Shape shape, double stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, stddev);
    for (auto& v : t.data()) v = d(rng);
    return t;
  };
  auto uniform = [&](Shape shape, double bound) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& v : t.data()) v = d(rng);
    return t;
  };
  const std::size_t n = config.hidden_dim;
  for (auto& spec : parameter_layout(config)) {
    const std::string name = spec.name;
    Tensor t;
    if (name == "encoder.conv1.weight" || name == "encoder.conv2.weight") {
      const double fan_in = static_cast<double>(spec.shape[1] * spec.shape[2] * spec.shape[3]);
      t = normal(spec.shape, std::sqrt(2.0 / fan_in));
    } else if (name == "encoder.project.weight" || name == "decoder.out.weight") {
      const double fan = static_cast<double>(spec.shape[0] + spec.shape[1]);
      t = uniform(spec.shape, std::sqrt(6.0 / fan));
    } else if (name == "decoder.embed") {
      t = normal(spec.shape, 0.1);
    } else if (name == "decoder.lstm.weight") {
      t = uniform(spec.shape, 1.0 / std::sqrt(static_cast<double>(n)));
    } else if (name == "decoder.lstm.bias") {
      t = Tensor(spec.shape, 0.0);
      for (std::size_t i = n; i < 2 * n; ++i) t[i] = kForgetBias;
    } else {
      t = Tensor(spec.shape, 0.0);
    }
    p.add(name, std::move(t));
  }
  return Captioner(config, std::move(p));
}

EncoderNodes Captioner::encode(Graph& g, const Tensor& image) const {
  const Shape expected{config_.channels, config_.height, config_.width};
  if (image.shape() != expected) {
    throw DimensionError("image shape " + numerics::shape_string(image.shape()) + ", expected " +
                         numerics::shape_string(expected));
  }
  return encode(g, g.constant(image));
}

EncoderNodes Captioner::encode(Graph& g, NodeId image) const {
  const Shape expected{config_.channels, config_.height, config_.width};
  if (g.value(image).shape() != expected) throw DimensionError("image node shape mismatch");
  auto p = [&](const char* name) { return g.parameter(params_, name); };
  NodeId x = ops::conv2d(g, image, p("encoder.conv1.weight"), config_.stride);
  x = ops::relu(g, ops::add_channel_bias(g, x, p("encoder.conv1.bias")));
  x = ops::conv2d(g, x, p("encoder.conv2.weight"), config_.stride);
  NodeId act = ops::relu(g, ops::add_channel_bias(g, x, p("encoder.conv2.bias")));
  // spatial mean per channel
  const std::size_t channels = config_.conv2_channels;
  const std::size_t plane = g.value(act).size() / channels;
  NodeId rows = ops::reshape(g, act, {channels, plane});
  NodeId pooled = ops::matmul(g, rows, g.constant(Tensor({plane, 1}, 1.0 / static_cast<double>(plane))));
  NodeId feature = ops::linear(g, p("encoder.project.weight"), ops::reshape(g, pooled, {channels}),
                               p("encoder.project.bias"));
  return {feature, act};
}

NodeId Captioner::decode_teacher_forced(Graph& g, NodeId feature, const CaptionSequence& caption) const {
  if (caption.tokens.size() < 2) throw ContractError("teacher forcing needs at least BOS and one target");
  for (auto t : caption.tokens) {
    if (t >= config_.vocab_size) throw LookupError("token " + std::to_string(t) + " out of vocabulary");
  }
  auto p = [&](const char* name) { return g.parameter(params_, name); };
  const std::size_t n = config_.hidden_dim;
  NodeId w = p("decoder.lstm.weight");
  NodeId b = p("decoder.lstm.bias");
  NodeId embed = p("decoder.embed");
  ops::LstmState s{g.constant(Tensor({n}, 0.0)), g.constant(Tensor({n}, 0.0))};
  s = ops::lstm_cell(g, feature, s.h, s.c, w, b);

  std::vector<NodeId> hidden;
  hidden.reserve(caption.targets());
  for (std::size_t k = 0; k + 1 < caption.tokens.size(); ++k) {
    s = ops::lstm_cell(g, ops::add(g, ops::embedding(g, embed, caption.tokens[k]), feature), s.h, s.c, w, b);
    hidden.push_back(s.h);
  }
  NodeId logits = ops::matmul(g, ops::stack_rows(g, hidden), p("decoder.out.weight"));
  return ops::softmax(g, ops::add_bias(g, logits, p("decoder.out.bias")));
}

CaptionSequence Captioner::greedy(const Tensor& image, std::size_t max_len) const {
  if (max_len < 2) throw ContractError("max_len must be at least 2");
  Graph g(false);
  auto p = [&](const char* name) { return g.parameter(params_, name); };
  const std::size_t n = config_.hidden_dim;
  NodeId w = p("decoder.lstm.weight");
  NodeId b = p("decoder.lstm.bias");
  NodeId embed = p("decoder.embed");
  NodeId out_w = p("decoder.out.weight");
  NodeId out_b = p("decoder.out.bias");

  auto feature = encode(g, image).feature;
  ops::LstmState s{g.constant(Tensor({n}, 0.0)), g.constant(Tensor({n}, 0.0))};
  s = ops::lstm_cell(g, feature, s.h, s.c, w, b);

  CaptionSequence out;
  out.tokens.push_back(Vocabulary::kBos);
  while (out.tokens.size() < max_len) {
    s = ops::lstm_cell(g, ops::add(g, ops::embedding(g, embed, out.tokens.back()), feature), s.h, s.c, w, b);
    const NodeId rows[] = {s.h};
    NodeId logits = ops::add_bias(g, ops::matmul(g, ops::stack_rows(g, rows), out_w), out_b);
    const Tensor probs = numerics::softmax(g.value(logits));
    TokenId best = Vocabulary::kEos;
    for (TokenId t = Vocabulary::kEos; t < probs.size(); ++t) {
      if (probs[t] > probs[best]) best = t;
    }
    out.tokens.push_back(best);
    if (best == Vocabulary::kEos) break;
  }
  return out;
}

EncodeResult encode_image(const Tensor& image, const Captioner& model) {
  Graph g(false);
  auto nodes = model.encode(g, image);
  return {g.value(nodes.feature), g.value(nodes.conv_activations)};
}

Tensor teacher_forced_distributions(const Tensor& image, const CaptionSequence& caption, const Captioner& model) {
  Graph g(false);
  auto nodes = model.encode(g, image);
  return g.value(model.decode_teacher_forced(g, nodes.feature, caption));
}

CaptionSequence caption_greedy(const Tensor& image, const Captioner& model, std::size_t max_len) {
  return model.greedy(image, max_len);
}

}  // namespace equalizer::captioner
