#include "equalizer/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "equalizer/error.hpp"
#include "equalizer/evaluation/evaluate.hpp"

namespace equalizer::training {

namespace {

std::string components_string(const LossComponents& c) {
  std::ostringstream os;
  os.precision(10);
  os << "ce_original=" << c.ce_original << " ce_masked=" << c.ce_masked << " ce=" << c.ce << " acl=" << c.acl
     << " con=" << c.con << " total=" << c.total;
  return os.str();
}

struct Example {
  const corpus::CaptionedImage* image;
  std::array<captioner::CaptionSequence, corpus::kCaptionsPerImage> captions;
};

}  // namespace

OptimizerState OptimizerState::for_parameters(const ParameterStore& params) {
  OptimizerState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params.value(i).shape(), 0.0);
    s.v.emplace_back(params.value(i).shape(), 0.0);
  }
  return s;
}

void adam_update(ParameterStore& params, const Gradients& grads, OptimizerState& state, const AdamSettings& s) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw DimensionError("optimizer state does not mirror the parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.value(i).data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (g.size() != p.size()) throw DimensionError("gradient of " + params.name(i) + " has the wrong size");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
      p[k] -= s.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + s.eps);
    }
  }
}

LossComponents train_step(Captioner& model, std::span<const TrainingPair> batch, const GenderIndex& lexicon,
                          const TrainConfig& config, OptimizerState& state) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  numerics::Graph g;
  losses::EqualizerLoss loss;
  Gradients grads;
  try {
    loss = losses::equalizer_loss(g, model, batch, lexicon, config.weights);
    grads = g.backward(loss.total, model.params());
  } catch (const NumericError& e) {
    throw NumericError(std::string("non-finite training step (") + e.what() + "); " +
                       components_string(loss.components));
  }
  if (!std::isfinite(loss.components.total)) {
    throw NumericError("non-finite loss; " + components_string(loss.components));
  }
  adam_update(model.params(), grads, state, AdamSettings{config.lr});
  return loss.components;
}

BalancedSampler::BalancedSampler(std::span<const corpus::GenderLabel> labels, std::uint64_t seed) : rng_(seed) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == corpus::GenderLabel::Female) female_.push_back(i);
    if (labels[i] == corpus::GenderLabel::Male) male_.push_back(i);
  }
  if (female_.empty() || male_.empty()) throw CapacityError("balanced sampling needs Female and Male images");
}

std::size_t BalancedSampler::next() {
  const auto& pool = std::uniform_int_distribution<int>(0, 1)(rng_) ? female_ : male_;
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
}

std::string EpochLog::to_line() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch=" << epoch << ' ' << components_string(mean) << " val_error=" << val_error << " val_ratio=";
  if (val_ratio_infinite) {
    os << "inf";
  } else {
    os << val_ratio;
  }
  os << " val_gendered=" << val_gendered << " val_neutral=" << val_neutral << " val_confusion=" << val_confusion << " best=" << (best ? 1 : 0);
  return os.str();
}

captioner::ModelConfig model_config(const captioner::Vocabulary& vocab, std::size_t max_len) {
  captioner::ModelConfig c;
  c.vocab_size = vocab.size();
  c.max_len = max_len;
  return c;
}

TrainResult train(const corpus::Dataset& dataset, const captioner::Vocabulary& vocab, const GenderIndex& lexicon,
                  const TrainConfig& config, std::ostream* log) {
  config.validate();
  const auto train_images = dataset.split(corpus::Split::Train);
  const auto val_all = dataset.split(corpus::Split::Val);
  const auto val = corpus::build_bias_split(val_all);
  if (train_images.empty()) throw ContractError("train split is empty");
  if (val.empty()) throw ContractError("val split is empty");

  std::vector<Example> examples;
  examples.reserve(train_images.size());
  std::vector<corpus::GenderLabel> labels;
  for (const auto* img : train_images) {
    Example ex{img, {}};
    for (std::size_t c = 0; c < corpus::kCaptionsPerImage; ++c) {
      ex.captions[c] = vocab.encode(img->captions[c]);
      vocab.validate_reference(ex.captions[c], config.max_len);
    }
    examples.push_back(std::move(ex));
    labels.push_back(img->label);
  }

  TrainResult result{Captioner::initialize(model_config(vocab, config.max_len), config.seed), 0, 0.0, {}};
  Captioner model = result.model;
  OptimizerState state = OptimizerState::for_parameters(model.params());
  std::mt19937_64 rng(config.seed ^ 0xA5A5A5A5ull);
  std::optional<BalancedSampler> sampler;
  if (config.variant == Variant::Balanced) sampler.emplace(labels, config.seed + 1);

  evaluation::EvalOptions eval_options;
  eval_options.max_len = config.max_len;
  eval_options.workers = config.workers;
  eval_options.pointing = false;

  bool have_best = false;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (sampler) {
      for (auto& i : order) i = sampler->next();
    } else {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
    }

    EpochLog entry;
    entry.epoch = epoch;
    std::size_t batches = 0;
    std::vector<TrainingPair> batch;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = examples[order[k]];
        const auto pick = std::uniform_int_distribution<std::size_t>(0, corpus::kCaptionsPerImage - 1)(rng);
        batch.emplace_back(ex.image->pixels, ex.image->person_mask, ex.captions[pick], lexicon);
      }
      const auto c = train_step(model, batch, lexicon, config, state);
      entry.mean.ce_original += c.ce_original;
      entry.mean.ce_masked += c.ce_masked;
      entry.mean.ce += c.ce;
      entry.mean.acl += c.acl;
      entry.mean.con += c.con;
      entry.mean.total += c.total;
      entry.mean.masked_branch = c.masked_branch;
      ++batches;
    }
    const double nb = static_cast<double>(batches);
    entry.mean.ce_original /= nb;
    entry.mean.ce_masked /= nb;
    entry.mean.ce /= nb;
    entry.mean.acl /= nb;
    entry.mean.con /= nb;
    entry.mean.total /= nb;

    const auto report = evaluation::evaluate(model, val, vocab, lexicon, eval_options);
    entry.val_error = report.error_rate;
    entry.val_ratio = report.ratio.value;
    entry.val_ratio_infinite = report.ratio.infinite;
    entry.val_gendered = static_cast<double>(report.ratio.female_only + report.ratio.male_only) /
                         static_cast<double>(report.images);
    entry.val_neutral = report.neutral_rate;
    entry.val_confusion = evaluation::masked_confusion(model, val, vocab, lexicon, config.workers);
    const bool eligible = entry.val_gendered >= config.min_gendered_coverage;
    const bool last = epoch == config.epochs;
    if ((eligible && (!have_best || entry.val_error <= result.best_val_error)) || (last && !have_best)) {
      have_best = eligible;
      entry.best = true;
      result.best_val_error = entry.val_error;
      result.best_epoch = epoch;
      result.model = model;
    }
    result.log.push_back(entry);
    if (log) *log << entry.to_line() << std::endl;
  }
  return result;
}

}  // namespace equalizer::training
