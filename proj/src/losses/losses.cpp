#include "equalizer/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "equalizer/corpus/mask.hpp"
#include "equalizer/error.hpp"
#include "equalizer/numerics/ops.hpp"

namespace equalizer::losses {

using numerics::BackwardContext;

namespace {

double mass(std::span<const double> dist, std::span<const TokenId> set) {
  double s = 0.0;
  for (auto t : set) s += dist[t];
  return s;
}

void check_terms(Graph& g, std::span<const CaptionTerm> terms, const char* what) {
  if (terms.empty()) throw ContractError(std::string(what) + ": empty batch");
  for (const auto& term : terms) {
    const Tensor& d = g.value(term.dists);
    const std::size_t targets = term.caption->targets();
    if (d.rank() != 2 || d.extent(0) != targets) {
      throw DimensionError(std::string(what) + ": need one distribution per target token");
    }
    if (!term.weights.empty() && term.weights.size() != targets) {
      throw DimensionError(std::string(what) + ": need one weight per target token");
    }
    for (auto t : term.caption->tokens) {
      if (t >= d.extent(1)) throw LookupError(std::string(what) + ": token outside distribution support");
    }
  }
}

std::span<const double> row(const Tensor& d, std::size_t t) {
  const std::size_t v = d.extent(1);
  return {d.raw() + t * v, v};
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

std::vector<NodeId> dist_inputs(std::span<const CaptionTerm> terms) {
  std::vector<NodeId> ids;
  ids.reserve(terms.size());
  for (const auto& t : terms) ids.push_back(t.dists);
  return ids;
}

struct TermView {
  const CaptionSequence* caption;
  std::vector<double> weights;
};

std::vector<TermView> views(std::span<const CaptionTerm> terms) {
  std::vector<TermView> v;
  v.reserve(terms.size());
  for (const auto& t : terms) v.push_back({t.caption, t.weights});
  return v;
}

}  // namespace

void LossWeights::validate() const {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(alpha) || bad(beta) || bad(mu) || bad(epsilon) || bad(lambda)) {
    throw ConfigError("loss weights must be finite");
  }
  if (alpha < 0 || beta < 0 || mu < 0) throw ConfigError("alpha, beta and mu must be nonnegative");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (lambda < 1) throw ConfigError("lambda must be at least 1");
}

double woman_mass(std::span<const double> dist, const GenderIndex& lexicon) { return mass(dist, lexicon.woman()); }
double man_mass(std::span<const double> dist, const GenderIndex& lexicon) { return mass(dist, lexicon.man()); }

double confusion(std::span<const double> dist, const GenderIndex& lexicon) {
  return std::abs(woman_mass(dist, lexicon) - man_mass(dist, lexicon));
}

Quotients confidence_quotients(std::span<const double> dist, const GenderIndex& lexicon, double epsilon) {
  if (!(epsilon > 0)) throw ContractError("confidence_quotients: epsilon must be positive");
  const double w = woman_mass(dist, lexicon);
  const double m = man_mass(dist, lexicon);
  return {m / (w + epsilon), w / (m + epsilon)};
}

std::vector<double> upweight_ce_weights(const CaptionSequence& caption, const GenderIndex& lexicon, double lambda) {
  std::vector<double> w(caption.targets(), 1.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (lexicon.is_gendered(caption.tokens[k + 1])) w[k] = lambda;
  }
  return w;
}

std::vector<double> gated_ce_weights(const CaptionSequence& caption, const GenderIndex& lexicon) {
  return upweight_ce_weights(caption, lexicon, 0.0);
}

double cross_entropy(const Tensor& dists, const CaptionSequence& caption, std::span<const double> weights) {
  if (dists.rank() != 2 || dists.extent(0) != caption.targets()) {
    throw DimensionError("cross_entropy: need one distribution per target token");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < caption.targets(); ++t) {
    const double w = weights.empty() ? 1.0 : weights[t];
    if (w < 0) throw ContractError("cross_entropy: negative weight");
    den += w;
    if (w != 0.0) num += w * std::log(std::max(dists.at(t, caption.tokens[t + 1]), kLogFloor));
  }
  if (!(den > 0)) throw ContractError("cross_entropy: weights sum to zero");
  return -num / den;
}

NodeId cross_entropy(Graph& g, std::span<const CaptionTerm> terms) {
  check_terms(g, terms, "cross_entropy");
  double num = 0.0, den = 0.0;
  for (const auto& term : terms) {
    const Tensor& d = g.value(term.dists);
    for (std::size_t t = 0; t < term.caption->targets(); ++t) {
      const double w = term.weights.empty() ? 1.0 : term.weights[t];
      if (w < 0) throw ContractError("cross_entropy: negative weight");
      den += w;
      if (w != 0.0) num += w * std::log(std::max(d.at(t, term.caption->tokens[t + 1]), kLogFloor));
    }
  }
  if (!(den > 0)) throw ContractError("cross_entropy: weights sum to zero");
  return g.record("cross_entropy", Tensor::scalar(-num / den), dist_inputs(terms),
                  [v = views(terms), den](BackwardContext& ctx) {
                    const double go = ctx.out_grad()[0];
                    for (std::size_t k = 0; k < v.size(); ++k) {
                      Tensor* gd = ctx.input_grad(k);
                      if (!gd) continue;
                      const Tensor& d = ctx.input(k);
                      for (std::size_t t = 0; t < v[k].caption->targets(); ++t) {
                        const double w = v[k].weights.empty() ? 1.0 : v[k].weights[t];
                        const auto target = v[k].caption->tokens[t + 1];
                        const double p = d.at(t, target);
                        if (w != 0.0 && p > kLogFloor) gd->at(t, target) += -go * w / (den * p);
                      }
                    }
                  });
}

NodeId appearance_confusion_loss(Graph& g, std::span<const CaptionTerm> terms, const GenderIndex& lexicon) {
  check_terms(g, terms, "appearance_confusion_loss");
  const double n = static_cast<double>(terms.size());
  double total = 0.0;
  for (const auto& term : terms) {
    const Tensor& d = g.value(term.dists);
    for (std::size_t t = 0; t < term.caption->targets(); ++t) {
      if (lexicon.is_gendered(term.caption->tokens[t + 1])) total += confusion(row(d, t), lexicon);
    }
  }
  return g.record("appearance_confusion", Tensor::scalar(total / n), dist_inputs(terms),
                  [v = views(terms), lexicon, n](BackwardContext& ctx) {
                    const double go = ctx.out_grad()[0] / n;
                    for (std::size_t k = 0; k < v.size(); ++k) {
                      Tensor* gd = ctx.input_grad(k);
                      if (!gd) continue;
                      const Tensor& d = ctx.input(k);
                      const std::size_t vocab = d.extent(1);
                      for (std::size_t t = 0; t < v[k].caption->targets(); ++t) {
                        if (!lexicon.is_gendered(v[k].caption->tokens[t + 1])) continue;
                        auto p = row(d, t);
                        // subgradient of |x| at 0 is 0
                        const double s = sign(woman_mass(p, lexicon) - man_mass(p, lexicon));
                        double* gr = gd->raw() + t * vocab;
                        for (auto w : lexicon.woman()) gr[w] += go * s;
                        for (auto m : lexicon.man()) gr[m] -= go * s;
                      }
                    }
                  });
}

NodeId confident_loss(Graph& g, std::span<const CaptionTerm> terms, const GenderIndex& lexicon, double epsilon) {
  check_terms(g, terms, "confident_loss");
  if (!(epsilon > 0)) throw ContractError("confident_loss: epsilon must be positive");
  const double n = static_cast<double>(terms.size());
  double total = 0.0;
  for (const auto& term : terms) {
    const Tensor& d = g.value(term.dists);
    for (std::size_t t = 0; t < term.caption->targets(); ++t) {
      const auto cls = lexicon.classify(term.caption->tokens[t + 1]);
      if (cls == WordGender::Woman) total += confidence_quotients(row(d, t), lexicon, epsilon).woman;
      if (cls == WordGender::Man) total += confidence_quotients(row(d, t), lexicon, epsilon).man;
    }
  }
  return g.record("confident", Tensor::scalar(total / n), dist_inputs(terms),
                  [v = views(terms), lexicon, n, epsilon](BackwardContext& ctx) {
                    const double go = ctx.out_grad()[0] / n;
                    for (std::size_t k = 0; k < v.size(); ++k) {
                      Tensor* gd = ctx.input_grad(k);
                      if (!gd) continue;
                      const Tensor& d = ctx.input(k);
                      const std::size_t vocab = d.extent(1);
                      for (std::size_t t = 0; t < v[k].caption->targets(); ++t) {
                        const auto cls = lexicon.classify(v[k].caption->tokens[t + 1]);
                        if (cls != WordGender::Woman && cls != WordGender::Man) continue;
                        auto p = row(d, t);
                        // F = num / (den + eps) with num, den the wrong- and right-gender masses
                        const auto right = cls == WordGender::Woman ? lexicon.woman() : lexicon.man();
                        const auto wrong = cls == WordGender::Woman ? lexicon.man() : lexicon.woman();
                        const double num = mass(p, wrong);
                        const double den = mass(p, right) + epsilon;
                        double* gr = gd->raw() + t * vocab;
                        for (auto i : wrong) gr[i] += go / den;
                        for (auto i : right) gr[i] -= go * num / (den * den);
                      }
                    }
                  });
}

TrainingPair::TrainingPair(Tensor image, const Tensor& mask, CaptionSequence caption, const GenderIndex& lexicon)
    : image_(std::move(image)), masked_(corpus::apply_mask(image_, mask)), caption_(std::move(caption)) {
  gendered_.resize(caption_.targets());
  for (std::size_t k = 0; k < gendered_.size(); ++k) gendered_[k] = lexicon.is_gendered(caption_.tokens[k + 1]);
}

TrainingPair::TrainingPair(Tensor image, Tensor masked, const Tensor& mask, CaptionSequence caption,
                           const GenderIndex& lexicon)
    : TrainingPair(std::move(image), mask, std::move(caption), lexicon) {
  if (masked.shape() != masked_.shape() || masked.data().size() != masked_.data().size() ||
      !std::equal(masked.data().begin(), masked.data().end(), masked_.data().begin())) {
    throw ContractError("TrainingPair: masked image is not image (.) mask");
  }
}

EqualizerLoss equalizer_loss(Graph& g, const captioner::Captioner& model, std::span<const TrainingPair> batch,
                             const GenderIndex& lexicon, const LossWeights& weights) {
  weights.validate();
  if (batch.empty()) throw ContractError("equalizer_loss: empty batch");

  EqualizerLoss out{};
  std::vector<CaptionTerm> original;
  original.reserve(batch.size());
  for (const auto& pair : batch) {
    auto enc = model.encode(g, pair.image());
    NodeId dists = model.decode_teacher_forced(g, enc.feature, pair.caption());
    std::vector<double> w;
    if (weights.lambda != 1.0) w = upweight_ce_weights(pair.caption(), lexicon, weights.lambda);
    original.push_back({dists, &pair.caption(), std::move(w)});
  }

  std::vector<NodeId> terms;
  std::vector<double> coeffs;

  NodeId ce_original = cross_entropy(g, original);
  out.components.ce_original = g.value(ce_original)[0];
  NodeId ce = ce_original;

  if (weights.beta > 0) {
    out.components.masked_branch = true;
    std::vector<CaptionTerm> masked;
    masked.reserve(batch.size());
    for (const auto& pair : batch) {
      auto enc = model.encode(g, pair.masked());
      NodeId dists = model.decode_teacher_forced(g, enc.feature, pair.caption());
      masked.push_back({dists, &pair.caption(), gated_ce_weights(pair.caption(), lexicon)});
    }
    NodeId ce_masked = cross_entropy(g, masked);
    out.components.ce_masked = g.value(ce_masked)[0];
    ce = numerics::add(g, ce_original, ce_masked);

    NodeId acl = appearance_confusion_loss(g, masked, lexicon);
    out.components.acl = g.value(acl)[0];
    terms.push_back(acl);
    coeffs.push_back(weights.beta);
  }
  out.components.ce = g.value(ce)[0];
  if (weights.alpha > 0) {
    terms.insert(terms.begin(), ce);
    coeffs.insert(coeffs.begin(), weights.alpha);
  }

  if (weights.mu > 0) {
    NodeId con = confident_loss(g, original, lexicon, weights.epsilon);
    out.components.con = g.value(con)[0];
    terms.push_back(con);
    coeffs.push_back(weights.mu);
  } else {
    double total = 0.0;
    for (const auto& term : original) {
      const Tensor& d = g.value(term.dists);
      for (std::size_t t = 0; t < term.caption->targets(); ++t) {
        const auto cls = lexicon.classify(term.caption->tokens[t + 1]);
        if (cls == WordGender::Woman) total += confidence_quotients(row(d, t), lexicon, weights.epsilon).woman;
        if (cls == WordGender::Man) total += confidence_quotients(row(d, t), lexicon, weights.epsilon).man;
      }
    }
    out.components.con = total / static_cast<double>(batch.size());
  }

  if (terms.empty()) throw ContractError("equalizer_loss: every loss weight is zero");
  out.total = numerics::weighted_sum(g, terms, coeffs);
  out.components.total = g.value(out.total)[0];
  return out;
}

}  // namespace equalizer::losses
