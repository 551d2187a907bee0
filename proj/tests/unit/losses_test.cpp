#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "equalizer/corpus/mask.hpp"
#include "equalizer/corpus/synthetic.hpp"
#include "equalizer/error.hpp"
#include "equalizer/losses/losses.hpp"
#include "equalizer/numerics/gradcheck.hpp"
#include "equalizer/numerics/ops.hpp"
#include "test_support.hpp"

namespace {

using namespace equalizer;
using namespace equalizer::losses;
using captioner::Vocabulary;

// Distributions over V=10 with woman={2,5}, man={3}.
GenderIndex toy_index(std::size_t v = 10) { return GenderIndex({2, 5}, {3}, {7}, v); }

std::vector<double> with_masses(double woman, double man, std::size_t v = 10) {
  // woman mass on 2 and 5, man mass on 3, remainder spread on the rest
  std::vector<double> p(v, 0.0);
  p[2] = woman * 0.25;
  p[5] = woman * 0.75;
  p[3] = man;
  const double rest = (1.0 - woman - man) / (v - 3);
  for (std::size_t i = 0; i < v; ++i) {
    if (i != 2 && i != 3 && i != 5) p[i] = rest;
  }
  return p;
}

// Scalar oracles written against raw word sets, independent of GenderIndex.
struct Sets {
  std::vector<std::size_t> woman, man;
};

double brute_mass(const std::vector<double>& p, const std::vector<std::size_t>& set) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (auto j : set) {
      if (i == j) s += p[i];
    }
  }
  return s;
}

bool in(const std::vector<std::size_t>& set, std::size_t t) {
  for (auto j : set) {
    if (j == t) return true;
  }
  return false;
}

std::vector<double> row_of(const Tensor& d, std::size_t t) {
  std::vector<double> r(d.extent(1));
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = d.at(t, k);
  return r;
}

double oracle_ce(const std::vector<Tensor>& dists, const std::vector<captioner::CaptionSequence>& caps,
                 const std::vector<std::vector<double>>& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < dists.size(); ++n) {
    for (std::size_t t = 0; t + 1 < caps[n].tokens.size(); ++t) {
      const double w = weights.empty() ? 1.0 : weights[n][t];
      den += w;
      if (w > 0) num += w * std::log(std::max(dists[n].at(t, caps[n].tokens[t + 1]), 1e-12));
    }
  }
  return -num / den;
}

double oracle_acl(const std::vector<Tensor>& dists, const std::vector<captioner::CaptionSequence>& caps,
                  const Sets& s) {
  double total = 0.0;
  for (std::size_t n = 0; n < dists.size(); ++n) {
    for (std::size_t t = 0; t + 1 < caps[n].tokens.size(); ++t) {
      const auto w = caps[n].tokens[t + 1];
      if (!in(s.woman, w) && !in(s.man, w)) continue;
      auto p = row_of(dists[n], t);
      total += std::abs(brute_mass(p, s.woman) - brute_mass(p, s.man));
    }
  }
  return total / dists.size();
}

double oracle_con(const std::vector<Tensor>& dists, const std::vector<captioner::CaptionSequence>& caps,
                  const Sets& s, double eps) {
  double total = 0.0;
  for (std::size_t n = 0; n < dists.size(); ++n) {
    for (std::size_t t = 0; t + 1 < caps[n].tokens.size(); ++t) {
      const auto w = caps[n].tokens[t + 1];
      auto p = row_of(dists[n], t);
      const double fw = brute_mass(p, s.woman), fm = brute_mass(p, s.man);
      if (in(s.woman, w)) total += fm / (fw + eps);
      if (in(s.man, w)) total += fw / (fm + eps);
    }
  }
  return total / dists.size();
}

struct Fixture {
  Vocabulary vocab = eqtest::synthetic_vocab();
  GenderLexicon lexicon = corpus::default_lexicon();
  GenderIndex index{lexicon, vocab};
  Sets sets;

  Fixture() {
    for (const auto& w : lexicon.woman()) sets.woman.push_back(vocab.id(w));
    for (const auto& w : lexicon.man()) sets.man.push_back(vocab.id(w));
  }

  captioner::CaptionSequence caption(const std::string& text) const {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = std::min(text.find(' ', start), text.size());
      words.push_back(text.substr(start, end - start));
      start = end + 1;
    }
    return vocab.encode(words);
  }
};

// -- cross-entropy --

TEST(CrossEntropy, OneHotIsZero) {
  Vocabulary v({"x", "y"});
  captioner::CaptionSequence c{{1, 3, 4, 2}};
  Tensor d({3, 5});
  d.at(0, 3) = d.at(1, 4) = d.at(2, 2) = 1.0;
  EXPECT_DOUBLE_EQ(cross_entropy(d, c, {}), 0.0);
}

TEST(CrossEntropy, UniformIsLogV) {
  captioner::CaptionSequence c{{1, 3, 2}};
  Tensor d({2, 4}, 0.25);
  EXPECT_NEAR(cross_entropy(d, c, {}), std::log(4.0), 1e-15);
  EXPECT_NEAR(cross_entropy(d, c, {}), 1.3863, 1e-4);
}

TEST(CrossEntropy, ZeroProbabilityIsFloored) {
  captioner::CaptionSequence c{{1, 3}};
  Tensor d({1, 4});
  d.at(0, 0) = 1.0;
  EXPECT_NEAR(cross_entropy(d, c, {}), -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, GatedWeightsMatchScalarLoop) {
  Fixture f;
  std::mt19937_64 rng(3);
  auto cap = f.caption("a woman holding a girl");
  Tensor d({cap.targets(), f.vocab.size()});
  for (std::size_t t = 0; t < cap.targets(); ++t) {
    auto p = eqtest::random_distribution(f.vocab.size(), rng);
    for (std::size_t k = 0; k < p.size(); ++k) d.at(t, k) = p[k];
  }
  auto w = gated_ce_weights(cap, f.index);
  EXPECT_EQ(w, (std::vector<double>{1, 0, 1, 1, 0, 1}));
  double num = 0.0;
  int kept = 0;
  for (std::size_t t = 0; t < cap.targets(); ++t) {
    const auto tok = cap.tokens[t + 1];
    if (in(f.sets.woman, tok) || in(f.sets.man, tok)) continue;
    num += std::log(d.at(t, tok));
    ++kept;
  }
  EXPECT_NEAR(cross_entropy(d, cap, w), -num / kept, 1e-12);
}

TEST(CrossEntropy, Errors) {
  captioner::CaptionSequence c{{1, 3, 2}};
  const std::vector<double> neg{1.0, -1.0}, zero{0.0, 0.0};
  EXPECT_THROW(cross_entropy(Tensor({2, 4}, 0.25), c, neg), ContractError);
  EXPECT_THROW(cross_entropy(Tensor({2, 4}, 0.25), c, zero), ContractError);
  EXPECT_THROW(cross_entropy(Tensor({3, 4}, 0.25), c, {}), DimensionError);
}

// -- confusion --

TEST(Confusion, Examples) {
  auto idx = toy_index();
  EXPECT_NEAR(confusion(with_masses(0.3, 0.3), idx), 0.0, 1e-15);
  EXPECT_NEAR(confusion(with_masses(0.6, 0.2), idx), 0.4, 1e-15);
}

TEST(Confusion, MatchesEnumeration) {
  auto idx = toy_index();
  Sets s{{2, 5}, {3}};
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = eqtest::random_distribution(10, rng);
    EXPECT_NEAR(confusion(p, idx), std::abs(brute_mass(p, s.woman) - brute_mass(p, s.man)), 1e-15);
  }
}

TEST(Confusion, BoundedAndZeroIffEqual) {
  auto idx = toy_index();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto p = eqtest::random_distribution(10, rng);
    const double c = confusion(p, idx);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(c == 0.0, woman_mass(p, idx) == man_mass(p, idx));
  }
  EXPECT_DOUBLE_EQ(confusion(with_masses(1.0, 0.0), idx), 1.0);
}

TEST(Confusion, SwapSymmetry) {
  auto idx = toy_index();
  auto sw = idx.swapped();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = eqtest::random_distribution(10, rng);
    EXPECT_DOUBLE_EQ(confusion(p, idx), confusion(p, sw));
    auto q = confidence_quotients(p, idx, 1e-6), r = confidence_quotients(p, sw, 1e-6);
    EXPECT_DOUBLE_EQ(q.woman, r.man);
    EXPECT_DOUBLE_EQ(q.man, r.woman);
  }
}

// -- quotients --

TEST(Quotients, Examples) {
  auto idx = toy_index();
  EXPECT_NEAR(confidence_quotients(with_masses(0.5, 0.1), idx, 1e-6).woman, 0.1 / (0.5 + 1e-6), 1e-15);
  EXPECT_NEAR(confidence_quotients(with_masses(0.5, 0.1), idx, 1e-6).woman, 0.19999996, 1e-6);
  EXPECT_NEAR(confidence_quotients(with_masses(0.0, 0.1), idx, 1e-6).woman, 1e5, 1e-6);
  auto confident = confidence_quotients(with_masses(0.9, 0.01), idx, 1e-6);
  EXPECT_NEAR(confident.woman, 0.0111, 1e-4);
  EXPECT_THROW(confidence_quotients(with_masses(0.5, 0.1), idx, 0.0), ContractError);
}

TEST(Quotients, Monotone) {
  auto idx = toy_index();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.45);
  for (int trial = 0; trial < 300; ++trial) {
    const double w = u(rng), m = u(rng), dw = u(rng) * 0.1 + 1e-3;
    const double base = confidence_quotients(with_masses(w, m), idx, 1e-6).woman;
    EXPECT_LT(confidence_quotients(with_masses(w + dw, m), idx, 1e-6).woman, base);
    EXPECT_GT(confidence_quotients(with_masses(w, m + dw), idx, 1e-6).woman, base);
  }
}

// -- batched losses on graph inputs --

struct Batch {
  Graph g;
  std::vector<Tensor> dists;
  std::vector<captioner::CaptionSequence> caps;
  std::vector<CaptionTerm> terms;
};

void fill(Batch& b, const Fixture& f, const std::vector<std::string>& texts, std::mt19937_64& rng) {
  for (const auto& text : texts) b.caps.push_back(f.caption(text));
  for (const auto& cap : b.caps) {
    Tensor d({cap.targets(), f.vocab.size()});
    for (std::size_t t = 0; t < cap.targets(); ++t) {
      auto p = eqtest::random_distribution(f.vocab.size(), rng);
      for (std::size_t k = 0; k < p.size(); ++k) d.at(t, k) = p[k];
    }
    b.dists.push_back(d);
  }
  for (std::size_t n = 0; n < b.caps.size(); ++n) b.terms.push_back({b.g.constant(b.dists[n]), &b.caps[n], {}});
}

TEST(AppearanceConfusion, NoGenderedWordsIsZero) {
  Fixture f;
  std::mt19937_64 rng(8);
  Batch b;
  fill(b, f, {"a person with a pot", "a person next to a laptop"}, rng);
  EXPECT_EQ(b.g.value(appearance_confusion_loss(b.g, b.terms, f.index))[0], 0.0);
  EXPECT_EQ(b.g.value(confident_loss(b.g, b.terms, f.index, 1e-6))[0], 0.0);
}

TEST(AppearanceConfusion, UniformModelIsConfused) {
  Fixture f;
  captioner::ModelConfig mc;
  mc.vocab_size = f.vocab.size();
  auto model = captioner::Captioner::zeros(mc);
  corpus::BiasSpec spec;
  spec.count = 2;
  auto ds = corpus::generate_synthetic(spec);
  std::vector<TrainingPair> batch;
  for (const auto& img : ds.images) batch.emplace_back(img.pixels, img.person_mask, f.caption("a man with a boy"), f.index);
  Graph g;
  LossWeights w;
  auto loss = equalizer_loss(g, model, batch, f.index, w);
  EXPECT_NEAR(loss.components.acl, 0.0, 1e-15);
}

TEST(AppearanceConfusion, MatchesScalarLoop) {
  Fixture f;
  std::mt19937_64 rng(9);
  Batch b;
  fill(b, f, {"a woman with a pot", "a man next to a boy"}, rng);
  const double got = b.g.value(appearance_confusion_loss(b.g, b.terms, f.index))[0];
  EXPECT_NEAR(got, oracle_acl(b.dists, b.caps, f.sets), 1e-12);
  EXPECT_GT(got, 0.0);
}

TEST(AppearanceConfusion, EmptyBatchRejected) {
  Fixture f;
  Graph g;
  std::vector<CaptionTerm> none;
  EXPECT_THROW(appearance_confusion_loss(g, none, f.index), ContractError);
  EXPECT_THROW(confident_loss(g, none, f.index, 1e-6), ContractError);
  EXPECT_THROW(cross_entropy(g, none), ContractError);
}

TEST(ConfidentLoss, UniformDistributions) {
  // |G_w| = |G_m| = 1, V = 10
  GenderIndex idx({4}, {5}, {}, 10);
  Graph g;
  captioner::CaptionSequence cap{{1, 4, 3, 5, 2}};
  std::vector<CaptionTerm> terms{{g.constant(Tensor({4, 10}, 0.1)), &cap, {}}};
  const double per_token = 0.1 / (0.1 + 1e-6);
  EXPECT_NEAR(per_token, 0.99999, 1e-5);
  EXPECT_NEAR(g.value(confident_loss(g, terms, idx, 1e-6))[0], 2 * per_token, 1e-15);
}

TEST(ConfidentLoss, BatchOfThreeMatchesScalarLoop) {
  Fixture f;
  std::mt19937_64 rng(10);
  Batch b;
  fill(b, f, {"a woman with a pot", "a man next to a boy", "a girl holding a board"}, rng);
  EXPECT_NEAR(b.g.value(confident_loss(b.g, b.terms, f.index, 1e-6))[0], oracle_con(b.dists, b.caps, f.sets, 1e-6),
              1e-12);
}

// Every batched loss against the scalar references on random batches of up
// to four captions.
TEST(Losses, ScalarOracleEquivalence) {
  Fixture f;
  std::mt19937_64 rng(11);
  const std::vector<std::string> pool = {"a woman with a pot",   "a man next to a boy",   "a person holding a racket",
                                         "a girl with a laptop", "a boy holding a board", "a woman next to a man"};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> texts;
    const std::size_t n = 1 + trial % 4;
    for (std::size_t i = 0; i < n; ++i) texts.push_back(pool[(trial * 7 + i * 3) % pool.size()]);
    Batch b;
    fill(b, f, texts, rng);
    std::vector<std::vector<double>> weights;
    for (std::size_t i = 0; i < n; ++i) {
      b.terms[i].weights = upweight_ce_weights(b.caps[i], f.index, 1.0 + trial % 5);
      weights.push_back(b.terms[i].weights);
    }
    const double ce = b.g.value(cross_entropy(b.g, b.terms))[0];
    const double acl = b.g.value(appearance_confusion_loss(b.g, b.terms, f.index))[0];
    const double con = b.g.value(confident_loss(b.g, b.terms, f.index, 1e-6))[0];
    EXPECT_NEAR(ce, oracle_ce(b.dists, b.caps, weights), 1e-12);
    EXPECT_NEAR(acl, oracle_acl(b.dists, b.caps, f.sets), 1e-12);
    EXPECT_NEAR(con, oracle_con(b.dists, b.caps, f.sets, 1e-6), 1e-12);
    EXPECT_GE(ce, 0.0);
    EXPECT_GE(acl, 0.0);
    EXPECT_GE(con, 0.0);
  }
}

TEST(Losses, BackwardRulesMatchFiniteDifferences) {
  // distributions as parameters, far from the |x| kink
  Fixture f;
  std::mt19937_64 rng(12);
  auto caps = std::vector<captioner::CaptionSequence>{f.caption("a woman with a man"), f.caption("a boy holding a pot")};
  numerics::ParameterStore p;
  for (std::size_t n = 0; n < caps.size(); ++n) {
    Tensor d({caps[n].targets(), f.vocab.size()});
    for (std::size_t t = 0; t < caps[n].targets(); ++t) {
      auto row = eqtest::random_distribution(f.vocab.size(), rng);
      for (std::size_t k = 0; k < row.size(); ++k) d.at(t, k) = row[k];
    }
    p.add("d" + std::to_string(n), d);
  }
  auto build = [&](Graph& g, const numerics::ParameterStore& s) {
    std::vector<CaptionTerm> terms;
    for (std::size_t n = 0; n < caps.size(); ++n) {
      terms.push_back({g.parameter(s, n), &caps[n], upweight_ce_weights(caps[n], f.index, 3.0)});
    }
    const NodeId parts[] = {cross_entropy(g, terms), appearance_confusion_loss(g, terms, f.index),
                            confident_loss(g, terms, f.index, 1e-6)};
    const double coeffs[] = {1.0, 2.0, 0.5};
    return numerics::weighted_sum(g, parts, coeffs);
  };
  Graph g;
  auto grads = g.backward(build(g, p), p);
  auto rep = numerics::finite_difference_check(
      [&](const numerics::ParameterStore& s) {
        Graph h(false);
        return h.value(build(h, s))[0];
      },
      p, grads);
  EXPECT_GT(rep.checked, 150u);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

// -- combined objective --

struct ModelBatch {
  Fixture f;
  captioner::Captioner model;
  std::vector<TrainingPair> batch;

  ModelBatch(std::uint64_t seed, const std::vector<std::string>& texts)
      : model(eqtest::small_model(f.vocab.size(), seed, 8)) {
    corpus::BiasSpec spec;
    spec.count = texts.size();
    spec.seed = seed;
    auto ds = corpus::generate_synthetic(spec);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      batch.emplace_back(ds.images[i].pixels, ds.images[i].person_mask, f.caption(texts[i]), f.index);
    }
  }

  /// Smallest |woman mass - man mass| over gendered positions of the masked images.
  double kink_distance() const {
    double best = 1.0;
    for (const auto& pair : batch) {
      auto d = captioner::teacher_forced_distributions(pair.masked(), pair.caption(), model);
      for (std::size_t t = 0; t < pair.caption().targets(); ++t) {
        if (!pair.gendered()[t]) continue;
        auto r = row_of(d, t);
        best = std::min(best, std::abs(woman_mass(r, f.index) - man_mass(r, f.index)));
      }
    }
    return best;
  }
};

TEST(EqualizerLoss, LinearCombination) {
  ModelBatch mb(21, {"a woman with a pot", "a man next to a boy"});
  LossWeights w;
  w.alpha = 1.0;
  w.beta = 1.0;
  w.mu = 1.0;
  Graph g;
  auto loss = equalizer_loss(g, mb.model, mb.batch, mb.f.index, w);
  const auto& c = loss.components;
  EXPECT_NEAR(c.total, c.ce + c.acl + c.con, 1e-12);
  EXPECT_NEAR(c.ce, c.ce_original + c.ce_masked, 1e-15);
  EXPECT_TRUE(c.masked_branch);

  // the combination rule itself on fixed component values
  Graph h;
  const NodeId parts[] = {h.constant(Tensor::scalar(1.0)), h.constant(Tensor::scalar(0.5)),
                          h.constant(Tensor::scalar(0.2))};
  const double coeffs[] = {w.alpha, w.beta, w.mu};
  EXPECT_NEAR(h.value(numerics::weighted_sum(h, parts, coeffs))[0], 1.7, 1e-15);
}

TEST(EqualizerLoss, ComponentsMatchDirectComputation) {
  ModelBatch mb(22, {"a girl with a laptop", "a man holding a board", "a person next to a pot"});
  LossWeights w;
  w.alpha = 0.7;
  w.beta = 3.0;
  w.mu = 0.4;
  Graph g;
  auto loss = equalizer_loss(g, mb.model, mb.batch, mb.f.index, w);
  std::vector<Tensor> orig, masked;
  std::vector<captioner::CaptionSequence> caps;
  std::vector<std::vector<double>> gates;
  for (const auto& p : mb.batch) {
    orig.push_back(captioner::teacher_forced_distributions(p.image(), p.caption(), mb.model));
    masked.push_back(captioner::teacher_forced_distributions(p.masked(), p.caption(), mb.model));
    caps.push_back(p.caption());
    std::vector<double> gate;
    for (bool gendered : p.gendered()) gate.push_back(gendered ? 0.0 : 1.0);
    gates.push_back(gate);
  }
  const double ce = oracle_ce(orig, caps, {}) + oracle_ce(masked, caps, gates);
  const double acl = oracle_acl(masked, caps, mb.f.sets);
  const double con = oracle_con(orig, caps, mb.f.sets, w.epsilon);
  EXPECT_NEAR(loss.components.ce, ce, 1e-12);
  EXPECT_NEAR(loss.components.acl, acl, 1e-12);
  EXPECT_NEAR(loss.components.con, con, 1e-12);
  EXPECT_NEAR(loss.components.total, 0.7 * ce + 3.0 * acl + 0.4 * con, 1e-12);
}

TEST(EqualizerLoss, DegenerateWeightsArePlainCrossEntropy) {
  ModelBatch mb(23, {"a woman with a pot", "a man next to a boy"});
  LossWeights w;
  w.beta = 0.0;
  w.mu = 0.0;
  Graph g;
  auto loss = equalizer_loss(g, mb.model, mb.batch, mb.f.index, w);
  EXPECT_FALSE(loss.components.masked_branch);

  Graph h;
  std::vector<CaptionTerm> terms;
  for (const auto& p : mb.batch) {
    auto enc = mb.model.encode(h, p.image());
    terms.push_back({mb.model.decode_teacher_forced(h, enc.feature, p.caption()), &p.caption(), {}});
  }
  NodeId ce = cross_entropy(h, terms);
  EXPECT_EQ(loss.components.total, h.value(ce)[0]);
  EXPECT_EQ(g.backward(loss.total, mb.model.params()), h.backward(ce, mb.model.params()));
}

TEST(EqualizerLoss, FullGradientMatchesFiniteDifferences) {
  std::uint64_t seed = 30;
  for (;; ++seed) {
    ModelBatch probe(seed, {"a woman with a pot", "a man next to a boy"});
    if (probe.kink_distance() > 1e-3) break;
  }
  ModelBatch mb(seed, {"a woman with a pot", "a man next to a boy"});
  LossWeights w;
  w.alpha = 1.0;
  w.beta = 10.0;
  w.mu = 1.0;
  w.lambda = 2.0;
  Graph g;
  auto grads = g.backward(equalizer_loss(g, mb.model, mb.batch, mb.f.index, w).total, mb.model.params());
  const auto config = mb.model.config();
  numerics::GradCheckOptions o;
  o.max_coords_per_tensor = 12;
  auto rep = numerics::finite_difference_check(
      [&](const numerics::ParameterStore& s) {
        captioner::Captioner m(config, s);
        Graph h(false);
        return h.value(equalizer_loss(h, m, mb.batch, mb.f.index, w).total)[0];
      },
      mb.model.params(), grads, o);
  EXPECT_GT(rep.checked, 100u);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_parameter << "[" << rep.worst_index << "]";
}

TEST(EqualizerLoss, Errors) {
  ModelBatch mb(24, {"a woman with a pot"});
  Graph g;
  LossWeights w;
  std::vector<TrainingPair> none;
  EXPECT_THROW(equalizer_loss(g, mb.model, none, mb.f.index, w), ContractError);
  w.alpha = w.beta = w.mu = 0.0;
  EXPECT_THROW(equalizer_loss(g, mb.model, mb.batch, mb.f.index, w), ContractError);
}

TEST(LossWeights, Validation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  EXPECT_EQ(w.alpha, 1.0);
  EXPECT_EQ(w.beta, 1.0);
  EXPECT_EQ(w.mu, 1.0);
  EXPECT_EQ(w.epsilon, 1e-6);
  auto bad = w;
  bad.beta = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = w;
  bad.epsilon = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = w;
  bad.lambda = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(UpWeight, Weights) {
  Fixture f;
  auto cap = f.caption("a man with a laptop");
  // targets: a man with a laptop EOS
  EXPECT_EQ(upweight_ce_weights(cap, f.index, 1.0), std::vector<double>(6, 1.0));
  EXPECT_EQ(upweight_ce_weights(cap, f.index, 5.0), (std::vector<double>{1, 5, 1, 1, 1, 1}));
}

TEST(TrainingPair, IndicatorAndMaskCheck) {
  Fixture f;
  corpus::BiasSpec spec;
  spec.count = 1;
  auto img = corpus::generate_synthetic(spec).images[0];
  auto cap = f.caption("a woman next to a man");
  TrainingPair pair(img.pixels, img.person_mask, cap, f.index);
  EXPECT_EQ(pair.gendered(), (std::vector<bool>{false, true, false, false, false, true, false}));
  EXPECT_EQ(pair.masked(), corpus::apply_mask(img.pixels, img.person_mask));
  EXPECT_NO_THROW(TrainingPair(img.pixels, pair.masked(), img.person_mask, cap, f.index));
  EXPECT_THROW(TrainingPair(img.pixels, img.pixels, img.person_mask, cap, f.index), ContractError);
}

TEST(Lexicon, DisjointAndResolved) {
  EXPECT_THROW(GenderLexicon({"woman"}, {"woman"}, {}), ContractError);
  EXPECT_THROW(GenderLexicon({"woman"}, {"man"}, {"man"}), ContractError);
  EXPECT_THROW(GenderIndex({2}, {2}, {}, 10), ContractError);
  EXPECT_THROW(GenderIndex({12}, {2}, {}, 10), ContractError);
  EXPECT_THROW(GenderIndex(corpus::default_lexicon(), Vocabulary({"a", "man"})), LookupError);
  Fixture f;
  EXPECT_EQ(f.index.classify(f.vocab.id("girl")), WordGender::Woman);
  EXPECT_EQ(f.index.classify(f.vocab.id("boy")), WordGender::Man);
  EXPECT_EQ(f.index.classify(f.vocab.id("person")), WordGender::Neutral);
  EXPECT_EQ(f.index.classify(f.vocab.id("pot")), WordGender::None);
}

TEST(Lexicon, FileRoundTripAndErrors) {
  auto dir = eqtest::scratch_dir("lexicon");
  auto lex = corpus::default_lexicon();
  lex.save(dir / "lexicon.txt");
  EXPECT_EQ(GenderLexicon::load(dir / "lexicon.txt"), lex);

  std::ofstream(dir / "comments.txt") << "# people\n[woman]\nwoman\n\n[man]\nman\n[neutral]\nperson\n";
  auto loaded = GenderLexicon::load(dir / "comments.txt");
  EXPECT_EQ(loaded.woman(), std::vector<std::string>{"woman"});
  EXPECT_EQ(loaded.neutral(), std::vector<std::string>{"person"});

  std::ofstream(dir / "bad.txt") << "[women]\nwoman\n";
  EXPECT_THROW(GenderLexicon::load(dir / "bad.txt"), ParseError);
  std::ofstream(dir / "orphan.txt") << "woman\n[man]\nman\n";
  EXPECT_THROW(GenderLexicon::load(dir / "orphan.txt"), ParseError);
  EXPECT_THROW(GenderLexicon::load(dir / "missing.txt"), FileError);
}

}  // namespace
