#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "equalizer/corpus/synthetic.hpp"
#include "equalizer/error.hpp"
#include "equalizer/evaluation/evaluate.hpp"
#include "equalizer/numerics/checkpoint.hpp"
#include "equalizer/training/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace equalizer;
using namespace equalizer::training;

struct Small {
  captioner::Vocabulary vocab = eqtest::synthetic_vocab();
  losses::GenderLexicon lexicon = corpus::default_lexicon();
  losses::GenderIndex index{lexicon, vocab};
  corpus::Dataset data;

  explicit Small(std::size_t n = 160) {
    corpus::BiasSpec spec;
    spec.count = n;
    data = corpus::generate_synthetic(spec);
  }

  std::vector<losses::TrainingPair> batch(std::size_t n) const {
    std::vector<losses::TrainingPair> out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& img = data.images[i];
      out.emplace_back(img.pixels, img.person_mask, vocab.encode(img.captions[i % 5]), index);
    }
    return out;
  }
};

TrainConfig quick(Variant v, std::size_t epochs = 2) {
  auto c = TrainConfig::defaults(v);
  c.epochs = epochs;
  c.workers = 1;
  return c;
}

TEST(Config, DefaultsPerVariant) {
  EXPECT_EQ(default_weights(Variant::Equalizer), losses::LossWeights{});
  EXPECT_EQ(default_weights(Variant::BaselineFT).beta, 0.0);
  EXPECT_EQ(default_weights(Variant::BaselineFT).mu, 0.0);
  EXPECT_EQ(default_weights(Variant::UpWeight).lambda, 10.0);
  EXPECT_EQ(default_weights(Variant::EqualizerNoACL).beta, 0.0);
  EXPECT_EQ(default_weights(Variant::EqualizerNoACL).mu, 1.0);
  EXPECT_EQ(default_weights(Variant::EqualizerNoConf).mu, 0.0);
  auto c = TrainConfig::defaults(Variant::Equalizer);
  EXPECT_EQ(c.lr, 1e-3);
  EXPECT_EQ(c.batch, 16u);
  EXPECT_EQ(c.epochs, 60u);
  for (auto v : kAllVariants) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_NO_THROW(TrainConfig::defaults(v).validate());
  }
}

TEST(Config, ParseAndRoundTrip) {
  auto c = TrainConfig::parse(
      "# equalizer run\nvariant=equalizer\nalpha=1\nbeta=10\nmu=1\nlambda=1\nlr=0.001\nepochs=30\nbatch=16\nseed=7\n");
  EXPECT_EQ(c.variant, Variant::Equalizer);
  EXPECT_EQ(c.weights.beta, 10.0);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(TrainConfig::parse(c.to_text()), c);
  auto up = TrainConfig::parse("variant=upweight\nseed=3\n");
  EXPECT_EQ(up.weights.lambda, 10.0);
}

TEST(Config, ShippedConfigsMatchDefaults) {
  const std::filesystem::path dir = std::filesystem::path(EQUALIZER_SOURCE_DIR) / "configs";
  for (auto v : kAllVariants) {
    auto c = TrainConfig::load(dir / (std::string(to_string(v)) + ".cfg"));
    EXPECT_EQ(c, TrainConfig::defaults(v)) << to_string(v);
  }
}

TEST(Config, VariantConstraintsRejected) {
  auto expect_reject = [](const std::string& text, const std::string& needle) {
    try {
      TrainConfig::parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_reject("variant=baseline-ft\nbeta=1\n", "beta=0");
  expect_reject("variant=balanced\nlambda=2\n", "lambda=1");
  expect_reject("variant=upweight\nlambda=1\n", "lambda>1");
  expect_reject("variant=equalizer-no-acl\nbeta=10\n", "beta=0");
  expect_reject("variant=equalizer-no-conf\nmu=1\n", "mu=0");
  expect_reject("variant=nonsense\n", "unknown variant");
  expect_reject("beta=1\n", "variant");
  expect_reject("variant=equalizer\nbeta=-1\n", "nonnegative");
  expect_reject("variant=equalizer\nepochs=x\n", "epochs");
  expect_reject("variant=equalizer\ncolour=blue\n", "colour");
  expect_reject("variant=equalizer\nseed=1\nseed=2\n", "duplicate");
}

TEST(Adam, FirstStepMovesByLearningRate) {
  numerics::ParameterStore p;
  p.add("w", numerics::Tensor::vector({1.0, -2.0, 0.5}));
  auto state = OptimizerState::for_parameters(p);
  numerics::Gradients g{numerics::Tensor::vector({0.3, -4.0, 0.0})};
  adam_update(p, g, state, AdamSettings{0.01});
  // bias-corrected first step is lr * sign(g)
  EXPECT_NEAR(p["w"][0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p["w"][1], -2.0 + 0.01, 1e-9);
  EXPECT_EQ(p["w"][2], 0.5);
  EXPECT_EQ(state.step, 1u);
}

TEST(TrainStep, RepeatedBatchDecreasesLoss) {
  Small s;
  auto batch = s.batch(4);
  auto model = captioner::Captioner::initialize(model_config(s.vocab, 16), 5);
  auto cfg = TrainConfig::defaults(Variant::Equalizer);
  auto state = OptimizerState::for_parameters(model.params());
  std::vector<double> totals;
  for (int step = 0; step < 200; ++step) totals.push_back(train_step(model, batch, s.index, cfg, state).total);
  auto avg = [&](std::size_t end) { return std::accumulate(totals.begin() + end - 10, totals.begin() + end, 0.0) / 10; };
  for (std::size_t end = 20; end <= totals.size(); end += 10) EXPECT_LT(avg(end), avg(end - 10)) << "at step " << end;
}

TEST(TrainStep, DegenerateWeightsEqualPureCrossEntropyStep) {
  Small s;
  auto batch = s.batch(3);
  auto cfg = TrainConfig::defaults(Variant::BaselineFT);
  auto a = captioner::Captioner::initialize(model_config(s.vocab, 16), 6);
  auto b = a;
  auto sa = OptimizerState::for_parameters(a.params()), sb = sa;
  train_step(a, batch, s.index, cfg, sa);

  numerics::Graph g;
  std::vector<losses::CaptionTerm> terms;
  for (const auto& pair : batch) {
    auto enc = b.encode(g, pair.image());
    terms.push_back({b.decode_teacher_forced(g, enc.feature, pair.caption()), &pair.caption(), {}});
  }
  auto grads = g.backward(losses::cross_entropy(g, terms), b.params());
  adam_update(b.params(), grads, sb, AdamSettings{cfg.lr});
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(sa, sb);
}

TEST(TrainStep, SameSeedSameTrajectory) {
  Small s;
  auto batch = s.batch(4);
  auto cfg = TrainConfig::defaults(Variant::Equalizer);
  auto run = [&] {
    auto m = captioner::Captioner::initialize(model_config(s.vocab, 16), 9);
    auto st = OptimizerState::for_parameters(m.params());
    std::vector<numerics::ParameterStore> traj;
    for (int i = 0; i < 5; ++i) {
      train_step(m, batch, s.index, cfg, st);
      traj.push_back(m.params());
    }
    return traj;
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainStep, EmptyBatchRejected) {
  Small s(20);
  auto model = captioner::Captioner::initialize(model_config(s.vocab, 16), 1);
  auto st = OptimizerState::for_parameters(model.params());
  std::vector<losses::TrainingPair> none;
  EXPECT_THROW(train_step(model, none, s.index, TrainConfig{}, st), ContractError);
}

TEST(BalancedSampler, EqualisesImbalancedCorpus) {
  corpus::BiasSpec spec;
  spec.count = 900;
  auto ds = corpus::generate_synthetic(spec);
  std::vector<corpus::GenderLabel> labels;
  for (const auto& img : ds.images) labels.push_back(img.label);
  BalancedSampler sampler(labels, 3);
  std::size_t female = 0;
  for (int i = 0; i < 5000; ++i) {
    auto k = sampler.next();
    ASSERT_TRUE(labels[k] == corpus::GenderLabel::Female || labels[k] == corpus::GenderLabel::Male);
    female += labels[k] == corpus::GenderLabel::Female;
  }
  EXPECT_NEAR(female / 5000.0, 0.5, 0.02);
}

TEST(BalancedSampler, UniformOnBalancedCorpus) {
  using corpus::GenderLabel;
  std::vector<GenderLabel> labels;
  for (int i = 0; i < 5; ++i) {
    labels.push_back(GenderLabel::Female);
    labels.push_back(GenderLabel::Male);
  }
  BalancedSampler sampler(labels, 4);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 5000; ++i) counts[sampler.next()]++;
  ASSERT_EQ(counts.size(), 10u);
  for (auto [k, n] : counts) EXPECT_NEAR(n / 5000.0, 0.1, 0.02) << "index " << k;
}

TEST(BalancedSampler, DeterministicAndNeedsBothClasses) {
  using corpus::GenderLabel;
  std::vector<GenderLabel> labels = {GenderLabel::Male, GenderLabel::Female, GenderLabel::Neutral, GenderLabel::Male};
  BalancedSampler a(labels, 5), b(labels, 5);
  for (int i = 0; i < 100; ++i) {
    auto k = a.next();
    EXPECT_EQ(k, b.next());
    EXPECT_NE(k, 2u);
  }
  std::vector<GenderLabel> one = {GenderLabel::Male, GenderLabel::Male};
  EXPECT_THROW(BalancedSampler(one, 1), CapacityError);
}

TEST(Train, LogsAndSelection) {
  Small s;
  std::ostringstream log;
  auto r = train(s.data, s.vocab, s.index, quick(Variant::Equalizer, 3), &log);
  ASSERT_EQ(r.log.size(), 3u);
  int best = 0;
  for (const auto& e : r.log) best += e.best;
  EXPECT_GE(best, 1);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_EQ(r.log[r.best_epoch - 1].val_error, r.best_val_error);
  std::string first;
  std::istringstream lines(log.str());
  std::getline(lines, first);
  EXPECT_EQ(first, r.log[0].to_line());
  EXPECT_NE(first.find("acl="), std::string::npos);
  EXPECT_NE(first.find("val_error="), std::string::npos);
  EXPECT_GT(r.log[0].mean.acl, 0.0);
}

TEST(Train, BaselineAliasesNoAclWithoutConfidence) {
  Small s;
  auto base = quick(Variant::BaselineFT);
  auto alias = quick(Variant::EqualizerNoACL);
  alias.weights.mu = 0.0;
  auto a = train(s.data, s.vocab, s.index, base);
  auto b = train(s.data, s.vocab, s.index, alias);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_line(), b.log[i].to_line());
  EXPECT_EQ(a.model, b.model);
}

TEST(Train, ReproducibleAndCheckpointRoundTrip) {
  Small s;
  auto cfg = quick(Variant::Equalizer);
  auto a = train(s.data, s.vocab, s.index, cfg);
  auto b = train(s.data, s.vocab, s.index, cfg);
  EXPECT_EQ(a.model, b.model);

  auto dir = eqtest::scratch_dir("train_ckpt");
  numerics::save_checkpoint(a.model.params(), dir / "checkpoint.bin");
  auto params = numerics::load_checkpoint(dir / "checkpoint.bin");
  captioner::Captioner loaded(a.model.config(), params);
  EXPECT_EQ(loaded, a.model);
  auto val = corpus::build_bias_split(s.data.split(corpus::Split::Val));
  auto ra = evaluation::evaluate(a.model, val, s.vocab, s.index);
  auto rb = evaluation::evaluate(loaded, val, s.vocab, s.index);
  EXPECT_EQ(ra.error_rate, rb.error_rate);
  EXPECT_EQ(ra.pointing_hits, rb.pointing_hits);
  EXPECT_EQ(ra.neutral_rate, rb.neutral_rate);
}

TEST(Train, EmptySplitsRejected) {
  Small s(40);
  auto no_val = s.data;
  std::erase_if(no_val.images, [](const auto& img) { return img.split == corpus::Split::Val; });
  EXPECT_THROW(train(no_val, s.vocab, s.index, quick(Variant::BaselineFT, 1)), ContractError);
  auto no_train = s.data;
  std::erase_if(no_train.images, [](const auto& img) { return img.split == corpus::Split::Train; });
  EXPECT_THROW(train(no_train, s.vocab, s.index, quick(Variant::BaselineFT, 1)), ContractError);
}

}  // namespace
