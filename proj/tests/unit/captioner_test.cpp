#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "equalizer/captioner/captioner.hpp"
#include "equalizer/corpus/mask.hpp"
#include "equalizer/corpus/synthetic.hpp"
#include "equalizer/error.hpp"
#include "equalizer/training/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace equalizer;
using namespace equalizer::captioner;
using eqtest::random_tensor;

ModelConfig config_for(const Vocabulary& v) {
  ModelConfig c;
  c.vocab_size = v.size();
  return c;
}

TEST(Vocabulary, ReservedAndDense) {
  Vocabulary v({"a", "man", "board"});
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.word(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.id("a"), 3u);
  EXPECT_EQ(v.id("board"), 5u);
  for (TokenId t = 0; t < v.size(); ++t) EXPECT_EQ(v.id(v.word(t)), t);
  EXPECT_THROW(v.id("laptop"), LookupError);
  EXPECT_THROW(Vocabulary({"a", "a"}), ContractError);
}

TEST(Vocabulary, EncodeDecode) {
  Vocabulary v({"a", "man", "with", "board"});
  auto seq = v.encode({"a", "man", "with", "a", "board"});
  EXPECT_EQ(seq.tokens.front(), Vocabulary::kBos);
  EXPECT_EQ(seq.tokens.back(), Vocabulary::kEos);
  EXPECT_EQ(seq.targets(), 6u);
  EXPECT_EQ(v.to_text(seq), "a man with a board");
  EXPECT_THROW(v.encode({"a", "pot"}), LookupError);
  EXPECT_NO_THROW(v.validate_reference(seq, 16));
  EXPECT_THROW(v.validate_reference(seq, 5), ContractError);
  EXPECT_THROW(v.validate_reference(CaptionSequence{{Vocabulary::kBos, 3}}, 16), ContractError);
  EXPECT_THROW(v.validate_reference(CaptionSequence{{Vocabulary::kBos, 40, Vocabulary::kEos}}, 16), LookupError);
}

TEST(Vocabulary, FileRoundTrip) {
  auto dir = eqtest::scratch_dir("vocab");
  auto v = eqtest::synthetic_vocab();
  v.save(dir / "vocab.txt");
  std::ifstream in(dir / "vocab.txt");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "a");
  EXPECT_EQ(Vocabulary::load(dir / "vocab.txt"), v);
  EXPECT_THROW(Vocabulary::load(dir / "missing.txt"), FileError);
}

TEST(Vocabulary, LexiconWordsResolve) {
  auto v = eqtest::synthetic_vocab();
  auto lex = corpus::default_lexicon();
  for (const auto* set : {&lex.woman(), &lex.man(), &lex.neutral()}) {
    for (const auto& w : *set) EXPECT_TRUE(v.find(w).has_value()) << w;
  }
}

TEST(Encoder, ZeroImageZeroBiasesGiveZeroFeature) {
  auto v = eqtest::synthetic_vocab();
  auto model = Captioner::initialize(config_for(v), 3);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    if (model.params().name(i).find("bias") != std::string::npos) model.params().value(i).fill(0.0);
  }
  auto r = encode_image(Tensor({3, 32, 32}), model);
  EXPECT_EQ(r.feature, Tensor({32}));
}

TEST(Encoder, DeterministicAndShapes) {
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 4);
  std::mt19937_64 rng(1);
  auto img = random_tensor({3, 32, 32}, rng, 0, 1);
  auto a = encode_image(img, model), b = encode_image(img, model);
  EXPECT_EQ(a.feature, b.feature);
  EXPECT_EQ(a.feature.shape(), (numerics::Shape{32}));
  EXPECT_EQ(a.conv_activations.shape(), (numerics::Shape{16, 7, 7}));
  EXPECT_THROW(encode_image(Tensor({3, 16, 16}), model), DimensionError);
  EXPECT_THROW(encode_image(Tensor({1, 32, 32}), model), DimensionError);
}

TEST(Encoder, MaskedImageChangesFeature) {
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 5);
  corpus::BiasSpec spec;
  spec.count = 12;
  auto ds = corpus::generate_synthetic(spec);
  for (const auto& img : ds.images) {
    auto masked = corpus::apply_mask(img.pixels, img.person_mask);
    ASSERT_NE(masked, img.pixels);
    EXPECT_NE(encode_image(masked, model).feature, encode_image(img.pixels, model).feature);
  }
}

TEST(Encoder, MaskedImageTwoConstructionsAgree) {
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 6);
  corpus::BiasSpec spec;
  spec.count = 4;
  auto ds = corpus::generate_synthetic(spec);
  std::mt19937_64 rng(2);
  for (const auto& img : ds.images) {
    // overwrite person pixels with noise, then zero them by hand
    Tensor noisy = img.pixels, by_hand = img.pixels;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < 32; ++y) {
        for (std::size_t x = 0; x < 32; ++x) {
          if (img.person_mask.at(0, y, x) == 0.0) {
            noisy.at(c, y, x) = std::uniform_real_distribution<double>(0, 1)(rng);
            by_hand.at(c, y, x) = 0.0;
          }
        }
      }
    }
    auto a = encode_image(corpus::apply_mask(img.pixels, img.person_mask), model).feature;
    EXPECT_EQ(a, encode_image(corpus::apply_mask(noisy, img.person_mask), model).feature);
    EXPECT_EQ(a, encode_image(by_hand, model).feature);
  }
}

TEST(Decoder, ZeroParamsAreUniform) {
  auto v = eqtest::synthetic_vocab();
  auto model = Captioner::zeros(config_for(v));
  auto seq = v.encode({"a", "woman", "with", "a", "pot"});
  auto d = teacher_forced_distributions(Tensor({3, 32, 32}, 0.5), seq, model);
  ASSERT_EQ(d.shape(), (numerics::Shape{seq.targets(), v.size()}));
  for (double p : d.data()) EXPECT_NEAR(p, 1.0 / v.size(), 1e-15);
}

TEST(Decoder, DeterministicAndOnSimplex) {
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 7);
  std::mt19937_64 rng(3);
  auto img = random_tensor({3, 32, 32}, rng, 0, 1);
  auto seq = v.encode({"a", "man", "holding", "a", "racket"});
  auto d1 = teacher_forced_distributions(img, seq, model);
  EXPECT_EQ(d1, teacher_forced_distributions(img, seq, model));
  for (std::size_t t = 0; t < d1.extent(0); ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < d1.extent(1); ++k) {
      EXPECT_GT(d1.at(t, k), 0.0);
      s += d1.at(t, k);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(teacher_forced_distributions(img, CaptionSequence{{1, 99, 2}}, model), LookupError);
}

TEST(Decoder, PrefixConditioning) {
  // row k depends only on tokens[0..k]
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 8);
  std::mt19937_64 rng(4);
  auto img = random_tensor({3, 32, 32}, rng, 0, 1);
  auto a = teacher_forced_distributions(img, v.encode({"a", "man", "with", "a", "board"}), model);
  auto b = teacher_forced_distributions(img, v.encode({"a", "man", "next", "to", "pot"}), model);
  for (std::size_t k = 0; k < v.size(); ++k) {
    EXPECT_EQ(a.at(0, k), b.at(0, k));
    EXPECT_EQ(a.at(2, k), b.at(2, k));
    EXPECT_NE(a.at(3, k), b.at(3, k));
  }
}

TEST(Greedy, TruncationAndDeterminism) {
  auto v = eqtest::synthetic_vocab();
  auto model = eqtest::small_model(v.size(), 9);
  std::mt19937_64 rng(5);
  auto img = random_tensor({3, 32, 32}, rng, 0, 1);
  auto two = caption_greedy(img, model, 2);
  ASSERT_EQ(two.tokens.size(), 2u);
  EXPECT_EQ(two.tokens[0], Vocabulary::kBos);
  auto full = caption_greedy(img, model, 16);
  EXPECT_EQ(full, caption_greedy(img, model, 16));
  EXPECT_LE(full.tokens.size(), 16u);
  for (std::size_t i = 1; i < full.tokens.size(); ++i) {
    EXPECT_NE(full.tokens[i], Vocabulary::kPad);
    EXPECT_NE(full.tokens[i], Vocabulary::kBos);
  }
  EXPECT_THROW(caption_greedy(img, model, 1), ContractError);
}

TEST(Greedy, TiesGoToLowestIndex) {
  // zero parameters: every word ties, EOS (index 2) is the lowest emittable
  auto v = eqtest::synthetic_vocab();
  auto model = Captioner::zeros(config_for(v));
  auto seq = caption_greedy(Tensor({3, 32, 32}), model, 16);
  EXPECT_EQ(seq.tokens, (std::vector<TokenId>{Vocabulary::kBos, Vocabulary::kEos}));
}

TEST(Captioner, OverfitsOneExample) {
  auto v = eqtest::synthetic_vocab();
  auto lex = losses::GenderIndex(corpus::default_lexicon(), v);
  corpus::BiasSpec spec;
  spec.count = 1;
  auto ds = corpus::generate_synthetic(spec);
  auto seq = v.encode({"a", "woman", "holding", "a", "laptop"});
  const losses::TrainingPair batch[] = {{ds.images[0].pixels, ds.images[0].person_mask, seq, lex}};

  auto model = Captioner::initialize(training::model_config(v, 16), 11);
  auto cfg = training::TrainConfig::defaults(training::Variant::BaselineFT);
  cfg.lr = 1e-2;
  auto state = training::OptimizerState::for_parameters(model.params());
  for (int step = 0; step < 500; ++step) training::train_step(model, batch, lex, cfg, state);

  auto d = teacher_forced_distributions(ds.images[0].pixels, seq, model);
  for (std::size_t t = 0; t < seq.targets(); ++t) EXPECT_GT(d.at(t, seq.tokens[t + 1]), 0.9) << "step " << t;
  EXPECT_EQ(caption_greedy(ds.images[0].pixels, model, 16), seq);
}

TEST(Captioner, RejectsBadParameters) {
  auto v = eqtest::synthetic_vocab();
  auto model = Captioner::initialize(config_for(v), 1);
  auto params = model.params();
  params["decoder.out.bias"] = Tensor({5});
  EXPECT_THROW(Captioner(config_for(v), params), DimensionError);
  EXPECT_EQ(ModelConfig::from_parameters(model.params()).vocab_size, v.size());
}

}  // namespace
