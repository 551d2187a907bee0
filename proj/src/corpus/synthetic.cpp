#include "equalizer/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "equalizer/error.hpp"

namespace equalizer::corpus {

namespace {

constexpr std::size_t S = kImageSize;
constexpr std::size_t kHalf = S / 2;

constexpr std::size_t kHeadSize = 4;
constexpr std::size_t kBodyWidth = 6;
constexpr std::size_t kBodyHeight = 10;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

using Rgb = std::array<double, 3>;

struct Canvas {
  Tensor pixels{{kImageChannels, S, S}};
  Tensor mask{{1, S, S}, 1.0};

  void put(std::size_t y, std::size_t x, const Rgb& c) {
    for (std::size_t ch = 0; ch < 3; ++ch) pixels.at(ch, y, x) = c[ch];
  }
  void rect(std::size_t y, std::size_t x, std::size_t h, std::size_t w, const Rgb& c, bool person = false) {
    for (std::size_t yy = y; yy < y + h; ++yy) {
      for (std::size_t xx = x; xx < x + w; ++xx) {
        put(yy, xx, c);
        if (person) mask.at(0, yy, xx) = 0.0;
      }
    }
  }
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct SpriteSize {
  std::size_t h, w;
};

SpriteSize object_size(ContextObject o) {
  switch (o) {
    case ContextObject::Board: return {3, 12};
    case ContextObject::Laptop: return {7, 10};
    case ContextObject::Racket: return {11, 7};
    case ContextObject::Pot: return {6, 10};
  }
  return {1, 1};
}

void draw_object(Canvas& c, ContextObject o, std::size_t y, std::size_t x) {
  switch (o) {
    case ContextObject::Board:
      c.rect(y, x, 3, 12, {0.55, 0.35, 0.15});
      c.rect(y + 1, x + 1, 1, 10, {0.85, 0.75, 0.35});
      break;
    case ContextObject::Laptop:
      c.rect(y, x, 7, 10, {0.62, 0.62, 0.62});
      c.rect(y + 1, x + 1, 4, 8, {0.08, 0.15, 0.40});
      break;
    case ContextObject::Racket:
      c.rect(y, x, 7, 7, {0.20, 0.75, 0.30});
      c.rect(y + 2, x + 2, 3, 3, {0.92, 0.92, 0.80});
      c.rect(y + 7, x + 3, 4, 1, {0.30, 0.20, 0.10});
      break;
    case ContextObject::Pot:
      c.rect(y + 1, x + 1, 5, 8, {0.80, 0.15, 0.10});
      c.rect(y, x + 1, 1, 8, {0.25, 0.25, 0.25});
      c.rect(y + 2, x, 1, 1, {0.25, 0.25, 0.25});
      c.rect(y + 2, x + 9, 1, 1, {0.25, 0.25, 0.25});
      break;
  }
}

constexpr std::array<const char*, 3> kTemplates = {"with", "holding", "next to"};

}  // namespace

void BiasSpec::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ContractError("rho must lie in [0, 1]");
  if (!(pi_woman > 0.0 && pi_woman < 1.0)) throw ContractError("pi_woman must lie in (0, 1)");
  if (count == 0 || count > (1u << 24)) throw ContractError("corpus size must be in [1, 2^24]");
  if (!(neutral_rate >= 0.0 && neutral_rate <= 1.0)) throw ContractError("neutral rate must lie in [0, 1]");
  if (!(train_fraction > 0.0 && val_fraction > 0.0 && train_fraction + val_fraction < 1.0)) {
    throw ContractError("split fractions must be positive and leave room for a test split");
  }
}

GenderLexicon default_lexicon() { return GenderLexicon({"woman", "girl"}, {"man", "boy"}, {"person"}); }

std::vector<std::string> synthetic_words() {
  return {"a", "with", "holding", "next", "to", "woman", "girl", "man", "boy", "person",
          "board", "laptop", "racket", "pot"};
}

Split assign_split(std::uint32_t id, const BiasSpec& spec) {
  const std::uint64_t h = splitmix64(splitmix64(spec.seed ^ 0x5EED5EED5EEDull) ^ id);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < spec.train_fraction) return Split::Train;
  if (u < spec.train_fraction + spec.val_fraction) return Split::Val;
  return Split::Test;
}

CaptionedImage generate_scene(std::uint32_t id, const BiasSpec& spec, const SceneStyle& style,
                              const GenderLexicon& lexicon) {
  std::mt19937_64 rng(splitmix64(spec.seed * 0x100000001B3ull + id));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  CaptionedImage img;
  img.id = id;
  img.split = assign_split(id, spec);
  img.appearance = unit(rng) < spec.pi_woman ? Appearance::Female : Appearance::Male;
  const bool female = img.appearance == Appearance::Female;
  const bool stereotyped = unit(rng) < spec.rho;
  const bool male_object = female != stereotyped;
  const std::size_t pick = uniform_int(0, 1);
  img.object = male_object ? (pick ? ContextObject::Laptop : ContextObject::Board)
                           : (pick ? ContextObject::Pot : ContextObject::Racket);

  Canvas canvas;
  Rgb top, bottom;
  for (auto& v : top) v = style.background_low + style.background_range * unit(rng);
  for (auto& v : bottom) v = style.background_low + style.background_range * unit(rng);
  for (std::size_t y = 0; y < S; ++y) {
    const double t = static_cast<double>(y) / (S - 1);
    for (std::size_t x = 0; x < S; ++x) {
      Rgb c;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double noise = style.background_noise * (2.0 * unit(rng) - 1.0);
        c[ch] = clamp01(top[ch] * (1 - t) + bottom[ch] * t + noise);
      }
      canvas.put(y, x, c);
    }
  }

  const bool person_left = unit(rng) < 0.5;
  const std::size_t person_half = person_left ? 0 : kHalf;
  const std::size_t object_half = person_left ? kHalf : 0;

  // person: head centred over a body rectangle
  const std::size_t px = person_half + uniform_int(1, kHalf - kBodyWidth - 1);
  const std::size_t py = uniform_int(2, S - kHeadSize - kBodyHeight - 2);
  Rgb body;
  for (auto& v : body) v = 0.1 + 0.8 * unit(rng);
  const Rgb skin_mean{0.72, 0.52, 0.66};
  const Rgb axis{0.14, 0.0, -0.14};
  const double side = female ? 1.0 : -1.0;
  Rgb head;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const double jitter = style.head_jitter * (2.0 * unit(rng) - 1.0);
    head[ch] = clamp01(skin_mean[ch] + side * style.appearance_contrast * axis[ch] + jitter);
  }
  canvas.rect(py + kHeadSize, px, kBodyHeight, kBodyWidth, body, true);
  canvas.rect(py, px + (kBodyWidth - kHeadSize) / 2, kHeadSize, kHeadSize, head, true);

  const auto size = object_size(img.object);
  const std::size_t ox = object_half + uniform_int(1, kHalf - size.w - 1);
  const std::size_t oy = uniform_int(2, S - size.h - 2);
  draw_object(canvas, img.object, oy, ox);

  // pixels are stored as 32-bit floats on disk
  for (auto& v : canvas.pixels.data()) v = static_cast<double>(static_cast<float>(v));
  img.pixels = std::move(canvas.pixels);
  img.person_mask = std::move(canvas.mask);

  const auto& words = female ? lexicon.woman() : lexicon.man();
  for (auto& caption : img.captions) {
    std::string person;
    if (unit(rng) < spec.neutral_rate) {
      person = lexicon.neutral().front();
    } else {
      const bool synonym = words.size() > 1 && unit(rng) < style.synonym_rate;
      person = words[synonym ? 1 : 0];
    }
    const char* relation = kTemplates[uniform_int(0, kTemplates.size() - 1)];
    caption = {"a", person};
    std::string rel(relation);
    for (std::size_t start = 0; start < rel.size();) {
      const auto end = std::min(rel.find(' ', start), rel.size());
      caption.push_back(rel.substr(start, end - start));
      start = end + 1;
    }
    caption.push_back("a");
    caption.emplace_back(object_word(img.object));
  }
  img.label = label_image_gender(img.captions, lexicon);
  return img;
}

Dataset generate_synthetic(const BiasSpec& spec, const SceneStyle& style) {
  spec.validate();
  const auto lexicon = default_lexicon();
  Dataset d;
  d.images.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    d.images.push_back(generate_scene(static_cast<std::uint32_t>(i), spec, style, lexicon));
  }
  return d;
}

CorpusStatistics corpus_statistics(const Dataset& dataset) {
  CorpusStatistics s;
  std::size_t women = 0, stereotyped = 0;
  for (const auto& img : dataset.images) {
    ++s.count;
    switch (img.split) {
      case Split::Train: ++s.train; break;
      case Split::Val: ++s.val; break;
      case Split::Test: ++s.test; break;
    }
    switch (img.label) {
      case GenderLabel::Female: ++s.female; break;
      case GenderLabel::Male: ++s.male; break;
      case GenderLabel::Neutral: ++s.neutral; break;
      case GenderLabel::Excluded: ++s.excluded; break;
    }
    const bool female = img.appearance == Appearance::Female;
    women += female;
    stereotyped += (female != is_male_stereotyped(img.object));
  }
  if (s.count) {
    s.woman_prior = static_cast<double>(women) / s.count;
    s.object_gender_correlation = static_cast<double>(stereotyped) / s.count;
  }
  return s;
}

}  // namespace equalizer::corpus
