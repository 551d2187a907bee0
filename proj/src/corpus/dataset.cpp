#include "equalizer/corpus/dataset.hpp"

#include <algorithm>
#include <random>

#include "equalizer/error.hpp"

namespace equalizer::corpus {

using losses::WordGender;

namespace {

template <class E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<E, N>& values) {
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(GenderLabel v) {
  switch (v) {
    case GenderLabel::Male: return "male";
    case GenderLabel::Female: return "female";
    case GenderLabel::Neutral: return "neutral";
    case GenderLabel::Excluded: return "excluded";
  }
  return "?";
}

std::string_view to_string(Split v) {
  switch (v) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::string_view to_string(Appearance v) { return v == Appearance::Male ? "male" : "female"; }

std::string_view to_string(ContextObject v) { return object_word(v); }

std::optional<GenderLabel> parse_label(std::string_view s) {
  return parse_enum(s, std::array{GenderLabel::Male, GenderLabel::Female, GenderLabel::Neutral, GenderLabel::Excluded});
}
std::optional<Split> parse_split(std::string_view s) {
  return parse_enum(s, std::array{Split::Train, Split::Val, Split::Test});
}
std::optional<Appearance> parse_appearance(std::string_view s) {
  return parse_enum(s, std::array{Appearance::Male, Appearance::Female});
}
std::optional<ContextObject> parse_object(std::string_view s) {
  return parse_enum(s, std::array{ContextObject::Board, ContextObject::Laptop, ContextObject::Racket,
                                  ContextObject::Pot});
}

std::string_view object_word(ContextObject v) {
  switch (v) {
    case ContextObject::Board: return "board";
    case ContextObject::Laptop: return "laptop";
    case ContextObject::Racket: return "racket";
    case ContextObject::Pot: return "pot";
  }
  return "?";
}

bool is_male_stereotyped(ContextObject v) { return v == ContextObject::Board || v == ContextObject::Laptop; }

std::vector<const CaptionedImage*> Dataset::split(Split s) const {
  std::vector<const CaptionedImage*> out;
  for (const auto& img : images) {
    if (img.split == s) out.push_back(&img);
  }
  return out;
}

const CaptionedImage* Dataset::find(std::uint32_t id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

GenderLabel label_image_gender(std::span<const Caption> captions, const GenderLexicon& lexicon) {
  bool woman = false, man = false;
  for (const auto& caption : captions) {
    for (const auto& w : caption) {
      const auto g = lexicon.classify(w);
      woman = woman || g == WordGender::Woman;
      man = man || g == WordGender::Man;
    }
  }
  if (woman && man) return GenderLabel::Excluded;
  if (man) return GenderLabel::Male;
  if (woman) return GenderLabel::Female;
  return GenderLabel::Neutral;
}

bool caption_has_gender_word(const Caption& caption, const GenderLexicon& lexicon) {
  return std::any_of(caption.begin(), caption.end(), [&](const std::string& w) {
    const auto g = lexicon.classify(w);
    return g == WordGender::Woman || g == WordGender::Man;
  });
}

std::vector<const CaptionedImage*> build_bias_split(std::span<const CaptionedImage* const> images) {
  std::vector<const CaptionedImage*> out;
  for (const auto* img : images) {
    if (img->label == GenderLabel::Male || img->label == GenderLabel::Female) out.push_back(img);
  }
  return out;
}

std::vector<const CaptionedImage*> build_confident_split(std::span<const CaptionedImage* const> images,
                                                         const GenderLexicon& lexicon) {
  std::vector<const CaptionedImage*> out;
  for (const auto* img : images) {
    if (img->label != GenderLabel::Male && img->label != GenderLabel::Female) continue;
    const auto gendered = std::count_if(img->captions.begin(), img->captions.end(),
                                        [&](const Caption& c) { return caption_has_gender_word(c, lexicon); });
    if (gendered >= 4) out.push_back(img);
  }
  return out;
}

std::vector<const CaptionedImage*> build_balanced_split(std::span<const CaptionedImage* const> confident,
                                                        std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> female, male;
  for (std::size_t i = 0; i < confident.size(); ++i) {
    if (confident[i]->label == GenderLabel::Female) female.push_back(i);
    if (confident[i]->label == GenderLabel::Male) male.push_back(i);
  }
  if (female.size() < per_class || male.size() < per_class) {
    throw CapacityError("balanced split needs " + std::to_string(per_class) + " images per class, have " +
                        std::to_string(female.size()) + " female and " + std::to_string(male.size()) + " male");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto* pool : {&female, &male}) {
    // partial Fisher-Yates: the first per_class entries become the sample
    for (std::size_t i = 0; i < per_class; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool->size() - 1);
      std::swap((*pool)[i], (*pool)[pick(rng)]);
      chosen.push_back((*pool)[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<const CaptionedImage*> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(confident[i]);
  return out;
}

}  // namespace equalizer::corpus
