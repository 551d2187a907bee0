#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equalizer/losses/lexicon.hpp"
#include "equalizer/numerics/tensor.hpp"

namespace equalizer::corpus {

using losses::GenderLexicon;
using numerics::Tensor;

inline constexpr std::size_t kCaptionsPerImage = 5;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kImageSize = 32;

enum class GenderLabel { Male, Female, Neutral, Excluded };
enum class Split { Train, Val, Test };
/// Gender appearance rendered for the person sprite.
enum class Appearance { Male, Female };
enum class ContextObject { Board, Laptop, Racket, Pot };

std::string_view to_string(GenderLabel v);
std::string_view to_string(Split v);
std::string_view to_string(Appearance v);
std::string_view to_string(ContextObject v);
std::optional<GenderLabel> parse_label(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<Appearance> parse_appearance(std::string_view s);
std::optional<ContextObject> parse_object(std::string_view s);

/// Words the object is captioned with.
std::string_view object_word(ContextObject v);
/// Objects whose stereotyped co-occurrence is with the male appearance.
bool is_male_stereotyped(ContextObject v);

using Caption = std::vector<std::string>;

struct CaptionedImage {
  std::uint32_t id = 0;
  Split split = Split::Train;
  /// [3 x 32 x 32], values in [0, 1].
  Tensor pixels;
  /// [1 x 32 x 32]; 0 on person pixels, 1 elsewhere.
  Tensor person_mask;
  std::array<Caption, kCaptionsPerImage> captions;
  GenderLabel label = GenderLabel::Neutral;
  Appearance appearance = Appearance::Male;
  ContextObject object = ContextObject::Board;

  friend bool operator==(const CaptionedImage&, const CaptionedImage&) = default;
};

struct Dataset {
  std::vector<CaptionedImage> images;

  std::vector<const CaptionedImage*> split(Split s) const;
  const CaptionedImage* find(std::uint32_t id) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Male if some caption has a man word and none a woman word; Female
/// symmetrically; Excluded if both genders appear; Neutral if neither.
GenderLabel label_image_gender(std::span<const Caption> captions, const GenderLexicon& lexicon);

bool caption_has_gender_word(const Caption& caption, const GenderLexicon& lexicon);

/// Images labelled Male or Female.
std::vector<const CaptionedImage*> build_bias_split(std::span<const CaptionedImage* const> images);

/// Images labelled Male or Female whose captions include a gendered word in
/// at least four of five annotations.
std::vector<const CaptionedImage*> build_confident_split(std::span<const CaptionedImage* const> images,
                                                         const GenderLexicon& lexicon);

/// Exactly `per_class` Female and `per_class` Male images drawn without
/// replacement with a seeded RNG; output keeps input order. Throws
/// CapacityError when a class is short.
std::vector<const CaptionedImage*> build_balanced_split(std::span<const CaptionedImage* const> confident,
                                                        std::size_t per_class, std::uint64_t seed);

}  // namespace equalizer::corpus
