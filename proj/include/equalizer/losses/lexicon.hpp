#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equalizer/captioner/vocabulary.hpp"

namespace equalizer::losses {

using captioner::TokenId;

enum class WordGender { Woman, Man, Neutral, None };

/// Woman words, man words and gender-neutral person words. The three sets
/// are pairwise disjoint.
///
/// File format: sections headed `[woman]`, `[man]`, `[neutral]`, one word
/// per line; blank lines and lines starting with '#' are ignored.
class GenderLexicon {
 public:
  GenderLexicon(std::vector<std::string> woman, std::vector<std::string> man, std::vector<std::string> neutral);

  WordGender classify(std::string_view word) const;
  const std::vector<std::string>& woman() const noexcept { return woman_; }
  const std::vector<std::string>& man() const noexcept { return man_; }
  const std::vector<std::string>& neutral() const noexcept { return neutral_; }

  void save(const std::filesystem::path& path) const;
  static GenderLexicon load(const std::filesystem::path& path);

  friend bool operator==(const GenderLexicon&, const GenderLexicon&) = default;

 private:
  std::vector<std::string> woman_, man_, neutral_;
};

/// A lexicon resolved to vocabulary indices.
class GenderIndex {
 public:
  /// Throws LookupError when a lexicon word is missing from the vocabulary.
  GenderIndex(const GenderLexicon& lexicon, const captioner::Vocabulary& vocab);
  /// Throws ContractError when sets overlap or an index is >= vocab_size.
  GenderIndex(std::vector<TokenId> woman, std::vector<TokenId> man, std::vector<TokenId> neutral,
              std::size_t vocab_size);

  std::span<const TokenId> woman() const noexcept { return woman_; }
  std::span<const TokenId> man() const noexcept { return man_; }
  std::span<const TokenId> neutral() const noexcept { return neutral_; }
  std::size_t vocab_size() const noexcept { return classes_.size(); }

  WordGender classify(TokenId token) const noexcept {
    return token < classes_.size() ? classes_[token] : WordGender::None;
  }
  bool is_gendered(TokenId token) const noexcept {
    auto c = classify(token);
    return c == WordGender::Woman || c == WordGender::Man;
  }

  /// Exchanges the woman and man sets.
  GenderIndex swapped() const;

 private:
  void build();

  std::vector<TokenId> woman_, man_, neutral_;
  std::vector<WordGender> classes_;
};

}  // namespace equalizer::losses
