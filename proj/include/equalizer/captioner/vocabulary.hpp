#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace equalizer::captioner {

using TokenId = std::uint32_t;

/// Token indices BOS-prefixed; reference captions are EOS-terminated.
struct CaptionSequence {
  std::vector<TokenId> tokens;

  /// Number of predicted positions under teacher forcing.
  std::size_t targets() const noexcept { return tokens.empty() ? 0 : tokens.size() - 1; }
  friend bool operator==(const CaptionSequence&, const CaptionSequence&) = default;
};

/// Word <-> index map. Indices 0..2 are reserved for PAD, BOS and EOS; the
/// remaining words occupy [3, size) densely.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr std::size_t kReserved = 3;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  std::optional<TokenId> find(std::string_view word) const;
  /// Throws LookupError for unknown words.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  /// Non-reserved words in index order.
  std::vector<std::string> words() const;

  /// BOS + words + EOS. Throws LookupError for out-of-vocabulary words.
  CaptionSequence encode(const std::vector<std::string>& words) const;
  /// Words of a sequence with reserved tokens removed.
  std::vector<std::string> decode(const CaptionSequence& caption) const;
  std::string to_text(const CaptionSequence& caption) const;

  /// Throws LookupError when a token is out of range, or ContractError when
  /// the sequence is not BOS ... EOS within `max_len`.
  void validate_reference(const CaptionSequence& caption, std::size_t max_len) const;

  /// One word per line; line i (0-based) is index kReserved + i.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace equalizer::captioner
