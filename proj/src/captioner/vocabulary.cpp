#include "equalizer/captioner/vocabulary.hpp"

#include <fstream>

#include "equalizer/error.hpp"

namespace equalizer::captioner {

Vocabulary::Vocabulary(std::vector<std::string> words) {
  words_ = {"<pad>", "<bos>", "<eos>"};
  for (auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos) {
      throw ContractError("vocabulary word '" + w + "' is empty or contains whitespace");
    }
    words_.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<TokenId>(i)).second) {
      throw ContractError("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view word) const {
  auto t = find(word);
  if (!t) throw LookupError("word '" + std::string(word) + "' not in vocabulary");
  return *t;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) throw LookupError("token " + std::to_string(id) + " out of vocabulary");
  return words_[id];
}

std::vector<std::string> Vocabulary::words() const { return {words_.begin() + kReserved, words_.end()}; }

CaptionSequence Vocabulary::encode(const std::vector<std::string>& words) const {
  CaptionSequence c;
  c.tokens.reserve(words.size() + 2);
  c.tokens.push_back(kBos);
  for (const auto& w : words) c.tokens.push_back(id(w));
  c.tokens.push_back(kEos);
  return c;
}

std::vector<std::string> Vocabulary::decode(const CaptionSequence& caption) const {
  std::vector<std::string> out;
  for (auto t : caption.tokens) {
    if (t >= kReserved) out.push_back(word(t));
  }
  return out;
}

std::string Vocabulary::to_text(const CaptionSequence& caption) const {
  std::string s;
  for (const auto& w : decode(caption)) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

void Vocabulary::validate_reference(const CaptionSequence& caption, std::size_t max_len) const {
  for (auto t : caption.tokens) {
    if (t >= words_.size()) throw LookupError("token " + std::to_string(t) + " out of vocabulary");
  }
  if (caption.tokens.size() < 2 || caption.tokens.front() != kBos || caption.tokens.back() != kEos) {
    throw ContractError("caption must begin with BOS and end with EOS");
  }
  if (caption.tokens.size() > max_len) {
    throw ContractError("caption length " + std::to_string(caption.tokens.size()) + " exceeds " +
                        std::to_string(max_len));
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = kReserved; i < words_.size(); ++i) os << words_[i] << '\n';
  if (!os) throw FileError("write to '" + path.string() + "' failed");
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> words;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty vocabulary line");
    words.push_back(line);
  }
  try {
    return Vocabulary(std::move(words));
  } catch (const ContractError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace equalizer::captioner
