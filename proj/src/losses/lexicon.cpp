#include "equalizer/losses/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "equalizer/error.hpp"

namespace equalizer::losses {

GenderLexicon::GenderLexicon(std::vector<std::string> woman, std::vector<std::string> man,
                             std::vector<std::string> neutral)
    : woman_(std::move(woman)), man_(std::move(man)), neutral_(std::move(neutral)) {
  std::set<std::string> seen;
  for (const auto* group : {&woman_, &man_, &neutral_}) {
    for (const auto& w : *group) {
      if (w.empty()) throw ContractError("empty lexicon word");
      if (!seen.insert(w).second) throw ContractError("lexicon word '" + w + "' appears in more than one set");
    }
  }
}

WordGender GenderLexicon::classify(std::string_view word) const {
  auto has = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), word) != v.end(); };
  if (has(woman_)) return WordGender::Woman;
  if (has(man_)) return WordGender::Man;
  if (has(neutral_)) return WordGender::Neutral;
  return WordGender::None;
}

void GenderLexicon::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
  auto section = [&](const char* name, const std::vector<std::string>& words) {
    os << '[' << name << "]\n";
    for (const auto& w : words) os << w << '\n';
  };
  section("woman", woman_);
  section("man", man_);
  section("neutral", neutral_);
  if (!os) throw FileError("write to '" + path.string() + "' failed");
}

GenderLexicon GenderLexicon::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open lexicon '" + path.string() + "'");
  std::vector<std::string> woman, man, neutral;
  std::vector<std::string>* current = nullptr;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "[woman]") {
      current = &woman;
    } else if (line == "[man]") {
      current = &man;
    } else if (line == "[neutral]") {
      current = &neutral;
    } else if (line.front() == '[') {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown section " + line);
    } else if (!current) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": word before any section header");
    } else {
      current->push_back(line);
    }
  }
  try {
    return GenderLexicon(std::move(woman), std::move(man), std::move(neutral));
  } catch (const ContractError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

GenderIndex::GenderIndex(const GenderLexicon& lexicon, const captioner::Vocabulary& vocab) {
  for (const auto& w : lexicon.woman()) woman_.push_back(vocab.id(w));
  for (const auto& w : lexicon.man()) man_.push_back(vocab.id(w));
  for (const auto& w : lexicon.neutral()) neutral_.push_back(vocab.id(w));
  classes_.assign(vocab.size(), WordGender::None);
  build();
}

GenderIndex::GenderIndex(std::vector<TokenId> woman, std::vector<TokenId> man, std::vector<TokenId> neutral,
                         std::size_t vocab_size)
    : woman_(std::move(woman)), man_(std::move(man)), neutral_(std::move(neutral)) {
  classes_.assign(vocab_size, WordGender::None);
  build();
}

void GenderIndex::build() {
  auto mark = [&](const std::vector<TokenId>& set, WordGender g) {
    for (auto t : set) {
      if (t >= classes_.size()) throw ContractError("lexicon index " + std::to_string(t) + " outside vocabulary");
      if (classes_[t] != WordGender::None) throw ContractError("lexicon sets overlap at index " + std::to_string(t));
      classes_[t] = g;
    }
  };
  mark(woman_, WordGender::Woman);
  mark(man_, WordGender::Man);
  mark(neutral_, WordGender::Neutral);
}

GenderIndex GenderIndex::swapped() const { return GenderIndex(man_, woman_, neutral_, classes_.size()); }

}  // namespace equalizer::losses
