#include <cctype>

#include "delta/backend.hpp"

namespace delta {

Vocabulary Vocabulary::with_specials(const std::vector<std::string>& words) {
  std::vector<std::string> tokens{std::string(kUnk), std::string(kEos)};
  std::unordered_map<std::string, bool> seen{{tokens[0], true}, {tokens[1], true}};
  for (const auto& w : words) {
    if (seen.emplace(w, true).second) tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens), TokenId(1), TokenId(0));
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos, TokenId unk)
    : id_to_string_(std::move(tokens)), eos_(eos), unk_(unk) {
  for (std::size_t i = 0; i < id_to_string_.size(); ++i) {
    auto [it, inserted] =
        string_to_id_.emplace(id_to_string_[i], TokenId(static_cast<std::uint32_t>(i)));
    if (!inserted) {
      throw Error(ErrorCode::validation, "duplicate vocabulary entry '" + id_to_string_[i] + "'");
    }
  }
  if (eos_.index() >= size() || unk_.index() >= size()) {
    throw Error(ErrorCode::validation, "eos/unk outside vocabulary");
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id.index() >= size()) {
    throw Error(ErrorCode::invalid_input, "token id " + std::to_string(id.value) + " out of range");
  }
  return id_to_string_[id.index()];
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = string_to_id_.find(std::string(word));
  if (it == string_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::lookup(std::string_view word) const {
  return find(word).value_or(unk_);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.lookup(w));
  return TokenSequence(std::move(ids));
}

std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(tokens[i]);
  }
  return out;
}

}  // namespace delta
