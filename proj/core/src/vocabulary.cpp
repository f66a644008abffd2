#include "seqnlg/vocabulary.hpp"

#include <map>

#include "seqnlg/errors.hpp"

namespace seqnlg {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens{"<pad>", "<go>", "<stop>", "<unk>"};
  return tokens;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const std::string& t : reserved_tokens()) {
    index_.emplace(t, tokens_.size());
    tokens_.push_back(t);
    counts_.push_back(0);
  }
}

Vocabulary Vocabulary::build(std::span<const TokenSequence> corpus) {
  std::map<std::string, std::size_t> freq;
  for (const TokenSequence& seq : corpus) {
    for (const std::string& t : seq) ++freq[t];
  }
  Vocabulary v;
  for (const auto& [tok, count] : freq) {
    if (v.index_.contains(tok)) throw DataError("corpus token '" + tok + "' collides with a reserved token");
    v.index_.emplace(tok, v.tokens_.size());
    v.tokens_.push_back(tok);
    v.counts_.push_back(count);
  }
  return v;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> tokens, std::vector<std::size_t> counts) {
  if (tokens.size() != counts.size() || tokens.size() < kReservedCount) {
    throw DataError("vocabulary entries and counts disagree or reserved entries are missing");
  }
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (tokens[i] != reserved_tokens()[i]) {
      throw DataError("vocabulary reserved id " + std::to_string(i) + " is '" + tokens[i] + "'");
    }
  }
  Vocabulary v;
  v.tokens_.clear();
  v.counts_.clear();
  v.index_.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], i).second) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
  }
  v.tokens_ = std::move(tokens);
  v.counts_ = std::move(counts);
  return v;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

IdSequence Vocabulary::to_ids(const TokenSequence& tokens, std::size_t* unknown) const {
  IdSequence out;
  out.reserve(tokens.size());
  std::size_t unk = 0;
  for (const std::string& t : tokens) {
    auto hit = find(t);
    if (!hit) ++unk;
    out.push_back(hit.value_or(kUnk));
  }
  if (unknown) *unknown = unk;
  return out;
}

TokenSequence Vocabulary::to_tokens(const IdSequence& ids) const {
  TokenSequence out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(token(id));
  return out;
}

}  // namespace seqnlg
