#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqnlg/dialogue_act.hpp"

namespace seqnlg {

/// Bidirectional token <-> id map with four reserved ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kGo = 1;
  static constexpr std::size_t kStop = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kReservedCount = 4;

  Vocabulary();

  /// Every token seen at least once, sorted, after the reserved entries.
  static Vocabulary build(std::span<const TokenSequence> corpus);
  /// Rebuilds from a persisted token list (reserved entries included).
  static Vocabulary from_entries(std::vector<std::string> tokens, std::vector<std::size_t> counts);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::optional<std::size_t> find(std::string_view token) const;
  /// Id of `token`, or kUnk.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  std::size_t frequency(std::size_t id) const { return counts_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  /// Maps tokens to ids; unknown tokens become kUnk and are counted.
  IdSequence to_ids(const TokenSequence& tokens, std::size_t* unknown = nullptr) const;
  TokenSequence to_tokens(const IdSequence& ids) const;

  static bool is_reserved(std::size_t id) noexcept { return id < kReservedCount; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace seqnlg
