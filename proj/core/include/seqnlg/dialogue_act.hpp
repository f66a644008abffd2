#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace seqnlg {

using TokenSequence = std::vector<std::string>;
using IdSequence = std::vector<std::size_t>;

/// One act-type/slot/value triple. Slot-less acts carry an empty slot and
/// value; a slot without a value (e.g. request(area)) has an empty value.
struct DaItem {
  std::string act_type;
  std::string slot;
  std::string value;

  bool slotless() const noexcept { return slot.empty(); }
  friend auto operator<=>(const DaItem&, const DaItem&) = default;
};

/// Dialogue act: an ordered, non-empty list of triples.
///
/// Textual form: `act(slot=value, slot="quoted value")`, several acts joined
/// with `&`. A slot-less act is written with the sentinel `*`, e.g.
/// `hello(*)`. Repeating a slot is allowed; repeating a (slot, value) pair
/// is not.
class DialogueAct {
 public:
  /// Marker written inside the parentheses of a slot-less act.
  static constexpr std::string_view kSlotlessMarker = "*";

  DialogueAct() = default;
  /// Throws DataError if the triples violate the invariants above.
  explicit DialogueAct(std::vector<DaItem> items);

  const std::vector<DaItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  /// Canonical text; parse_da(to_string()) reproduces this act exactly.
  std::string to_string() const;

  /// Same triples sorted by (act, slot, value).
  DialogueAct canonically_sorted() const;

  /// Distinct act types in first-occurrence order.
  std::vector<std::string> act_types() const;

  friend bool operator==(const DialogueAct&, const DialogueAct&) = default;

 private:
  std::vector<DaItem> items_;
};

/// Content class key of a triple with a slot and a value: "slot=value".
std::string slot_value_class(const DaItem& item);

/// Parses the textual form; throws ParseError carrying the byte offset.
DialogueAct parse_da(std::string_view text);

/// Concatenated namespaced triples: act:<type> slot:<slot> val:<value> ...
/// Empty slots and values are encoded as `slot:<none>` / `val:<none>`.
TokenSequence encode_da(const DialogueAct& da);

/// Inverse of encode_da; throws DataError on malformed token streams.
DialogueAct decode_da_tokens(const TokenSequence& tokens);

}  // namespace seqnlg
