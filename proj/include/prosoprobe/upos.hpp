#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace prosoprobe {

// The 17 coarse universal POS categories. Order defines the class index
// used by the POS probes.
enum class UposTag : int {
  kAdj = 0,
  kAdp,
  kAdv,
  kAux,
  kCconj,
  kDet,
  kIntj,
  kNoun,
  kNum,
  kPart,
  kPron,
  kPropn,
  kPunct,
  kSconj,
  kSym,
  kVerb,
  kX,
};

inline constexpr int kNumUposClasses = 17;

inline constexpr std::array<std::string_view, kNumUposClasses> kUposNames = {
    "ADJ",  "ADP",   "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
    "PART", "PRON",  "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB", "X"};

inline std::string_view to_string(UposTag t) {
  return kUposNames[static_cast<int>(t)];
}

inline std::optional<UposTag> parse_upos(std::string_view s) {
  for (int i = 0; i < kNumUposClasses; ++i) {
    if (kUposNames[i] == s) return static_cast<UposTag>(i);
  }
  return std::nullopt;
}

inline std::optional<int> upos_index(std::string_view s) {
  auto t = parse_upos(s);
  if (!t) return std::nullopt;
  return static_cast<int>(*t);
}

}  // namespace prosoprobe
