#pragma once

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "prosoprobe/core.hpp"
#include "prosoprobe/encoder.hpp"

namespace prosoprobe {

// WordPiece vocabulary in the standard one-token-per-line layout.
class WordPieceVocab {
 public:
  static WordPieceVocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocab file '" + path + "'");
    WordPieceVocab v;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      v.add(line);
    }
    if (v.tokens_.empty()) throw IoError("vocab file '" + path + "' is empty");
    v.resolve_specials(path);
    return v;
  }

  static WordPieceVocab from_tokens(const std::vector<std::string>& tokens) {
    WordPieceVocab v;
    for (const auto& t : tokens) v.add(t);
    v.resolve_specials("<memory>");
    return v;
  }

  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(id); }
  size_t size() const { return tokens_.size(); }

  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }
  int pad_id() const { return pad_id_; }

 private:
  void add(const std::string& token) {
    index_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
  }

  void resolve_specials(const std::string& origin) {
    unk_id_ = id("[UNK]");
    cls_id_ = id("[CLS]");
    sep_id_ = id("[SEP]");
    pad_id_ = id("[PAD]");
    if (unk_id_ < 0 || cls_id_ < 0 || sep_id_ < 0) {
      throw IoError("vocab '" + origin + "' lacks [UNK]/[CLS]/[SEP]");
    }
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int unk_id_ = -1, cls_id_ = -1, sep_id_ = -1, pad_id_ = -1;
};

namespace detail {

inline bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

// Split a word at punctuation boundaries the way the standard BERT basic
// tokenizer does, so "it's" wordpieces as "it" "'" "s" units. Operates on
// ASCII punctuation; multibyte sequences pass through intact.
inline std::vector<std::string> split_on_punct(const std::string& word) {
  std::vector<std::string> parts;
  std::string cur;
  for (size_t i = 0; i < word.size(); ++i) {
    const auto c = static_cast<unsigned char>(word[i]);
    if (c < 0x80 && is_ascii_punct(c)) {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
      parts.emplace_back(1, word[i]);
    } else {
      cur.push_back(word[i]);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

inline std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace detail

struct WordPieces {
  std::vector<std::string> pieces;
  std::vector<int> ids;
};

// Greedy longest-match-first subword split of one word. A word that yields
// no vocabulary match maps to [UNK]; words are never dropped.
inline WordPieces wordpiece_tokenize_word(const std::string& word,
                                          const WordPieceVocab& vocab,
                                          bool lowercase) {
  WordPieces out;
  const std::string normalized = lowercase ? detail::ascii_lower(word) : word;
  for (const std::string& unit : detail::split_on_punct(normalized)) {
    std::vector<std::string> unit_pieces;
    bool bad = false;
    size_t start = 0;
    while (start < unit.size()) {
      size_t end = unit.size();
      int match = -1;
      std::string match_str;
      while (end > start) {
        std::string sub = unit.substr(start, end - start);
        if (start > 0) sub = "##" + sub;
        const int id = vocab.id(sub);
        if (id >= 0) {
          match = id;
          match_str = std::move(sub);
          break;
        }
        --end;
      }
      if (match < 0) {
        bad = true;
        break;
      }
      unit_pieces.push_back(match_str);
      start = end;
    }
    if (bad || unit_pieces.empty()) {
      out.pieces.emplace_back("[UNK]");
      out.ids.push_back(vocab.unk_id());
    } else {
      for (auto& p : unit_pieces) {
        out.ids.push_back(vocab.id(p));
        out.pieces.push_back(std::move(p));
      }
    }
  }
  if (out.pieces.empty()) {
    out.pieces.emplace_back("[UNK]");
    out.ids.push_back(vocab.unk_id());
  }
  return out;
}

// Build [CLS] pieces... [SEP] with one contiguous span per word. Words whose
// pieces do not fit within max_sequence_length are dropped and flagged.
inline SubwordAlignment tokenize_align(const LabeledSentence& sentence,
                                       const WordPieceVocab& vocab,
                                       const EncoderSpec& spec) {
  if (sentence.tokens.empty()) {
    throw std::invalid_argument("cannot tokenize an empty sentence");
  }
  SubwordAlignment a;
  a.num_source_words = static_cast<int>(sentence.tokens.size());
  a.pieces.push_back("[CLS]");
  a.piece_ids.push_back(vocab.cls_id());

  const int budget = spec.max_sequence_length - 1;  // reserve the [SEP] slot
  for (const auto& tok : sentence.tokens) {
    WordPieces wp = wordpiece_tokenize_word(tok.text, vocab, spec.lowercase);
    if (static_cast<int>(a.pieces.size() + wp.pieces.size()) > budget) {
      a.truncated = true;
      break;
    }
    SubwordAlignment::Span span;
    span.begin = static_cast<int>(a.pieces.size());
    for (size_t i = 0; i < wp.pieces.size(); ++i) {
      a.pieces.push_back(std::move(wp.pieces[i]));
      a.piece_ids.push_back(wp.ids[i]);
    }
    span.end = static_cast<int>(a.pieces.size()) - 1;
    a.word_spans.push_back(span);
  }
  a.pieces.push_back("[SEP]");
  a.piece_ids.push_back(vocab.sep_id());
  a.validate();
  return a;
}

}  // namespace prosoprobe
