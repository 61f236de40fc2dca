#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prosoprobe/core.hpp"
#include "prosoprobe/upos.hpp"

namespace prosoprobe {

enum class Prominence { kNonProminent = 0, kProminent = 1, kUnlabeled = 2 };

enum class Task { kProminence, kPos };

inline std::string_view to_string(Task t) {
  return t == Task::kProminence ? "prominence" : "pos";
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "prominence") return Task::kProminence;
  if (s == "pos") return Task::kPos;
  return std::nullopt;
}

struct WordToken {
  std::string text;  // non-empty, no internal whitespace
  Prominence prominence = Prominence::kUnlabeled;
  std::optional<std::string> pos;            // UPOS tag (validated separately)
  std::optional<std::string> source_accent;  // raw annotation, e.g. "H*"
};

// One full sentence; the atomic training sample.
struct LabeledSentence {
  std::vector<WordToken> tokens;
  std::string doc_id;
  int sentence_index = 0;
};

struct Dataset {
  std::vector<LabeledSentence> sentences;
  std::set<Task> task_labels_present;
  std::string name;

  size_t token_count() const {
    size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
  }
};

struct SplitSpec {
  double train_fraction = 0.80;
  double dev_fraction = 0.15;
  double test_fraction = 0.05;
  uint64_t seed = 0;

  void validate() const {
    if (train_fraction <= 0 || dev_fraction <= 0 || test_fraction <= 0) {
      throw std::invalid_argument("split fractions must be positive");
    }
    if (train_fraction + dev_fraction + test_fraction != 1.0) {
      throw std::invalid_argument("split fractions must sum to 1.0 exactly");
    }
  }
};

struct DatasetSplits {
  Dataset train, dev, test;
};

struct Stats {
  size_t sentence_count = 0;
  std::map<std::string, size_t> class_counts;  // class name -> token count
  size_t labeled_tokens = 0;
  std::string majority_class;
  double majority_fraction = 0.0;
  bool majority_tie = false;
};

inline void validate_token(const WordToken& t) {
  if (t.text.empty()) throw std::invalid_argument("word token text is empty");
  for (char c : t.text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw std::invalid_argument("word token text contains whitespace: '" +
                                  t.text + "'");
    }
  }
}

// ── ToBI pitch-accent mapping ────────────────────────────────────────────

// Tally of accent strings that were outside the recognized inventory but
// still mapped to PROMINENT.
struct TobiMapStats {
  size_t unknown_accents = 0;
  std::map<std::string, size_t> unknown_by_string;
};

// Recognized inventory: H*, L*, L+H*, L*+H, H+!H*, !H* plus downstepped
// ("!") and uncertain ("?") variants, and the bare uncertain accent "*?".
inline bool is_recognized_accent(std::string_view accent) {
  std::string base;
  base.reserve(accent.size());
  for (char c : accent) {
    if (c != '!' && c != '?') base.push_back(c);
  }
  return base == "H*" || base == "L*" || base == "L+H*" || base == "L*+H" ||
         base == "H+H*" || base == "X*" || base == "*";
}

// Absent or empty annotation means unaccented; any accent annotation marks
// the word prominent. Never returns kUnlabeled.
inline Prominence map_tobi_to_binary(const std::optional<std::string>& accent,
                                     TobiMapStats* stats = nullptr) {
  if (!accent) return Prominence::kNonProminent;
  std::string a = trim(*accent);
  if (a.empty()) return Prominence::kNonProminent;
  if (!is_recognized_accent(a) && stats != nullptr) {
    ++stats->unknown_accents;
    ++stats->unknown_by_string[a];
  }
  return Prominence::kProminent;
}

// HPC discrete labels: 0 -> non-prominent, 1/2 -> prominent, NA -> unlabeled.
inline Prominence map_numeric_prominence(std::string_view label) {
  if (label == "0") return Prominence::kNonProminent;
  if (label == "1" || label == "2") return Prominence::kProminent;
  if (label == "NA") return Prominence::kUnlabeled;
  throw std::invalid_argument("unknown prominence label '" +
                              std::string(label) + "'");
}

// ── sentence segmentation ────────────────────────────────────────────────

// Sentence-final punctuation: a token made solely of '.', '!', '?'.
inline bool is_sentence_terminal(std::string_view tok) {
  if (tok.empty()) return false;
  for (char c : tok) {
    if (c != '.' && c != '!' && c != '?') return false;
  }
  return true;
}

inline bool is_closing_quote(std::string_view tok) {
  return tok == "\"" || tok == "'" || tok == "''" || tok == "”" ||
         tok == "’" || tok == "»";
}

// Splits after sentence-final punctuation (closing quotes stay with the
// preceding sentence); trailing material forms a final sentence.
inline std::vector<LabeledSentence> segment_sentences(
    const std::vector<WordToken>& tokens, const std::string& doc_id,
    int first_sentence_index = 0) {
  if (tokens.empty()) {
    throw std::invalid_argument("segment_sentences: empty token list");
  }
  std::vector<LabeledSentence> out;
  std::vector<WordToken> cur;
  int next_index = first_sentence_index;

  auto flush = [&]() {
    if (cur.empty()) return;
    out.push_back(LabeledSentence{std::move(cur), doc_id, next_index++});
    cur.clear();
  };

  for (size_t i = 0; i < tokens.size(); ++i) {
    cur.push_back(tokens[i]);
    if (is_sentence_terminal(tokens[i].text)) {
      while (i + 1 < tokens.size() && is_closing_quote(tokens[i + 1].text)) {
        cur.push_back(tokens[++i]);
      }
      flush();
    }
  }
  flush();
  return out;
}

// ── canonical format ─────────────────────────────────────────────────────
//
// One token per line: word<TAB>prominence[<TAB>upos], prominence in {0,1,NA}.
// Blank line terminates a sentence, '#' starts a comment, '<doc>' lines are
// document-boundary markers carrying the doc id.

namespace detail {

inline std::string parse_doc_marker(const std::string& line) {
  std::string id = trim(line);
  id.erase(0, 1);  // leading '<'
  if (!id.empty() && id.back() == '>') id.pop_back();
  return trim(id);
}

inline std::string prominence_field(Prominence p) {
  switch (p) {
    case Prominence::kNonProminent: return "0";
    case Prominence::kProminent: return "1";
    case Prominence::kUnlabeled: return "NA";
  }
  return "NA";
}

}  // namespace detail

inline Dataset parse_canonical(std::istream& in, const std::string& display_name) {
  Dataset d;
  d.name = display_name;
  std::string doc_id;
  int sentence_index = 0;
  std::vector<WordToken> cur;
  bool any_pos = false;
  bool all_pos = true;

  auto close_sentence = [&]() {
    if (cur.empty()) return;
    d.sentences.push_back(LabeledSentence{std::move(cur), doc_id, sentence_index++});
    cur.clear();
  };

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      close_sentence();
      continue;
    }
    if (line[0] == '#') continue;
    if (line[0] == '<') {
      close_sentence();
      doc_id = detail::parse_doc_marker(line);
      sentence_index = 0;
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError(display_name, lineno,
                       "expected 2 or 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    WordToken tok;
    tok.text = fields[0];
    if (fields[1] != "0" && fields[1] != "1" && fields[1] != "NA") {
      throw ParseError(display_name, lineno,
                       "prominence field must be 0, 1, or NA, got '" +
                           fields[1] + "'");
    }
    try {
      validate_token(tok);
      tok.prominence = map_numeric_prominence(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(display_name, lineno, e.what());
    }
    if (fields.size() == 3) {
      if (fields[2].empty()) {
        throw ParseError(display_name, lineno, "empty POS field");
      }
      tok.pos = fields[2];
      any_pos = true;
    } else {
      all_pos = false;
    }
    cur.push_back(std::move(tok));
  }
  close_sentence();

  if (d.sentences.empty()) {
    throw ParseError(display_name, lineno, "no sentences found");
  }
  d.task_labels_present.insert(Task::kProminence);
  if (any_pos && all_pos) d.task_labels_present.insert(Task::kPos);
  return d;
}

inline Dataset ingest_canonical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_canonical(in, path);
}

inline void export_canonical(const Dataset& d, std::ostream& out) {
  std::string doc_id;
  bool first = true;
  bool doc_seen = false;
  for (const auto& s : d.sentences) {
    if (!first) out << "\n";
    if (s.doc_id != doc_id || (!doc_seen && !s.doc_id.empty())) {
      out << "<" << s.doc_id << ">\n";
      doc_id = s.doc_id;
      doc_seen = true;
    }
    for (const auto& t : s.tokens) {
      out << t.text << "\t" << detail::prominence_field(t.prominence);
      if (t.pos) out << "\t" << *t.pos;
      out << "\n";
    }
    first = false;
  }
}

inline void export_canonical(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  export_canonical(d, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ── Helsinki Prosody Corpus layout ───────────────────────────────────────
//
// One "word<TAB>label" per line with label in {0,1,2,NA}; lines starting
// with '<' mark document boundaries. Documents are re-segmented into
// sentences. Extra columns after the label are tolerated and ignored.

inline Dataset ingest_hpc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  Dataset d;
  d.name = path;
  std::string doc_id;
  std::vector<WordToken> doc_tokens;

  auto close_doc = [&]() {
    if (doc_tokens.empty()) return;
    auto sentences = segment_sentences(doc_tokens, doc_id);
    for (auto& s : sentences) d.sentences.push_back(std::move(s));
    doc_tokens.clear();
  };

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '<') {
      close_doc();
      doc_id = detail::parse_doc_marker(line);
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() < 2) {
      throw ParseError(path, lineno, "expected word<TAB>label");
    }
    WordToken tok;
    tok.text = fields[0];
    try {
      validate_token(tok);
      tok.prominence = map_numeric_prominence(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, lineno, e.what());
    }
    doc_tokens.push_back(std::move(tok));
  }
  close_doc();

  if (d.sentences.empty()) throw ParseError(path, lineno, "no sentences found");
  d.task_labels_present.insert(Task::kProminence);
  return d;
}

// ── pre-extracted ToBI TSV (BURNC / NXT Switchboard) ─────────────────────
//
// One "word<TAB>accent_string_or_-" per line; '<doc>' markers and '#'
// comments as in the canonical format. Documents are re-segmented.

inline Dataset ingest_tobi_tsv(const std::string& path,
                               TobiMapStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  Dataset d;
  d.name = path;
  std::string doc_id;
  std::vector<WordToken> doc_tokens;

  auto close_doc = [&]() {
    if (doc_tokens.empty()) return;
    auto sentences = segment_sentences(doc_tokens, doc_id);
    for (auto& s : sentences) d.sentences.push_back(std::move(s));
    doc_tokens.clear();
  };

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') continue;
    if (line[0] == '<') {
      close_doc();
      doc_id = detail::parse_doc_marker(line);
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw ParseError(path, lineno, "expected word<TAB>accent_string_or_-");
    }
    WordToken tok;
    tok.text = fields[0];
    try {
      validate_token(tok);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, lineno, e.what());
    }
    std::string accent = trim(fields[1]);
    if (accent == "-" || accent.empty()) {
      tok.prominence = map_tobi_to_binary(std::nullopt, stats);
    } else {
      tok.source_accent = accent;
      tok.prominence = map_tobi_to_binary(accent, stats);
    }
    doc_tokens.push_back(std::move(tok));
  }
  close_doc();

  if (d.sentences.empty()) throw ParseError(path, lineno, "no sentences found");
  d.task_labels_present.insert(Task::kProminence);
  return d;
}

// ── splitting ────────────────────────────────────────────────────────────

struct SplitIndices {
  std::vector<size_t> train, dev, test;
};

// Shuffle 0..n-1 with spec.seed, then take dev/test by floored fractions
// and give the remainder to train. Deterministic in (n, spec).
inline SplitIndices split_indices(size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 20) {
    throw std::invalid_argument("dataset too small to split: " +
                                std::to_string(n) + " sentences (need >= 20)");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(order);

  const auto n_dev = static_cast<size_t>(std::floor(spec.dev_fraction * static_cast<double>(n)));
  const auto n_test = static_cast<size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
  const size_t n_train = n - n_dev - n_test;

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.dev.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
  out.test.assign(order.begin() + n_train + n_dev, order.end());
  return out;
}

inline DatasetSplits split_dataset(const Dataset& d, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(d.sentences.size(), spec);
  DatasetSplits out;
  auto fill = [&](Dataset& part, const std::vector<size_t>& rows,
                  const char* suffix) {
    part.name = d.name.empty() ? suffix : d.name + "/" + suffix;
    part.task_labels_present = d.task_labels_present;
    part.sentences.reserve(rows.size());
    for (size_t i : rows) part.sentences.push_back(d.sentences[i]);
  };
  fill(out.train, idx.train, "train");
  fill(out.dev, idx.dev, "dev");
  fill(out.test, idx.test, "test");
  return out;
}

// ── statistics ───────────────────────────────────────────────────────────

inline Stats dataset_stats(const Dataset& d, Task task) {
  if (!d.task_labels_present.count(task)) {
    throw std::invalid_argument("dataset '" + d.name + "' carries no " +
                                std::string(to_string(task)) + " labels");
  }
  Stats st;
  st.sentence_count = d.sentences.size();
  for (const auto& s : d.sentences) {
    for (const auto& t : s.tokens) {
      if (task == Task::kProminence) {
        switch (t.prominence) {
          case Prominence::kProminent: ++st.class_counts["prominent"]; break;
          case Prominence::kNonProminent: ++st.class_counts["non_prominent"]; break;
          case Prominence::kUnlabeled: ++st.class_counts["unlabeled"]; break;
        }
      } else if (t.pos) {
        ++st.class_counts[*t.pos];
      }
    }
  }
  size_t best = 0;
  size_t second = 0;
  for (const auto& [name, count] : st.class_counts) {
    if (task == Task::kProminence && name == "unlabeled") continue;
    st.labeled_tokens += count;
    if (count > best) {
      second = best;
      best = count;
      st.majority_class = name;
    } else if (count > second) {
      second = count;
    }
  }
  if (st.labeled_tokens == 0) {
    throw std::runtime_error("no labeled tokens for task " +
                             std::string(to_string(task)));
  }
  st.majority_fraction = static_cast<double>(best) / static_cast<double>(st.labeled_tokens);
  st.majority_tie = (best == second && best > 0);
  return st;
}

// Stable content hash over sentences, labels, and doc ids; keys the
// activation cache.
inline uint64_t dataset_hash(const Dataset& d) {
  uint64_t h = kFnvOffset;
  for (const auto& s : d.sentences) {
    h = fnv1a(s.doc_id, h);
    h = fnv1a("\x1e", 1, h);
    for (const auto& t : s.tokens) {
      h = fnv1a(t.text, h);
      const char prom = static_cast<char>('0' + static_cast<int>(t.prominence));
      h = fnv1a(&prom, 1, h);
      if (t.pos) h = fnv1a(*t.pos, h);
      h = fnv1a("\x1f", 1, h);
    }
  }
  return h;
}

}  // namespace prosoprobe
