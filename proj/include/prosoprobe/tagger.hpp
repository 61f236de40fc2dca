#pragma once

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosoprobe/corpus.hpp"
#include "prosoprobe/upos.hpp"

namespace prosoprobe {

using json = nlohmann::json;

// One tagger token: its tag and the character span [begin, end) it covers
// in the space-joined sentence text. The tagger is free to retokenize; the
// spans are what we reconcile against.
struct TagSpan {
  std::string tag;
  int begin = 0;
  int end = 0;
};

class TaggerClient {
 public:
  virtual ~TaggerClient() = default;

  virtual std::vector<TagSpan> tag(const std::vector<std::string>& tokens) = 0;

  virtual std::vector<std::vector<TagSpan>> tag_batch(
      const std::vector<std::vector<std::string>>& batch) {
    std::vector<std::vector<TagSpan>> out;
    out.reserve(batch.size());
    for (const auto& tokens : batch) out.push_back(tag(tokens));
    return out;
  }

  virtual std::string name() const = 0;
};

namespace detail {

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline std::vector<TagSpan> spans_from_json(const json& arr,
                                            const std::string& origin) {
  if (!arr.is_array()) {
    throw std::runtime_error(origin + ": expected an array of tag spans");
  }
  std::vector<TagSpan> spans;
  spans.reserve(arr.size());
  for (const auto& t : arr) {
    TagSpan s;
    s.tag = t.at("tag").get<std::string>();
    s.begin = t.at("begin").get<int>();
    s.end = t.at("end").get<int>();
    spans.push_back(std::move(s));
  }
  return spans;
}

}  // namespace detail

// Map tagger spans back onto the original words: each word takes the tag of
// the span covering its first character in the space-joined text. A word
// whose first character no span covers is a hard error (the tagger and the
// corpus disagree about the sentence).
inline std::vector<std::string> reconcile_tags(
    const std::vector<std::string>& tokens, const std::vector<TagSpan>& spans,
    const std::string& where) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  int offset = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const TagSpan* hit = nullptr;
    for (const auto& s : spans) {
      if (s.begin <= offset && offset < s.end) {
        hit = &s;
        break;
      }
    }
    if (!hit) {
      throw std::runtime_error("tagger output for " + where +
                               " does not cover word '" + tokens[i] + "'");
    }
    tags.push_back(hit->tag);
    offset += static_cast<int>(tokens[i].size()) + 1;  // the joining space
  }
  return tags;
}

// ── clients ──────────────────────────────────────────────────────────────
// (HttpTaggerClient lives in tagger_http.hpp to keep the HTTP dependency
// out of translation units that only need the process client or cache.)

// Pipes JSONL through a filter process: one {"tokens": [...]} request per
// line on stdin, one {"tags": [{"tag","begin","end"}, ...]} per line on
// stdout (tools/spacy_tagger.py speaks this protocol).
class ProcessTaggerClient final : public TaggerClient {
 public:
  explicit ProcessTaggerClient(std::string command)
      : command_(std::move(command)) {}

  std::vector<TagSpan> tag(const std::vector<std::string>& tokens) override {
    return std::move(tag_batch({tokens}).front());
  }

  std::vector<std::vector<TagSpan>> tag_batch(
      const std::vector<std::vector<std::string>>& batch) override {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    const std::string stamp = std::to_string(::getpid()) + "-" +
                              std::to_string(counter_++);
    const fs::path in_path = dir / ("tagger-in-" + stamp + ".jsonl");
    const fs::path out_path = dir / ("tagger-out-" + stamp + ".jsonl");
    {
      std::ofstream req(in_path);
      if (!req) throw IoError("cannot write '" + in_path.string() + "'");
      for (const auto& tokens : batch) {
        req << json{{"tokens", tokens}}.dump() << "\n";
      }
    }
    const std::string cmd = command_ + " < '" + in_path.string() + "' > '" +
                            out_path.string() + "'";
    const int rc = std::system(cmd.c_str());
    std::vector<std::vector<TagSpan>> out;
    try {
      if (rc != 0) {
        throw std::runtime_error("tagger command failed (exit " +
                                 std::to_string(rc) + "): " + command_);
      }
      std::ifstream resp(out_path);
      if (!resp) throw IoError("cannot read '" + out_path.string() + "'");
      std::string line;
      while (std::getline(resp, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        out.push_back(detail::spans_from_json(j.at("tags"), name()));
      }
    } catch (...) {
      std::error_code ec;
      fs::remove(in_path, ec);
      fs::remove(out_path, ec);
      throw;
    }
    std::error_code ec;
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
    if (out.size() != batch.size()) {
      throw std::runtime_error("tagger returned " + std::to_string(out.size()) +
                               " responses for " + std::to_string(batch.size()) +
                               " sentences");
    }
    return out;
  }

  std::string name() const override { return command_; }

 private:
  std::string command_;
  int counter_ = 0;
};

// ── cache ────────────────────────────────────────────────────────────────

// Per-sentence tag cache keyed by (doc id, sentence index, token hash), so
// any retokenization or text change invalidates the entry. Plain TSV, one
// sentence per line, tags space-joined.
class TagCache {
 public:
  static uint64_t token_hash(const std::vector<std::string>& tokens) {
    uint64_t h = kFnvOffset;
    for (const auto& t : tokens) {
      h = fnv1a(t, h);
      h = fnv1a("\x1f", 1, h);
    }
    return h;
  }

  static TagCache load(const std::string& path) {
    TagCache c;
    c.path_ = path;
    std::ifstream in(path);
    if (!in) return c;  // cold cache
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty() || line[0] == '#') continue;
      auto fields = split_tabs(line);
      if (fields.size() != 4) {
        throw ParseError(path, lineno, "expected 4 tab-separated fields");
      }
      std::vector<std::string> tags;
      std::istringstream ts(fields[3]);
      std::string tag;
      while (ts >> tag) tags.push_back(tag);
      c.entries_[fields[0] + "\t" + fields[1] + "\t" + fields[2]] =
          std::move(tags);
    }
    return c;
  }

  const std::vector<std::string>* find(const std::string& doc_id,
                                       int sentence_index,
                                       uint64_t tok_hash) const {
    auto it = entries_.find(key(doc_id, sentence_index, tok_hash));
    return it == entries_.end() ? nullptr : &it->second;
  }

  void put(const std::string& doc_id, int sentence_index, uint64_t tok_hash,
           std::vector<std::string> tags) {
    entries_[key(doc_id, sentence_index, tok_hash)] = std::move(tags);
  }

  void save() const {
    if (path_.empty()) throw IoError("tag cache has no backing path");
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw IoError("cannot open '" + tmp + "' for writing");
      out << "# doc_id\tsentence\ttoken_hash\ttags\n";
      for (const auto& [k, tags] : entries_) {
        out << k << "\t";
        for (size_t i = 0; i < tags.size(); ++i) {
          if (i) out << ' ';
          out << tags[i];
        }
        out << "\n";
      }
      if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path_.c_str()) != 0) {
      throw IoError("cannot rename '" + tmp + "' to '" + path_ + "'");
    }
  }

  size_t size() const { return entries_.size(); }

 private:
  static std::string key(const std::string& doc_id, int sentence_index,
                         uint64_t tok_hash) {
    return doc_id + "\t" + std::to_string(sentence_index) + "\t" +
           hex64(tok_hash);
  }

  std::string path_;
  std::map<std::string, std::vector<std::string>> entries_;
};

// ── dataset tagging ──────────────────────────────────────────────────────

struct TagReport {
  size_t from_cache = 0;
  size_t tagged = 0;
};

// Fill every token's pos field, preferring cached tags and batching cache
// misses through the client. The cache (when given) is updated and saved.
inline TagReport tag_dataset(Dataset& dataset, TaggerClient& client,
                             TagCache* cache = nullptr,
                             size_t batch_sentences = 64) {
  TagReport report;
  std::vector<size_t> misses;
  std::vector<std::vector<std::string>> miss_tokens;

  auto words_of = [](const LabeledSentence& s) {
    std::vector<std::string> words;
    words.reserve(s.tokens.size());
    for (const auto& t : s.tokens) words.push_back(t.text);
    return words;
  };

  for (size_t i = 0; i < dataset.sentences.size(); ++i) {
    auto words = words_of(dataset.sentences[i]);
    const uint64_t h = TagCache::token_hash(words);
    const std::vector<std::string>* hit =
        cache ? cache->find(dataset.sentences[i].doc_id,
                            dataset.sentences[i].sentence_index, h)
              : nullptr;
    if (hit && hit->size() == words.size()) {
      for (size_t w = 0; w < words.size(); ++w) {
        dataset.sentences[i].tokens[w].pos = (*hit)[w];
      }
      ++report.from_cache;
    } else {
      misses.push_back(i);
      miss_tokens.push_back(std::move(words));
    }
  }

  for (size_t b = 0; b < misses.size(); b += batch_sentences) {
    const size_t b_end = std::min(misses.size(), b + batch_sentences);
    std::vector<std::vector<std::string>> batch(miss_tokens.begin() + b,
                                                miss_tokens.begin() + b_end);
    auto spans = client.tag_batch(batch);
    if (spans.size() != batch.size()) {
      throw std::runtime_error("tagger returned a short batch");
    }
    for (size_t k = 0; k < batch.size(); ++k) {
      LabeledSentence& s = dataset.sentences[misses[b + k]];
      const std::string where =
          s.doc_id + "#" + std::to_string(s.sentence_index);
      auto tags = reconcile_tags(batch[k], spans[k], where);
      for (size_t w = 0; w < tags.size(); ++w) s.tokens[w].pos = tags[w];
      if (cache) {
        cache->put(s.doc_id, s.sentence_index, TagCache::token_hash(batch[k]),
                   std::move(tags));
      }
      ++report.tagged;
    }
  }

  if (cache && report.tagged > 0) cache->save();
  dataset.task_labels_present.insert(Task::kPos);
  return report;
}

// Count tags over the dataset against the 17-tag UPOS inventory. Every
// inventory row is present in the result (zeros included); any tag outside
// the inventory fails loudly, naming the offenders.
inline std::map<std::string, size_t> validate_tagset(const Dataset& dataset) {
  std::map<std::string, size_t> counts;
  for (const auto& name : kUposNames) counts[std::string(name)] = 0;
  std::map<std::string, size_t> unknown;
  for (const auto& s : dataset.sentences) {
    for (const auto& t : s.tokens) {
      if (!t.pos) {
        throw std::runtime_error("token '" + t.text + "' in " + s.doc_id + "#" +
                                 std::to_string(s.sentence_index) +
                                 " has no POS tag");
      }
      if (parse_upos(*t.pos)) {
        ++counts[*t.pos];
      } else {
        ++unknown[*t.pos];
      }
    }
  }
  if (!unknown.empty()) {
    std::string msg = "tags outside the UPOS inventory:";
    for (const auto& [tag, n] : unknown) {
      msg += " " + tag + " (x" + std::to_string(n) + ")";
    }
    throw std::runtime_error(msg);
  }
  return counts;
}

}  // namespace prosoprobe
