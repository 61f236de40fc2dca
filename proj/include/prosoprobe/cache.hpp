#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prosoprobe/corpus.hpp"
#include "prosoprobe/encoder.hpp"
#include "prosoprobe/tensor_file.hpp"

namespace prosoprobe {

// On-disk store of frozen per-sentence layer stacks. A store is valid for
// exactly one (model id, parameter hash, pooling, dataset hash) key; any
// mismatch, corruption, or parse failure triggers a silent rebuild. Reuse
// maps the file and serves zero-copy views, so a warm run performs no
// encoder forward passes.
class ActivationStore {
 public:
  ActivationStore() = default;

  static ActivationStore open_or_build(const std::string& path,
                                       Encoder& encoder, const Dataset& dataset,
                                       Pooling pooling, bool use_mmap = true) {
    ActivationStore store;
    if (std::filesystem::exists(path)) {
      try {
        TensorFileReader reader = TensorFileReader::open(path, use_mmap);
        if (store.try_adopt(reader, encoder, dataset, pooling)) {
          store.built_fresh_ = false;
          return store;
        }
      } catch (const IoError&) {
        // fall through to rebuild
      }
    }
    store = build(encoder, dataset, pooling);
    store.save(path, encoder, dataset, pooling);
    // Reopen so large corpora are served from the mapping, not the heap.
    if (use_mmap) {
      TensorFileReader reader = TensorFileReader::open(path, true);
      ActivationStore mapped;
      if (!mapped.try_adopt(reader, encoder, dataset, pooling)) {
        throw IoError("freshly written cache '" + path + "' failed to verify");
      }
      mapped.built_fresh_ = true;
      return mapped;
    }
    store.built_fresh_ = true;
    return store;
  }

  static ActivationStore build(Encoder& encoder, const Dataset& dataset,
                               Pooling pooling) {
    ActivationStore store;
    store.stacks_.reserve(dataset.sentences.size());
    for (const auto& sentence : dataset.sentences) {
      store.stacks_.push_back(encoder.encode_frozen(sentence, pooling));
      if (!store.stacks_.back().all_finite()) {
        throw std::runtime_error("non-finite activations for sentence " +
                                 sentence.doc_id + "#" +
                                 std::to_string(sentence.sentence_index));
      }
    }
    store.built_fresh_ = true;
    return store;
  }

  size_t size() const { return stacks_.size(); }
  const LayerStack& stack(size_t i) const { return stacks_.at(i); }
  bool built_fresh() const { return built_fresh_; }

  int layer_count() const {
    return stacks_.empty() ? 0 : stacks_.front().layers();
  }
  int hidden() const { return stacks_.empty() ? 0 : stacks_.front().hidden(); }

  void save(const std::string& path, const Encoder& encoder,
            const Dataset& dataset, Pooling pooling) const {
    TensorFileWriter writer;
    json source_words = json::array();
    json truncated = json::array();
    for (size_t i = 0; i < stacks_.size(); ++i) {
      const LayerStack& s = stacks_[i];
      writer.add("stack." + std::to_string(i),
                 {static_cast<int64_t>(s.layers()),
                  static_cast<int64_t>(s.words()),
                  static_cast<int64_t>(s.hidden())},
                 s.data());
      source_words.push_back(s.alignment.num_source_words);
      truncated.push_back(s.alignment.truncated);
    }
    writer.set_meta(cache_key(encoder, dataset, pooling, stacks_.size(),
                              source_words, truncated));
    writer.write(path);
  }

 private:
  static json cache_key(const Encoder& encoder, const Dataset& dataset,
                        Pooling pooling, size_t sentences,
                        json source_words = {}, json truncated = {}) {
    json key = {{"kind", "activation-cache"},
                {"model_id", encoder.spec().model_id},
                {"parameter_hash", hex64(encoder.parameter_hash())},
                {"pooling", std::string(to_string(pooling))},
                {"dataset_hash", hex64(dataset_hash(dataset))},
                {"sentences", sentences}};
    if (!source_words.is_null()) key["source_words"] = std::move(source_words);
    if (!truncated.is_null()) key["truncated"] = std::move(truncated);
    return key;
  }

  bool try_adopt(TensorFileReader& reader, const Encoder& encoder,
                 const Dataset& dataset, Pooling pooling) {
    const json& meta = reader.meta();
    const json want =
        cache_key(encoder, dataset, pooling, dataset.sentences.size());
    for (const auto& [k, v] : want.items()) {
      if (k == "source_words" || k == "truncated") continue;
      if (!meta.contains(k) || meta[k] != v) return false;
    }
    if (!reader.checksum_ok()) return false;

    std::vector<LayerStack> stacks;
    stacks.reserve(dataset.sentences.size());
    auto owner = reader.retain();
    for (size_t i = 0; i < dataset.sentences.size(); ++i) {
      const std::string name = "stack." + std::to_string(i);
      if (!reader.has(name)) return false;
      const TensorEntry& e = reader.entry(name);
      if (e.shape.size() != 3) return false;
      LayerStack s = LayerStack::view(
          reader.data<float>(e), static_cast<int>(e.shape[0]),
          static_cast<int>(e.shape[1]), static_cast<int>(e.shape[2]), owner);
      s.alignment.num_source_words =
          meta.contains("source_words")
              ? meta["source_words"].at(i).get<int>()
              : static_cast<int>(e.shape[1]);
      const bool was_truncated =
          meta.contains("truncated") && meta["truncated"].at(i).get<bool>();
      s.alignment.truncated = was_truncated;
      for (int w = 0; w < static_cast<int>(e.shape[1]); ++w) {
        s.alignment.word_spans.push_back({w + 1, w + 1});
      }
      stacks.push_back(std::move(s));
    }
    stacks_ = std::move(stacks);
    return true;
  }

  std::vector<LayerStack> stacks_;
  bool built_fresh_ = false;
};

}  // namespace prosoprobe
