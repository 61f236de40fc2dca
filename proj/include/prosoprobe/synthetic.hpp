#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosoprobe/core.hpp"
#include "prosoprobe/encoder.hpp"

namespace prosoprobe {

using json = nlohmann::json;

// Configuration for the synthetic localization encoder. latent_size must
// exceed hidden_size: every layer output is a fixed random projection
// R_i (hidden x latent) of a per-word latent vector, so a signal that is
// linear in one layer's output is only partially recoverable from the
// others (each projection discards a different part of the latent space).
struct SyntheticConfig {
  int hidden_size = 32;
  int latent_size = 64;
  int num_layers = 4;  // stack exposes num_layers+1 outputs
  int max_sequence_length = 128;
  uint64_t seed = 7;

  void validate() const {
    if (latent_size <= hidden_size) {
      throw std::invalid_argument(
          "synthetic encoder needs latent_size > hidden_size");
    }
    if (hidden_size < 1 || num_layers < 1) {
      throw std::invalid_argument("bad synthetic encoder dimensions");
    }
  }

  static SyntheticConfig from_json(const json& j) {
    SyntheticConfig c;
    c.hidden_size = j.value("hidden_size", c.hidden_size);
    c.latent_size = j.value("latent_size", c.latent_size);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.max_sequence_length = j.value("max_sequence_length", c.max_sequence_length);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  }

  json to_json() const {
    return {{"hidden_size", hidden_size},
            {"latent_size", latent_size},
            {"num_layers", num_layers},
            {"max_sequence_length", max_sequence_length},
            {"seed", seed}};
  }
};

// Deterministic toy encoder: each word maps to a latent gaussian vector
// keyed by its text, and layer i emits R_i * latent. One word is always
// one "piece"; sentences longer than the budget are truncated whole-word
// like the real tokenizer.
class SyntheticEncoder final : public Encoder {
 public:
  explicit SyntheticEncoder(const SyntheticConfig& cfg,
                            std::string name = "synthetic:default")
      : cfg_(cfg) {
    cfg_.validate();
    spec_.model_id = std::move(name);
    spec_.num_layers = cfg_.num_layers;
    spec_.hidden_size = cfg_.hidden_size;
    spec_.max_sequence_length = cfg_.max_sequence_length;
    spec_.lowercase = false;

    Rng rng(cfg_.seed);
    maps_.reserve(cfg_.num_layers + 1);
    for (int i = 0; i <= cfg_.num_layers; ++i) {
      MatF r(cfg_.hidden_size, cfg_.latent_size);
      const float scale = 1.0f / std::sqrt(static_cast<float>(cfg_.latent_size));
      for (Eigen::Index a = 0; a < r.rows(); ++a) {
        for (Eigen::Index b = 0; b < r.cols(); ++b) {
          r(a, b) = static_cast<float>(rng.gaussian()) * scale;
        }
      }
      maps_.push_back(std::move(r));
    }
  }

  const EncoderSpec& spec() const override { return spec_; }
  const SyntheticConfig& config() const { return cfg_; }

  VecF latent(const std::string& word) const {
    Rng rng(fnv1a(word, cfg_.seed ^ 0x9e3779b97f4a7c15ull));
    VecF e(cfg_.latent_size);
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      e[i] = static_cast<float>(rng.gaussian());
    }
    return e;
  }

  // Layer output for a single word (used when constructing tasks).
  VecF word_layer(const std::string& word, int layer) const {
    if (layer < 0 || layer > cfg_.num_layers) {
      throw std::out_of_range("layer out of range");
    }
    return maps_[layer] * latent(word);
  }

  SubwordAlignment align(const LabeledSentence& sentence) const override {
    SubwordAlignment a;
    a.num_source_words = static_cast<int>(sentence.tokens.size());
    const int budget = spec_.max_sequence_length - 2;
    const int kept = std::min(a.num_source_words, budget);
    a.truncated = kept < a.num_source_words;
    a.pieces.reserve(kept + 2);
    a.pieces.push_back("[CLS]");
    for (int i = 0; i < kept; ++i) {
      a.pieces.push_back(sentence.tokens[i].text);
      a.word_spans.push_back({i + 1, i + 1});
    }
    a.pieces.push_back("[SEP]");
    a.validate();
    return a;
  }

  uint64_t parameter_hash() const override {
    uint64_t h = fnv1a(spec_.model_id);
    for (const auto& m : maps_) {
      h = fnv1a(m.data(), sizeof(float) * m.size(), h);
    }
    return h;
  }

  std::unique_ptr<Encoder> clone() const override {
    return std::make_unique<SyntheticEncoder>(*this);
  }

 protected:
  LayerStack do_encode_frozen(const LabeledSentence& sentence,
                              Pooling pooling) override {
    (void)pooling;  // one piece per word; both strategies coincide
    SubwordAlignment a = align(sentence);
    LayerStack stack =
        LayerStack::allocate(cfg_.num_layers + 1, a.num_words(), cfg_.hidden_size);
    for (int w = 0; w < a.num_words(); ++w) {
      const VecF e = latent(sentence.tokens[w].text);
      for (int i = 0; i <= cfg_.num_layers; ++i) {
        stack.mutable_layer(i).row(w) = (maps_[i] * e).transpose();
      }
    }
    stack.alignment = std::move(a);
    return stack;
  }

 private:
  SyntheticConfig cfg_;
  EncoderSpec spec_;
  std::vector<MatF> maps_;
};

// Build a word-labeling dataset whose labels are linear in one chosen
// layer's output: label = sign(u . encoder.word_layer(word, layer)). Words
// whose |score| falls in the lowest (1 - keep_fraction) of the candidate
// pool are discarded so the kept classes are cleanly separable at that
// layer while staying ambiguous elsewhere.
struct SyntheticTask {
  Dataset dataset;
  int layer = 0;
  std::vector<std::string> vocabulary;  // kept words
};

inline SyntheticTask make_synthetic_task(const SyntheticEncoder& encoder,
                                         int layer, int num_sentences,
                                         int words_per_sentence, uint64_t seed,
                                         int candidate_words = 2000,
                                         double keep_fraction = 0.5) {
  if (layer < 0 || layer > encoder.config().num_layers) {
    throw std::invalid_argument("task layer out of range");
  }
  if (num_sentences < 1 || words_per_sentence < 1) {
    throw std::invalid_argument("task size must be positive");
  }
  if (keep_fraction <= 0.0 || keep_fraction > 1.0) {
    throw std::invalid_argument("keep_fraction must be in (0, 1]");
  }

  Rng rng(seed);
  VecF u(encoder.config().hidden_size);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u[i] = static_cast<float>(rng.gaussian());
  }

  struct Scored {
    std::string word;
    float score;
  };
  std::vector<Scored> pool;
  pool.reserve(candidate_words);
  std::vector<float> magnitudes;
  magnitudes.reserve(candidate_words);
  for (int i = 0; i < candidate_words; ++i) {
    std::string word = "w" + std::to_string(i);
    const float score = u.dot(encoder.word_layer(word, layer));
    pool.push_back({std::move(word), score});
    magnitudes.push_back(std::abs(score));
  }
  const size_t cut_index =
      std::min(magnitudes.size() - 1,
               static_cast<size_t>((1.0 - keep_fraction) * magnitudes.size()));
  std::nth_element(magnitudes.begin(), magnitudes.begin() + cut_index,
                   magnitudes.end());
  const float threshold = magnitudes[cut_index];

  SyntheticTask task;
  task.layer = layer;
  std::vector<Prominence> labels;
  for (const auto& s : pool) {
    if (std::abs(s.score) >= threshold) {
      task.vocabulary.push_back(s.word);
      labels.push_back(s.score > 0 ? Prominence::kProminent
                                   : Prominence::kNonProminent);
    }
  }
  if (task.vocabulary.size() < 2) {
    throw std::logic_error("margin filter left too few words");
  }

  task.dataset.name = "synthetic-layer" + std::to_string(layer);
  task.dataset.task_labels_present = {Task::kProminence};
  for (int s = 0; s < num_sentences; ++s) {
    LabeledSentence sent;
    sent.doc_id = "synthetic";
    sent.sentence_index = s;
    for (int w = 0; w < words_per_sentence; ++w) {
      const size_t pick = rng.below(task.vocabulary.size());
      WordToken tok;
      tok.text = task.vocabulary[pick];
      tok.prominence = labels[pick];
      sent.tokens.push_back(std::move(tok));
    }
    task.dataset.sentences.push_back(std::move(sent));
  }
  return task;
}

}  // namespace prosoprobe
