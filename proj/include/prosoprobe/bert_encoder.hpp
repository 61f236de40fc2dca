#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "prosoprobe/bert.hpp"
#include "prosoprobe/encoder.hpp"
#include "prosoprobe/probe.hpp"
#include "prosoprobe/wordpiece.hpp"

namespace prosoprobe {

// Encoder backed by an in-process transformer. Checkpoint directories hold
// config.json, vocab.txt, and weights.pptc (see tools/hf_export.py for the
// conversion from a published checkpoint).
class BertEncoder final : public Encoder {
 public:
  BertEncoder(BertModel<float> model, WordPieceVocab vocab, EncoderSpec spec)
      : model_(std::move(model)), vocab_(std::move(vocab)), spec_(std::move(spec)) {
    if (spec_.num_layers != model_.dims().num_layers ||
        spec_.hidden_size != model_.dims().hidden_size) {
      throw std::invalid_argument("encoder spec does not match model dims");
    }
    spec_.validate();
  }

  static BertEncoder load_dir(const std::string& dir) {
    std::ifstream in(dir + "/config.json");
    if (!in) throw IoError("cannot open '" + dir + "/config.json'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError(dir + "/config.json: " + e.what());
    }
    const BertDims dims = BertDims::from_json(j);
    EncoderSpec spec = EncoderSpec::for_model(
        j.value("model_id", j.value("_name_or_path", "bert-base-uncased")));
    spec.num_layers = dims.num_layers;
    spec.hidden_size = dims.hidden_size;
    spec.max_sequence_length = dims.max_position;
    if (j.contains("do_lower_case")) {
      spec.lowercase = j["do_lower_case"].get<bool>();
    }
    return BertEncoder(BertModel<float>::load(dir + "/weights.pptc", dims),
                       WordPieceVocab::load(dir + "/vocab.txt"),
                       std::move(spec));
  }

  static BertEncoder random_for_tests(const BertDims& dims,
                                      const WordPieceVocab& vocab,
                                      uint64_t seed) {
    EncoderSpec spec = EncoderSpec::for_model("bert-random-test");
    spec.num_layers = dims.num_layers;
    spec.hidden_size = dims.hidden_size;
    spec.max_sequence_length = dims.max_position;
    spec.lowercase = true;
    return BertEncoder(BertModel<float>::random(dims, seed), vocab,
                       std::move(spec));
  }

  const EncoderSpec& spec() const override { return spec_; }

  SubwordAlignment align(const LabeledSentence& sentence) const override {
    return tokenize_align(sentence, vocab_, spec_);
  }

  uint64_t parameter_hash() const override { return model_.param_hash(); }

  std::unique_ptr<Encoder> clone() const override {
    return std::make_unique<BertEncoder>(*this);
  }

  BertModel<float>& model() { return model_; }
  const BertModel<float>& model() const { return model_; }
  const WordPieceVocab& vocab() const { return vocab_; }

  // ── fine-tuning surface ──────────────────────────────────────────────

  struct TrainForward {
    SubwordAlignment alignment;
    DenseStack<float> stack;  // pooled to word level, L+1 layers
    BertModel<float>::Tape tape;
  };

  TrainForward forward_train(const LabeledSentence& sentence, Pooling pooling) {
    TrainForward f;
    f.alignment = tokenize_align(sentence, vocab_, spec_);
    const auto hidden = model_.forward(f.alignment.piece_ids, &f.tape);
    f.stack.data.reserve(hidden.size());
    for (const auto& h : hidden) {
      f.stack.data.push_back(
          pool_word_representations<float>(h, f.alignment, pooling));
    }
    return f;
  }

  // d_stack holds word-level gradients per layer; they are spread back to
  // subword rows and pushed through the whole transformer.
  void backward_train(const TrainForward& f, const std::vector<MatF>& d_stack,
                      Pooling pooling) {
    const int pieces = static_cast<int>(f.alignment.pieces.size());
    std::vector<MatF> d_hidden(d_stack.size());
    for (size_t i = 0; i < d_stack.size(); ++i) {
      if (d_stack[i].size() == 0) continue;
      d_hidden[i] =
          pool_backward<float>(d_stack[i], f.alignment, pooling, pieces);
    }
    model_.backward(f.tape, d_hidden);
  }

 protected:
  LayerStack do_encode_frozen(const LabeledSentence& sentence,
                              Pooling pooling) override {
    SubwordAlignment a = tokenize_align(sentence, vocab_, spec_);
    const auto hidden = model_.forward(a.piece_ids);
    LayerStack stack = LayerStack::allocate(static_cast<int>(hidden.size()),
                                            a.num_words(), spec_.hidden_size);
    for (size_t i = 0; i < hidden.size(); ++i) {
      stack.mutable_layer(static_cast<int>(i)) =
          pool_word_representations<float>(hidden[i], a, pooling);
    }
    stack.alignment = std::move(a);
    return stack;
  }

 private:
  BertModel<float> model_;
  WordPieceVocab vocab_;
  EncoderSpec spec_;
};

}  // namespace prosoprobe
