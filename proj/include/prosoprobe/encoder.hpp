#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prosoprobe/core.hpp"
#include "prosoprobe/corpus.hpp"

namespace prosoprobe {

enum class Mode { kFrozen, kFinetune };
enum class Pooling { kFirstPiece, kMeanPieces };

inline std::string_view to_string(Pooling p) {
  return p == Pooling::kFirstPiece ? "first" : "mean";
}

inline std::optional<Pooling> parse_pooling(std::string_view s) {
  if (s == "first") return Pooling::kFirstPiece;
  if (s == "mean") return Pooling::kMeanPieces;
  return std::nullopt;
}

struct EncoderSpec {
  std::string model_id = "bert-base-uncased";
  int num_layers = 12;   // L; the stack exposes L+1 layer outputs
  int hidden_size = 768;
  int max_sequence_length = 512;
  bool lowercase = true;

  int layer_count() const { return num_layers + 1; }

  void validate() const {
    if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
    if (hidden_size < 1) throw std::invalid_argument("hidden_size must be >= 1");
    if (max_sequence_length < 3) {
      throw std::invalid_argument("max_sequence_length too small");
    }
  }

  // "uncased" in the identifier implies lowercased input.
  static EncoderSpec for_model(const std::string& model_id) {
    EncoderSpec s;
    s.model_id = model_id;
    s.lowercase = model_id.find("uncased") != std::string::npos;
    return s;
  }
};

// Word-to-subword map for one sentence. Spans index into the piece sequence
// [start-marker, pieces..., end-marker] and never cover marker positions.
struct SubwordAlignment {
  struct Span {
    int begin = 0;
    int end = 0;  // inclusive
    int length() const { return end - begin + 1; }
  };

  std::vector<std::string> pieces;  // includes the start/end markers
  std::vector<int> piece_ids;       // vocab ids, parallel to pieces (may be empty)
  std::vector<Span> word_spans;     // one per kept word, in order
  int num_source_words = 0;
  bool truncated = false;

  int num_words() const { return static_cast<int>(word_spans.size()); }

  void validate() const {
    int prev_end = 0;  // position 0 is the start marker
    for (const auto& s : word_spans) {
      if (s.begin <= prev_end || s.end < s.begin ||
          s.end >= static_cast<int>(pieces.size()) - 1) {
        throw std::logic_error("subword alignment spans are inconsistent");
      }
      prev_end = s.end;
    }
    if (truncated && num_words() >= num_source_words) {
      throw std::logic_error("truncation flag set but no words dropped");
    }
  }
};

// Per-word hidden states from all L+1 encoder layers, contiguous row-major
// (layer, word, hidden). May own its storage or view a mapped cache file.
class LayerStack {
 public:
  LayerStack() = default;

  static LayerStack allocate(int layers, int words, int hidden) {
    LayerStack s;
    s.layers_ = layers;
    s.words_ = words;
    s.hidden_ = hidden;
    auto buf = std::make_shared<std::vector<float>>(
        static_cast<size_t>(layers) * words * hidden, 0.0f);
    s.data_ = buf->data();
    s.owner_ = buf;
    return s;
  }

  static LayerStack view(const float* data, int layers, int words, int hidden,
                         std::shared_ptr<const void> owner) {
    LayerStack s;
    s.layers_ = layers;
    s.words_ = words;
    s.hidden_ = hidden;
    s.data_ = data;
    s.owner_ = std::move(owner);
    return s;
  }

  int layers() const { return layers_; }
  int words() const { return words_; }
  int hidden() const { return hidden_; }

  Eigen::Map<const MatF> layer(int i) const {
    check_layer(i);
    return {data_ + static_cast<size_t>(i) * words_ * hidden_, words_, hidden_};
  }

  Eigen::Map<MatF> mutable_layer(int i) {
    check_layer(i);
    return {const_cast<float*>(data_) + static_cast<size_t>(i) * words_ * hidden_,
            words_, hidden_};
  }

  const float* data() const { return data_; }
  size_t size() const {
    return static_cast<size_t>(layers_) * words_ * hidden_;
  }

  bool all_finite() const {
    for (size_t i = 0; i < size(); ++i) {
      if (!std::isfinite(data_[i])) return false;
    }
    return true;
  }

  SubwordAlignment alignment;  // pieces may be dropped when cached
  bool frozen = true;

 private:
  void check_layer(int i) const {
    if (i < 0 || i >= layers_) {
      throw std::out_of_range("layer index " + std::to_string(i) +
                              " out of range [0, " + std::to_string(layers_) + ")");
    }
  }

  int layers_ = 0;
  int words_ = 0;
  int hidden_ = 0;
  const float* data_ = nullptr;
  std::shared_ptr<const void> owner_;
};

// ── subword pooling ──────────────────────────────────────────────────────

// Reduce subword activations (pieces x hidden, marker rows included) to one
// row per word.
template <class S>
Mat<S> pool_word_representations(const Eigen::Ref<const Mat<S>>& subword,
                                 const SubwordAlignment& alignment,
                                 Pooling strategy) {
  Mat<S> out(alignment.num_words(), subword.cols());
  for (int w = 0; w < alignment.num_words(); ++w) {
    const auto& span = alignment.word_spans[w];
    if (span.end >= subword.rows() || span.begin > span.end) {
      throw std::logic_error("alignment span exceeds activation length");
    }
    if (strategy == Pooling::kFirstPiece) {
      out.row(w) = subword.row(span.begin);
    } else {
      out.row(w) = subword.middleRows(span.begin, span.length())
                       .colwise()
                       .mean();
    }
  }
  return out;
}

// Adjoint of pool_word_representations: spread word-level gradients back
// onto subword rows (marker rows receive zero).
template <class S>
Mat<S> pool_backward(const Eigen::Ref<const Mat<S>>& d_words,
                     const SubwordAlignment& alignment, Pooling strategy,
                     int num_pieces) {
  Mat<S> d_sub = Mat<S>::Zero(num_pieces, d_words.cols());
  for (int w = 0; w < alignment.num_words(); ++w) {
    const auto& span = alignment.word_spans[w];
    if (strategy == Pooling::kFirstPiece) {
      d_sub.row(span.begin) += d_words.row(w);
    } else {
      const S inv = S(1) / static_cast<S>(span.length());
      for (int p = span.begin; p <= span.end; ++p) {
        d_sub.row(p) += d_words.row(w) * inv;
      }
    }
  }
  return d_sub;
}

// ── encoder interface ────────────────────────────────────────────────────

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual const EncoderSpec& spec() const = 0;

  virtual SubwordAlignment align(const LabeledSentence& sentence) const = 0;

  // Frozen forward pass; bitwise-reproducible for identical inputs.
  LayerStack encode_frozen(const LabeledSentence& sentence, Pooling pooling) {
    ++encode_calls_;
    LayerStack s = do_encode_frozen(sentence, pooling);
    s.frozen = true;
    return s;
  }

  std::vector<LayerStack> encode_frozen_batch(
      std::span<const LabeledSentence> batch, Pooling pooling) {
    std::vector<LayerStack> out;
    out.reserve(batch.size());
    for (const auto& s : batch) out.push_back(encode_frozen(s, pooling));
    return out;
  }

  // FNV-64 over all parameter bytes; the frozen-mode invariant compares
  // this before and after training.
  virtual uint64_t parameter_hash() const = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;

  // Number of frozen forward passes served (cache tests observe this).
  size_t encode_calls() const { return encode_calls_; }

 protected:
  virtual LayerStack do_encode_frozen(const LabeledSentence& sentence,
                                      Pooling pooling) = 0;

 private:
  size_t encode_calls_ = 0;
};

}  // namespace prosoprobe
