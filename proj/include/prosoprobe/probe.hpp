#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prosoprobe/core.hpp"
#include "prosoprobe/encoder.hpp"
#include "prosoprobe/tensor_file.hpp"

namespace prosoprobe {

// Dense stack of layer matrices; the test- and double-precision counterpart
// of LayerStack. Anything with layers()/words()/hidden()/layer(i) works as
// a stack.
template <class S>
struct DenseStack {
  std::vector<Mat<S>> data;

  int layers() const { return static_cast<int>(data.size()); }
  int words() const { return data.empty() ? 0 : static_cast<int>(data[0].rows()); }
  int hidden() const { return data.empty() ? 0 : static_cast<int>(data[0].cols()); }
  const Mat<S>& layer(int i) const { return data.at(i); }
};

template <class S>
void softmax_inplace(Eigen::Ref<Vec<S>> v) {
  const S m = v.maxCoeff();
  v = (v.array() - m).exp().matrix();
  v /= v.sum();
}

// ── mix weights ──────────────────────────────────────────────────────────

// Learnable logits of size L+1; softmax view is the measured quantity.
template <class S>
struct MixWeights {
  Vec<S> logits;

  // Zero logits give the uniform simplex point.
  static MixWeights init(int n_layers) {
    if (n_layers < 1) {
      throw std::invalid_argument("mix weights need at least one layer");
    }
    MixWeights mw;
    mw.logits = Vec<S>::Zero(n_layers);
    return mw;
  }

  int size() const { return static_cast<int>(logits.size()); }

  Vec<S> normalized() const {
    Vec<S> w = logits;
    softmax_inplace<S>(w);
    return w;
  }
};

// Softmax-normalized weights as plain numbers, detached from training.
template <class S>
std::vector<double> extract_weights(const MixWeights<S>& mw) {
  Vec<S> w = mw.normalized();
  std::vector<double> out(w.size());
  for (int i = 0; i < w.size(); ++i) out[i] = static_cast<double>(w[i]);
  return out;
}

template <class S>
MixWeights<S> init_mix_weights(int n_layers) {
  return MixWeights<S>::init(n_layers);
}

// Collapse all layers to one representation: out[t] = sum_i w_i stack[i, t].
template <class S, class StackT>
Mat<S> mix(const StackT& stack, const MixWeights<S>& mw) {
  if (stack.layers() != mw.size()) {
    throw std::invalid_argument(
        "mix: stack has " + std::to_string(stack.layers()) +
        " layers but weights have " + std::to_string(mw.size()));
  }
  const Vec<S> w = mw.normalized();
  Mat<S> out = Mat<S>::Zero(stack.words(), stack.hidden());
  for (int i = 0; i < stack.layers(); ++i) {
    out.noalias() += w[i] * stack.layer(i).template cast<S>();
  }
  return out;
}

// ── classification head ──────────────────────────────────────────────────

// Single dense layer + softmax. weight is C x H.
template <class S>
struct ClassifierHead {
  Mat<S> weight;
  Vec<S> bias;

  static ClassifierHead init(int hidden, int classes, Rng& rng,
                             double init_std = 0.02) {
    ClassifierHead h;
    h.weight.resize(classes, hidden);
    for (int r = 0; r < classes; ++r) {
      for (int c = 0; c < hidden; ++c) {
        h.weight(r, c) = static_cast<S>(rng.gaussian() * init_std);
      }
    }
    h.bias = Vec<S>::Zero(classes);
    return h;
  }

  static ClassifierHead zeros(int hidden, int classes) {
    ClassifierHead h;
    h.weight = Mat<S>::Zero(classes, hidden);
    h.bias = Vec<S>::Zero(classes);
    return h;
  }

  int classes() const { return static_cast<int>(weight.rows()); }
  int hidden() const { return static_cast<int>(weight.cols()); }
};

// Per-word class distributions plus the mask of words that count toward
// loss and accuracy.
template <class S>
struct ProbeOutput {
  Mat<S> probs;                // words x classes, rows sum to 1
  std::vector<uint8_t> mask;   // 1 = contributes

  int words() const { return static_cast<int>(probs.rows()); }
};

template <class S>
ProbeOutput<S> head_forward(const Eigen::Ref<const Mat<S>>& vectors,
                            const ClassifierHead<S>& head,
                            std::vector<uint8_t> mask = {}) {
  if (vectors.cols() != head.weight.cols()) {
    throw std::invalid_argument(
        "head_forward: input width " + std::to_string(vectors.cols()) +
        " != head width " + std::to_string(head.weight.cols()));
  }
  ProbeOutput<S> out;
  out.probs.noalias() = vectors * head.weight.transpose();
  out.probs.rowwise() += head.bias.transpose();
  for (int t = 0; t < out.probs.rows(); ++t) {
    Vec<S> row = out.probs.row(t).transpose();
    softmax_inplace<S>(row);
    out.probs.row(t) = row.transpose();
  }
  if (mask.empty()) {
    out.mask.assign(vectors.rows(), 1);
  } else {
    if (static_cast<Eigen::Index>(mask.size()) != vectors.rows()) {
      throw std::invalid_argument("head_forward: mask length mismatch");
    }
    out.mask = std::move(mask);
  }
  return out;
}

// Mean negative log-likelihood over masked-in words. An all-masked batch is
// defined as zero loss (counted in *all_masked_warnings when given).
template <class S>
S probe_loss(const ProbeOutput<S>& output, const std::vector<int>& labels,
             size_t* all_masked_warnings = nullptr) {
  if (labels.size() != output.mask.size() ||
      static_cast<Eigen::Index>(labels.size()) != output.probs.rows()) {
    throw std::invalid_argument("probe_loss: labels/mask length mismatch");
  }
  S total = 0;
  int n = 0;
  for (size_t t = 0; t < labels.size(); ++t) {
    if (!output.mask[t]) continue;
    const int y = labels[t];
    if (y < 0 || y >= output.probs.cols()) {
      throw std::invalid_argument("probe_loss: label out of range");
    }
    total -= std::log(std::max(output.probs(static_cast<Eigen::Index>(t), y),
                               std::numeric_limits<S>::min()));
    ++n;
  }
  if (n == 0) {
    if (all_masked_warnings) ++(*all_masked_warnings);
    return S(0);
  }
  return total / static_cast<S>(n);
}

// ── probe object ─────────────────────────────────────────────────────────

enum class ProbeFamily { kScalarMix, kPerLayer };

// A probe is either the trainable scalar mix over all layers or a fixed
// one-hot selection of a single layer; both share the same head.
template <class S>
struct Probe {
  ProbeFamily family = ProbeFamily::kScalarMix;
  int fixed_layer = -1;  // >= 0 for per-layer probes
  MixWeights<S> mw;
  ClassifierHead<S> head;

  static Probe scalar_mix(int n_layers, int hidden, int classes, Rng& rng) {
    Probe p;
    p.family = ProbeFamily::kScalarMix;
    p.mw = MixWeights<S>::init(n_layers);
    p.head = ClassifierHead<S>::init(hidden, classes, rng);
    return p;
  }

  // Fixed one-hot mix at layer_index; only the head trains.
  static Probe per_layer(int layer_index, int n_layers, int hidden, int classes,
                         Rng& rng) {
    if (layer_index < 0 || layer_index >= n_layers) {
      throw std::invalid_argument("layer index " + std::to_string(layer_index) +
                                  " out of range [0, " +
                                  std::to_string(n_layers) + ")");
    }
    Probe p;
    p.family = ProbeFamily::kPerLayer;
    p.fixed_layer = layer_index;
    p.mw = MixWeights<S>::init(n_layers);
    p.head = ClassifierHead<S>::init(hidden, classes, rng);
    return p;
  }

  bool mix_trainable() const { return family == ProbeFamily::kScalarMix; }

  // The exact one-hot e_k for per-layer probes, softmax(logits) otherwise.
  std::vector<double> weights() const {
    if (family == ProbeFamily::kPerLayer) {
      std::vector<double> w(mw.size(), 0.0);
      w[fixed_layer] = 1.0;
      return w;
    }
    return extract_weights(mw);
  }

  template <class StackT>
  Mat<S> mix_forward(const StackT& stack) const {
    if (family == ProbeFamily::kPerLayer) {
      if (stack.layers() != mw.size()) {
        throw std::invalid_argument("mix: layer count mismatch");
      }
      return stack.layer(fixed_layer).template cast<S>();
    }
    return mix<S>(stack, mw);
  }
};

// ── fused forward/backward ───────────────────────────────────────────────

template <class S>
struct ProbeGrad {
  Vec<S> d_logits;
  Mat<S> d_weight;
  Vec<S> d_bias;

  static ProbeGrad zeros_like(const Probe<S>& p) {
    ProbeGrad g;
    g.d_logits = Vec<S>::Zero(p.mw.size());
    g.d_weight = Mat<S>::Zero(p.head.weight.rows(), p.head.weight.cols());
    g.d_bias = Vec<S>::Zero(p.head.bias.size());
    return g;
  }

  void set_zero() {
    d_logits.setZero();
    d_weight.setZero();
    d_bias.setZero();
  }
};

struct SentenceEvalCounts {
  int correct = 0;
  int total = 0;
};

// One sentence of the batch: forward, NLL sum over masked-in words (caller
// scales by 1/denom across the batch), and gradient accumulation. When
// d_stack is non-null it receives d(loss)/d(stack[i]) for the finetune path.
template <class S, class StackT>
S probe_forward_backward(const StackT& stack, const Probe<S>& probe,
                         const std::vector<int>& labels,
                         const std::vector<uint8_t>& mask, S inv_denom,
                         ProbeGrad<S>& grad,
                         std::vector<Mat<S>>* d_stack = nullptr,
                         SentenceEvalCounts* counts = nullptr) {
  const int n_words = stack.words();
  if (static_cast<int>(labels.size()) != n_words ||
      static_cast<int>(mask.size()) != n_words) {
    throw std::invalid_argument("probe_forward_backward: label/mask length");
  }

  const Mat<S> mixed = probe.mix_forward(stack);
  ProbeOutput<S> out = head_forward<S>(mixed, probe.head, mask);

  // dZ = (P - onehot(y)) * inv_denom on masked rows.
  Mat<S> d_logits_rows = Mat<S>::Zero(n_words, probe.head.classes());
  S loss_sum = 0;
  for (int t = 0; t < n_words; ++t) {
    if (!mask[t]) continue;
    const int y = labels[t];
    if (y < 0 || y >= probe.head.classes()) {
      throw std::invalid_argument("label out of range");
    }
    loss_sum -= std::log(std::max(out.probs(t, y), std::numeric_limits<S>::min()));
    d_logits_rows.row(t) = out.probs.row(t) * inv_denom;
    d_logits_rows(t, y) -= inv_denom;
    if (counts) {
      int pred = 0;
      out.probs.row(t).maxCoeff(&pred);
      counts->correct += (pred == y) ? 1 : 0;
      ++counts->total;
    }
  }

  grad.d_weight.noalias() += d_logits_rows.transpose() * mixed;
  grad.d_bias.noalias() += d_logits_rows.colwise().sum().transpose();

  const Mat<S> d_mixed = d_logits_rows * probe.head.weight;  // words x hidden

  if (probe.family == ProbeFamily::kScalarMix) {
    const Vec<S> w = probe.mw.normalized();
    Vec<S> d_w(probe.mw.size());
    for (int i = 0; i < probe.mw.size(); ++i) {
      d_w[i] = (stack.layer(i).template cast<S>().array() * d_mixed.array()).sum();
    }
    // softmax jacobian: d_logit_i = w_i (d_w_i - sum_j w_j d_w_j)
    const S inner = w.dot(d_w);
    grad.d_logits.array() += w.array() * (d_w.array() - inner);
    if (d_stack) {
      d_stack->resize(probe.mw.size());
      for (int i = 0; i < probe.mw.size(); ++i) {
        (*d_stack)[i] = w[i] * d_mixed;
      }
    }
  } else if (d_stack) {
    d_stack->assign(probe.mw.size(), Mat<S>::Zero(n_words, stack.hidden()));
    (*d_stack)[probe.fixed_layer] = d_mixed;
  }

  return loss_sum;
}

// Evaluation-only forward: counts correct argmax predictions over the mask.
template <class S, class StackT>
SentenceEvalCounts probe_evaluate(const StackT& stack, const Probe<S>& probe,
                                  const std::vector<int>& labels,
                                  const std::vector<uint8_t>& mask,
                                  S* nll_sum = nullptr) {
  const Mat<S> mixed = probe.mix_forward(stack);
  ProbeOutput<S> out = head_forward<S>(mixed, probe.head, mask);
  SentenceEvalCounts c;
  for (int t = 0; t < stack.words(); ++t) {
    if (!mask[t]) continue;
    const int y = labels[t];
    int pred = 0;
    out.probs.row(t).maxCoeff(&pred);
    c.correct += (pred == y) ? 1 : 0;
    ++c.total;
    if (nll_sum) {
      *nll_sum -= std::log(std::max(out.probs(t, y), std::numeric_limits<S>::min()));
    }
  }
  return c;
}

// ── checkpoint serialization ─────────────────────────────────────────────

template <class S>
void save_probe(const Probe<S>& probe, const std::string& path,
                const std::string& config_hash) {
  TensorFileWriter w;
  w.add("mix.logits", probe.mw.logits);
  w.add("head.weight", probe.head.weight);
  w.add("head.bias", probe.head.bias);
  w.set_meta({{"kind", "probe"},
              {"family", probe.family == ProbeFamily::kScalarMix ? "scalar_mix"
                                                                 : "per_layer"},
              {"fixed_layer", probe.fixed_layer},
              {"layer_count", probe.mw.size()},
              {"class_count", probe.head.classes()},
              {"hidden_size", probe.head.hidden()},
              {"config_hash", config_hash}});
  w.write(path);
}

template <class S>
Probe<S> load_probe(const std::string& path) {
  auto r = TensorFileReader::open(path);
  if (r.meta().value("kind", "") != "probe") {
    throw IoError("'" + path + "' is not a probe checkpoint");
  }
  if (!r.checksum_ok()) throw IoError("'" + path + "': checksum mismatch");
  Probe<S> p;
  p.family = r.meta().value("family", "scalar_mix") == "per_layer"
                 ? ProbeFamily::kPerLayer
                 : ProbeFamily::kScalarMix;
  p.fixed_layer = r.meta().value("fixed_layer", -1);
  p.mw.logits = r.read_vector<S>("mix.logits");
  p.head.weight = r.read_matrix<S>("head.weight");
  p.head.bias = r.read_vector<S>("head.bias");
  return p;
}

}  // namespace prosoprobe
