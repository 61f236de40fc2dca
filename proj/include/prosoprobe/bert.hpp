#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosoprobe/core.hpp"
#include "prosoprobe/tensor_file.hpp"

namespace prosoprobe {

struct BertDims {
  int vocab_size = 30522;
  int hidden_size = 768;
  int num_layers = 12;
  int num_heads = 12;
  int intermediate_size = 3072;
  int max_position = 512;
  int type_vocab = 2;
  double layer_norm_eps = 1e-12;

  int head_dim() const { return hidden_size / num_heads; }

  void validate() const {
    if (hidden_size % num_heads != 0) {
      throw std::invalid_argument("hidden_size must divide by num_heads");
    }
    if (vocab_size < 1 || num_layers < 1 || max_position < 1) {
      throw std::invalid_argument("bad transformer dimensions");
    }
  }

  static BertDims from_json(const json& j) {
    BertDims d;
    d.vocab_size = j.value("vocab_size", d.vocab_size);
    d.hidden_size = j.value("hidden_size", d.hidden_size);
    d.num_layers = j.value("num_hidden_layers", d.num_layers);
    d.num_heads = j.value("num_attention_heads", d.num_heads);
    d.intermediate_size = j.value("intermediate_size", d.intermediate_size);
    d.max_position = j.value("max_position_embeddings", d.max_position);
    d.type_vocab = j.value("type_vocab_size", d.type_vocab);
    d.layer_norm_eps = j.value("layer_norm_eps", d.layer_norm_eps);
    d.validate();
    return d;
  }
};

template <class S>
struct NamedParam {
  std::string name;
  Mat<S> value;
  Mat<S> grad;  // empty until training allocates it

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Mat<S>::Zero(value.rows(), value.cols());
    }
  }
};

namespace detail {

template <class S>
struct LayerNormed {
  Mat<S> y;
  Mat<S> xhat;
  Vec<S> inv_std;
};

template <class S>
LayerNormed<S> layer_norm(const Mat<S>& x, const Mat<S>& gamma,
                          const Mat<S>& beta, double eps) {
  LayerNormed<S> out;
  const auto cols = x.cols();
  out.xhat.resize(x.rows(), cols);
  out.inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mu = x.row(r).mean();
    const S var = (x.row(r).array() - mu).square().sum() / static_cast<S>(cols);
    const S inv = S(1) / std::sqrt(var + static_cast<S>(eps));
    out.inv_std[r] = inv;
    out.xhat.row(r) = (x.row(r).array() - mu) * inv;
  }
  out.y = ((out.xhat.array().rowwise() * gamma.row(0).array()).rowwise() +
           beta.row(0).array())
              .matrix();
  return out;
}

// Returns d_x; accumulates parameter gradients into d_gamma/d_beta.
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& d_y, const LayerNormed<S>& saved,
                           const Mat<S>& gamma, Mat<S>& d_gamma, Mat<S>& d_beta) {
  const auto cols = saved.xhat.cols();
  d_gamma.row(0).array() += (d_y.array() * saved.xhat.array()).colwise().sum();
  d_beta.row(0).array() += d_y.array().colwise().sum();
  Mat<S> d_x(d_y.rows(), cols);
  for (Eigen::Index r = 0; r < d_y.rows(); ++r) {
    const auto d_xhat = (d_y.row(r).array() * gamma.row(0).array()).eval();
    const S m1 = d_xhat.mean();
    const S m2 = (d_xhat * saved.xhat.row(r).array()).mean();
    d_x.row(r) =
        (saved.inv_std[r] * (d_xhat - m1 - saved.xhat.row(r).array() * m2))
            .matrix();
  }
  return d_x;
}

template <class S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(M_SQRT1_2)));
}

template <class S>
S gelu_grad(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x * S(M_SQRT1_2)));
  const S pdf = std::exp(S(-0.5) * x * x) * S(0.3989422804014327);
  return cdf + x * pdf;
}

}  // namespace detail

// Bidirectional transformer encoder (BERT-base layout): embeddings with
// layer norm, then num_layers post-norm blocks of self-attention + GELU FFN.
// forward() returns all num_layers+1 hidden-state matrices; backward()
// accepts a gradient for every one of them.
template <class S>
class BertModel {
 public:
  explicit BertModel(const BertDims& dims) : dims_(dims) {
    dims_.validate();
    build_params();
  }

  static BertModel random(const BertDims& dims, uint64_t seed,
                          double init_std = 0.02) {
    BertModel m(dims);
    Rng rng(seed);
    for (auto& p : m.params_) {
      const bool is_ln_gamma = p.name.find(".gamma") != std::string::npos;
      const bool is_bias = p.name.find(".bias") != std::string::npos ||
                           p.name.find(".beta") != std::string::npos;
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
          p.value(r, c) = is_ln_gamma ? S(1)
                          : is_bias   ? S(0)
                                      : static_cast<S>(rng.gaussian() * init_std);
        }
      }
    }
    return m;
  }

  static BertModel load(const std::string& weights_path, const BertDims& dims) {
    BertModel m(dims);
    auto r = TensorFileReader::open(weights_path, /*use_mmap=*/true);
    if (!r.checksum_ok()) {
      throw IoError("'" + weights_path + "': weight checksum mismatch");
    }
    for (auto& p : m.params_) {
      const TensorEntry& e = r.entry(p.name);
      if (e.shape.size() != 2 || e.shape[0] != p.value.rows() ||
          e.shape[1] != p.value.cols()) {
        throw IoError("tensor '" + p.name + "' has unexpected shape");
      }
      p.value = Eigen::Map<const MatF>(r.template data<float>(e), e.shape[0],
                                       e.shape[1])
                    .template cast<S>();
    }
    return m;
  }

  void save(const std::string& path, json extra_meta = {}) const {
    TensorFileWriter w;
    for (const auto& p : params_) {
      const MatF as_f32 = p.value.template cast<float>();
      w.add(p.name, as_f32);
    }
    json meta = {{"kind", "bert-weights"},
                 {"vocab_size", dims_.vocab_size},
                 {"hidden_size", dims_.hidden_size},
                 {"num_hidden_layers", dims_.num_layers},
                 {"num_attention_heads", dims_.num_heads},
                 {"intermediate_size", dims_.intermediate_size},
                 {"max_position_embeddings", dims_.max_position},
                 {"type_vocab_size", dims_.type_vocab},
                 {"layer_norm_eps", dims_.layer_norm_eps}};
    if (extra_meta.is_object()) meta.update(extra_meta);
    w.set_meta(meta);
    w.write(path);
  }

  const BertDims& dims() const { return dims_; }

  // ── forward ────────────────────────────────────────────────────────────

  struct LayerTape {
    Mat<S> h_in;
    Mat<S> q, k, v;               // T x H
    std::vector<Mat<S>> attn;     // per head, T x T softmax rows
    Mat<S> ctx;                   // T x H
    detail::LayerNormed<S> ln1;   // over h_in + attention output
    Mat<S> ffn_pre;               // T x I, pre-GELU
    Mat<S> ffn_act;               // T x I
    detail::LayerNormed<S> ln2;
  };

  struct Tape {
    std::vector<int> ids;
    Mat<S> emb_sum;                 // pre-norm embedding sum
    detail::LayerNormed<S> emb_ln;
    std::vector<LayerTape> layers;
  };

  // All L+1 hidden states at subword resolution; index 0 is the embedding
  // output. ids must include the [CLS]/[SEP] markers.
  std::vector<Mat<S>> forward(const std::vector<int>& ids,
                              Tape* tape = nullptr) const {
    const int T = static_cast<int>(ids.size());
    if (T < 1 || T > dims_.max_position) {
      throw std::invalid_argument("sequence length " + std::to_string(T) +
                                  " out of range");
    }
    const int H = dims_.hidden_size;

    Mat<S> x(T, H);
    for (int t = 0; t < T; ++t) {
      const int id = ids[t];
      if (id < 0 || id >= dims_.vocab_size) {
        throw std::invalid_argument("token id out of range");
      }
      x.row(t) = value(kWord).row(id) + value(kPosition).row(t) +
                 value(kTokenType).row(0);
    }
    auto emb_ln = detail::layer_norm<S>(x, value(kEmbGamma), value(kEmbBeta),
                                        dims_.layer_norm_eps);
    if (tape) {
      tape->ids = ids;
      tape->emb_sum = std::move(x);
      tape->layers.clear();
      tape->layers.reserve(dims_.num_layers);
    }

    std::vector<Mat<S>> hidden;
    hidden.reserve(dims_.num_layers + 1);
    hidden.push_back(emb_ln.y);
    if (tape) tape->emb_ln = std::move(emb_ln);

    const int heads = dims_.num_heads;
    const int dh = dims_.head_dim();
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));

    for (int l = 0; l < dims_.num_layers; ++l) {
      const Mat<S>& h = hidden.back();
      LayerTape lt;

      Mat<S> q = (h * value(att(l, kQueryW)).transpose()).rowwise() +
                 value(att(l, kQueryB)).row(0);
      Mat<S> k = (h * value(att(l, kKeyW)).transpose()).rowwise() +
                 value(att(l, kKeyB)).row(0);
      Mat<S> v = (h * value(att(l, kValueW)).transpose()).rowwise() +
                 value(att(l, kValueB)).row(0);

      Mat<S> ctx(T, H);
      std::vector<Mat<S>> attn(heads);
      for (int hd = 0; hd < heads; ++hd) {
        const auto qh = q.middleCols(hd * dh, dh);
        const auto kh = k.middleCols(hd * dh, dh);
        const auto vh = v.middleCols(hd * dh, dh);
        Mat<S> scores = qh * kh.transpose() * scale;
        for (int r = 0; r < T; ++r) {
          const S mx = scores.row(r).maxCoeff();
          scores.row(r) = (scores.row(r).array() - mx).exp().matrix();
          scores.row(r) /= scores.row(r).sum();
        }
        ctx.middleCols(hd * dh, dh).noalias() = scores * vh;
        attn[hd] = std::move(scores);
      }

      Mat<S> attn_out = (ctx * value(att(l, kOutW)).transpose()).rowwise() +
                        value(att(l, kOutB)).row(0);
      Mat<S> r1 = h + attn_out;
      auto ln1 = detail::layer_norm<S>(r1, value(att(l, kLn1Gamma)),
                                       value(att(l, kLn1Beta)),
                                       dims_.layer_norm_eps);

      Mat<S> ffn_pre = (ln1.y * value(ffn(l, kInterW)).transpose()).rowwise() +
                       value(ffn(l, kInterB)).row(0);
      Mat<S> ffn_act = ffn_pre.unaryExpr([](S x) { return detail::gelu(x); });
      Mat<S> ffn_out = (ffn_act * value(ffn(l, kFfnOutW)).transpose()).rowwise() +
                       value(ffn(l, kFfnOutB)).row(0);
      Mat<S> r2 = ln1.y + ffn_out;
      auto ln2 = detail::layer_norm<S>(r2, value(ffn(l, kLn2Gamma)),
                                       value(ffn(l, kLn2Beta)),
                                       dims_.layer_norm_eps);

      hidden.push_back(ln2.y);
      if (tape) {
        lt.h_in = h;
        lt.q = std::move(q);
        lt.k = std::move(k);
        lt.v = std::move(v);
        lt.attn = std::move(attn);
        lt.ctx = std::move(ctx);
        lt.ln1 = std::move(ln1);
        lt.ffn_pre = std::move(ffn_pre);
        lt.ffn_act = std::move(ffn_act);
        lt.ln2 = std::move(ln2);
        tape->layers.push_back(std::move(lt));
      }
    }
    return hidden;
  }

  // ── backward ───────────────────────────────────────────────────────────

  // d_hidden[i] is d(loss)/d(hidden state i), one per L+1 outputs (empty
  // matrices are treated as zero). Accumulates into parameter grads.
  void backward(const Tape& tape, const std::vector<Mat<S>>& d_hidden) {
    if (static_cast<int>(d_hidden.size()) != dims_.num_layers + 1) {
      throw std::invalid_argument("backward needs num_layers+1 gradients");
    }
    alloc_grads();
    const int T = static_cast<int>(tape.ids.size());
    const int H = dims_.hidden_size;
    const int heads = dims_.num_heads;
    const int dh = dims_.head_dim();
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));

    auto grad_or_zero = [&](int i) -> Mat<S> {
      if (d_hidden[i].size() == 0) return Mat<S>::Zero(T, H);
      return d_hidden[i];
    };

    Mat<S> d = grad_or_zero(dims_.num_layers);
    for (int l = dims_.num_layers - 1; l >= 0; --l) {
      const LayerTape& lt = tape.layers[l];

      // ln2 and the ffn residual
      Mat<S> d_r2 = detail::layer_norm_backward<S>(
          d, lt.ln2, value(ffn(l, kLn2Gamma)), grad(ffn(l, kLn2Gamma)),
          grad(ffn(l, kLn2Beta)));
      Mat<S>& d_ffn_out = d_r2;  // same tensor feeds both paths
      Mat<S> d_h1 = d_r2;

      // ffn output dense
      grad(ffn(l, kFfnOutW)).noalias() += d_ffn_out.transpose() * lt.ffn_act;
      grad(ffn(l, kFfnOutB)).row(0) += d_ffn_out.colwise().sum();
      Mat<S> d_act = d_ffn_out * value(ffn(l, kFfnOutW));

      // gelu
      Mat<S> d_pre =
          d_act.cwiseProduct(lt.ffn_pre.unaryExpr(
              [](S x) { return detail::gelu_grad(x); }));

      // ffn intermediate dense
      grad(ffn(l, kInterW)).noalias() += d_pre.transpose() * lt.ln1.y;
      grad(ffn(l, kInterB)).row(0) += d_pre.colwise().sum();
      d_h1.noalias() += d_pre * value(ffn(l, kInterW));

      // ln1 and the attention residual
      Mat<S> d_r1 = detail::layer_norm_backward<S>(
          d_h1, lt.ln1, value(att(l, kLn1Gamma)), grad(att(l, kLn1Gamma)),
          grad(att(l, kLn1Beta)));
      Mat<S> d_hin = d_r1;

      // attention output dense
      grad(att(l, kOutW)).noalias() += d_r1.transpose() * lt.ctx;
      grad(att(l, kOutB)).row(0) += d_r1.colwise().sum();
      Mat<S> d_ctx = d_r1 * value(att(l, kOutW));

      Mat<S> d_q(T, H), d_k(T, H), d_v(T, H);
      for (int hd = 0; hd < heads; ++hd) {
        const auto d_ctxh = d_ctx.middleCols(hd * dh, dh);
        const auto vh = lt.v.middleCols(hd * dh, dh);
        const auto qh = lt.q.middleCols(hd * dh, dh);
        const auto kh = lt.k.middleCols(hd * dh, dh);
        const Mat<S>& a = lt.attn[hd];

        Mat<S> d_a = d_ctxh * vh.transpose();
        d_v.middleCols(hd * dh, dh).noalias() = a.transpose() * d_ctxh;

        Mat<S> d_scores(T, T);
        for (int r = 0; r < T; ++r) {
          const S inner = a.row(r).dot(d_a.row(r));
          d_scores.row(r) =
              (a.row(r).array() * (d_a.row(r).array() - inner)).matrix();
        }
        d_q.middleCols(hd * dh, dh).noalias() = d_scores * kh * scale;
        d_k.middleCols(hd * dh, dh).noalias() = d_scores.transpose() * qh * scale;
      }

      grad(att(l, kQueryW)).noalias() += d_q.transpose() * lt.h_in;
      grad(att(l, kQueryB)).row(0) += d_q.colwise().sum();
      grad(att(l, kKeyW)).noalias() += d_k.transpose() * lt.h_in;
      grad(att(l, kKeyB)).row(0) += d_k.colwise().sum();
      grad(att(l, kValueW)).noalias() += d_v.transpose() * lt.h_in;
      grad(att(l, kValueB)).row(0) += d_v.colwise().sum();

      d_hin.noalias() += d_q * value(att(l, kQueryW));
      d_hin.noalias() += d_k * value(att(l, kKeyW));
      d_hin.noalias() += d_v * value(att(l, kValueW));

      d = std::move(d_hin);
      d += grad_or_zero(l);
    }

    // embeddings
    Mat<S> d_emb = detail::layer_norm_backward<S>(
        d, tape.emb_ln, value(kEmbGamma), grad(kEmbGamma), grad(kEmbBeta));
    for (int t = 0; t < T; ++t) {
      grad(kWord).row(tape.ids[t]) += d_emb.row(t);
      grad(kPosition).row(t) += d_emb.row(t);
      grad(kTokenType).row(0) += d_emb.row(t);
    }
  }

  // ── parameter access ───────────────────────────────────────────────────

  std::vector<NamedParam<S>*> parameters() {
    std::vector<NamedParam<S>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  void alloc_grads() {
    for (auto& p : params_) p.ensure_grad();
  }

  void zero_grad() {
    for (auto& p : params_) {
      if (p.grad.size() > 0) p.grad.setZero();
    }
  }

  uint64_t param_hash() const {
    uint64_t h = kFnvOffset;
    for (const auto& p : params_) {
      h = fnv1a(p.name, h);
      h = fnv1a(p.value.data(), sizeof(S) * p.value.size(), h);
    }
    return h;
  }

  std::vector<Mat<S>> snapshot() const {
    std::vector<Mat<S>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
  }

  void restore(const std::vector<Mat<S>>& snap) {
    if (snap.size() != params_.size()) {
      throw std::invalid_argument("snapshot size mismatch");
    }
    for (size_t i = 0; i < snap.size(); ++i) params_[i].value = snap[i];
  }

 private:
  // Fixed parameter layout: 5 embedding tensors then 16 per layer.
  enum EmbSlot { kWord = 0, kPosition, kTokenType, kEmbGamma, kEmbBeta };
  enum AttSlot {
    kQueryW = 0, kQueryB, kKeyW, kKeyB, kValueW, kValueB,
    kOutW, kOutB, kLn1Gamma, kLn1Beta,
  };
  enum FfnSlot {
    kInterW = 0, kInterB, kFfnOutW, kFfnOutB, kLn2Gamma, kLn2Beta,
  };
  static constexpr int kPerLayer = 16;

  int att(int layer, AttSlot slot) const {
    return 5 + layer * kPerLayer + static_cast<int>(slot);
  }
  int ffn(int layer, FfnSlot slot) const {
    return 5 + layer * kPerLayer + 10 + static_cast<int>(slot);
  }

  const Mat<S>& value(int idx) const { return params_[idx].value; }
  Mat<S>& grad(int idx) { return params_[idx].grad; }

  void build_params() {
    const int H = dims_.hidden_size;
    const int I = dims_.intermediate_size;
    auto add = [&](const std::string& name, int rows, int cols) {
      params_.push_back(NamedParam<S>{name, Mat<S>::Zero(rows, cols), {}});
    };
    add("embeddings.word", dims_.vocab_size, H);
    add("embeddings.position", dims_.max_position, H);
    add("embeddings.token_type", dims_.type_vocab, H);
    add("embeddings.ln.gamma", 1, H);
    add("embeddings.ln.beta", 1, H);
    for (int l = 0; l < dims_.num_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      add(p + "attention.query.weight", H, H);
      add(p + "attention.query.bias", 1, H);
      add(p + "attention.key.weight", H, H);
      add(p + "attention.key.bias", 1, H);
      add(p + "attention.value.weight", H, H);
      add(p + "attention.value.bias", 1, H);
      add(p + "attention.output.weight", H, H);
      add(p + "attention.output.bias", 1, H);
      add(p + "attention.ln.gamma", 1, H);
      add(p + "attention.ln.beta", 1, H);
      add(p + "ffn.intermediate.weight", I, H);
      add(p + "ffn.intermediate.bias", 1, I);
      add(p + "ffn.output.weight", H, I);
      add(p + "ffn.output.bias", 1, H);
      add(p + "ffn.ln.gamma", 1, H);
      add(p + "ffn.ln.beta", 1, H);
    }
  }

  BertDims dims_;
  std::vector<NamedParam<S>> params_;
};

}  // namespace prosoprobe
