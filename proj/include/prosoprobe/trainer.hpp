#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosoprobe/cache.hpp"
#include "prosoprobe/corpus.hpp"
#include "prosoprobe/encoder.hpp"
#include "prosoprobe/probe.hpp"

namespace prosoprobe {

inline std::string_view to_string(Mode m) {
  return m == Mode::kFrozen ? "frozen" : "finetune";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "frozen") return Mode::kFrozen;
  if (s == "finetune") return Mode::kFinetune;
  return std::nullopt;
}

inline std::string_view to_string(ProbeFamily f) {
  return f == ProbeFamily::kScalarMix ? "scalar_mix" : "per_layer";
}

inline int classes_for(Task t) {
  return t == Task::kProminence ? 2 : static_cast<int>(std::size(kUposNames));
}

// ── experiment configuration ─────────────────────────────────────────────

// Training protocol knobs. Defaults are the reference recipe: 20 epochs,
// batches of 4 sentences, learning rate 5e-5 for every trained parameter
// except the mix logits at 1e-2, 5 runs with consecutive seeds, 80/15/5
// split, checkpoint selection by best dev accuracy (earliest epoch wins
// ties).
struct ExperimentConfig {
  Task task = Task::kProminence;
  Mode mode = Mode::kFrozen;
  ProbeFamily family = ProbeFamily::kScalarMix;
  int fixed_layer = -1;  // >= 0 when family == kPerLayer
  int epochs = 20;
  int batch_size = 4;  // sentences per optimizer step
  double lr_head = 5e-5;
  double lr_mix = 1e-2;
  int num_runs = 5;
  uint64_t seed_base = 1000;  // run r uses seed_base + r
  SplitSpec split;
  Pooling pooling = Pooling::kFirstPiece;
  double init_std = 0.02;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (lr_head <= 0 || lr_mix <= 0) {
      throw std::invalid_argument("learning rates must be positive");
    }
    if (num_runs < 1) throw std::invalid_argument("num_runs must be >= 1");
    split.validate();
    if (family == ProbeFamily::kPerLayer && fixed_layer < 0) {
      throw std::invalid_argument("per-layer probe needs fixed_layer >= 0");
    }
    if (family == ProbeFamily::kScalarMix && fixed_layer != -1) {
      throw std::invalid_argument("scalar-mix probe must not fix a layer");
    }
  }

  json to_json() const {
    return {{"task", std::string(to_string(task))},
            {"mode", std::string(to_string(mode))},
            {"probe", std::string(to_string(family))},
            {"fixed_layer", fixed_layer},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"lr_head", lr_head},
            {"lr_mix", lr_mix},
            {"num_runs", num_runs},
            {"seed_base", seed_base},
            {"split",
             {{"train", split.train_fraction},
              {"dev", split.dev_fraction},
              {"test", split.test_fraction},
              {"seed", split.seed}}},
            {"pooling", std::string(to_string(pooling))},
            {"init_std", init_std}};
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("task")) {
      auto t = parse_task(j["task"].get<std::string>());
      if (!t) throw std::invalid_argument("unknown task '" +
                                          j["task"].get<std::string>() + "'");
      c.task = *t;
    }
    if (j.contains("mode")) {
      auto m = parse_mode(j["mode"].get<std::string>());
      if (!m) throw std::invalid_argument("unknown mode '" +
                                          j["mode"].get<std::string>() + "'");
      c.mode = *m;
    }
    if (j.contains("probe")) {
      const std::string p = j["probe"].get<std::string>();
      if (p == "scalar_mix") c.family = ProbeFamily::kScalarMix;
      else if (p == "per_layer") c.family = ProbeFamily::kPerLayer;
      else throw std::invalid_argument("unknown probe family '" + p + "'");
    }
    c.fixed_layer = j.value("fixed_layer", c.fixed_layer);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_head = j.value("lr_head", c.lr_head);
    c.lr_mix = j.value("lr_mix", c.lr_mix);
    c.num_runs = j.value("num_runs", c.num_runs);
    c.seed_base = j.value("seed_base", c.seed_base);
    if (j.contains("split")) {
      const json& s = j["split"];
      c.split.train_fraction = s.value("train", c.split.train_fraction);
      c.split.dev_fraction = s.value("dev", c.split.dev_fraction);
      c.split.test_fraction = s.value("test", c.split.test_fraction);
      c.split.seed = s.value("seed", c.split.seed);
    }
    if (j.contains("pooling")) {
      auto p = parse_pooling(j["pooling"].get<std::string>());
      if (!p) throw std::invalid_argument("unknown pooling '" +
                                          j["pooling"].get<std::string>() + "'");
      c.pooling = *p;
    }
    c.init_std = j.value("init_std", c.init_std);
    c.validate();
    return c;
  }
};

inline uint64_t config_hash(const ExperimentConfig& c) {
  return fnv1a(c.to_json().dump());
}

// ── results ──────────────────────────────────────────────────────────────

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct RunResult {
  uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;          // earliest epoch with the max dev accuracy
  double dev_accuracy = 0.0;   // at best_epoch
  double test_accuracy = 0.0;  // rounded to 4 decimals
  std::vector<double> mix_weights;  // softmax weights at best_epoch
  uint64_t encoder_hash_before = 0;
  uint64_t encoder_hash_after = 0;
  bool aborted = false;
  std::vector<std::string> warnings;

  json to_json() const {
    json ep = json::array();
    for (const auto& e : epochs) {
      ep.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"dev_accuracy", e.dev_accuracy}});
    }
    return {{"seed", seed},
            {"epochs", ep},
            {"best_epoch", best_epoch},
            {"dev_accuracy", dev_accuracy},
            {"test_accuracy", test_accuracy},
            {"mix_weights", mix_weights},
            {"encoder_hash_before", hex64(encoder_hash_before)},
            {"encoder_hash_after", hex64(encoder_hash_after)},
            {"aborted", aborted},
            {"warnings", warnings}};
  }
};

struct AggregateResult {
  std::vector<RunResult> runs;
  double mean_test_accuracy = 0.0;
  double stdev_test_accuracy = 0.0;  // sample stdev over completed runs
  std::vector<double> mean_mix_weights;
  int aborted_runs = 0;

  json to_json() const {
    json rs = json::array();
    for (const auto& r : runs) rs.push_back(r.to_json());
    return {{"runs", rs},
            {"mean_test_accuracy", mean_test_accuracy},
            {"stdev_test_accuracy", stdev_test_accuracy},
            {"mean_mix_weights", mean_mix_weights},
            {"aborted_runs", aborted_runs}};
  }
};

inline AggregateResult aggregate_runs(std::vector<RunResult> runs) {
  AggregateResult agg;
  agg.runs = std::move(runs);
  std::vector<double> accs;
  for (const auto& r : agg.runs) {
    if (r.aborted) {
      ++agg.aborted_runs;
      continue;
    }
    accs.push_back(r.test_accuracy);
    if (agg.mean_mix_weights.empty()) {
      agg.mean_mix_weights.assign(r.mix_weights.size(), 0.0);
    }
    for (size_t i = 0; i < r.mix_weights.size(); ++i) {
      agg.mean_mix_weights[i] += r.mix_weights[i];
    }
  }
  if (!accs.empty()) {
    double sum = 0;
    for (double a : accs) sum += a;
    agg.mean_test_accuracy = sum / static_cast<double>(accs.size());
    if (accs.size() > 1) {
      double sq = 0;
      for (double a : accs) {
        sq += (a - agg.mean_test_accuracy) * (a - agg.mean_test_accuracy);
      }
      agg.stdev_test_accuracy =
          std::sqrt(sq / static_cast<double>(accs.size() - 1));
    }
    for (auto& w : agg.mean_mix_weights) w /= static_cast<double>(accs.size());
  }
  return agg;
}

// ── optimizer ────────────────────────────────────────────────────────────

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over raw parameter/gradient buffers, one learning rate per group.
// No weight decay, no schedule.
template <class S>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void add(S* param, const S* grad, size_t n, double lr) {
    slots_.push_back(Slot{param, grad, n, lr, std::vector<S>(n, S(0)),
                          std::vector<S>(n, S(0))});
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (auto& s : slots_) {
      for (size_t i = 0; i < s.n; ++i) {
        const double g = static_cast<double>(s.g[i]);
        const double m = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
        const double v = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
        s.m[i] = static_cast<S>(m);
        s.v[i] = static_cast<S>(v);
        const double update =
            s.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.epsilon);
        s.p[i] -= static_cast<S>(update);
      }
    }
  }

  long steps() const { return t_; }

 private:
  struct Slot {
    S* p;
    const S* g;
    size_t n;
    double lr;
    std::vector<S> m, v;
  };
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  long t_ = 0;
};

// ── labels and masks ─────────────────────────────────────────────────────

struct SentenceLabels {
  std::vector<int> labels;
  std::vector<uint8_t> mask;  // 1 = counts toward loss/accuracy

  int masked_in() const {
    int n = 0;
    for (uint8_t m : mask) n += m;
    return n;
  }
};

// Targets for the first kept_words tokens (words dropped by truncation
// simply have no rows). Unlabeled prominence is masked out; a missing or
// unknown POS tag is an error.
inline SentenceLabels build_labels(const LabeledSentence& s, Task task,
                                   int kept_words) {
  if (kept_words > static_cast<int>(s.tokens.size())) {
    throw std::logic_error("kept_words exceeds sentence length");
  }
  SentenceLabels out;
  out.labels.resize(kept_words, 0);
  out.mask.resize(kept_words, 1);
  for (int w = 0; w < kept_words; ++w) {
    const WordToken& tok = s.tokens[w];
    if (task == Task::kProminence) {
      if (tok.prominence == Prominence::kUnlabeled) {
        out.mask[w] = 0;
      } else {
        out.labels[w] = tok.prominence == Prominence::kProminent ? 1 : 0;
      }
    } else {
      const std::string where =
          s.doc_id + "#" + std::to_string(s.sentence_index);
      if (!tok.pos) {
        throw std::runtime_error("token '" + tok.text + "' in " + where +
                                 " has no POS tag");
      }
      const auto idx = upos_index(*tok.pos);
      if (!idx) {
        throw std::runtime_error("unknown UPOS tag '" + *tok.pos + "' in " +
                                 where);
      }
      out.labels[w] = *idx;
    }
  }
  return out;
}

// ── frozen-encoder training ──────────────────────────────────────────────

namespace detail {

template <class S>
Probe<S> init_probe(const ExperimentConfig& cfg, int layer_count, int hidden,
                    Rng& rng) {
  const int classes = classes_for(cfg.task);
  if (cfg.family == ProbeFamily::kPerLayer) {
    return Probe<S>::per_layer(cfg.fixed_layer, layer_count, hidden, classes,
                               rng);
  }
  return Probe<S>::scalar_mix(layer_count, hidden, classes, rng);
}

inline double checked_accuracy(const SentenceEvalCounts& c,
                               const char* split_name) {
  if (c.total == 0) {
    throw std::runtime_error(std::string(split_name) +
                             " split has no labeled tokens to evaluate");
  }
  return static_cast<double>(c.correct) / static_cast<double>(c.total);
}

}  // namespace detail

// One seeded run against a prebuilt activation store covering the full
// dataset; indices select the split rows. The encoder itself is never
// touched (hash recorded for the frozen invariant).
inline RunResult run_frozen(const ActivationStore& store,
                            const Dataset& dataset, const SplitIndices& idx,
                            const ExperimentConfig& cfg, uint64_t seed,
                            uint64_t encoder_hash,
                            Probe<float>* trained = nullptr) {
  using S = float;
  cfg.validate();
  if (store.size() != dataset.sentences.size()) {
    throw std::invalid_argument("activation store does not cover the dataset");
  }

  RunResult res;
  res.seed = seed;
  res.encoder_hash_before = encoder_hash;

  std::vector<SentenceLabels> labels(dataset.sentences.size());
  for (size_t i = 0; i < dataset.sentences.size(); ++i) {
    labels[i] =
        build_labels(dataset.sentences[i], cfg.task, store.stack(i).words());
  }

  Rng rng(seed);
  Probe<S> probe = detail::init_probe<S>(cfg, store.layer_count(),
                                         store.hidden(), rng);
  ProbeGrad<S> grad = ProbeGrad<S>::zeros_like(probe);

  Adam<S> opt;
  opt.add(probe.head.weight.data(), grad.d_weight.data(),
          probe.head.weight.size(), cfg.lr_head);
  opt.add(probe.head.bias.data(), grad.d_bias.data(), probe.head.bias.size(),
          cfg.lr_head);
  if (probe.mix_trainable()) {
    opt.add(probe.mw.logits.data(), grad.d_logits.data(),
            probe.mw.logits.size(), cfg.lr_mix);
  }

  auto eval_split = [&](const std::vector<size_t>& rows, const char* name) {
    SentenceEvalCounts total;
    for (size_t i : rows) {
      const SentenceEvalCounts c = probe_evaluate<S>(
          store.stack(i), probe, labels[i].labels, labels[i].mask);
      total.correct += c.correct;
      total.total += c.total;
    }
    return detail::checked_accuracy(total, name);
  };

  Probe<S> best_probe = probe;
  double best_dev = -1.0;
  size_t all_masked_batches = 0;
  std::vector<size_t> order = idx.train;

  for (int epoch = 1; epoch <= cfg.epochs && !res.aborted; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    long loss_denom = 0;
    for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const size_t b_end = std::min(order.size(), b + cfg.batch_size);
      int denom = 0;
      for (size_t k = b; k < b_end; ++k) denom += labels[order[k]].masked_in();
      if (denom == 0) {
        ++all_masked_batches;
        continue;
      }
      grad.set_zero();
      const S inv_denom = S(1) / static_cast<S>(denom);
      S batch_nll = 0;
      for (size_t k = b; k < b_end; ++k) {
        const size_t i = order[k];
        batch_nll += probe_forward_backward<S>(store.stack(i), probe,
                                               labels[i].labels, labels[i].mask,
                                               inv_denom, grad);
      }
      if (!std::isfinite(batch_nll)) {
        res.aborted = true;
        res.warnings.push_back("non-finite loss in epoch " +
                               std::to_string(epoch));
        break;
      }
      opt.step();
      loss_sum += static_cast<double>(batch_nll);
      loss_denom += denom;
    }
    if (res.aborted) break;

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_denom > 0 ? loss_sum / static_cast<double>(loss_denom)
                                   : 0.0;
    em.dev_accuracy = eval_split(idx.dev, "dev");
    res.epochs.push_back(em);
    if (em.dev_accuracy > best_dev) {
      best_dev = em.dev_accuracy;
      best_probe = probe;
      res.best_epoch = epoch;
    }
  }

  if (all_masked_batches > 0) {
    res.warnings.push_back(std::to_string(all_masked_batches) +
                           " batch(es) had no labeled tokens");
  }
  if (!res.aborted) {
    probe = best_probe;
    res.dev_accuracy = best_dev;
    res.test_accuracy = round_to(eval_split(idx.test, "test"), 4);
    res.mix_weights = probe.weights();
    if (trained) *trained = probe;
  }
  res.encoder_hash_after = encoder_hash;
  return res;
}

// ── fine-tuned training ──────────────────────────────────────────────────

// EncT must expose: spec(), parameter_hash(), forward_train(sentence,
// pooling) -> {alignment, stack, tape}, backward_train(fwd, d_stack,
// pooling), model access for parameters/snapshots. Gradients flow through
// the pooling into every encoder layer as well as into the probe.
template <class EncT>
RunResult run_finetune(EncT& encoder, const Dataset& dataset,
                       const SplitIndices& idx, const ExperimentConfig& cfg,
                       uint64_t seed, Probe<float>* trained = nullptr) {
  using S = float;
  cfg.validate();

  RunResult res;
  res.seed = seed;
  res.encoder_hash_before = encoder.parameter_hash();

  Rng rng(seed);
  const int layer_count = encoder.spec().layer_count();
  const int hidden = encoder.spec().hidden_size;
  Probe<S> probe = detail::init_probe<S>(cfg, layer_count, hidden, rng);
  ProbeGrad<S> grad = ProbeGrad<S>::zeros_like(probe);

  encoder.model().alloc_grads();
  Adam<S> opt;
  opt.add(probe.head.weight.data(), grad.d_weight.data(),
          probe.head.weight.size(), cfg.lr_head);
  opt.add(probe.head.bias.data(), grad.d_bias.data(), probe.head.bias.size(),
          cfg.lr_head);
  if (probe.mix_trainable()) {
    opt.add(probe.mw.logits.data(), grad.d_logits.data(),
            probe.mw.logits.size(), cfg.lr_mix);
  }
  for (auto* p : encoder.model().parameters()) {
    opt.add(p->value.data(), p->grad.data(), p->value.size(), cfg.lr_head);
  }

  auto labels_for = [&](size_t i, int kept) {
    return build_labels(dataset.sentences[i], cfg.task, kept);
  };

  auto eval_split = [&](const std::vector<size_t>& rows, const char* name) {
    SentenceEvalCounts total;
    for (size_t i : rows) {
      LayerStack stack =
          encoder.encode_frozen(dataset.sentences[i], cfg.pooling);
      const SentenceLabels sl = labels_for(i, stack.words());
      const SentenceEvalCounts c =
          probe_evaluate<S>(stack, probe, sl.labels, sl.mask);
      total.correct += c.correct;
      total.total += c.total;
    }
    return detail::checked_accuracy(total, name);
  };

  Probe<S> best_probe = probe;
  std::vector<MatF> best_params = encoder.model().snapshot();
  double best_dev = -1.0;
  size_t all_masked_batches = 0;
  std::vector<size_t> order = idx.train;

  for (int epoch = 1; epoch <= cfg.epochs && !res.aborted; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    long loss_denom = 0;
    for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const size_t b_end = std::min(order.size(), b + cfg.batch_size);

      // Forward the whole batch first so the shared loss denominator
      // (labeled tokens in the batch) is known before any backward pass.
      std::vector<typename EncT::TrainForward> fwds;
      std::vector<SentenceLabels> batch_labels;
      int denom = 0;
      for (size_t k = b; k < b_end; ++k) {
        fwds.push_back(encoder.forward_train(dataset.sentences[order[k]],
                                             cfg.pooling));
        batch_labels.push_back(
            labels_for(order[k], fwds.back().stack.words()));
        denom += batch_labels.back().masked_in();
      }
      if (denom == 0) {
        ++all_masked_batches;
        continue;
      }
      grad.set_zero();
      encoder.model().zero_grad();
      const S inv_denom = S(1) / static_cast<S>(denom);
      S batch_nll = 0;
      for (size_t k = 0; k < fwds.size(); ++k) {
        std::vector<MatF> d_stack;
        batch_nll += probe_forward_backward<S>(
            fwds[k].stack, probe, batch_labels[k].labels, batch_labels[k].mask,
            inv_denom, grad, &d_stack);
        encoder.backward_train(fwds[k], d_stack, cfg.pooling);
      }
      if (!std::isfinite(batch_nll)) {
        res.aborted = true;
        res.warnings.push_back("non-finite loss in epoch " +
                               std::to_string(epoch));
        break;
      }
      opt.step();
      loss_sum += static_cast<double>(batch_nll);
      loss_denom += denom;
    }
    if (res.aborted) break;

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_denom > 0 ? loss_sum / static_cast<double>(loss_denom)
                                   : 0.0;
    em.dev_accuracy = eval_split(idx.dev, "dev");
    res.epochs.push_back(em);
    if (em.dev_accuracy > best_dev) {
      best_dev = em.dev_accuracy;
      best_probe = probe;
      best_params = encoder.model().snapshot();
      res.best_epoch = epoch;
    }
  }

  if (all_masked_batches > 0) {
    res.warnings.push_back(std::to_string(all_masked_batches) +
                           " batch(es) had no labeled tokens");
  }
  if (!res.aborted) {
    probe = best_probe;
    encoder.model().restore(best_params);
    res.dev_accuracy = best_dev;
    res.test_accuracy = round_to(eval_split(idx.test, "test"), 4);
    res.mix_weights = probe.weights();
    if (trained) *trained = probe;
  }
  res.encoder_hash_after = encoder.parameter_hash();
  return res;
}

// ── multi-run drivers ────────────────────────────────────────────────────

// Runs one_run(seed_base + r) for r in [0, num_runs), optionally across
// jobs threads, and aggregates. one_run must be safe to call concurrently.
inline AggregateResult repeat_runs(
    const std::function<RunResult(uint64_t)>& one_run, int num_runs,
    uint64_t seed_base, int jobs = 1) {
  if (num_runs < 1) throw std::invalid_argument("num_runs must be >= 1");
  std::vector<RunResult> results(num_runs);
  if (jobs <= 1 || num_runs == 1) {
    for (int r = 0; r < num_runs; ++r) results[r] = one_run(seed_base + r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(num_runs);
    const int n_threads = std::min(jobs, num_runs);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < num_runs; r = next.fetch_add(1)) {
          try {
            results[r] = one_run(seed_base + r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return aggregate_runs(std::move(results));
}

inline AggregateResult repeat_frozen(const ActivationStore& store,
                                     const Dataset& dataset,
                                     const SplitIndices& idx,
                                     const ExperimentConfig& cfg,
                                     uint64_t encoder_hash, int jobs = 1) {
  return repeat_runs(
      [&](uint64_t seed) {
        return run_frozen(store, dataset, idx, cfg, seed, encoder_hash);
      },
      cfg.num_runs, cfg.seed_base, jobs);
}

// Per-layer diagnostic sweep sharing one activation store; returns one
// aggregate per requested layer.
inline std::vector<AggregateResult> sweep_layers(
    const ActivationStore& store, const Dataset& dataset,
    const SplitIndices& idx, const ExperimentConfig& base,
    const std::vector<int>& layers, uint64_t encoder_hash, int jobs = 1) {
  std::vector<AggregateResult> out;
  out.reserve(layers.size());
  for (int layer : layers) {
    ExperimentConfig cfg = base;
    cfg.family = ProbeFamily::kPerLayer;
    cfg.fixed_layer = layer;
    out.push_back(repeat_frozen(store, dataset, idx, cfg, encoder_hash, jobs));
  }
  return out;
}

// Everything needed to rerun or audit an experiment.
inline json run_metadata(const ExperimentConfig& cfg,
                         const AggregateResult& agg,
                         const std::string& dataset_name,
                         uint64_t data_hash) {
  return {{"config", cfg.to_json()},
          {"config_hash", hex64(config_hash(cfg))},
          {"dataset", dataset_name},
          {"dataset_hash", hex64(data_hash)},
          {"result", agg.to_json()}};
}

}  // namespace prosoprobe
