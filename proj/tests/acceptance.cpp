// Acceptance suite: one verdict line per criterion, exit code = number of
// failures. Criteria needing external resources (a real corpus or an
// exported transformer checkpoint) print SKIP with enable instructions
// instead of failing; everything else runs self-contained.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prosoprobe/prosoprobe.hpp"

using namespace prosoprobe;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int criterion, const std::string& status, const std::string& msg) {
  std::cout << "criterion " << criterion << ": " << status << " — " << msg
            << "\n";
  if (status == "FAIL") ++g_failures;
}

struct Check {
  bool ok = true;
  std::string first_problem;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      first_problem = what;
    }
  }
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

Dataset subset_sentences(const Dataset& d, size_t keep, uint64_t seed) {
  if (d.sentences.size() <= keep) return d;
  std::vector<size_t> order(d.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  Dataset out;
  out.name = d.name + "-subset" + std::to_string(keep);
  out.task_labels_present = d.task_labels_present;
  for (size_t i : order) out.sentences.push_back(d.sentences[i]);
  return out;
}

// ── criterion 1: mix equals a naive triple loop ──────────────────────────

void criterion_1() {
  constexpr double kTol = 1e-6;
  Check c;
  Rng rng(2024);

  for (int trial = 0; trial < 200 && c.ok; ++trial) {
    const int layers = 2 + static_cast<int>(rng.below(3));  // 2..4
    const int words = 1 + static_cast<int>(rng.below(5));   // 1..5
    const int hidden = 1 + static_cast<int>(rng.below(6));  // 1..6

    DenseStack<double> stack;
    for (int i = 0; i < layers; ++i) {
      MatD m(words, hidden);
      for (int t = 0; t < words; ++t) {
        for (int h = 0; h < hidden; ++h) m(t, h) = rng.gaussian();
      }
      stack.data.push_back(std::move(m));
    }
    MixWeights<double> mw = MixWeights<double>::init(layers);
    for (int i = 0; i < layers; ++i) mw.logits[i] = rng.gaussian();

    // Independent reference: explicit softmax, explicit triple loop.
    std::vector<double> w(layers);
    double mx = mw.logits[0], sum = 0.0;
    for (int i = 1; i < layers; ++i) mx = std::max(mx, mw.logits[i]);
    for (int i = 0; i < layers; ++i) {
      w[i] = std::exp(mw.logits[i] - mx);
      sum += w[i];
    }
    for (int i = 0; i < layers; ++i) w[i] /= sum;

    const MatD got = mix(stack, mw);
    for (int t = 0; t < words; ++t) {
      for (int h = 0; h < hidden; ++h) {
        double want = 0.0;
        for (int i = 0; i < layers; ++i) want += w[i] * stack.data[i](t, h);
        c.expect(std::abs(got(t, h) - want) <= kTol,
                 "trial " + std::to_string(trial) + " differs by " +
                     std::to_string(std::abs(got(t, h) - want)));
      }
    }
  }

  // Zero logits give the exact uniform simplex point.
  const MixWeights<double> uniform = MixWeights<double>::init(13);
  const VecD wu = uniform.normalized();
  for (int i = 0; i < 13; ++i) {
    c.expect(std::abs(wu[i] - 1.0 / 13.0) <= 1e-12,
             "uniform weight " + std::to_string(i) + " != 1/13");
  }

  // One-hot selection reproduces the chosen layer bit for bit.
  {
    DenseStack<double> stack;
    Rng r2(7);
    for (int i = 0; i < 4; ++i) {
      MatD m(3, 5);
      for (int t = 0; t < 3; ++t) {
        for (int h = 0; h < 5; ++h) m(t, h) = r2.gaussian();
      }
      stack.data.push_back(std::move(m));
    }
    Rng r3(8);
    for (int k = 0; k < 4; ++k) {
      Probe<double> p = Probe<double>::per_layer(k, 4, 5, 2, r3);
      const MatD sel = p.mix_forward(stack);
      c.expect(sel == stack.data[k],
               "per-layer selection of layer " + std::to_string(k) +
                   " is not exact");
    }
  }

  verdict(1, c.ok ? "PASS" : "FAIL",
          c.ok ? "mix matches the naive triple loop on 200 random stacks "
                 "(tol 1e-6), uniform at zero logits, exact one-hot selection"
               : c.first_problem);
}

// ── criterion 2: finite-difference gradient check ────────────────────────

void criterion_2() {
  constexpr double kStep = 1e-4;
  constexpr double kRelTol = 1e-4;
  Check c;

  const int layers = 3, hidden = 4, classes = 2, words = 2;
  Rng rng(5150);
  DenseStack<double> stack;
  for (int i = 0; i < layers; ++i) {
    MatD m(words, hidden);
    for (int t = 0; t < words; ++t) {
      for (int h = 0; h < hidden; ++h) m(t, h) = rng.gaussian();
    }
    stack.data.push_back(std::move(m));
  }
  Probe<double> probe = Probe<double>::scalar_mix(layers, hidden, classes, rng);
  for (int i = 0; i < layers; ++i) probe.mw.logits[i] = 0.3 * rng.gaussian();
  const std::vector<int> labels = {0, 1};
  const std::vector<uint8_t> mask = {1, 1};
  const double inv_denom = 1.0 / 2.0;

  auto loss_of = [&](const Probe<double>& p) {
    ProbeGrad<double> g = ProbeGrad<double>::zeros_like(p);
    return inv_denom * probe_forward_backward(stack, p, labels, mask,
                                              inv_denom, g);
  };

  ProbeGrad<double> grad = ProbeGrad<double>::zeros_like(probe);
  probe_forward_backward(stack, probe, labels, mask, inv_denom, grad);

  auto rel_err = [](double an, double fd) {
    return std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
  };
  auto check_entry = [&](double* slot, double an, const std::string& name) {
    const double orig = *slot;
    *slot = orig + kStep;
    const double up = loss_of(probe);
    *slot = orig - kStep;
    const double down = loss_of(probe);
    *slot = orig;
    const double fd = (up - down) / (2.0 * kStep);
    c.expect(rel_err(an, fd) < kRelTol,
             name + ": analytic " + std::to_string(an) + " vs fd " +
                 std::to_string(fd));
  };

  for (int i = 0; i < layers; ++i) {
    check_entry(&probe.mw.logits[i], grad.d_logits[i],
                "logit " + std::to_string(i));
  }
  for (int r = 0; r < classes; ++r) {
    for (int h = 0; h < hidden; ++h) {
      check_entry(&probe.head.weight(r, h), grad.d_weight(r, h),
                  "weight(" + std::to_string(r) + "," + std::to_string(h) + ")");
    }
    check_entry(&probe.head.bias[r], grad.d_bias[r],
                "bias " + std::to_string(r));
  }

  verdict(2, c.ok ? "PASS" : "FAIL",
          c.ok ? "analytic gradients match central differences (step 1e-4, "
                 "rel tol 1e-4) for mix logits, head weight, head bias"
               : c.first_problem);
}

// ── criterion 3: synthetic layer localization ────────────────────────────

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;

  // Wide latent space keeps cross-layer leakage (hidden/latent) small, so
  // the label is decisively decodable at the planted layer only.
  SyntheticConfig scfg;
  scfg.hidden_size = 32;
  scfg.latent_size = 1024;
  scfg.num_layers = 4;  // 5 probe-able outputs
  SyntheticEncoder encoder(scfg, "synthetic:acceptance");
  const int task_layer = 3;
  SyntheticTask task = make_synthetic_task(encoder, task_layer,
                                           /*num_sentences=*/500,
                                           /*words_per_sentence=*/10,
                                           /*seed=*/123456,
                                           /*candidate_words=*/2000,
                                           /*keep_fraction=*/0.30);

  ExperimentConfig cfg;  // protocol defaults, scaled down to 5 epochs
  cfg.epochs = 5;
  cfg.task = Task::kProminence;

  const SplitIndices idx =
      split_indices(task.dataset.sentences.size(), cfg.split);
  ActivationStore store =
      ActivationStore::build(encoder, task.dataset, cfg.pooling);
  AggregateResult agg = repeat_frozen(store, task.dataset, idx, cfg,
                                      encoder.parameter_hash(), /*jobs=*/5);

  int hits = 0;
  for (const auto& r : agg.runs) {
    if (r.aborted) continue;
    int argmax = 0;
    for (size_t i = 1; i < r.mix_weights.size(); ++i) {
      if (r.mix_weights[i] > r.mix_weights[argmax]) {
        argmax = static_cast<int>(i);
      }
    }
    if (argmax == task_layer) ++hits;
  }
  const double mean_w = agg.mean_mix_weights.at(task_layer);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

  c.expect(agg.aborted_runs == 0, "some runs aborted");
  c.expect(hits >= 4, "argmax at layer 3 in only " + std::to_string(hits) +
                          "/5 runs");
  c.expect(mean_w > 0.5, "mean weight at layer 3 is " + fixed_str(mean_w, 4) +
                             " (need > 0.5)");
  c.expect(secs < 120, "took " + std::to_string(secs) + "s (budget 120s)");

  verdict(3, c.ok ? "PASS" : "FAIL",
          c.ok ? "scalar mix localizes the planted layer: argmax at layer 3 "
                 "in " + std::to_string(hits) + "/5 seeds, mean weight " +
                 fixed_str(mean_w, 3) + ", " + std::to_string(secs) + "s"
               : c.first_problem);
}

// ── criterion 4: protocol conformance ────────────────────────────────────

void criterion_4() {
  Check c;

  SyntheticConfig scfg;
  scfg.hidden_size = 16;
  scfg.latent_size = 32;
  scfg.num_layers = 2;
  SyntheticEncoder encoder(scfg, "synthetic:protocol");
  SyntheticTask task = make_synthetic_task(encoder, 1, /*num_sentences=*/100,
                                           /*words_per_sentence=*/5,
                                           /*seed=*/99);

  const ExperimentConfig cfg;  // untouched defaults ARE the protocol
  const SplitIndices idx =
      split_indices(task.dataset.sentences.size(), cfg.split);
  ActivationStore store =
      ActivationStore::build(encoder, task.dataset, cfg.pooling);
  AggregateResult agg = repeat_frozen(store, task.dataset, idx, cfg,
                                      encoder.parameter_hash(), /*jobs=*/5);
  const json meta =
      run_metadata(cfg, agg, task.dataset.name, dataset_hash(task.dataset));

  const json& jc = meta.at("config");
  c.expect(jc.at("epochs") == 20, "epochs != 20");
  c.expect(jc.at("batch_size") == 4, "batch_size != 4");
  c.expect(jc.at("lr_head") == 5e-5, "lr_head != 5e-5");
  c.expect(jc.at("lr_mix") == 1e-2, "lr_mix != 1e-2");
  c.expect(jc.at("num_runs") == 5, "num_runs != 5");
  c.expect(jc.at("split").at("train") == 0.80, "train fraction != 0.80");
  c.expect(jc.at("split").at("dev") == 0.15, "dev fraction != 0.15");
  c.expect(jc.at("split").at("test") == 0.05, "test fraction != 0.05");
  c.expect(meta.at("result").at("runs").size() == 5, "expected 5 runs");

  c.expect(idx.train.size() == 80 && idx.dev.size() == 15 &&
               idx.test.size() == 5,
           "split of 100 sentences is not 80/15/5");

  for (const auto& r : agg.runs) {
    c.expect(!r.aborted, "a run aborted");
    c.expect(static_cast<int>(r.epochs.size()) == 20,
             "run history does not hold 20 epochs");
    // Best-dev checkpoint: maximal dev accuracy, earliest on ties.
    for (const auto& em : r.epochs) {
      c.expect(em.dev_accuracy <= r.dev_accuracy,
               "epoch " + std::to_string(em.epoch) +
                   " has strictly higher dev accuracy than the checkpoint");
      if (em.dev_accuracy == r.dev_accuracy) {
        c.expect(r.best_epoch <= em.epoch, "checkpoint is not the earliest tie");
        break;
      }
    }
    c.expect(r.encoder_hash_before == r.encoder_hash_after,
             "frozen run changed the encoder parameter hash");
    c.expect(r.encoder_hash_before == encoder.parameter_hash(),
             "stored hash differs from the live encoder");
  }

  verdict(4, c.ok ? "PASS" : "FAIL",
          c.ok ? "defaults carry the protocol (20 epochs, batch 4, lr 5e-5 / "
                 "1e-2, 5 seeds, 80-15-5) with best-dev earliest-tie "
                 "checkpointing and an untouched frozen encoder"
               : c.first_problem);
}

// ── criterion 5: prosody corpus desk-scale reproduction ──────────────────

void criterion_5() {
  const std::string corpus = env_or_empty("PROSOPROBE_HPC_PATH");
  const std::string model_dir = env_or_empty("PROSOPROBE_MODEL_DIR");
  if (corpus.empty() || model_dir.empty()) {
    verdict(5, "SKIP",
            "needs the prosody corpus and an exported checkpoint; set "
            "PROSOPROBE_HPC_PATH=<corpus .txt> and PROSOPROBE_MODEL_DIR=<dir "
            "from tools/hf_export.py> (add PROSOPROBE_RUN_FULL=1 for the "
            "full-corpus target)");
    return;
  }

  Check c;
  Dataset full = ingest_hpc(corpus);
  const bool run_full = !env_or_empty("PROSOPROBE_RUN_FULL").empty();
  Dataset data = run_full ? full : subset_sentences(full, 10000, 8675309);

  BertEncoder encoder = BertEncoder::load_dir(model_dir);
  const std::string cache_dir = env_or_empty("PROSOPROBE_CACHE_DIR").empty()
                                    ? std::string("/tmp/prosoprobe-acceptance")
                                    : env_or_empty("PROSOPROBE_CACHE_DIR");
  fs::create_directories(cache_dir);
  ExperimentConfig cfg;  // full protocol
  const std::string store_path =
      cache_dir + "/hpc-" + hex64(dataset_hash(data)) + "-" +
      hex64(encoder.parameter_hash()) + ".pptc";
  ActivationStore store =
      ActivationStore::open_or_build(store_path, encoder, data, cfg.pooling);
  const SplitIndices idx = split_indices(data.sentences.size(), cfg.split);

  AggregateResult mix_agg = repeat_frozen(store, data, idx, cfg,
                                          encoder.parameter_hash(), /*jobs=*/5);

  ExperimentConfig layer0 = cfg;
  layer0.family = ProbeFamily::kPerLayer;
  layer0.fixed_layer = 0;
  AggregateResult l0_agg = repeat_frozen(store, data, idx, layer0,
                                         encoder.parameter_hash(), /*jobs=*/5);

  const Stats st = dataset_stats(data, Task::kProminence);
  const double majority = st.majority_fraction;
  const double acc = mix_agg.mean_test_accuracy;

  c.expect(mix_agg.aborted_runs == 0 && l0_agg.aborted_runs == 0,
           "runs aborted");
  c.expect(acc >= majority + 0.05,
           "mix accuracy " + fixed_str(100 * acc, 2) + "% does not beat the "
           "majority baseline " + fixed_str(100 * majority, 2) + "% by 5 pts");
  c.expect(acc > l0_agg.mean_test_accuracy,
           "mix accuracy does not beat the layer-0 probe (" +
               fixed_str(100 * l0_agg.mean_test_accuracy, 2) + "%)");
  if (run_full) {
    c.expect(std::abs(acc - 0.8267) <= 0.015,
             "full-corpus accuracy " + fixed_str(100 * acc, 2) +
                 "% not within 1.5 pts of 82.67%");
  }

  verdict(5, c.ok ? "PASS" : "FAIL",
          c.ok ? "frozen mix " + fixed_str(100 * acc, 2) + "% vs majority " +
                 fixed_str(100 * majority, 2) + "% and layer-0 " +
                 fixed_str(100 * l0_agg.mean_test_accuracy, 2) + "% on " +
                 std::to_string(data.sentences.size()) + " sentences"
               : c.first_problem);
}

// ── criterion 6: layer pattern on real data ──────────────────────────────

void criterion_6() {
  const std::string model_dir = env_or_empty("PROSOPROBE_MODEL_DIR");
  const std::string prom_path = env_or_empty("PROSOPROBE_HPC_PATH");
  const std::string pos_path = env_or_empty("PROSOPROBE_POS_PATH");
  if (model_dir.empty() || (prom_path.empty() && pos_path.empty())) {
    verdict(6, "SKIP",
            "needs an exported checkpoint plus real data; set "
            "PROSOPROBE_MODEL_DIR, and PROSOPROBE_HPC_PATH (prominence "
            "pattern) and/or PROSOPROBE_POS_PATH (a canonical file with POS "
            "tags, for the layer-1-vs-11 pattern)");
    return;
  }

  Check c;
  BertEncoder encoder = BertEncoder::load_dir(model_dir);
  const int n_layers = encoder.spec().layer_count();
  const std::string cache_dir = env_or_empty("PROSOPROBE_CACHE_DIR").empty()
                                    ? std::string("/tmp/prosoprobe-acceptance")
                                    : env_or_empty("PROSOPROBE_CACHE_DIR");
  fs::create_directories(cache_dir);
  std::string note;

  auto sweep_on = [&](const Dataset& data, const ExperimentConfig& cfg,
                      const std::vector<int>& layers) {
    const std::string store_path =
        cache_dir + "/pattern-" + hex64(dataset_hash(data)) + "-" +
        hex64(encoder.parameter_hash()) + ".pptc";
    ActivationStore store =
        ActivationStore::open_or_build(store_path, encoder, data, cfg.pooling);
    const SplitIndices idx = split_indices(data.sentences.size(), cfg.split);
    std::vector<double> acc;
    for (int l : layers) {
      ExperimentConfig per = cfg;
      per.family = ProbeFamily::kPerLayer;
      per.fixed_layer = l;
      AggregateResult agg = repeat_frozen(store, data, idx, per,
                                          encoder.parameter_hash(), /*jobs=*/5);
      c.expect(agg.aborted_runs == 0, "sweep run aborted");
      acc.push_back(agg.mean_test_accuracy);
    }
    return acc;
  };

  if (!prom_path.empty()) {
    Dataset prom = subset_sentences(ingest_hpc(prom_path), 2000, 8675309);
    ExperimentConfig cfg;
    cfg.task = Task::kProminence;
    std::vector<int> layers(n_layers);
    for (int i = 0; i < n_layers; ++i) layers[i] = i;
    const std::vector<double> acc = sweep_on(prom, cfg, layers);
    int peak = 0;
    for (int i = 1; i < n_layers; ++i) {
      if (acc[i] > acc[peak]) peak = i;
    }
    c.expect(peak <= 5, "prominence accuracy peaks at layer " +
                            std::to_string(peak) + " (expected within 0-5)");
    note += "prominence peak at layer " + std::to_string(peak);
  }

  if (!pos_path.empty()) {
    Dataset pos = subset_sentences(ingest_canonical(pos_path), 2000, 8675309);
    ExperimentConfig cfg;
    cfg.task = Task::kPos;
    const std::vector<double> acc = sweep_on(pos, cfg, {1, 11});
    c.expect(acc[0] > acc[1],
             "POS accuracy at layer 1 (" + fixed_str(100 * acc[0], 2) +
                 "%) does not exceed layer 11 (" + fixed_str(100 * acc[1], 2) +
                 "%)");
    if (!note.empty()) note += "; ";
    note += "POS layer 1 " + fixed_str(100 * acc[0], 2) + "% > layer 11 " +
            fixed_str(100 * acc[1], 2) + "%";
  }

  verdict(6, c.ok ? "PASS" : "FAIL", c.ok ? note : c.first_problem);
}

// ── criterion 7: pitch-accent fixture mapping + plumbing ─────────────────

void criterion_7() {
  Check c;

  TobiMapStats stats;
  Dataset d = ingest_tobi_tsv(std::string(FIXTURE_DIR) + "/tobi_fixture.tsv",
                              &stats);

  // Expected binary sequence for the 50-token fixture, sentence by sentence.
  const std::vector<int> expected = {
      1, 1, 0, 1, 0,  0, 1, 0,  1, 0,  1, 0,  1, 0,  1, 0,  1, 0,
      0, 1, 0,  0, 0,  1, 0,  1, 1, 0,  1, 0,  1, 0,  1, 0,  0, 0,
      1, 0, 0,  0, 0,  0, 1, 1, 0, 0,  1, 0,  1, 0};

  std::vector<int> got;
  for (const auto& s : d.sentences) {
    for (const auto& t : s.tokens) {
      c.expect(t.prominence != Prominence::kUnlabeled,
               "fixture token mapped to unlabeled");
      got.push_back(t.prominence == Prominence::kProminent ? 1 : 0);
    }
  }
  c.expect(d.sentences.size() == 20,
           "expected 20 sentences, got " + std::to_string(d.sentences.size()));
  c.expect(got.size() == 50,
           "expected 50 tokens, got " + std::to_string(got.size()));
  c.expect(got == expected, "mapped binary sequence differs from hand labels");
  c.expect(stats.unknown_accents == 0,
           "fixture accents should all be recognized");

  // Split plumbing on the fixture.
  const SplitIndices idx = split_indices(d.sentences.size(), SplitSpec{});
  c.expect(idx.train.size() == 16 && idx.dev.size() == 3 &&
               idx.test.size() == 1,
           "80-15-5 split of 20 sentences is not 16/3/1");

  // Report plumbing: a quick synthetic-encoder run over the fixture feeds
  // the overall and per-layer tables without error.
  SyntheticConfig scfg;
  scfg.hidden_size = 12;
  scfg.latent_size = 20;
  scfg.num_layers = 2;
  SyntheticEncoder encoder(scfg, "synthetic:fixture");
  ExperimentConfig cfg;
  cfg.epochs = 3;
  cfg.num_runs = 2;
  ActivationStore store = ActivationStore::build(encoder, d, cfg.pooling);
  AggregateResult agg =
      repeat_frozen(store, d, idx, cfg, encoder.parameter_hash());
  c.expect(agg.aborted_runs == 0, "fixture training aborted");

  OverallTable overall;
  overall.datasets = {"fixture"};
  overall.add_row("frozen prominence", {100.0 * agg.mean_test_accuracy});
  c.expect(overall.to_text().find("frozen prominence") != std::string::npos,
           "overall table did not render");

  ExperimentConfig base = cfg;
  std::vector<AggregateResult> sweeps =
      sweep_layers(store, d, idx, base, {0, 1, 2}, encoder.parameter_hash());
  LayerTable lt;
  lt.layers = {0, 1, 2};
  std::vector<double> col;
  for (const auto& a : sweeps) col.push_back(100.0 * a.mean_test_accuracy);
  lt.add_column("fixture prominence", col);
  const std::string csv = lt.to_csv();
  c.expect(std::count(csv.begin(), csv.end(), '\n') == 4,
           "layer table should render header + 3 rows");

  verdict(7, c.ok ? "PASS" : "FAIL",
          c.ok ? "50-token fixture maps to the expected binary sequence; "
                 "16/3/1 split and table rendering work on it"
               : c.first_problem);
}

// ── criterion 8: report fidelity on published numbers ────────────────────

void criterion_8() {
  Check c;

  OverallTable t2;
  t2.datasets = {"BURNC", "SWBD", "LibriTTS"};
  t2.add_row("frozen prominence", {87.14, 78.10, 82.67});
  t2.add_row("finetuned prominence", {85.53, 75.95, 80.32});
  t2.add_row("frozen pos", {95.97, 97.94, 98.49});
  t2.add_row("finetuned pos", {97.56, 98.54, 98.96});

  const std::string text = t2.to_text();
  const std::vector<std::pair<std::string, std::vector<std::string>>> want = {
      {"frozen prominence", {"87.14", "78.10", "82.67"}},
      {"finetuned prominence", {"85.53", "75.95", "80.32"}},
      {"frozen pos", {"95.97", "97.94", "98.49"}},
      {"finetuned pos", {"97.56", "98.54", "98.96"}},
  };
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  {
    const size_t b = line.find("BURNC"), s = line.find("SWBD"),
                 l = line.find("LibriTTS");
    c.expect(b != std::string::npos && s != std::string::npos &&
                 l != std::string::npos && b < s && s < l,
             "header row lost the dataset order");
  }
  for (const auto& [label, vals] : want) {
    c.expect(static_cast<bool>(std::getline(lines, line)), "table too short");
    c.expect(line.rfind(label, 0) == 0, "row out of order: " + line);
    size_t pos = 0;
    for (const auto& v : vals) {
      const size_t at = line.find(v, pos);
      c.expect(at != std::string::npos, label + " row lost value " + v);
      pos = (at == std::string::npos) ? pos : at + v.size();
    }
  }
  c.expect(t2.missing_cells().empty(), "no cell should be missing");

  const std::string csv = t2.to_csv();
  c.expect(csv.find("frozen prominence,87.14,78.10,82.67") != std::string::npos,
           "CSV row differs from published values");
  c.expect(csv.find("finetuned pos,97.56,98.54,98.96") != std::string::npos,
           "CSV ft POS row differs from published values");

  // Top-2 bolding on the 12-value prominence column: the duplicated 85.26
  // entries (layers 4 and 5) and nothing else.
  const std::vector<double> burnc_prom = {81.51, 83.52, 85.20, 85.20,
                                          85.26, 85.26, 84.13, 84.46,
                                          83.79, 82.92, 82.59, 83.26};
  const std::vector<bool> bold = bold_top_two(burnc_prom, 2);
  for (size_t i = 0; i < bold.size(); ++i) {
    const bool want_bold = (i == 4 || i == 5);
    c.expect(bold[i] == want_bold,
             "bold mark at layer " + std::to_string(i) + " should be " +
                 (want_bold ? "set" : "clear"));
  }

  verdict(8, c.ok ? "PASS" : "FAIL",
          c.ok ? "published overall numbers render exactly; top-2 bolding "
                 "marks layers 4 and 5"
               : c.first_problem);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::cout << (g_failures == 0 ? "all criteria passed or skipped"
                                : std::to_string(g_failures) + " criteria failed")
            << "\n";
  return g_failures;
}
