// prosoprobe: prepare / tag / train / sweep / report.
//
// Every train or sweep output directory receives resolved.json (the fully
// merged configuration plus the seed list), so any artifact can be rerun
// bit-for-bit from its directory alone.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prosoprobe/prosoprobe.hpp"
#include "prosoprobe/tagger_http.hpp"

namespace fs = std::filesystem;
using namespace prosoprobe;

namespace {

constexpr const char* kModelDirEnv = "PROSOPROBE_MODEL_DIR";

// Missing input files get their own exit code (2) so scripts can tell
// "you pointed me at nothing" from genuine failures.
struct MissingInput {
  std::string what;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true,
                       /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.good()) throw IoError("write failed for '" + path + "'");
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// --set a.b.c=value; the value is parsed as JSON when it looks like JSON,
// otherwise taken as a plain string.
void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("--set expects key=value, got '" + assignment +
                                "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &config;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part =
        key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) {
      throw std::invalid_argument("--set key has an empty segment: '" + key +
                                  "'");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// Options shared by train and sweep; flag values land in the config JSON
// so resolved.json reflects exactly what ran.
struct RunFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string data;
  std::string probe;  // mix | per_layer | finetune
  int layer = -1;
  std::string task;
  std::string pooling;
  int jobs = 1;
  long long seed_base = -1;
};

json resolve_config(const RunFlags& f) {
  json config = json::object();
  if (!f.config_path.empty()) config = load_json_file(f.config_path);
  if (!config.is_object()) {
    throw std::invalid_argument("config file must hold a JSON object");
  }
  for (const auto& s : f.sets) apply_override(config, s);
  if (!f.data.empty()) config["data"] = f.data;
  json& exp = config["experiment"];
  if (exp.is_null()) exp = json::object();
  if (!f.probe.empty()) {
    if (f.probe == "mix") {
      exp["probe"] = "scalar_mix";
      exp["mode"] = "frozen";
      exp["fixed_layer"] = -1;
    } else if (f.probe == "per_layer") {
      exp["probe"] = "per_layer";
      exp["mode"] = "frozen";
      if (f.layer >= 0) exp["fixed_layer"] = f.layer;
    } else if (f.probe == "finetune") {
      exp["probe"] = "scalar_mix";
      exp["mode"] = "finetune";
      exp["fixed_layer"] = -1;
    }
  } else if (f.layer >= 0) {
    exp["probe"] = "per_layer";
    exp["fixed_layer"] = f.layer;
  }
  if (!f.task.empty()) exp["task"] = f.task;
  if (!f.pooling.empty()) exp["pooling"] = f.pooling;
  if (f.seed_base >= 0) exp["seed_base"] = f.seed_base;
  return config;
}

struct EncoderBundle {
  std::unique_ptr<Encoder> encoder;
  BertEncoder* bert = nullptr;  // non-null when the model is a checkpoint dir
  std::string model_ref;
};

EncoderBundle make_encoder(const json& config) {
  std::string model = config.value("model", "");
  if (model.empty()) {
    if (const char* env = std::getenv(kModelDirEnv)) model = env;
  }
  if (model.empty()) model = "synthetic:default";

  EncoderBundle b;
  b.model_ref = model;
  if (starts_with(model, "synthetic")) {
    SyntheticConfig cfg;
    if (config.contains("synthetic")) {
      cfg = SyntheticConfig::from_json(config["synthetic"]);
    }
    b.encoder = std::make_unique<SyntheticEncoder>(cfg, model);
  } else {
    if (!fs::exists(model)) throw MissingInput{"model directory '" + model + "'"};
    auto bert = std::make_unique<BertEncoder>(BertEncoder::load_dir(model));
    b.bert = bert.get();
    b.encoder = std::move(bert);
  }
  return b;
}

Dataset load_dataset(const json& config) {
  const std::string path = config.value("data", "");
  if (path.empty()) throw MissingInput{"dataset (no 'data' in config, no --data)"};
  if (!fs::exists(path)) throw MissingInput{"dataset '" + path + "'"};
  return ingest_canonical(path);
}

std::string activation_cache_path(const json& config, const std::string& out_dir,
                                  const Encoder& encoder, const Dataset& dataset,
                                  Pooling pooling) {
  const std::string dir = config.value("cache_dir", out_dir);
  fs::create_directories(dir);
  uint64_t key = fnv1a(encoder.spec().model_id);
  key = fnv1a(hex64(encoder.parameter_hash()), key);
  key = fnv1a(hex64(dataset_hash(dataset)), key);
  key = fnv1a(to_string(pooling), key);
  return dir + "/activations-" + hex64(key) + ".pptc";
}

void print_stats(const Dataset& d, Task task) {
  const Stats st = dataset_stats(d, task);
  std::cout << "  " << to_string(task) << ": " << st.labeled_tokens
            << " labeled tokens;";
  for (const auto& [name, count] : st.class_counts) {
    std::cout << " " << name << "=" << count;
  }
  std::cout << "; majority " << st.majority_class << " "
            << fixed_str(100.0 * st.majority_fraction, 2) << "%";
  if (st.majority_tie) std::cout << " (tie)";
  std::cout << "\n";
}

// ── prepare ──────────────────────────────────────────────────────────────

int cmd_prepare(const std::string& input, const std::string& format,
                const std::string& out) {
  if (!fs::exists(input)) throw MissingInput{"input '" + input + "'"};
  Dataset d;
  TobiMapStats tobi;
  if (format == "canonical") {
    d = ingest_canonical(input);
  } else if (format == "hpc") {
    d = ingest_hpc(input);
  } else if (format == "tobi_tsv") {
    d = ingest_tobi_tsv(input, &tobi);
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
  export_canonical(d, out);
  std::cout << "wrote " << out << ": " << d.sentences.size() << " sentences, "
            << d.token_count() << " tokens\n";
  for (Task task : d.task_labels_present) print_stats(d, task);
  if (tobi.unknown_accents > 0) {
    std::cout << "  " << tobi.unknown_accents
              << " unrecognized accent string(s) mapped to prominent:";
    for (const auto& [s, n] : tobi.unknown_by_string) {
      std::cout << " '" << s << "' (x" << n << ")";
    }
    std::cout << "\n";
  }
  return 0;
}

// ── tag ──────────────────────────────────────────────────────────────────

// Stands in when no tagger was configured: every cache miss is fatal.
class NoTaggerClient final : public TaggerClient {
 public:
  std::vector<TagSpan> tag(const std::vector<std::string>& tokens) override {
    throw std::runtime_error(
        "no tagger configured (--tagger/--tagger-url) and the cache does not "
        "cover the sentence starting with '" +
        (tokens.empty() ? std::string("<empty>") : tokens.front()) + "'");
  }
  std::string name() const override { return "<none>"; }
};

std::unique_ptr<TaggerClient> make_tagger(const std::string& command,
                                          const std::string& url) {
  if (!command.empty() && !url.empty()) {
    throw std::invalid_argument("--tagger and --tagger-url are exclusive");
  }
  if (!command.empty()) return std::make_unique<ProcessTaggerClient>(command);
  if (!url.empty()) {
    // host:port[/path]
    const auto colon = url.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("--tagger-url expects host:port[/path]");
    }
    const std::string host = url.substr(0, colon);
    std::string rest = url.substr(colon + 1);
    std::string path = "/tag";
    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
      path = rest.substr(slash);
      rest = rest.substr(0, slash);
    }
    int port = 0;
    try {
      port = std::stoi(rest);
    } catch (const std::exception&) {
      throw std::invalid_argument("--tagger-url has a bad port: '" + rest + "'");
    }
    return std::make_unique<HttpTaggerClient>(host, port, path);
  }
  return std::make_unique<NoTaggerClient>();
}

int cmd_tag(const std::string& input, const std::string& out,
            const std::string& tagger_cmd, const std::string& tagger_url,
            std::string cache_path) {
  if (!fs::exists(input)) throw MissingInput{"input '" + input + "'"};
  Dataset d = ingest_canonical(input);
  auto client = make_tagger(tagger_cmd, tagger_url);
  if (cache_path.empty()) cache_path = out + ".tagcache.tsv";
  TagCache cache = TagCache::load(cache_path);
  const TagReport rep = tag_dataset(d, *client, &cache);
  const auto counts = validate_tagset(d);
  export_canonical(d, out);
  std::cout << "wrote " << out << ": " << d.sentences.size() << " sentences ("
            << rep.from_cache << " from cache, " << rep.tagged
            << " freshly tagged via " << client->name() << ")\n";
  std::cout << "  tag counts:";
  for (const auto& [tag, n] : counts) std::cout << " " << tag << "=" << n;
  std::cout << "\n  cache: " << cache_path << " (" << cache.size()
            << " sentences)\n";
  return 0;
}

// ── train ────────────────────────────────────────────────────────────────

json base_resolved(const char* command, const json& config,
                   const ExperimentConfig& exp, const EncoderBundle& enc,
                   const Dataset& dataset, uint64_t data_hash, int jobs) {
  json seeds = json::array();
  for (int r = 0; r < exp.num_runs; ++r) seeds.push_back(exp.seed_base + r);
  return {{"command", command},
          {"config", config},
          {"experiment", exp.to_json()},
          {"config_hash", hex64(config_hash(exp))},
          {"model", enc.model_ref},
          {"dataset", dataset.name},
          {"dataset_hash", hex64(data_hash)},
          {"seeds", seeds},
          {"jobs", jobs}};
}

int cmd_train(const RunFlags& flags) {
  const json config = resolve_config(flags);
  ExperimentConfig exp =
      ExperimentConfig::from_json(config.value("experiment", json::object()));
  Dataset dataset = load_dataset(config);
  EncoderBundle enc = make_encoder(config);
  const SplitIndices idx = split_indices(dataset.sentences.size(), exp.split);
  const uint64_t data_hash = dataset_hash(dataset);

  fs::create_directories(flags.out_dir);
  write_json_file(flags.out_dir + "/resolved.json",
                  base_resolved("train", config, exp, enc, dataset, data_hash,
                                flags.jobs));

  auto save_run = [&](const RunResult& res, const Probe<float>& probe) {
    write_json_file(flags.out_dir + "/run-" + std::to_string(res.seed) + ".json",
                    res.to_json());
    if (!res.aborted) {
      save_probe(probe,
                 flags.out_dir + "/probe-" + std::to_string(res.seed) + ".pptc",
                 hex64(config_hash(exp)));
    }
  };

  AggregateResult agg;
  if (exp.mode == Mode::kFrozen) {
    const std::string acts = activation_cache_path(config, flags.out_dir,
                                                   *enc.encoder, dataset,
                                                   exp.pooling);
    ActivationStore store = ActivationStore::open_or_build(
        acts, *enc.encoder, dataset, exp.pooling);
    std::cout << "activations: " << acts
              << (store.built_fresh() ? " (built)" : " (reused)") << "\n";
    const uint64_t enc_hash = enc.encoder->parameter_hash();
    agg = repeat_runs(
        [&](uint64_t seed) {
          Probe<float> probe;
          RunResult res =
              run_frozen(store, dataset, idx, exp, seed, enc_hash, &probe);
          save_run(res, probe);
          return res;
        },
        exp.num_runs, exp.seed_base, flags.jobs);
  } else {
    if (!enc.bert) {
      throw std::runtime_error("fine-tuning needs a transformer checkpoint "
                               "directory; model '" +
                               enc.model_ref + "' has no trainable weights");
    }
    const BertEncoder& base = *enc.bert;
    agg = repeat_runs(
        [&](uint64_t seed) {
          BertEncoder local = base;  // each run fine-tunes its own copy
          Probe<float> probe;
          RunResult res = run_finetune(local, dataset, idx, exp, seed, &probe);
          save_run(res, probe);
          return res;
        },
        exp.num_runs, exp.seed_base, flags.jobs);
  }

  json meta = run_metadata(exp, agg, dataset.name, data_hash);
  meta["model"] = enc.model_ref;
  write_json_file(flags.out_dir + "/aggregate.json", meta);

  WeightPanel panel;
  panel.title = dataset.name + " " + std::string(to_string(exp.task));
  for (const auto& r : agg.runs) {
    if (!r.aborted) {
      panel.series.push_back(
          {"seed" + std::to_string(r.seed), r.mix_weights});
    }
  }
  if (!agg.mean_mix_weights.empty()) {
    panel.series.push_back({"mean", agg.mean_mix_weights});
  }
  if (!panel.series.empty()) {
    write_text_file(flags.out_dir + "/weights.csv", weight_plot_csv({panel}));
  }

  std::cout << "test accuracy: mean "
            << fixed_str(100.0 * agg.mean_test_accuracy, 2) << "% (stdev "
            << fixed_str(100.0 * agg.stdev_test_accuracy, 2) << "%, "
            << (agg.runs.size() - agg.aborted_runs) << "/" << agg.runs.size()
            << " runs)\n";
  if (agg.aborted_runs > 0) {
    std::cerr << "error: " << agg.aborted_runs << " run(s) aborted\n";
    return 1;
  }
  return 0;
}

// ── sweep ────────────────────────────────────────────────────────────────

std::vector<int> parse_layers(const std::string& spec, int layer_count) {
  std::vector<int> out;
  if (spec.empty() || spec == "all") {
    for (int i = 0; i < layer_count; ++i) out.push_back(i);
    return out;
  }
  std::istringstream in(spec);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dash));
        const int hi = std::stoi(part.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("descending range");
        for (int i = lo; i <= hi; ++i) out.push_back(i);
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("bad --layers spec near '" + part + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("--layers selected nothing");
  for (int l : out) {
    if (l < 0 || l >= layer_count) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " out of range [0, " +
                                  std::to_string(layer_count) + ")");
    }
  }
  return out;
}

int cmd_sweep(const RunFlags& flags, const std::string& layers_spec) {
  const json config = resolve_config(flags);
  ExperimentConfig exp =
      ExperimentConfig::from_json(config.value("experiment", json::object()));
  if (exp.mode != Mode::kFrozen) {
    throw std::invalid_argument("layer sweeps run on the frozen encoder only");
  }
  Dataset dataset = load_dataset(config);
  EncoderBundle enc = make_encoder(config);
  const SplitIndices idx = split_indices(dataset.sentences.size(), exp.split);
  const uint64_t data_hash = dataset_hash(dataset);

  fs::create_directories(flags.out_dir);
  const std::string acts = activation_cache_path(config, flags.out_dir,
                                                 *enc.encoder, dataset,
                                                 exp.pooling);
  ActivationStore store =
      ActivationStore::open_or_build(acts, *enc.encoder, dataset, exp.pooling);
  const uint64_t enc_hash = enc.encoder->parameter_hash();
  const std::vector<int> layers = parse_layers(layers_spec, store.layer_count());

  json resolved = base_resolved("sweep", config, exp, enc, dataset, data_hash,
                                flags.jobs);
  resolved["layers"] = layers;
  write_json_file(flags.out_dir + "/resolved.json", resolved);

  std::vector<double> accuracies;
  int reused = 0;
  for (int layer : layers) {
    ExperimentConfig cfg = exp;
    cfg.family = ProbeFamily::kPerLayer;
    cfg.fixed_layer = layer;
    const std::string artifact =
        flags.out_dir + "/sweep-layer" + std::to_string(layer) + ".json";

    // Resume: an artifact from an identical configuration stands.
    if (fs::exists(artifact)) {
      try {
        const json prev = load_json_file(artifact);
        if (prev.value("config_hash", "") == hex64(config_hash(cfg))) {
          accuracies.push_back(
              prev.at("result").at("mean_test_accuracy").get<double>());
          ++reused;
          continue;
        }
      } catch (const std::exception&) {
        // stale or unreadable artifact: recompute below
      }
    }

    AggregateResult agg =
        repeat_frozen(store, dataset, idx, cfg, enc_hash, flags.jobs);
    json meta = run_metadata(cfg, agg, dataset.name, data_hash);
    meta["model"] = enc.model_ref;
    meta["layer"] = layer;
    write_json_file(artifact, meta);
    accuracies.push_back(agg.mean_test_accuracy);
    std::cout << "layer " << layer << ": "
              << fixed_str(100.0 * agg.mean_test_accuracy, 2) << "%\n";
  }
  if (reused > 0) {
    std::cout << reused << " layer(s) reused from existing artifacts\n";
  }

  LayerTable table;
  table.layers = layers;
  std::vector<double> percents;
  percents.reserve(accuracies.size());
  for (double a : accuracies) percents.push_back(100.0 * a);
  table.add_column(dataset.name + " " + std::string(to_string(exp.task)),
                   percents);
  write_text_file(flags.out_dir + "/layer-table.csv", table.to_csv());
  const std::string text = table.to_text();
  write_text_file(flags.out_dir + "/layer-table.txt", text);
  std::cout << text;
  return 0;
}

// ── report ───────────────────────────────────────────────────────────────

struct CollectedResults {
  std::vector<json> trains;  // aggregate.json contents
  std::vector<json> sweeps;  // sweep-layer*.json contents
};

CollectedResults collect_results(const std::string& dir) {
  CollectedResults out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const bool is_train = name == "aggregate.json";
    const bool is_sweep = starts_with(name, "sweep-layer") &&
                          name.size() > 5 &&
                          name.substr(name.size() - 5) == ".json";
    if (!is_train && !is_sweep) continue;
    json j = load_json_file(entry.path().string());  // errors name the file
    (is_train ? out.trains : out.sweeps).push_back(std::move(j));
  }
  return out;
}

std::string experiment_label(const json& meta) {
  const json& cfg = meta.at("config");
  std::string label = cfg.value("mode", "?");
  if (label == "finetune") label = "finetuned";
  label += " " + cfg.value("task", "?");
  if (cfg.value("probe", "") == "per_layer") {
    label += " layer" + std::to_string(cfg.value("fixed_layer", -1));
  }
  return label;
}

int cmd_report(const std::string& results_dir, const std::string& out_dir) {
  if (!fs::exists(results_dir)) {
    throw MissingInput{"results directory '" + results_dir + "'"};
  }
  const CollectedResults got = collect_results(results_dir);
  if (got.trains.empty() && got.sweeps.empty()) {
    throw std::runtime_error("no aggregate results under '" + results_dir + "'");
  }
  fs::create_directories(out_dir);

  if (!got.trains.empty()) {
    std::vector<std::string> datasets;
    std::vector<std::string> extra_labels;  // per-layer one-offs
    std::set<std::string> tasks_seen;
    std::map<std::pair<std::string, std::string>, double> cells;
    for (const json& m : got.trains) {
      const std::string ds = m.value("dataset", "?");
      const std::string label = experiment_label(m);
      if (std::find(datasets.begin(), datasets.end(), ds) == datasets.end()) {
        datasets.push_back(ds);
      }
      if (m.at("config").value("probe", "") == "scalar_mix") {
        tasks_seen.insert(m.at("config").value("task", "?"));
      } else if (std::find(extra_labels.begin(), extra_labels.end(), label) ==
                 extra_labels.end()) {
        extra_labels.push_back(label);
      }
      cells[{label, ds}] =
          100.0 * m.at("result").at("mean_test_accuracy").get<double>();
    }
    std::sort(datasets.begin(), datasets.end());
    std::sort(extra_labels.begin(), extra_labels.end());

    // Fixed overall shape: {frozen, finetuned} x every task seen, so a
    // missing half renders as em-dashes instead of vanishing.
    std::vector<std::string> labels;
    for (const char* mode : {"frozen", "finetuned"}) {
      for (const char* task : {"prominence", "pos"}) {
        if (tasks_seen.count(task)) {
          labels.push_back(std::string(mode) + " " + task);
        }
      }
    }
    labels.insert(labels.end(), extra_labels.begin(), extra_labels.end());

    OverallTable table;
    table.datasets = datasets;
    for (const auto& label : labels) {
      std::vector<std::optional<double>> row;
      for (const auto& ds : datasets) {
        auto it = cells.find({label, ds});
        row.push_back(it == cells.end() ? std::optional<double>{}
                                        : std::optional<double>{it->second});
      }
      table.add_row(label, std::move(row));
    }
    write_text_file(out_dir + "/overall.csv", table.to_csv());
    const std::string text = table.to_text();
    write_text_file(out_dir + "/overall.txt", text);
    std::cout << text << "\n";
  }

  if (!got.sweeps.empty()) {
    // column key = "dataset task" -> layer -> accuracy%
    std::map<std::string, std::map<int, double>> columns;
    for (const json& m : got.sweeps) {
      const std::string key = m.value("dataset", "?") + " " +
                              m.at("config").value("task", "?");
      const int layer = m.value("layer", m.at("config").value("fixed_layer", -1));
      columns[key][layer] =
          100.0 * m.at("result").at("mean_test_accuracy").get<double>();
    }
    std::vector<int> layers;
    for (const auto& [key, by_layer] : columns) {
      for (const auto& [layer, acc] : by_layer) {
        if (std::find(layers.begin(), layers.end(), layer) == layers.end()) {
          layers.push_back(layer);
        }
      }
    }
    std::sort(layers.begin(), layers.end());
    LayerTable table;
    table.layers = layers;
    for (const auto& [key, by_layer] : columns) {
      std::vector<double> vals;
      for (int l : layers) {
        auto it = by_layer.find(l);
        if (it == by_layer.end()) {
          throw std::runtime_error("sweep for '" + key + "' is missing layer " +
                                   std::to_string(l) +
                                   "; rerun the sweep before reporting");
        }
        vals.push_back(it->second);
      }
      table.add_column(key, vals);
    }
    write_text_file(out_dir + "/layers.csv", table.to_csv());
    const std::string text = table.to_text();
    write_text_file(out_dir + "/layers.txt", text);
    std::cout << text << "\n";
  }

  // Mix-weight figure: one panel per (dataset, task), one series per mode.
  std::map<std::string, WeightPanel> panels;
  for (const json& m : got.trains) {
    const json& cfg = m.at("config");
    if (cfg.value("probe", "") != "scalar_mix") continue;
    const json& weights = m.at("result").at("mean_mix_weights");
    if (!weights.is_array() || weights.empty()) continue;
    const std::string key = m.value("dataset", "?") + " " +
                            cfg.value("task", "?");
    WeightPanel& panel = panels[key];
    panel.title = key;
    WeightSeries series;
    series.label = cfg.value("mode", "?") == "finetune" ? "finetuned" : "frozen";
    for (const auto& w : weights) series.weights.push_back(w.get<double>());
    panel.series.push_back(std::move(series));
  }
  if (!panels.empty()) {
    std::vector<WeightPanel> ordered;
    ordered.reserve(panels.size());
    for (auto& [key, p] : panels) ordered.push_back(std::move(p));
    write_text_file(out_dir + "/weights.svg", weight_plot_svg(ordered));
    write_text_file(out_dir + "/weights.csv", weight_plot_csv(ordered));
  }

  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layer probing toolkit"};
  app.require_subcommand(1);

  // prepare
  std::string prep_input, prep_format = "canonical", prep_out;
  auto* prepare = app.add_subcommand("prepare",
                                     "convert a corpus to the canonical format");
  prepare->add_option("--input", prep_input, "input file")->required();
  prepare->add_option("--format", prep_format, "canonical | hpc | tobi_tsv")
      ->check(CLI::IsMember({"canonical", "hpc", "tobi_tsv"}));
  prepare->add_option("--out", prep_out, "output canonical file")->required();

  // tag
  std::string tag_input, tag_out, tag_cmd, tag_url, tag_cache;
  auto* tag = app.add_subcommand("tag", "attach POS tags via an external tagger");
  tag->add_option("--input", tag_input, "canonical dataset")->required();
  tag->add_option("--out", tag_out, "output canonical file with POS")->required();
  tag->add_option("--tagger", tag_cmd, "tagger filter command (JSONL protocol)");
  tag->add_option("--tagger-url", tag_url, "HTTP tagger host:port[/path]");
  tag->add_option("--cache", tag_cache, "tag cache file (default <out>.tagcache.tsv)");

  // shared train/sweep options
  RunFlags flags;
  std::string layers_spec;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
    cmd->add_option("--set", flags.sets, "override config key (a.b.c=value)");
    cmd->add_option("--out", flags.out_dir, "artifact directory")->required();
    cmd->add_option("--data", flags.data, "canonical dataset path");
    cmd->add_option("--task", flags.task, "prominence | pos")
        ->check(CLI::IsMember({"prominence", "pos"}));
    cmd->add_option("--pooling", flags.pooling, "first | mean")
        ->check(CLI::IsMember({"first", "mean"}));
    cmd->add_option("--jobs", flags.jobs, "parallel runs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed-base", flags.seed_base, "first run seed");
  };

  auto* train = app.add_subcommand("train", "train probes over seeded runs");
  add_run_flags(train);
  train->add_option("--probe", flags.probe, "mix | per_layer | finetune")
      ->check(CLI::IsMember({"mix", "per_layer", "finetune"}));
  train->add_option("--layer", flags.layer, "fixed layer for per_layer probes");

  auto* sweep = app.add_subcommand("sweep", "per-layer diagnostic sweep");
  add_run_flags(sweep);
  sweep->add_option("--layers", layers_spec,
                    "layers to sweep: 'all', '0-3', or '0,4,7'");

  // report
  std::string rep_results, rep_out;
  auto* report = app.add_subcommand("report", "render tables and figures");
  report->add_option("--results", rep_results, "directory of run artifacts")
      ->required();
  report->add_option("--out", rep_out, "report output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(prep_input, prep_format, prep_out);
    if (tag->parsed()) return cmd_tag(tag_input, tag_out, tag_cmd, tag_url, tag_cache);
    if (train->parsed()) return cmd_train(flags);
    if (sweep->parsed()) return cmd_sweep(flags, layers_spec);
    if (report->parsed()) return cmd_report(rep_results, rep_out);
  } catch (const MissingInput& e) {
    std::cerr << "error: missing " << e.what << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
