#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "prosoprobe/synthetic.hpp"

using namespace prosoprobe;

namespace {

SyntheticConfig small_cfg() {
  SyntheticConfig cfg;
  cfg.hidden_size = 8;
  cfg.latent_size = 16;
  cfg.num_layers = 3;
  cfg.max_sequence_length = 16;
  cfg.seed = 21;
  return cfg;
}

LabeledSentence words(const std::vector<std::string>& ws) {
  LabeledSentence s;
  s.doc_id = "syn";
  s.sentence_index = 0;
  for (const auto& w : ws) {
    WordToken t;
    t.text = w;
    t.prominence = Prominence::kNonProminent;
    s.tokens.push_back(t);
  }
  return s;
}

}  // namespace

TEST_CASE("synthetic encoder configuration") {
  SECTION("latent space must be larger than hidden") {
    SyntheticConfig cfg = small_cfg();
    cfg.latent_size = cfg.hidden_size;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  SECTION("json round trip") {
    SyntheticConfig cfg = small_cfg();
    SyntheticConfig back = SyntheticConfig::from_json(cfg.to_json());
    CHECK(back.hidden_size == cfg.hidden_size);
    CHECK(back.latent_size == cfg.latent_size);
    CHECK(back.num_layers == cfg.num_layers);
    CHECK(back.seed == cfg.seed);
  }
}

TEST_CASE("synthetic encoder determinism") {
  SyntheticEncoder enc(small_cfg());
  auto sentence = words({"alpha", "beta", "gamma"});

  SECTION("identical inputs produce bitwise identical stacks") {
    auto a = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    auto b = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.layers(); ++i) {
      CHECK((a.layer(i).array() == b.layer(i).array()).all());
    }
  }

  SECTION("stack shape is (L+1, words, hidden)") {
    auto st = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    CHECK(st.layers() == 4);
    CHECK(st.words() == 3);
    CHECK(st.hidden() == 8);
    CHECK(st.all_finite());
    CHECK(st.frozen);
  }

  SECTION("word vectors depend only on the word text") {
    auto one = enc.encode_frozen(words({"alpha"}), Pooling::kFirstPiece);
    auto st = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    for (int i = 0; i < st.layers(); ++i) {
      CHECK((st.layer(i).row(0).array() == one.layer(i).row(0).array()).all());
    }
  }

  SECTION("different words differ") {
    auto st = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    CHECK((st.layer(1).row(0) - st.layer(1).row(1)).cwiseAbs().maxCoeff() > 0);
  }

  SECTION("layers are distinct projections of the same latent") {
    auto st = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    CHECK((st.layer(0).row(0) - st.layer(2).row(0)).cwiseAbs().maxCoeff() > 0);
    VecF manual = enc.word_layer("alpha", 2);
    CHECK((st.layer(2).row(0).transpose().array() == manual.array()).all());
  }

  SECTION("clones hash identically and encode identically") {
    auto copy = enc.clone();
    CHECK(copy->parameter_hash() == enc.parameter_hash());
    auto a = enc.encode_frozen(sentence, Pooling::kFirstPiece);
    auto b = copy->encode_frozen(sentence, Pooling::kFirstPiece);
    CHECK((a.layer(3).array() == b.layer(3).array()).all());
  }

  SECTION("a different seed is a different encoder") {
    SyntheticConfig other = small_cfg();
    other.seed = 22;
    SyntheticEncoder enc2(other);
    CHECK(enc2.parameter_hash() != enc.parameter_hash());
  }
}

TEST_CASE("synthetic alignment") {
  SyntheticEncoder enc(small_cfg());  // budget: 16 - 2 = 14 words

  SECTION("identity alignment with markers") {
    auto a = enc.align(words({"x", "y"}));
    REQUIRE(a.pieces.size() == 4);
    CHECK(a.pieces[0] == "[CLS]");
    CHECK(a.pieces[3] == "[SEP]");
    REQUIRE(a.num_words() == 2);
    CHECK(a.word_spans[0].begin == 1);
    CHECK(a.word_spans[0].end == 1);
    CHECK(a.word_spans[1].begin == 2);
  }

  SECTION("overlong sentences truncate whole words") {
    std::vector<std::string> many;
    for (int i = 0; i < 20; ++i) many.push_back("w" + std::to_string(i));
    auto a = enc.align(words(many));
    CHECK(a.truncated);
    CHECK(a.num_words() == 14);
    CHECK(a.num_source_words == 20);
    auto st = enc.encode_frozen(words(many), Pooling::kFirstPiece);
    CHECK(st.words() == 14);
  }

  SECTION("layer index bounds on word_layer") {
    CHECK_THROWS_AS(enc.word_layer("x", 4), std::out_of_range);
    CHECK_THROWS_AS(enc.word_layer("x", -1), std::out_of_range);
  }
}

TEST_CASE("synthetic task construction") {
  SyntheticEncoder enc(small_cfg());
  auto task = make_synthetic_task(enc, 2, /*num_sentences=*/40,
                                  /*words_per_sentence=*/6, /*seed=*/303,
                                  /*candidate_words=*/400,
                                  /*keep_fraction=*/0.5);

  SECTION("margin filter keeps roughly the requested fraction") {
    CHECK(task.vocabulary.size() >= 180);
    CHECK(task.vocabulary.size() <= 220);
    CHECK(task.layer == 2);
  }

  SECTION("dataset shape and labels") {
    CHECK(task.dataset.sentences.size() == 40);
    CHECK(task.dataset.token_count() == 240);
    CHECK(task.dataset.task_labels_present.count(Task::kProminence) == 1);
    for (const auto& s : task.dataset.sentences) {
      CHECK(s.doc_id == "synthetic");
      for (const auto& t : s.tokens) {
        CHECK(t.prominence != Prominence::kUnlabeled);
      }
    }
  }

  SECTION("labels are consistent per word and linear at the task layer") {
    Rng rng(303);  // the task's direction u comes first from this stream
    VecF u(enc.config().hidden_size);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u[i] = static_cast<float>(rng.gaussian());
    }
    std::map<std::string, Prominence> seen;
    for (const auto& s : task.dataset.sentences) {
      for (const auto& t : s.tokens) {
        const float score = u.dot(enc.word_layer(t.text, task.layer));
        const Prominence want =
            score > 0 ? Prominence::kProminent : Prominence::kNonProminent;
        CHECK(t.prominence == want);
        auto it = seen.find(t.text);
        if (it != seen.end()) {
          CHECK(it->second == t.prominence);
        } else {
          seen.emplace(t.text, t.prominence);
        }
      }
    }
    CHECK(seen.size() > 20);  // the task actually samples many distinct words
  }

  SECTION("both classes are present") {
    int prom = 0, non = 0;
    for (const auto& s : task.dataset.sentences) {
      for (const auto& t : s.tokens) {
        (t.prominence == Prominence::kProminent ? prom : non)++;
      }
    }
    CHECK(prom > 0);
    CHECK(non > 0);
  }

  SECTION("task determinism") {
    auto again = make_synthetic_task(enc, 2, 40, 6, 303, 400, 0.5);
    CHECK(again.vocabulary == task.vocabulary);
    CHECK(dataset_hash(again.dataset) == dataset_hash(task.dataset));
    auto shifted = make_synthetic_task(enc, 2, 40, 6, 304, 400, 0.5);
    CHECK(dataset_hash(shifted.dataset) != dataset_hash(task.dataset));
  }

  SECTION("argument validation") {
    CHECK_THROWS_AS(make_synthetic_task(enc, 9, 10, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic_task(enc, 1, 0, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic_task(enc, 1, 10, 5, 1, 100, 0.0),
                    std::invalid_argument);
  }
}
