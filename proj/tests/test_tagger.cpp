#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "prosoprobe/tagger.hpp"
#include "prosoprobe/tagger_http.hpp"

using namespace prosoprobe;
namespace fs = std::filesystem;

namespace {

Dataset two_sentence_dataset() {
  Dataset d;
  d.name = "tagtest";
  d.task_labels_present = {Task::kProminence};
  const std::vector<std::vector<std::string>> sents = {
      {"the", "dog", "barks", "."}, {"a", "cat", "runs", "quickly"}};
  for (size_t i = 0; i < sents.size(); ++i) {
    LabeledSentence s;
    s.doc_id = "doc";
    s.sentence_index = static_cast<int>(i);
    for (const auto& w : sents[i]) {
      WordToken t;
      t.text = w;
      t.prominence = Prominence::kNonProminent;
      s.tokens.push_back(t);
    }
    d.sentences.push_back(std::move(s));
  }
  return d;
}

// In-memory client with a call counter; tags every word NOUN except a fixed
// lookup, emitting one span per word like a well-behaved tagger.
class FakeClient final : public TaggerClient {
 public:
  std::vector<TagSpan> tag(const std::vector<std::string>& tokens) override {
    ++calls;
    std::vector<TagSpan> spans;
    int offset = 0;
    for (const auto& t : tokens) {
      std::string tag = "NOUN";
      if (t == "the" || t == "a") tag = "DET";
      if (t == "barks" || t == "runs") tag = "VERB";
      if (t == ".") tag = "PUNCT";
      if (t == "quickly") tag = "ADV";
      spans.push_back({tag, offset, offset + static_cast<int>(t.size())});
      offset += static_cast<int>(t.size()) + 1;
    }
    return spans;
  }
  std::string name() const override { return "fake"; }
  int calls = 0;
};

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((fs::temp_directory_path() / name).string()) {
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("tag reconciliation") {
  const std::vector<std::string> words = {"the", "dog's", "bone"};
  // joined: "the dog's bone" -> offsets 0, 4, 10

  SECTION("one span per word") {
    std::vector<TagSpan> spans = {{"DET", 0, 3}, {"NOUN", 4, 9}, {"NOUN", 10, 14}};
    CHECK(reconcile_tags(words, spans, "t") ==
          std::vector<std::string>{"DET", "NOUN", "NOUN"});
  }

  SECTION("retokenized spans map by first character") {
    // The tagger split "dog's" into "dog" [4,7) and "'s" [7,9); the word
    // takes the tag of the piece covering its first character.
    std::vector<TagSpan> spans = {
        {"DET", 0, 3}, {"NOUN", 4, 7}, {"PART", 7, 9}, {"NOUN", 10, 14}};
    CHECK(reconcile_tags(words, spans, "t") ==
          std::vector<std::string>{"DET", "NOUN", "NOUN"});
  }

  SECTION("merged spans cover several words") {
    std::vector<TagSpan> spans = {{"X", 0, 14}};
    CHECK(reconcile_tags(words, spans, "t") ==
          std::vector<std::string>{"X", "X", "X"});
  }

  SECTION("a gap is a hard error naming the word") {
    std::vector<TagSpan> spans = {{"DET", 0, 3}, {"NOUN", 10, 14}};
    CHECK_THROWS_WITH(reconcile_tags(words, spans, "doc#7"),
                      Catch::Matchers::ContainsSubstring("doc#7") &&
                          Catch::Matchers::ContainsSubstring("dog's"));
  }
}

TEST_CASE("tag cache") {
  TempFile tmp("tagcache-test.tsv");
  const std::vector<std::string> tokens = {"the", "dog"};
  const uint64_t h = TagCache::token_hash(tokens);

  SECTION("cold cache misses") {
    TagCache cache = TagCache::load(tmp.path);
    CHECK(cache.size() == 0);
    CHECK(cache.find("doc", 0, h) == nullptr);
  }

  SECTION("round trip through disk") {
    {
      TagCache cache = TagCache::load(tmp.path);
      cache.put("doc", 0, h, {"DET", "NOUN"});
      cache.put("doc", 1, h, {"DET", "NOUN"});
      cache.save();
    }
    TagCache warm = TagCache::load(tmp.path);
    CHECK(warm.size() == 2);
    const auto* tags = warm.find("doc", 0, h);
    REQUIRE(tags != nullptr);
    CHECK(*tags == std::vector<std::string>{"DET", "NOUN"});
  }

  SECTION("token hash is order- and content-sensitive") {
    CHECK(TagCache::token_hash({"a", "b"}) != TagCache::token_hash({"b", "a"}));
    CHECK(TagCache::token_hash({"ab"}) != TagCache::token_hash({"a", "b"}));
    CHECK(TagCache::token_hash({"a", "b"}) == TagCache::token_hash({"a", "b"}));
  }

  SECTION("a changed sentence misses") {
    TagCache cache = TagCache::load(tmp.path);
    cache.put("doc", 0, h, {"DET", "NOUN"});
    CHECK(cache.find("doc", 0, TagCache::token_hash({"the", "cat"})) == nullptr);
    CHECK(cache.find("doc", 1, h) == nullptr);
    CHECK(cache.find("other", 0, h) == nullptr);
  }

  SECTION("malformed cache rows fail loudly") {
    {
      std::ofstream out(tmp.path);
      out << "doc\t0\tdeadbeef\n";  // only 3 fields
    }
    CHECK_THROWS_AS(TagCache::load(tmp.path), ParseError);
  }
}

TEST_CASE("dataset tagging") {
  SECTION("tags flow into tokens and the task registers") {
    Dataset d = two_sentence_dataset();
    FakeClient client;
    TagReport rep = tag_dataset(d, client);
    CHECK(rep.tagged == 2);
    CHECK(rep.from_cache == 0);
    CHECK(d.task_labels_present.count(Task::kPos) == 1);
    REQUIRE(d.sentences[0].tokens[0].pos.has_value());
    CHECK(*d.sentences[0].tokens[0].pos == "DET");
    CHECK(*d.sentences[0].tokens[2].pos == "VERB");
    CHECK(*d.sentences[0].tokens[3].pos == "PUNCT");
    CHECK(*d.sentences[1].tokens[3].pos == "ADV");
  }

  SECTION("second pass is served from the cache") {
    TempFile tmp("tagcache-flow.tsv");
    FakeClient client;
    {
      Dataset d = two_sentence_dataset();
      TagCache cache = TagCache::load(tmp.path);
      TagReport rep = tag_dataset(d, client, &cache);
      CHECK(rep.tagged == 2);
      CHECK(client.calls == 2);
    }
    {
      Dataset d = two_sentence_dataset();
      TagCache cache = TagCache::load(tmp.path);
      TagReport rep = tag_dataset(d, client, &cache);
      CHECK(rep.tagged == 0);
      CHECK(rep.from_cache == 2);
      CHECK(client.calls == 2);  // no new tagger work
      CHECK(*d.sentences[1].tokens[1].pos == "NOUN");
    }
  }

  SECTION("tagset validation counts all inventory rows") {
    Dataset d = two_sentence_dataset();
    FakeClient client;
    tag_dataset(d, client);
    auto counts = validate_tagset(d);
    CHECK(counts.size() == 17);
    CHECK(counts["DET"] == 2);
    CHECK(counts["VERB"] == 2);
    CHECK(counts["NOUN"] == 2);
    CHECK(counts["PUNCT"] == 1);
    CHECK(counts["ADV"] == 1);
    CHECK(counts["SYM"] == 0);  // zero rows still present
  }

  SECTION("untagged tokens fail validation") {
    Dataset d = two_sentence_dataset();
    CHECK_THROWS_WITH(validate_tagset(d),
                      Catch::Matchers::ContainsSubstring("has no POS tag"));
  }

  SECTION("foreign tags fail with counts") {
    Dataset d = two_sentence_dataset();
    for (auto& s : d.sentences) {
      for (auto& t : s.tokens) t.pos = "NOUN";
    }
    d.sentences[0].tokens[0].pos = "SPACE";
    d.sentences[0].tokens[1].pos = "SPACE";
    d.sentences[1].tokens[0].pos = "JJ";
    CHECK_THROWS_WITH(validate_tagset(d),
                      Catch::Matchers::ContainsSubstring("SPACE (x2)") &&
                          Catch::Matchers::ContainsSubstring("JJ (x1)"));
  }
}

TEST_CASE("process tagger client") {
  const std::string script = std::string(FIXTURE_DIR) + "/mock_tagger.py";
  REQUIRE(fs::exists(script));
  ProcessTaggerClient client("python3 '" + script + "'");

  SECTION("tags one sentence") {
    auto spans = client.tag({"the", "dog", "barks", "."});
    REQUIRE(spans.size() == 4);
    CHECK(spans[0].tag == "DET");
    CHECK(spans[0].begin == 0);
    CHECK(spans[0].end == 3);
    CHECK(spans[2].tag == "VERB");
    CHECK(spans[3].tag == "PUNCT");
    CHECK(spans[3].begin == 14);
  }

  SECTION("batches keep sentence order") {
    auto batches = client.tag_batch({{"Rex", "barks"}, {"the", "cat"}});
    REQUIRE(batches.size() == 2);
    CHECK(batches[0][0].tag == "PROPN");
    CHECK(batches[1][0].tag == "DET");
    CHECK(batches[1][1].tag == "NOUN");
  }

  SECTION("end to end through tag_dataset") {
    Dataset d = two_sentence_dataset();
    TagReport rep = tag_dataset(d, client);
    CHECK(rep.tagged == 2);
    auto counts = validate_tagset(d);
    CHECK(counts["DET"] == 2);
    CHECK(counts["VERB"] == 2);
  }

  SECTION("a failing command is an error") {
    ProcessTaggerClient broken("false");
    CHECK_THROWS_WITH(broken.tag({"x"}),
                      Catch::Matchers::ContainsSubstring("tagger command failed"));
  }

  SECTION("a short response is an error") {
    ProcessTaggerClient quiet("head -n 0");
    CHECK_THROWS_WITH(quiet.tag({"x"}),
                      Catch::Matchers::ContainsSubstring("1 sentences"));
  }
}

TEST_CASE("http tagger client") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/tag", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    json body = json::parse(req.body);
    json out_sents = json::array();
    for (const auto& sent : body.at("sentences")) {
      json spans = json::array();
      int offset = 0;
      for (const auto& tok : sent) {
        const std::string w = tok.get<std::string>();
        spans.push_back({{"tag", w == "the" ? "DET" : "NOUN"},
                         {"begin", offset},
                         {"end", offset + static_cast<int>(w.size())}});
        offset += static_cast<int>(w.size()) + 1;
      }
      out_sents.push_back(spans);
    }
    res.set_content(json{{"sentences", out_sents}}.dump(), "application/json");
  });
  server.Post("/wrong", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"sentences\": []}", "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  {
    HttpTaggerClient client("127.0.0.1", port);

    auto spans = client.tag({"the", "dog"});
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].tag == "DET");
    CHECK(spans[1].tag == "NOUN");
    CHECK(spans[1].begin == 4);

    auto batches = client.tag_batch({{"a"}, {"the", "cat"}});
    REQUIRE(batches.size() == 2);
    CHECK(batches[1][0].tag == "DET");
    CHECK(hits.load() == 2);  // one POST per tag/tag_batch call

    HttpTaggerClient miscounting("127.0.0.1", port, "/wrong");
    CHECK_THROWS_WITH(miscounting.tag({"x"}),
                      Catch::Matchers::ContainsSubstring("wrong number"));

    HttpTaggerClient missing("127.0.0.1", port, "/nope");
    CHECK_THROWS_WITH(missing.tag({"x"}),
                      Catch::Matchers::ContainsSubstring("HTTP 404"));
  }

  server.stop();
  server_thread.join();
}
