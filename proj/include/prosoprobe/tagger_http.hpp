#pragma once

#include <httplib.h>

#include "prosoprobe/tagger.hpp"

namespace prosoprobe {

// POSTs {"sentences": [[token, ...], ...]} to an HTTP endpoint and expects
// {"sentences": [[{"tag","begin","end"}, ...], ...]}.
class HttpTaggerClient final : public TaggerClient {
 public:
  HttpTaggerClient(std::string host, int port, std::string path = "/tag")
      : host_(std::move(host)), port_(port), path_(std::move(path)) {}

  std::vector<TagSpan> tag(const std::vector<std::string>& tokens) override {
    return std::move(tag_batch({tokens}).front());
  }

  std::vector<std::vector<TagSpan>> tag_batch(
      const std::vector<std::vector<std::string>>& batch) override {
    json req;
    req["sentences"] = batch;
    httplib::Client client(host_, port_);
    client.set_read_timeout(120, 0);
    auto resp = client.Post(path_, req.dump(), "application/json");
    if (!resp) {
      throw std::runtime_error("tagger at " + name() + " is unreachable");
    }
    if (resp->status != 200) {
      throw std::runtime_error("tagger at " + name() + " returned HTTP " +
                               std::to_string(resp->status));
    }
    json body;
    try {
      body = json::parse(resp->body);
    } catch (const json::exception& e) {
      throw std::runtime_error("tagger at " + name() +
                               " sent malformed JSON: " + e.what());
    }
    const json& sents = body.at("sentences");
    if (!sents.is_array() || sents.size() != batch.size()) {
      throw std::runtime_error("tagger at " + name() +
                               " answered the wrong number of sentences");
    }
    std::vector<std::vector<TagSpan>> out;
    out.reserve(sents.size());
    for (const auto& arr : sents) {
      out.push_back(detail::spans_from_json(arr, name()));
    }
    return out;
  }

  std::string name() const override {
    return "http://" + host_ + ":" + std::to_string(port_) + path_;
  }

 private:
  std::string host_;
  int port_;
  std::string path_;
};

}  // namespace prosoprobe
