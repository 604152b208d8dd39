#include "consist/http_lm.hpp"

#include <cmath>

#include "httplib.h"
#include "json.hpp"

namespace consist {

using nlohmann::json;

struct HttpLm::Impl {
  httplib::Client client;
  explicit Impl(const std::string& base_url) : client(base_url) {}
};

namespace {

json parse_body(const httplib::Result& res, const std::string& what) {
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      throw LmError(LmError::Kind::timeout, what + ": " + httplib::to_string(err));
    throw LmError(LmError::Kind::transport, what + ": " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw LmError(LmError::Kind::http_status, what + ": HTTP " + std::to_string(res->status),
                  res->status);
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw LmError(LmError::Kind::schema, what + ": invalid JSON body: " + e.what());
  }
}

}  // namespace

HttpLm::HttpLm(std::string base_url, int timeout_ms) : impl_(new Impl(base_url)) {
  impl_->client.set_connection_timeout(0, timeout_ms * 1000);
  impl_->client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  impl_->client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

  const json meta = parse_body(impl_->client.Get("/v1/meta"), "GET /v1/meta");
  try {
    vocab_ = meta.at("vocab").get<std::vector<std::string>>();
    bos_id_ = meta.at("bos").get<int>();
    eos_id_ = meta.at("eos").get<int>();
  } catch (const json::exception& e) {
    throw LmError(LmError::Kind::schema, std::string("meta fields: ") + e.what());
  }
  if (vocab_.empty()) throw LmError(LmError::Kind::schema, "meta vocab is empty");
  if (eos_id_ < 0 || eos_id_ >= static_cast<int>(vocab_.size()))
    throw LmError(LmError::Kind::schema, "meta eos id out of range");
}

HttpLm::~HttpLm() = default;

std::vector<double> HttpLm::next_logprobs(std::span<const int> prefix) const {
  json req;
  req["prefix"] = std::vector<int>(prefix.begin(), prefix.end());
  const json body = parse_body(
      impl_->client.Post("/v1/logprobs", req.dump(), "application/json"), "POST /v1/logprobs");
  std::vector<double> out;
  try {
    out = body.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw LmError(LmError::Kind::schema, std::string("logprobs field: ") + e.what());
  }
  if (out.size() != vocab_.size())
    throw LmError(LmError::Kind::schema,
                  "logprobs length " + std::to_string(out.size()) + " != vocab size " +
                      std::to_string(vocab_.size()));
  double sum = 0.0;
  for (double lp : out) sum += std::exp(lp);
  if (std::abs(sum - 1.0) > 1e-6)
    throw LmError(LmError::Kind::schema,
                  "logprobs row is not normalized (exp-sum " + std::to_string(sum) + ")");
  return out;
}

std::vector<int> HttpLm::tokenize(std::string_view txt, TokenizeMode) const {
  json req;
  req["text"] = std::string(txt);
  const json body = parse_body(
      impl_->client.Post("/v1/tokenize", req.dump(), "application/json"), "POST /v1/tokenize");
  try {
    return body.at("ids").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw LmError(LmError::Kind::schema, std::string("tokenize ids field: ") + e.what());
  }
}

std::string HttpLm::detokenize(std::span<const int> ids) const {
  json req;
  req["ids"] = std::vector<int>(ids.begin(), ids.end());
  const json body =
      parse_body(impl_->client.Post("/v1/detokenize", req.dump(), "application/json"),
                 "POST /v1/detokenize");
  try {
    return body.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw LmError(LmError::Kind::schema, std::string("detokenize text field: ") + e.what());
  }
}

}  // namespace consist
