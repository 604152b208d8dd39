#include "consist/wire_server.hpp"

#include "httplib.h"
#include "json.hpp"

namespace consist {

using nlohmann::json;

void register_wire_routes(httplib::Server& server, const LmBackend& lm) {
  server.Get("/v1/meta", [&lm](const httplib::Request&, httplib::Response& res) {
    json j;
    j["vocab"] = lm.vocab();
    j["bos"] = lm.bos_id();
    j["eos"] = lm.eos_id();
    res.set_content(j.dump(), "application/json");
  });

  server.Post("/v1/logprobs", [&lm](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      const auto prefix = body.at("prefix").get<std::vector<int>>();
      json j;
      j["logprobs"] = lm.next_logprobs(prefix);
      res.set_content(j.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Post("/v1/tokenize", [&lm](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      json j;
      j["ids"] = lm.tokenize(body.at("text").get<std::string>(), TokenizeMode::lenient);
      res.set_content(j.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  server.Post("/v1/detokenize", [&lm](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      json j;
      j["text"] = lm.detokenize(body.at("ids").get<std::vector<int>>());
      res.set_content(j.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

}  // namespace consist
