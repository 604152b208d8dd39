#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "consist/lm.hpp"

namespace consist {

// Remote backend speaking the JSON-over-HTTP wire protocol:
//   GET  /v1/meta       -> {"vocab":[...], "bos":id, "eos":id}
//   POST /v1/logprobs   {"prefix":[ids]}  -> {"logprobs":[...]}   (length |V|)
//   POST /v1/tokenize   {"text":"..."}    -> {"ids":[...]}
//   POST /v1/detokenize {"ids":[...]}     -> {"text":"..."}
// Non-200 responses and schema mismatches raise LmError. Meta is fetched
// once at construction and immutable afterwards.
class HttpLm : public LmBackend {
 public:
  HttpLm(std::string base_url, int timeout_ms = 5000);
  ~HttpLm() override;

  HttpLm(const HttpLm&) = delete;
  HttpLm& operator=(const HttpLm&) = delete;

  const std::vector<std::string>& vocab() const override { return vocab_; }
  int bos_id() const override { return bos_id_; }
  int eos_id() const override { return eos_id_; }

  std::vector<double> next_logprobs(std::span<const int> prefix) const override;
  std::vector<int> tokenize(std::string_view text,
                            TokenizeMode mode = TokenizeMode::strict) const override;
  std::string detokenize(std::span<const int> ids) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<std::string> vocab_;
  int bos_id_ = 0;
  int eos_id_ = 0;
};

}  // namespace consist
