#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace consist {

enum class TokenizeMode { strict, lenient };

class LmError : public std::runtime_error {
 public:
  enum class Kind { transport, timeout, http_status, schema, vocab };

  LmError(Kind kind, const std::string& msg, int http_status = 0);
  Kind kind() const { return kind_; }
  int http_status() const { return status_; }

  // Transport failures, timeouts, and 5xx responses are worth retrying;
  // schema and vocabulary errors are not.
  bool retryable() const;

 private:
  Kind kind_;
  int status_;
};

// Next-token-distribution source. Implementations are immutable after
// construction and safe for concurrent next_logprobs calls.
class LmBackend {
 public:
  virtual ~LmBackend() = default;

  virtual const std::vector<std::string>& vocab() const = 0;
  virtual int bos_id() const = 0;
  virtual int eos_id() const = 0;

  // Normalized natural-log distribution over vocab, length |V|;
  // a pure function of the prefix.
  virtual std::vector<double> next_logprobs(std::span<const int> prefix) const = 0;

  virtual std::vector<int> tokenize(std::string_view text,
                                    TokenizeMode mode = TokenizeMode::strict) const = 0;
  virtual std::string detokenize(std::span<const int> ids) const = 0;

  const std::string& token(int id) const;
};

// Word-level n-gram model with add-lambda smoothing:
//   P(t | ctx) = (count(ctx,t) + lambda) / (total(ctx) + lambda * |V|).
// Vocab is the corpus words plus eos (sorted, eos last); bos is a virtual
// id one past the vocab and never receives probability mass. An unseen
// context with lambda = 0 backs off to the uniform distribution.
class NgramLm : public LmBackend {
 public:
  static NgramLm build(std::span<const std::string> corpus, int order, double lambda);
  static NgramLm build_from_file(const std::string& path, int order, double lambda);

  const std::vector<std::string>& vocab() const override { return vocab_; }
  int bos_id() const override { return static_cast<int>(vocab_.size()); }
  int eos_id() const override { return eos_id_; }

  std::vector<double> next_logprobs(std::span<const int> prefix) const override;

  // Whitespace split + lowercase. Strict mode rejects out-of-vocabulary
  // words; lenient mode drops them.
  std::vector<int> tokenize(std::string_view text,
                            TokenizeMode mode = TokenizeMode::strict) const override;
  std::string detokenize(std::span<const int> ids) const override;

  int order() const { return order_; }
  double lambda() const { return lambda_; }

 private:
  NgramLm() = default;

  std::vector<int> context_of(std::span<const int> prefix) const;

  int order_ = 1;
  double lambda_ = 0.0;
  int eos_id_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> token_ids_;
  // context ids (length order-1, bos-padded) -> (next id -> count, total)
  std::map<std::vector<int>, std::pair<std::map<int, long>, long>> counts_;
};

// Sum of per-step logprobs of `words` under the backend, bos-padded start,
// no eos term. Out-of-vocabulary words are dropped (lenient).
double sequence_logprob(const LmBackend& lm, std::span<const std::string> words);

extern const std::string kEosToken;  // "</s>"
extern const std::string kBosToken;  // "<s>"

}  // namespace consist
