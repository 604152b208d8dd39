#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "consist/lm.hpp"
#include "consist/rng.hpp"
#include "consist/text.hpp"
#include "support.hpp"

using namespace consist;

namespace {

double prob_of(const NgramLm& lm, std::span<const int> prefix, const std::string& tok) {
  const auto row = lm.next_logprobs(prefix);
  const auto& v = lm.vocab();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == tok) return std::exp(row[i]);
  FAIL("token not in vocab: " << tok);
  return 0.0;
}

}  // namespace

TEST_CASE("build_ngram: hand-counted bigram probabilities") {
  const std::vector<std::string> corpus = {"a b a b"};
  const auto lm = NgramLm::build(corpus, 2, 1.0);
  CHECK(lm.vocab() == std::vector<std::string>{"a", "b", kEosToken});

  const auto ida = lm.tokenize("a");
  CHECK(prob_of(lm, ida, "b") == doctest::Approx(0.6).epsilon(1e-12));   // (2+1)/(2+3)
  const auto idb = lm.tokenize("b");
  CHECK(prob_of(lm, idb, "a") == doctest::Approx(0.4).epsilon(1e-12));   // (1+1)/(2+3)
  CHECK(prob_of(lm, idb, kEosToken) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("build_ngram: lambda=0 unseen context backs off to uniform") {
  const std::vector<std::string> corpus = {"a b"};
  const auto lm = NgramLm::build(corpus, 3, 0.0);
  // context (a eos) never occurs
  const std::vector<int> weird = {lm.tokenize("b")[0], lm.tokenize("a")[0]};
  const auto row = lm.next_logprobs(weird);
  for (double lp : row) CHECK(std::exp(lp) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("build_ngram: errors") {
  const std::vector<std::string> empty;
  CHECK_THROWS_AS(NgramLm::build(empty, 2, 1.0), std::invalid_argument);
  const std::vector<std::string> corpus = {"a"};
  CHECK_THROWS_AS(NgramLm::build(corpus, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NgramLm::build(corpus, 2, -1.0), std::invalid_argument);
}

TEST_CASE("rows normalize to one") {
  const auto world = testsup::make_world();
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> prefix;
    const std::size_t len = rng::below(gen, 6);
    for (std::size_t i = 0; i < len; ++i)
      prefix.push_back(static_cast<int>(rng::below(gen, world.lm.vocab().size())));
    const auto row = world.lm.next_logprobs(prefix);
    REQUIRE(row.size() == world.lm.vocab().size());
    double sum = 0.0;
    for (double lp : row) sum += std::exp(lp);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("oracle: probabilities match an independent recount, 500 cases") {
  std::mt19937_64 gen(17);
  const std::vector<std::string> letters = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 500; ++trial) {
    const int order = 1 + static_cast<int>(rng::below(gen, 3));
    const double lambda = rng::below(gen, 2) == 0 ? 0.0 : 0.25 * (1 + rng::below(gen, 8));
    // small random corpus
    std::vector<std::string> corpus;
    const std::size_t n_sent = 1 + rng::below(gen, 4);
    for (std::size_t s = 0; s < n_sent; ++s) {
      std::string sent;
      const std::size_t len = 1 + rng::below(gen, 6);
      for (std::size_t i = 0; i < len; ++i) {
        if (i) sent += ' ';
        sent += letters[rng::below(gen, letters.size())];
      }
      corpus.push_back(sent);
    }
    const auto lm = NgramLm::build(corpus, order, lambda);
    const auto& vocab = lm.vocab();
    const int bos = lm.bos_id();

    // independent recount with string-keyed maps
    std::map<std::string, std::map<std::string, long>> counts;
    std::map<std::string, long> totals;
    for (const auto& sent : corpus) {
      std::vector<std::string> toks(static_cast<std::size_t>(order - 1), kBosToken);
      for (const auto& w : text::words(sent)) toks.push_back(w);
      toks.push_back(kEosToken);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < toks.size(); ++i) {
        std::string ctx;
        for (std::size_t k = i - (order - 1); k < i; ++k) ctx += toks[k] + "\x1f";
        counts[ctx][toks[i]] += 1;
        totals[ctx] += 1;
      }
    }

    // random prefix over vocab
    std::vector<int> prefix;
    const std::size_t plen = rng::below(gen, 5);
    for (std::size_t i = 0; i < plen; ++i)
      prefix.push_back(static_cast<int>(rng::below(gen, vocab.size())));

    std::string ctx;
    {
      std::vector<std::string> ctx_toks;
      for (int id : prefix)
        ctx_toks.push_back(id == bos ? kBosToken : vocab[static_cast<std::size_t>(id)]);
      while (static_cast<int>(ctx_toks.size()) < order - 1)
        ctx_toks.insert(ctx_toks.begin(), kBosToken);
      for (std::size_t k = ctx_toks.size() - (order - 1); k < ctx_toks.size(); ++k)
        ctx += ctx_toks[k] + "\x1f";
    }

    const auto row = lm.next_logprobs(prefix);
    const long total = totals.count(ctx) ? totals[ctx] : 0;
    for (std::size_t t = 0; t < vocab.size(); ++t) {
      double expect;
      if (lambda == 0.0 && total == 0) {
        expect = 1.0 / static_cast<double>(vocab.size());
      } else {
        const long cnt = counts.count(ctx) && counts[ctx].count(vocab[t]) ? counts[ctx][vocab[t]] : 0;
        expect = (static_cast<double>(cnt) + lambda) /
                 (static_cast<double>(total) + lambda * static_cast<double>(vocab.size()));
      }
      CHECK(std::exp(row[t]) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("tokenize/detokenize round trip and OOV policy") {
  const std::vector<std::string> corpus = {"a b"};
  const auto lm = NgramLm::build(corpus, 2, 1.0);

  CHECK(lm.detokenize(lm.tokenize("a b")) == "a b");
  CHECK(lm.detokenize(lm.tokenize("A  B")) == "a b");  // lowercase + whitespace normalize
  CHECK(lm.tokenize("").empty());

  CHECK_THROWS_AS(lm.tokenize("zzz", TokenizeMode::strict), LmError);
  try {
    lm.tokenize("zzz");
  } catch (const LmError& e) {
    CHECK(e.kind() == LmError::Kind::vocab);
    CHECK_FALSE(e.retryable());
  }
  CHECK(lm.tokenize("a zzz b", TokenizeMode::lenient) == lm.tokenize("a b"));

  // bos/eos are dropped on the way out
  std::vector<int> ids = lm.tokenize("a");
  ids.push_back(lm.eos_id());
  CHECK(lm.detokenize(ids) == "a");
}

TEST_CASE("sequence_logprob sums per-step logprobs") {
  const std::vector<std::string> corpus = {"a b a b"};
  const auto lm = NgramLm::build(corpus, 2, 1.0);
  const std::vector<std::string> words = {"a", "b"};
  // P(a|bos) = (1+1)/(1+3), P(b|a) = (2+1)/(2+3)
  CHECK(sequence_logprob(lm, words) ==
        doctest::Approx(std::log(0.5) + std::log(0.6)).epsilon(1e-12));
}
