// Shared fixtures and independent oracles for the test suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "consist/constraints.hpp"
#include "consist/eval.hpp"
#include "consist/lm.hpp"
#include "consist/ontology.hpp"
#include "consist/rng.hpp"
#include "consist/text.hpp"

namespace testsup {

using namespace consist;

// ---------------------------------------------------------------------------
// Tiny table-driven backend: the next-token distribution depends only on the
// previous token, rows are fixed at construction.
class TableLm : public LmBackend {
 public:
  // words must not contain "</s>"; eos is appended last. rows[0] is the
  // start-of-sequence row, rows[1 + id] follows token id.
  TableLm(std::vector<std::string> words, std::vector<std::vector<double>> probs)
      : vocab_(std::move(words)) {
    vocab_.push_back(kEosToken);
    eos_ = static_cast<int>(vocab_.size()) - 1;
    for (auto& row : probs) {
      double s = 0.0;
      for (double p : row) s += p;
      std::vector<double> lp;
      for (double p : row) lp.push_back(p > 0 ? std::log(p / s) : -INFINITY);
      rows_.push_back(std::move(lp));
    }
  }

  static TableLm random(std::vector<std::string> words, std::uint64_t seed) {
    const std::size_t v = words.size() + 1;
    std::mt19937_64 gen(seed);
    std::vector<std::vector<double>> probs;
    for (std::size_t r = 0; r < v + 1; ++r) {
      std::vector<double> row(v);
      for (auto& p : row) p = 0.05 + rng::uniform01(gen);
      probs.push_back(std::move(row));
    }
    return TableLm(std::move(words), std::move(probs));
  }

  const std::vector<std::string>& vocab() const override { return vocab_; }
  int bos_id() const override { return static_cast<int>(vocab_.size()); }
  int eos_id() const override { return eos_; }

  std::vector<double> next_logprobs(std::span<const int> prefix) const override {
    std::size_t row = 0;
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
      if (*it == bos_id()) continue;
      row = 1 + static_cast<std::size_t>(*it);
      break;
    }
    return rows_.at(row);
  }

  std::vector<int> tokenize(std::string_view raw, TokenizeMode mode) const override {
    std::vector<int> ids;
    for (const auto& w : text::words(raw)) {
      auto it = std::find(vocab_.begin(), vocab_.end(), w);
      if (it != vocab_.end())
        ids.push_back(static_cast<int>(it - vocab_.begin()));
      else if (mode == TokenizeMode::strict)
        throw LmError(LmError::Kind::vocab, "oov: " + w);
    }
    return ids;
  }

  std::string detokenize(std::span<const int> ids) const override {
    std::string out;
    for (int id : ids) {
      if (id == bos_id() || id == eos_) continue;
      if (!out.empty()) out += ' ';
      out += vocab_.at(static_cast<std::size_t>(id));
    }
    return out;
  }

 private:
  std::vector<std::string> vocab_;
  int eos_;
  std::vector<std::vector<double>> rows_;
};

// ---------------------------------------------------------------------------
// Synthetic CommonGen-style world: keywords with suffix inflections, a filler
// vocabulary, and an n-gram backend trained on sentences that use them.
struct MockWorld {
  std::vector<std::string> keywords;
  InflectionLexicon lexicon;
  std::vector<std::string> corpus;
  NgramLm lm;
};

inline MockWorld make_world(int order = 2, double lambda = 1.0) {
  std::vector<std::string> keywords = {
      "dog",  "cat",  "run",  "walk", "field", "river", "bird", "jump",
      "tree", "house", "car",  "road", "boy",   "girl",  "ball", "park",
      "sing", "dance", "fish", "boat", "hill",  "wind",  "rain", "sun"};
  InflectionLexicon lex;
  for (const auto& k : keywords) {
    const auto forms = InflectionLexicon::fallback_forms(k);
    lex.add(k, {forms.begin(), forms.end()});
  }

  std::vector<std::string> corpus;
  // every inflection shows up so each clause has vocabulary support
  for (const auto& k : keywords) {
    corpus.push_back("the " + k + " and the " + k + "s in the " + k + "ing");
    corpus.push_back("a " + k + "ed " + k + "es by the " + k);
  }
  std::mt19937_64 gen(7);
  for (int i = 0; i < 120; ++i) {
    const auto& k1 = keywords[rng::below(gen, keywords.size())];
    const auto& k2 = keywords[rng::below(gen, keywords.size())];
    const auto& k3 = keywords[rng::below(gen, keywords.size())];
    corpus.push_back("the " + k1 + " " + k2 + "s over the " + k3 + " and the " + k1 + "s");
    corpus.push_back("a " + k2 + " with the " + k3 + " on the " + k1);
  }
  auto lm = NgramLm::build(corpus, order, lambda);
  return MockWorld{std::move(keywords), std::move(lex), std::move(corpus), std::move(lm)};
}

inline std::vector<DatasetRow> make_rows(const MockWorld& world, std::size_t n,
                                         std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<DatasetRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = 3 + rng::below(gen, 3);  // 3..5 keywords
    std::set<std::string> chosen;
    while (chosen.size() < k) chosen.insert(world.keywords[rng::below(gen, world.keywords.size())]);
    DatasetRow row;
    row.concept_set.assign(chosen.begin(), chosen.end());
    std::string ref = "the";
    for (const auto& w : row.concept_set) ref += " " + w;
    row.references = {ref};
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Brute-force lexical oracle: whole-word matching of each form against the
// normalized word sequence, assembled into clause statuses independently of
// the incremental path.
inline SatisfactionState lexical_oracle(const std::vector<std::string>& raw_words,
                                        const CnfConstraint& c) {
  std::vector<std::string> words;
  for (const auto& w : raw_words) {
    auto n = text::normalize_word(w);
    if (!n.empty()) words.push_back(n);
  }
  SatisfactionState state;
  for (const auto& clause : c.clauses()) {
    state.clause_polarity.push_back(clause.polarity);
    std::string first_match;
    for (const auto& w : words) {
      const auto forms = clause.forms();
      if (std::find(forms.begin(), forms.end(), w) != forms.end()) {
        first_match = w;
        break;
      }
    }
    if (clause.polarity == Polarity::require) {
      state.clause_status.push_back(first_match.empty() ? ClauseStatus::unmet : ClauseStatus::met);
      state.matched_forms.push_back(first_match);
    } else {
      state.clause_status.push_back(first_match.empty() ? ClauseStatus::met
                                                        : ClauseStatus::violated);
      state.matched_forms.push_back("");
    }
  }
  return state;
}

inline bool states_equal(const SatisfactionState& a, const SatisfactionState& b) {
  return a.clause_status == b.clause_status && a.clause_polarity == b.clause_polarity &&
         a.matched_forms == b.matched_forms;
}

// ---------------------------------------------------------------------------
// Matrix-based closure oracle (Floyd-Warshall style, structurally unlike the
// worklist in Ontology::closure).
inline Ontology closure_oracle(const Ontology& o) {
  std::vector<std::string> cs(o.concepts().begin(), o.concepts().end());
  std::vector<std::string> is(o.individuals().begin(), o.individuals().end());
  const std::size_t nc = cs.size(), ni = is.size();
  auto cidx = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(cs.begin(), cs.end(), n) - cs.begin());
  };
  auto iidx = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(is.begin(), is.end(), n) - is.begin());
  };

  std::vector<std::vector<bool>> sub(nc, std::vector<bool>(nc, false));
  std::vector<std::vector<bool>> dis(nc, std::vector<bool>(nc, false));
  std::vector<std::vector<bool>> mem(ni, std::vector<bool>(nc, false));

  for (const auto& ax : o.axioms()) {
    switch (ax.kind) {
      case AxiomKind::sub: sub[cidx(ax.a)][cidx(ax.b)] = true; break;
      case AxiomKind::disjoint:
        dis[cidx(ax.a)][cidx(ax.b)] = true;
        dis[cidx(ax.b)][cidx(ax.a)] = true;
        break;
      case AxiomKind::member: mem[iidx(ax.a)][cidx(ax.b)] = true; break;
      case AxiomKind::rel:
        for (const auto& y : o.axioms()) {
          if (y.kind == AxiomKind::domain && y.p == ax.p) mem[iidx(ax.a)][cidx(y.b)] = true;
          if (y.kind == AxiomKind::range && y.p == ax.p) mem[iidx(ax.b)][cidx(y.b)] = true;
        }
        break;
      default: break;
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t k = 0; k < nc; ++k) {
        if (!sub[i][k]) continue;
        for (std::size_t j = 0; j < nc; ++j) {
          if (sub[k][j] && i != j && !sub[i][j]) {
            sub[i][j] = true;
            changed = true;
          }
          if (dis[k][j] && !dis[i][j]) {
            dis[i][j] = true;
            dis[j][i] = true;
            changed = true;
          }
        }
      }
    for (std::size_t a = 0; a < ni; ++a)
      for (std::size_t i = 0; i < nc; ++i) {
        if (!mem[a][i]) continue;
        for (std::size_t j = 0; j < nc; ++j)
          if (sub[i][j] && !mem[a][j]) {
            mem[a][j] = true;
            changed = true;
          }
      }
  }

  Ontology out = o;
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      if (sub[i][j] && i != j) out.add_axiom(Axiom::sub(cs[i], cs[j]));
      if (dis[i][j]) out.add_axiom(Axiom::disjoint(cs[i], cs[j]));
    }
  for (std::size_t a = 0; a < ni; ++a)
    for (std::size_t i = 0; i < nc; ++i)
      if (mem[a][i]) out.add_axiom(Axiom::member(is[a], cs[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive sequence enumeration for the decoding oracles. Generates every
// sequence of length <= max_len where eos may only appear as the final token;
// sequences shorter than max_len are eos-terminated ("finished").
struct EnumSeq {
  std::vector<int> ids;  // generated ids only (no prompt)
  double logprob = 0.0;
  bool finished = false;
};

inline void enumerate_sequences(const LmBackend& lm, std::span<const int> prompt, int max_len,
                                std::vector<int>& cur, double logprob,
                                std::vector<EnumSeq>& out) {
  if (static_cast<int>(cur.size()) == max_len) return;
  std::vector<int> prefix(prompt.begin(), prompt.end());
  prefix.insert(prefix.end(), cur.begin(), cur.end());
  const auto row = lm.next_logprobs(prefix);
  for (int t = 0; t < static_cast<int>(row.size()); ++t) {
    const double lp = row[static_cast<std::size_t>(t)];
    if (lp == -INFINITY) continue;
    cur.push_back(t);
    EnumSeq seq{cur, logprob + lp, t == lm.eos_id()};
    if (seq.finished || static_cast<int>(cur.size()) == max_len) out.push_back(seq);
    if (!seq.finished) enumerate_sequences(lm, prompt, max_len, cur, logprob + lp, out);
    cur.pop_back();
  }
}

inline std::vector<EnumSeq> all_sequences(const LmBackend& lm, std::span<const int> prompt,
                                          int max_len) {
  std::vector<EnumSeq> out;
  std::vector<int> cur;
  enumerate_sequences(lm, prompt, max_len, cur, 0.0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Independent LCS via subsequence enumeration (candidate must be short).
inline std::size_t lcs_bruteforce(const std::vector<std::string>& cand,
                                  const std::vector<std::string>& ref) {
  const std::size_t n = cand.size();
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) sub.push_back(cand[i]);
    if (sub.size() <= best) continue;
    std::size_t j = 0;
    for (const auto& w : ref) {
      if (j < sub.size() && w == sub[j]) ++j;
    }
    if (j == sub.size()) best = sub.size();
  }
  return best;
}

}  // namespace testsup
