#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "consist/checker.hpp"
#include "consist/constraints.hpp"
#include "consist/lm.hpp"

namespace consist {

struct EditOp {
  enum class Kind { insert, erase, replace };
  Kind kind;
  std::size_t pos = 0;
  std::string word;  // insert/replace only

  std::string str() const;
};

struct RepairResult {
  std::vector<std::string> words;
  std::vector<EditOp> edits;  // replaying these on the input reproduces words
  bool satisfied = false;
  double lm_logprob = 0.0;
};

std::vector<std::string> apply_edit(std::vector<std::string> words, const EditOp& op);

// Greedy one-edit-at-a-time repair. Violated forbid clauses are fixed first
// by deleting the offending word (replacing it with the backend argmax
// alternative when deletion would empty the sequence); then each unmet
// positive clause gets the (form, position) insertion maximizing the
// backend log-likelihood of the whole sequence, rechecking after every
// edit. Stops when satisfied or the budget is spent; an exhausted budget
// yields satisfied = false rather than an error.
RepairResult repair_lexical(const LmBackend& lm, std::vector<std::string> words,
                            const CnfConstraint& c, std::size_t budget);

// Relevance of the repaired_words sequence is proxied by its backend
// log-likelihood (reported in RepairResult); fluency is delegated to a
// second generation pass over this payload.
std::string reprompt_payload(std::string_view question, std::string_view repaired,
                             std::string_view original);

// Top-m by posterior weight; ties break by lm_logprob, then ids.
std::vector<ScoredCandidate> select_repair_candidates(
    std::span<const ScoredCandidate> scored, std::size_t m);

}  // namespace consist
