#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consist/constraints.hpp"
#include "consist/lm.hpp"
#include "consist/ontology.hpp"

namespace consist {

struct ConstraintStat {
  std::string id;
  double importance = 0.0;
  double violation_freq = 0.0;  // running mean over observations
  double mean_distance = 0.0;   // mean word distance between co-mentions
  long n_obs = 0;

  void observe_violation(bool violated);
  void observe_distance(double words_apart);

 private:
  long n_dist_ = 0;
};

struct ScoredCandidate {
  std::vector<int> ids;
  double lm_logprob = 0.0;
  double violation_degree = 0.0;       // lexical degree + semantic probability
  double posterior_weight = 0.0;       // softmax of lm_logprob - lambda * degree
  double lexical_degree = 0.0;
  double semantic_probability = 0.0;
};

struct SemanticContext {
  const Ontology* ontology = nullptr;
  const Gazetteer* gazetteer = nullptr;
};

// Posterior reweighting of candidates: degree d = (#unmet positive clauses +
// #violated forbid clauses) + semantic violation probability (when a context
// is given); weight_i proportional to exp(lm_logprob_i - lambda * d_i).
// Output is sorted by weight descending, logprob tie-break.
std::vector<ScoredCandidate> score_posterior(
    const LmBackend& lm,
    std::span<const std::pair<std::vector<int>, double>> candidates,
    const CnfConstraint& c, const SemanticContext& semantic, double lambda);

// Permutation of stats sorted by (violation_freq desc, importance desc,
// mean_distance asc, id asc).
std::vector<std::size_t> order_constraints(std::span<const ConstraintStat> stats);

struct CheckOutcome {
  std::optional<std::size_t> violation_index;  // into the given order
  std::size_t checks = 0;
  bool truncated = false;  // budget ran out before the list did
};

// Evaluates constraints in order, stopping at the first unsatisfied one or
// when the budget is spent.
CheckOutcome check_until_violation(std::span<const std::string> words,
                                   std::span<const CnfConstraint> constraints,
                                   std::size_t budget);

// Uniform sample of k indices without replacement, in draw order;
// identity when k >= n.
std::vector<std::size_t> sample_candidates(std::size_t n, std::size_t k,
                                           std::uint64_t seed);

// Sidecar format: {id: {"importance":..., "violation_freq":...,
// "mean_distance":..., "n_obs":...}}.
std::string stats_to_json_text(std::span<const ConstraintStat> stats);
std::vector<ConstraintStat> stats_from_json_text(std::string_view json_text);

}  // namespace consist
