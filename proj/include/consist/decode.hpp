#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "consist/constraints.hpp"
#include "consist/lm.hpp"

namespace consist {

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Hypothesis {
  std::vector<int> ids;       // prompt + generated tokens (eos included when finished)
  double logprob = 0.0;       // sum of per-step logprobs
  SatisfactionState state;    // over the generated suffix
  bool finished = false;      // false = ran out of steps (incomplete)
};

struct Particle {
  std::vector<int> ids;
  double log_weight = 0.0;
  SatisfactionState state;
  bool alive = true;
  double logprob = 0.0;  // cumulative model logprob, used for tie-breaks
  bool finished = false;
};

struct DecodeConfig {
  int max_new_tokens = 32;
  int beam_size = 8;
  double alpha = 2.0;          // coverage penalty weight for constrained beam
  int n_particles = 8;
  double ess_threshold = 0.5;  // resample when ESS < threshold * N
  std::uint64_t seed = 0;
  double temperature = 1.0;    // proposal only; weights correct to the raw model
};

// Argmax decoding; ties break toward the lowest token id. Stops at eos or
// after max_new_tokens steps.
Hypothesis greedy(const LmBackend& lm, std::span<const int> prompt_ids,
                  const DecodeConfig& cfg);

// Standard beam over cumulative logprob. Finished hypotheses retire to a
// pool; the result is pool + frontier ranked by logprob (ids as tie-break).
// beam_size = 1 reproduces greedy exactly.
std::vector<Hypothesis> beam(const LmBackend& lm, std::span<const int> prompt_ids,
                             const DecodeConfig& cfg);

// Penalty-grouped constrained beam. Each step scores expansions with
//   s(h) = logprob(h) + alpha * coverage(state(h)),
// prunes hypotheses violating a forbid clause, then selects beam_size
// survivors round-robin across clause-status signature groups (rank by s
// within a group, groups ordered by their best s), topping up globally.
// The winner is the finished hypothesis that is satisfied if any is,
// ranked by s; with no finished hypothesis the best unfinished one is
// returned with finished = false.
//
// alpha = 0 disables steering entirely and is byte-identical to beam().
Hypothesis constrained_beam(const LmBackend& lm, std::span<const int> prompt_ids,
                            const CnfConstraint& c, const DecodeConfig& cfg);

struct SmcResult {
  Hypothesis best;
  std::vector<Particle> particles;
};

// Masked sequential-Monte-Carlo decoding. Per step each particle samples
// from the proposal q = backend distribution with
//   (i)  tokens completing a forbid-clause form masked out,
//   (ii) eos masked while the constraint is unsatisfied, and
//   (iii) once remaining steps equal the cost of the unmet positive
//        clauses, everything but forms of unmet clauses masked,
// then accumulates log_weight += log p(token) - log q(token). Systematic
// resampling triggers when ESS < ess_threshold * n_particles. All sampling
// consumes one seeded RNG stream in fixed particle order, so runs are
// bit-identical for a given seed. Any surviving particle satisfies the
// constraint; if every particle dies the constraint is infeasible under
// the mask schedule and InfeasibleError is thrown.
SmcResult smc(const LmBackend& lm, std::span<const int> prompt_ids,
              const CnfConstraint& c, const DecodeConfig& cfg);

// Normalized weights of alive particles (zeros for dead ones); sums to 1.
std::vector<double> normalized_weights(std::span<const Particle> particles);

// Detokenized generated suffix of a hypothesis.
std::string generated_text(const LmBackend& lm, const Hypothesis& h,
                           std::size_t prompt_len);

}  // namespace consist
