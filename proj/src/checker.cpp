#include "consist/checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "consist/rng.hpp"
#include "consist/text.hpp"
#include "json.hpp"

namespace consist {

void ConstraintStat::observe_violation(bool violated) {
  violation_freq =
      (violation_freq * static_cast<double>(n_obs) + (violated ? 1.0 : 0.0)) /
      static_cast<double>(n_obs + 1);
  ++n_obs;
}

void ConstraintStat::observe_distance(double words_apart) {
  ++n_dist_;
  mean_distance += (words_apart - mean_distance) / static_cast<double>(n_dist_);
}

std::vector<ScoredCandidate> score_posterior(
    const LmBackend& lm,
    std::span<const std::pair<std::vector<int>, double>> candidates,
    const CnfConstraint& c, const SemanticContext& semantic, double lambda) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");

  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (const auto& [ids, lp] : candidates) {
    ScoredCandidate sc;
    sc.ids = ids;
    sc.lm_logprob = lp;
    const auto words = text::words(lm.detokenize(ids));
    const auto state = evaluate(words, c);
    double lexical = 0.0;
    for (std::size_t i = 0; i < state.clause_status.size(); ++i) {
      if (state.clause_polarity[i] == Polarity::require &&
          state.clause_status[i] == ClauseStatus::unmet)
        lexical += 1.0;
      if (state.clause_polarity[i] == Polarity::forbid &&
          state.clause_status[i] == ClauseStatus::violated)
        lexical += 1.0;
    }
    sc.lexical_degree = lexical;
    if (semantic.ontology && semantic.gazetteer) {
      sc.semantic_probability =
          violation_probability(words, *semantic.ontology, *semantic.gazetteer).first;
    }
    sc.violation_degree = sc.lexical_degree + sc.semantic_probability;
    out.push_back(std::move(sc));
  }

  // Stable softmax of lm_logprob - lambda * degree.
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& sc : out) m = std::max(m, sc.lm_logprob - lambda * sc.violation_degree);
  double z = 0.0;
  for (auto& sc : out) {
    sc.posterior_weight = std::exp(sc.lm_logprob - lambda * sc.violation_degree - m);
    z += sc.posterior_weight;
  }
  for (auto& sc : out) sc.posterior_weight /= z;

  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.posterior_weight != b.posterior_weight) return a.posterior_weight > b.posterior_weight;
    if (a.lm_logprob != b.lm_logprob) return a.lm_logprob > b.lm_logprob;
    return a.ids < b.ids;
  });
  return out;
}

std::vector<std::size_t> order_constraints(std::span<const ConstraintStat> stats) {
  std::vector<std::size_t> perm(stats.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = stats[i];
    const auto& b = stats[j];
    if (a.violation_freq != b.violation_freq) return a.violation_freq > b.violation_freq;
    if (a.importance != b.importance) return a.importance > b.importance;
    if (a.mean_distance != b.mean_distance) return a.mean_distance < b.mean_distance;
    return a.id < b.id;
  });
  return perm;
}

CheckOutcome check_until_violation(std::span<const std::string> words,
                                   std::span<const CnfConstraint> constraints,
                                   std::size_t budget) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  CheckOutcome out;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (out.checks == budget) {
      out.truncated = true;
      return out;
    }
    ++out.checks;
    if (!is_satisfied(evaluate(words, constraints[i]))) {
      out.violation_index = i;
      return out;
    }
  }
  return out;
}

std::vector<std::size_t> sample_candidates(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= n) return idx;
  std::mt19937_64 gen(seed);
  // Partial Fisher-Yates: the first k slots are a uniform draw without
  // replacement, in draw order.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng::below(gen, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::string stats_to_json_text(std::span<const ConstraintStat> stats) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : stats) {
    j[s.id] = {{"importance", s.importance},
               {"violation_freq", s.violation_freq},
               {"mean_distance", s.mean_distance},
               {"n_obs", s.n_obs}};
  }
  return j.dump(2);
}

std::vector<ConstraintStat> stats_from_json_text(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  std::vector<ConstraintStat> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    ConstraintStat s;
    s.id = it.key();
    s.importance = it.value().value("importance", 0.0);
    s.violation_freq = it.value().value("violation_freq", 0.0);
    s.mean_distance = it.value().value("mean_distance", 0.0);
    s.n_obs = it.value().value("n_obs", 0L);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace consist
