#include "consist/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "consist/rng.hpp"
#include "consist/text.hpp"

namespace consist {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int argmax_lowest_id(std::span<const double> row) {
  int best = 0;
  for (int t = 1; t < static_cast<int>(row.size()); ++t)
    if (row[static_cast<std::size_t>(t)] > row[static_cast<std::size_t>(best)]) best = t;
  return best;
}

// logprob desc, then ids ascending lexicographically (lowest token id wins).
bool better_hyp(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.ids < b.ids;
}

bool has_violated_forbid(const SatisfactionState& s) {
  for (std::size_t i = 0; i < s.clause_status.size(); ++i)
    if (s.clause_polarity[i] == Polarity::forbid && s.clause_status[i] == ClauseStatus::violated)
      return true;
  return false;
}

}  // namespace

std::string generated_text(const LmBackend& lm, const Hypothesis& h, std::size_t prompt_len) {
  std::span<const int> gen(h.ids.data() + prompt_len, h.ids.size() - prompt_len);
  return lm.detokenize(gen);
}

Hypothesis greedy(const LmBackend& lm, std::span<const int> prompt_ids,
                  const DecodeConfig& cfg) {
  Hypothesis h;
  h.ids.assign(prompt_ids.begin(), prompt_ids.end());
  for (int step = 0; step < cfg.max_new_tokens; ++step) {
    const auto row = lm.next_logprobs(h.ids);
    const int t = argmax_lowest_id(row);
    h.ids.push_back(t);
    h.logprob += row[static_cast<std::size_t>(t)];
    if (t == lm.eos_id()) {
      h.finished = true;
      break;
    }
  }
  return h;
}

std::vector<Hypothesis> beam(const LmBackend& lm, std::span<const int> prompt_ids,
                             const DecodeConfig& cfg) {
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  Hypothesis init;
  init.ids.assign(prompt_ids.begin(), prompt_ids.end());

  std::vector<Hypothesis> frontier{init};
  std::vector<Hypothesis> pool;

  for (int step = 0; step < cfg.max_new_tokens && !frontier.empty(); ++step) {
    std::vector<Hypothesis> expansions;
    for (const auto& h : frontier) {
      const auto row = lm.next_logprobs(h.ids);
      for (int t = 0; t < static_cast<int>(row.size()); ++t) {
        const double lp = row[static_cast<std::size_t>(t)];
        if (lp == kNegInf) continue;
        Hypothesis next = h;
        next.ids.push_back(t);
        next.logprob += lp;
        next.finished = (t == lm.eos_id());
        expansions.push_back(std::move(next));
      }
    }
    std::sort(expansions.begin(), expansions.end(), better_hyp);
    if (expansions.size() > static_cast<std::size_t>(cfg.beam_size))
      expansions.resize(static_cast<std::size_t>(cfg.beam_size));
    frontier.clear();
    for (auto& h : expansions) {
      if (h.finished)
        pool.push_back(std::move(h));
      else
        frontier.push_back(std::move(h));
    }
  }

  std::vector<Hypothesis> result = std::move(pool);
  result.insert(result.end(), frontier.begin(), frontier.end());
  std::sort(result.begin(), result.end(), better_hyp);
  return result;
}

namespace {

struct ScoredHyp {
  Hypothesis hyp;
  double score = 0.0;  // logprob + alpha * coverage
};

bool better_scored(const ScoredHyp& a, const ScoredHyp& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.hyp.logprob != b.hyp.logprob) return a.hyp.logprob > b.hyp.logprob;
  return a.hyp.ids < b.hyp.ids;
}

// satisfied first, then score, then the usual tie-breaks
bool better_final(const ScoredHyp& a, const ScoredHyp& b) {
  const bool sa = is_satisfied(a.hyp.state), sb = is_satisfied(b.hyp.state);
  if (sa != sb) return sa;
  return better_scored(a, b);
}

}  // namespace

Hypothesis constrained_beam(const LmBackend& lm, std::span<const int> prompt_ids,
                            const CnfConstraint& c, const DecodeConfig& cfg) {
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (cfg.alpha == 0.0) {
    // Penalty weight zero: no steering, plain beam exactly.
    auto ranked = beam(lm, prompt_ids, cfg);
    Hypothesis best = ranked.front();
    std::span<const int> gen(best.ids.data() + prompt_ids.size(),
                             best.ids.size() - prompt_ids.size());
    best.state = evaluate_text(lm.detokenize(gen), c);
    return best;
  }

  ScoredHyp init;
  init.hyp.ids.assign(prompt_ids.begin(), prompt_ids.end());
  init.hyp.state = c.initial_state();
  init.score = cfg.alpha * coverage(init.hyp.state);

  std::vector<ScoredHyp> frontier{init};
  std::vector<ScoredHyp> pool;
  std::vector<ScoredHyp> last_frontier = frontier;

  for (int step = 0; step < cfg.max_new_tokens && !frontier.empty(); ++step) {
    std::vector<ScoredHyp> expansions;
    for (const auto& sh : frontier) {
      const auto row = lm.next_logprobs(sh.hyp.ids);
      for (int t = 0; t < static_cast<int>(row.size()); ++t) {
        const double lp = row[static_cast<std::size_t>(t)];
        if (lp == kNegInf) continue;
        ScoredHyp next = sh;
        next.hyp.ids.push_back(t);
        next.hyp.logprob += lp;
        next.hyp.finished = (t == lm.eos_id());
        next.hyp.state = advance(std::move(next.hyp.state), lm.token(t), c);
        if (has_violated_forbid(next.hyp.state)) continue;  // prune
        next.score = next.hyp.logprob + cfg.alpha * coverage(next.hyp.state);
        expansions.push_back(std::move(next));
      }
    }

    std::vector<ScoredHyp> survivors;
    for (auto& sh : expansions) {
      if (sh.hyp.finished)
        pool.push_back(std::move(sh));
      else
        survivors.push_back(std::move(sh));
    }

    // Group by clause-status signature; fill the beam round-robin by
    // within-group rank (groups ordered by their best score) so each group
    // keeps roughly ceil(beam/G) members, then top up globally.
    std::map<std::vector<ClauseStatus>, std::vector<ScoredHyp>> groups;
    for (auto& sh : survivors) groups[sh.hyp.state.clause_status].push_back(std::move(sh));
    std::vector<std::vector<ScoredHyp>> ordered;
    for (auto& [sig, members] : groups) {
      std::sort(members.begin(), members.end(), better_scored);
      ordered.push_back(std::move(members));
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return better_scored(a.front(), b.front()); });

    frontier.clear();
    const std::size_t want = static_cast<std::size_t>(cfg.beam_size);
    for (std::size_t rank = 0; frontier.size() < want; ++rank) {
      bool any = false;
      for (const auto& members : ordered) {
        if (rank >= members.size()) continue;
        any = true;
        frontier.push_back(members[rank]);
        if (frontier.size() == want) break;
      }
      if (!any) break;
    }
    std::sort(frontier.begin(), frontier.end(), better_scored);
    if (!frontier.empty()) last_frontier = frontier;
  }

  if (!pool.empty()) {
    auto best = *std::min_element(pool.begin(), pool.end(),
                                  [](const auto& a, const auto& b) { return better_final(a, b); });
    return best.hyp;
  }
  // Nothing finished inside the budget: hand back the best unfinished
  // hypothesis; finished == false flags it incomplete.
  auto best = *std::min_element(last_frontier.begin(), last_frontier.end(),
                                [](const auto& a, const auto& b) { return better_final(a, b); });
  best.hyp.finished = false;
  return best.hyp;
}

namespace {

struct FormPlan {
  std::vector<int> ids;     // token sequence of the form (>= 1 token)
  std::size_t clause = 0;   // owning clause index
};

// Token sequences of every constraint form that the backend can express.
// Forms that do not survive tokenization (out of vocabulary) are skipped.
std::vector<FormPlan> plan_forms(const LmBackend& lm, const CnfConstraint& c, Polarity pol) {
  std::vector<FormPlan> plans;
  for (std::size_t ci = 0; ci < c.clauses().size(); ++ci) {
    const auto& clause = c.clauses()[ci];
    if (clause.polarity != pol) continue;
    for (const auto& form : clause.forms()) {
      std::vector<int> ids;
      try {
        ids = lm.tokenize(form, TokenizeMode::strict);
      } catch (const LmError&) {
        continue;
      }
      if (!ids.empty()) plans.push_back(FormPlan{std::move(ids), ci});
    }
  }
  return plans;
}

bool tail_matches(std::span<const int> ids, std::span<const int> pattern_prefix) {
  if (pattern_prefix.empty()) return true;
  if (ids.size() < pattern_prefix.size()) return false;
  return std::equal(pattern_prefix.begin(), pattern_prefix.end(),
                    ids.end() - static_cast<std::ptrdiff_t>(pattern_prefix.size()));
}

// Minimal token cost to finish the unmet positive clauses.
std::size_t remaining_cost(const SatisfactionState& s, std::span<const FormPlan> positive,
                           std::size_t n_clauses) {
  std::vector<std::size_t> best(n_clauses, SIZE_MAX);
  for (const auto& fp : positive)
    best[fp.clause] = std::min(best[fp.clause], fp.ids.size());
  std::size_t sum = 0;
  for (std::size_t i = 0; i < s.clause_status.size(); ++i) {
    if (s.clause_polarity[i] != Polarity::require || s.clause_status[i] != ClauseStatus::unmet)
      continue;
    sum += best[i] == SIZE_MAX ? 1 : best[i];  // unexpressable clause still counts one slot
  }
  return sum;
}

struct SmcParticle {
  Particle p;
  std::vector<int> forced;  // rest of a multi-token form, next first
};

}  // namespace

std::vector<double> normalized_weights(std::span<const Particle> particles) {
  double max_lw = kNegInf;
  for (const auto& p : particles)
    if (p.alive && p.log_weight > max_lw) max_lw = p.log_weight;
  std::vector<double> w(particles.size(), 0.0);
  if (max_lw == kNegInf) return w;
  double sum = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!particles[i].alive) continue;
    w[i] = std::exp(particles[i].log_weight - max_lw);
    sum += w[i];
  }
  for (auto& x : w) x /= sum;
  return w;
}

SmcResult smc(const LmBackend& lm, std::span<const int> prompt_ids, const CnfConstraint& c,
              const DecodeConfig& cfg) {
  if (cfg.n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (!(cfg.ess_threshold > 0.0) || cfg.ess_threshold > 1.0)
    throw std::invalid_argument("ess_threshold must be in (0,1]");
  if (cfg.temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");

  const auto positive = plan_forms(lm, c, Polarity::require);
  const auto forbidden = plan_forms(lm, c, Polarity::forbid);
  const std::size_t n_clauses = c.clauses().size();
  const int eos = lm.eos_id();
  const std::size_t v = lm.vocab().size();

  SatisfactionState init = c.initial_state();
  if (remaining_cost(init, positive, n_clauses) > static_cast<std::size_t>(cfg.max_new_tokens))
    throw InfeasibleError("constraint infeasible: more unmet clauses than decode steps");

  const std::size_t n = static_cast<std::size_t>(cfg.n_particles);
  std::vector<SmcParticle> particles(n);
  for (auto& sp : particles) {
    sp.p.ids.assign(prompt_ids.begin(), prompt_ids.end());
    sp.p.state = init;
  }

  std::mt19937_64 gen(cfg.seed);
  const std::size_t prompt_len = prompt_ids.size();

  auto step_particle = [&](SmcParticle& sp, int remaining) {
    const auto logp = lm.next_logprobs(sp.p.ids);

    if (!sp.forced.empty()) {
      // Mid-form: the continuation is forced, q is a point mass.
      const int t = sp.forced.front();
      sp.forced.erase(sp.forced.begin());
      sp.p.log_weight += logp[static_cast<std::size_t>(t)];  // log p - log 1
      sp.p.logprob += logp[static_cast<std::size_t>(t)];
      sp.p.ids.push_back(t);
      if (sp.forced.empty()) {
        // Form complete; token pieces may not match the surface form, so
        // rebuild the state from the detokenized text.
        std::span<const int> gen_ids(sp.p.ids.data() + prompt_len,
                                     sp.p.ids.size() - prompt_len);
        sp.p.state = evaluate_text(lm.detokenize(gen_ids), c);
      } else {
        sp.p.state = advance(std::move(sp.p.state), lm.token(t), c);
      }
      return;
    }

    std::vector<bool> allowed(v, true);
    // (i) never complete a forbidden form
    for (const auto& fp : forbidden) {
      std::span<const int> prefix(fp.ids.data(), fp.ids.size() - 1);
      if (tail_matches(sp.p.ids, prefix)) allowed[static_cast<std::size_t>(fp.ids.back())] = false;
    }
    // (ii) eos only once satisfied
    const bool satisfied = is_satisfied(sp.p.state);
    if (!satisfied) allowed[static_cast<std::size_t>(eos)] = false;
    // (iii) crunch time: only (cheapest) forms of unmet clauses fit the budget
    const std::size_t need = remaining_cost(sp.p.state, positive, n_clauses);
    std::vector<const FormPlan*> commit_by_token;
    if (!satisfied && need >= static_cast<std::size_t>(remaining)) {
      std::vector<bool> mask(v, false);
      commit_by_token.assign(v, nullptr);
      for (const auto& fp : positive) {
        if (sp.p.state.clause_status[fp.clause] != ClauseStatus::unmet) continue;
        std::size_t cheapest = SIZE_MAX;
        for (const auto& other : positive)
          if (other.clause == fp.clause) cheapest = std::min(cheapest, other.ids.size());
        if (fp.ids.size() != cheapest) continue;
        const std::size_t first = static_cast<std::size_t>(fp.ids.front());
        if (!allowed[first]) continue;
        if (!mask[first]) {
          mask[first] = true;
          commit_by_token[first] = &fp;  // lowest clause/form order wins ties
        }
      }
      allowed = std::move(mask);
    }

    std::vector<double> q(v, 0.0);
    double qsum = 0.0;
    for (std::size_t t = 0; t < v; ++t) {
      if (!allowed[t] || logp[t] == kNegInf) continue;
      q[t] = std::exp(logp[t] / cfg.temperature);
      qsum += q[t];
    }
    if (qsum <= 0.0) {
      sp.p.alive = false;
      sp.p.log_weight = kNegInf;
      return;
    }
    for (auto& x : q) x /= qsum;

    const double u = rng::uniform01(gen);
    const std::size_t t = rng::categorical(q, u);
    sp.p.log_weight += logp[t] - std::log(q[t]);
    sp.p.logprob += logp[t];
    sp.p.ids.push_back(static_cast<int>(t));
    sp.p.state = advance(std::move(sp.p.state), lm.token(static_cast<int>(t)), c);
    if (static_cast<int>(t) == eos) sp.p.finished = true;
    if (!commit_by_token.empty() && commit_by_token[t] && commit_by_token[t]->ids.size() > 1) {
      const auto& ids = commit_by_token[t]->ids;
      sp.forced.assign(ids.begin() + 1, ids.end());
    }
  };

  for (int step = 0; step < cfg.max_new_tokens; ++step) {
    bool live = false;
    for (const auto& sp : particles)
      if (sp.p.alive && !sp.p.finished) live = true;
    if (!live) break;

    for (auto& sp : particles) {  // fixed order, single RNG stream
      if (!sp.p.alive || sp.p.finished) continue;
      step_particle(sp, cfg.max_new_tokens - step);
    }

    std::vector<Particle> snapshot;
    snapshot.reserve(n);
    for (const auto& sp : particles) snapshot.push_back(sp.p);
    const auto w = normalized_weights(snapshot);
    double wsq = 0.0;
    bool any_alive = false;
    for (std::size_t i = 0; i < n; ++i) {
      wsq += w[i] * w[i];
      if (snapshot[i].alive) any_alive = true;
    }
    if (!any_alive) break;
    const double ess = 1.0 / wsq;
    if (ess < cfg.ess_threshold * static_cast<double>(n)) {
      // Systematic resampling with a single uniform draw.
      const double u = rng::uniform01(gen);
      std::vector<SmcParticle> next;
      next.reserve(n);
      double acc = 0.0;
      std::size_t src = 0;
      std::vector<double> cdf(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        acc += w[i];
        cdf[i] = acc;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double pos = (static_cast<double>(i) + u) / static_cast<double>(n);
        while (src + 1 < n && cdf[src] <= pos) ++src;
        next.push_back(particles[src]);
        next.back().p.log_weight = 0.0;
      }
      particles = std::move(next);
    }
  }

  SmcResult result;
  result.particles.reserve(n);
  for (auto& sp : particles) {
    if (!sp.p.finished && !is_satisfied(sp.p.state)) {
      sp.p.alive = false;
      sp.p.log_weight = kNegInf;
    }
    result.particles.push_back(std::move(sp.p));
  }

  const auto w = normalized_weights(result.particles);
  std::size_t best = SIZE_MAX;
  for (std::size_t i = 0; i < n; ++i) {
    if (!result.particles[i].alive) continue;
    if (best == SIZE_MAX) {
      best = i;
      continue;
    }
    const auto& a = result.particles[i];
    const auto& b = result.particles[best];
    if (w[i] != w[best] ? w[i] > w[best]
                        : (a.logprob != b.logprob ? a.logprob > b.logprob : a.ids < b.ids))
      best = i;
  }
  if (best == SIZE_MAX)
    throw InfeasibleError("constraint infeasible under mask schedule: all particles dead");

  const auto& win = result.particles[best];
  result.best = Hypothesis{win.ids, win.logprob, win.state, win.finished};
  return result;
}

}  // namespace consist
