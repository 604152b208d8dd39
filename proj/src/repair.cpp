#include "consist/repair.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "consist/text.hpp"

namespace consist {

std::string EditOp::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::insert: os << "insert(" << pos << ",'" << word << "')"; break;
    case Kind::erase: os << "delete(" << pos << ")"; break;
    case Kind::replace: os << "replace(" << pos << ",'" << word << "')"; break;
  }
  return os.str();
}

std::vector<std::string> apply_edit(std::vector<std::string> words, const EditOp& op) {
  switch (op.kind) {
    case EditOp::Kind::insert:
      if (op.pos > words.size()) throw std::out_of_range("insert position out of range");
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(op.pos), op.word);
      break;
    case EditOp::Kind::erase:
      if (op.pos >= words.size()) throw std::out_of_range("delete position out of range");
      words.erase(words.begin() + static_cast<std::ptrdiff_t>(op.pos));
      break;
    case EditOp::Kind::replace:
      if (op.pos >= words.size()) throw std::out_of_range("replace position out of range");
      words[op.pos] = op.word;
      break;
  }
  return words;
}

namespace {

// First violated forbid clause, if any, with the first offending word index.
std::optional<std::pair<std::size_t, std::size_t>> first_forbid_violation(
    const std::vector<std::string>& words, const CnfConstraint& c,
    const SatisfactionState& state) {
  for (std::size_t ci = 0; ci < c.clauses().size(); ++ci) {
    if (state.clause_polarity[ci] != Polarity::forbid ||
        state.clause_status[ci] != ClauseStatus::violated)
      continue;
    const auto forms = c.clauses()[ci].forms();
    for (std::size_t wi = 0; wi < words.size(); ++wi)
      if (std::find(forms.begin(), forms.end(), words[wi]) != forms.end())
        return std::make_pair(ci, wi);
  }
  return std::nullopt;
}

std::optional<std::size_t> first_unmet_positive(const CnfConstraint& c,
                                                const SatisfactionState& state) {
  for (std::size_t ci = 0; ci < c.clauses().size(); ++ci)
    if (state.clause_polarity[ci] == Polarity::require &&
        state.clause_status[ci] == ClauseStatus::unmet)
      return ci;
  return std::nullopt;
}

bool is_forbidden(const std::string& w, const CnfConstraint& c) {
  for (std::size_t idx : c.clauses_with_form(w))
    if (c.clauses()[idx].polarity == Polarity::forbid) return true;
  return false;
}

}  // namespace

RepairResult repair_lexical(const LmBackend& lm, std::vector<std::string> input,
                            const CnfConstraint& c, std::size_t budget) {
  std::vector<std::string> words;
  for (const auto& w : input) {
    std::string n = text::normalize_word(w);
    if (!n.empty()) words.push_back(std::move(n));
  }

  RepairResult result;
  auto state = evaluate(words, c);

  while (result.edits.size() < budget && !is_satisfied(state)) {
    if (auto hit = first_forbid_violation(words, c, state)) {
      const std::size_t wi = hit->second;
      if (words.size() > 1) {
        words = apply_edit(std::move(words),
                           EditOp{EditOp::Kind::erase, wi, {}});
        result.edits.push_back(EditOp{EditOp::Kind::erase, wi, {}});
      } else {
        // Deleting the only word would empty the sequence; swap in the
        // backend-argmax alternative instead.
        std::string best_word;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < static_cast<int>(lm.vocab().size()); ++t) {
          if (t == lm.eos_id()) continue;
          const std::string& w = lm.vocab()[static_cast<std::size_t>(t)];
          if (is_forbidden(w, c)) continue;
          std::vector<std::string> trial{w};
          const double lp = sequence_logprob(lm, trial);
          if (lp > best_lp) {
            best_lp = lp;
            best_word = w;
          }
        }
        if (best_word.empty()) break;  // nothing safe to swap in
        words = apply_edit(std::move(words), EditOp{EditOp::Kind::replace, wi, best_word});
        result.edits.push_back(EditOp{EditOp::Kind::replace, wi, best_word});
      }
    } else if (auto ci = first_unmet_positive(c, state)) {
      // Try every form at every insertion point, keep the likelihood argmax;
      // ties go to the lowest (position, form) pair.
      const auto forms = c.clauses()[*ci].forms();
      double best_lp = -std::numeric_limits<double>::infinity();
      std::size_t best_pos = 0;
      std::string best_form;
      for (std::size_t pos = 0; pos <= words.size(); ++pos) {
        for (const auto& form : forms) {
          auto trial = apply_edit(words, EditOp{EditOp::Kind::insert, pos, form});
          const double lp = sequence_logprob(lm, trial);
          if (lp > best_lp) {
            best_lp = lp;
            best_pos = pos;
            best_form = form;
          }
        }
      }
      words = apply_edit(std::move(words), EditOp{EditOp::Kind::insert, best_pos, best_form});
      result.edits.push_back(EditOp{EditOp::Kind::insert, best_pos, best_form});
    } else {
      break;  // unreachable: unsatisfied implies one of the two cases
    }
    state = evaluate(words, c);
  }

  result.words = std::move(words);
  result.satisfied = is_satisfied(state);
  result.lm_logprob = sequence_logprob(lm, result.words);
  return result;
}

std::string reprompt_payload(std::string_view question, std::string_view repaired,
                             std::string_view original) {
  std::string out;
  out += "Question: ";
  out += question;
  out += "\nDraft answer: ";
  out += repaired;
  out += "\nRewrite the draft answer as a fluent sentence that answers the question and keeps every required word.";
  if (!original.empty()) {
    out += "\nDo not repeat the original draft: \"";
    out += original;
    out += "\"";
  }
  out += "\n";
  return out;
}

std::vector<ScoredCandidate> select_repair_candidates(
    std::span<const ScoredCandidate> scored, std::size_t m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  std::vector<ScoredCandidate> out(scored.begin(), scored.end());
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.posterior_weight != b.posterior_weight) return a.posterior_weight > b.posterior_weight;
    if (a.lm_logprob != b.lm_logprob) return a.lm_logprob > b.lm_logprob;
    return a.ids < b.ids;
  });
  if (out.size() > m) out.resize(m);
  return out;
}

}  // namespace consist
