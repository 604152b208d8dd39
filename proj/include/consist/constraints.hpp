#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace consist {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// keyword -> set of surface forms. Every form set contains the keyword itself;
// all entries are lowercase single words.
class InflectionLexicon {
 public:
  InflectionLexicon() = default;

  // Normalizes to lowercase, inserts the keyword into its own form set, and
  // rejects forms containing whitespace.
  void add(std::string_view keyword, const std::vector<std::string>& forms);

  bool contains(std::string_view keyword) const;
  const std::set<std::string>& forms(std::string_view keyword) const;
  const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }

  // File format: JSON object {keyword: [forms...]}.
  static InflectionLexicon load(const std::string& path);
  static InflectionLexicon from_json_text(std::string_view json_text);

  // Suffix fallback for keywords absent from the lexicon:
  // {w, w+"s", w+"es", w+"ed", w+"ing"}.
  static std::set<std::string> fallback_forms(std::string_view keyword);

 private:
  std::map<std::string, std::set<std::string>> entries_;
};

enum class Polarity { require, forbid };

struct Literal {
  std::string keyword;
  Polarity polarity = Polarity::require;
  std::vector<std::string> forms;  // sorted, non-empty
};

// A disjunction of literals; entirely positive or entirely negative.
struct Clause {
  Polarity polarity = Polarity::require;
  std::vector<Literal> literals;

  // Distinct forms across literals, in sorted order.
  std::vector<std::string> forms() const;
  std::size_t size() const { return forms().size(); }
};

enum class ClauseStatus { unmet, met, violated };

// Per-clause tracking for one constraint. Positive clauses never fall back
// from met; negative clauses never recover from violated.
struct SatisfactionState {
  std::vector<ClauseStatus> clause_status;
  std::vector<std::string> matched_forms;    // form that met the clause, "" otherwise
  std::vector<Polarity> clause_polarity;
};

class CnfConstraint {
 public:
  // Grammar: constraint := clause ("&" clause)* ; clause := ["!"] "(" form ("|" form)* ")".
  // Forms are lowercase word tokens. Errors carry the byte offset into spec.
  static CnfConstraint parse(std::string_view spec);

  // One positive clause per keyword carrying its lexicon form set (or the
  // suffix fallback when absent), in keyword order.
  static CnfConstraint from_keywords(std::span<const std::string> keywords,
                                     const InflectionLexicon& lexicon);

  const std::vector<Clause>& clauses() const { return clauses_; }
  std::size_t positive_clause_count() const;

  // Clause indices whose form set contains `form` (normalized lowercase word).
  std::span<const std::size_t> clauses_with_form(std::string_view form) const;

  SatisfactionState initial_state() const;

  std::string to_spec() const;  // round-trips through parse()

 private:
  explicit CnfConstraint(std::vector<Clause> clauses);

  std::vector<Clause> clauses_;
  std::unordered_map<std::string, std::vector<std::size_t>> form_index_;
};

// Folds advance() over the words; `words` must already be normalized tokens.
SatisfactionState evaluate(std::span<const std::string> words, const CnfConstraint& c);

// Tokenizes raw text (lowercase, punctuation stripped) then evaluates.
SatisfactionState evaluate_text(std::string_view raw_text, const CnfConstraint& c);

// One-word step; equals evaluate() on the extended sequence.
SatisfactionState advance(SatisfactionState state, std::string_view next_word,
                          const CnfConstraint& c);

// (#met positive clauses) / (#positive clauses); 1.0 when no positive clauses.
double coverage(const SatisfactionState& state);

// All positive clauses met and no negative clause violated.
bool is_satisfied(const SatisfactionState& state);

}  // namespace consist
