#include "consist/constraints.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "consist/text.hpp"
#include "json.hpp"

namespace consist {

namespace {

std::string with_offset(const std::string& msg, std::size_t offset) {
  std::ostringstream os;
  os << msg << " at offset " << offset;
  return os.str();
}

bool is_form_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return !(std::isspace(u) || c == '(' || c == ')' || c == '|' || c == '&' || c == '!');
}

}  // namespace

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error(with_offset(msg, offset)), offset_(offset) {}

void InflectionLexicon::add(std::string_view keyword, const std::vector<std::string>& forms) {
  std::string key = text::lower(keyword);
  if (!text::is_lower_word(key))
    throw std::invalid_argument("lexicon keyword must be a single word: '" + key + "'");
  std::set<std::string> set;
  set.insert(key);
  for (const auto& f : forms) {
    std::string form = text::lower(f);
    if (!text::is_lower_word(form))
      throw std::invalid_argument("lexicon form must be a single word: '" + f +
                                  "' (keyword '" + key + "')");
    set.insert(std::move(form));
  }
  entries_[std::move(key)] = std::move(set);
}

bool InflectionLexicon::contains(std::string_view keyword) const {
  return entries_.find(std::string(keyword)) != entries_.end();
}

const std::set<std::string>& InflectionLexicon::forms(std::string_view keyword) const {
  auto it = entries_.find(std::string(keyword));
  if (it == entries_.end())
    throw std::out_of_range("keyword not in lexicon: '" + std::string(keyword) + "'");
  return it->second;
}

InflectionLexicon InflectionLexicon::from_json_text(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("lexicon file must be a JSON object");
  InflectionLexicon lex;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array())
      throw std::invalid_argument("lexicon entry '" + it.key() + "' must be an array");
    std::vector<std::string> forms;
    for (const auto& f : it.value()) forms.push_back(f.get<std::string>());
    lex.add(it.key(), forms);
  }
  return lex;
}

InflectionLexicon InflectionLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::set<std::string> InflectionLexicon::fallback_forms(std::string_view keyword) {
  std::string w(keyword);
  return {w, w + "s", w + "es", w + "ed", w + "ing"};
}

std::vector<std::string> Clause::forms() const {
  std::set<std::string> set;
  for (const auto& lit : literals) set.insert(lit.forms.begin(), lit.forms.end());
  return {set.begin(), set.end()};
}

CnfConstraint::CnfConstraint(std::vector<Clause> clauses) : clauses_(std::move(clauses)) {
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    for (const auto& form : clauses_[i].forms()) form_index_[form].push_back(i);
}

std::size_t CnfConstraint::positive_clause_count() const {
  std::size_t n = 0;
  for (const auto& cl : clauses_)
    if (cl.polarity == Polarity::require) ++n;
  return n;
}

std::span<const std::size_t> CnfConstraint::clauses_with_form(std::string_view form) const {
  auto it = form_index_.find(std::string(form));
  if (it == form_index_.end()) return {};
  return it->second;
}

CnfConstraint CnfConstraint::parse(std::string_view spec) {
  std::vector<Clause> clauses;
  std::size_t i = 0;
  const std::size_t n = spec.size();
  auto skip_ws = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(spec[i]))) ++i;
  };

  skip_ws();
  if (i == n) throw ParseError("empty constraint", 0);

  while (true) {
    skip_ws();
    Clause clause;
    if (i < n && spec[i] == '!') {
      clause.polarity = Polarity::forbid;
      ++i;
      skip_ws();
    }
    if (i >= n || spec[i] != '(') throw ParseError("expected '('", i);
    const std::size_t open = i;
    ++i;

    std::set<std::string> seen;
    bool expect_form = true;
    while (true) {
      skip_ws();
      if (i >= n) throw ParseError("unbalanced parentheses", open);
      if (spec[i] == ')') {
        if (expect_form && !seen.empty()) throw ParseError("empty form", i);
        ++i;
        break;
      }
      if (spec[i] == '|') {
        if (expect_form) throw ParseError("empty form", i);
        expect_form = true;
        ++i;
        continue;
      }
      if (!expect_form) throw ParseError("expected '|' or ')'", i);
      const std::size_t start = i;
      while (i < n && is_form_char(spec[i])) ++i;
      if (i == start) throw ParseError("expected form", i);
      std::string form(spec.substr(start, i - start));
      for (std::size_t k = 0; k < form.size(); ++k)
        if (std::isupper(static_cast<unsigned char>(form[k])))
          throw ParseError("form must be lowercase", start + k);
      if (seen.insert(form).second)
        clause.literals.push_back(Literal{form, clause.polarity, {form}});
      expect_form = false;
    }
    if (clause.literals.empty()) throw ParseError("empty clause", open);
    clauses.push_back(std::move(clause));

    skip_ws();
    if (i == n) break;
    if (spec[i] != '&') throw ParseError("expected '&'", i);
    ++i;
    skip_ws();
    if (i == n) throw ParseError("trailing '&'", i - 1);
  }
  return CnfConstraint(std::move(clauses));
}

CnfConstraint CnfConstraint::from_keywords(std::span<const std::string> keywords,
                                           const InflectionLexicon& lexicon) {
  if (keywords.empty()) throw std::invalid_argument("no keywords given");
  std::vector<Clause> clauses;
  clauses.reserve(keywords.size());
  for (const auto& raw : keywords) {
    std::string kw = text::normalize_word(raw);
    if (kw.empty()) throw std::invalid_argument("blank keyword: '" + raw + "'");
    std::set<std::string> forms = lexicon.contains(kw)
                                      ? lexicon.forms(kw)
                                      : InflectionLexicon::fallback_forms(kw);
    Clause clause;
    clause.polarity = Polarity::require;
    clause.literals.push_back(
        Literal{kw, Polarity::require, {forms.begin(), forms.end()}});
    clauses.push_back(std::move(clause));
  }
  return CnfConstraint(std::move(clauses));
}

std::string CnfConstraint::to_spec() const {
  std::string out;
  for (std::size_t i = 0; i < clauses_.size(); ++i) {
    if (i) out += "&";
    if (clauses_[i].polarity == Polarity::forbid) out += "!";
    out += "(";
    const auto forms = clauses_[i].forms();
    for (std::size_t k = 0; k < forms.size(); ++k) {
      if (k) out += "|";
      out += forms[k];
    }
    out += ")";
  }
  return out;
}

SatisfactionState CnfConstraint::initial_state() const {
  SatisfactionState state;
  state.clause_status.reserve(clauses_.size());
  state.matched_forms.assign(clauses_.size(), "");
  state.clause_polarity.reserve(clauses_.size());
  for (const auto& cl : clauses_) {
    // Negative clauses hold until a forbidden form shows up.
    state.clause_status.push_back(cl.polarity == Polarity::require ? ClauseStatus::unmet
                                                                   : ClauseStatus::met);
    state.clause_polarity.push_back(cl.polarity);
  }
  return state;
}

SatisfactionState advance(SatisfactionState state, std::string_view next_word,
                          const CnfConstraint& c) {
  std::string w = text::normalize_word(next_word);
  if (w.empty()) return state;
  for (std::size_t idx : c.clauses_with_form(w)) {
    if (state.clause_polarity[idx] == Polarity::require) {
      if (state.clause_status[idx] == ClauseStatus::unmet) {
        state.clause_status[idx] = ClauseStatus::met;
        state.matched_forms[idx] = w;
      }
    } else {
      state.clause_status[idx] = ClauseStatus::violated;  // permanent
    }
  }
  return state;
}

SatisfactionState evaluate(std::span<const std::string> words, const CnfConstraint& c) {
  SatisfactionState state = c.initial_state();
  for (const auto& w : words) state = advance(std::move(state), w, c);
  return state;
}

SatisfactionState evaluate_text(std::string_view raw_text, const CnfConstraint& c) {
  const auto ws = text::words(raw_text);
  return evaluate(ws, c);
}

double coverage(const SatisfactionState& state) {
  std::size_t positive = 0, met = 0;
  for (std::size_t i = 0; i < state.clause_status.size(); ++i) {
    if (state.clause_polarity[i] != Polarity::require) continue;
    ++positive;
    if (state.clause_status[i] == ClauseStatus::met) ++met;
  }
  if (positive == 0) return 1.0;
  return static_cast<double>(met) / static_cast<double>(positive);
}

bool is_satisfied(const SatisfactionState& state) {
  for (std::size_t i = 0; i < state.clause_status.size(); ++i) {
    if (state.clause_polarity[i] == Polarity::require) {
      if (state.clause_status[i] != ClauseStatus::met) return false;
    } else {
      if (state.clause_status[i] == ClauseStatus::violated) return false;
    }
  }
  return true;
}

}  // namespace consist
