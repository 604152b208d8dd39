#include "consist/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "consist/text.hpp"
#include "json.hpp"

namespace consist {

namespace {

std::string comma_join(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string shot_blocks(std::span<const ShotExample> shots) {
  std::string out;
  for (const auto& shot : shots) {
    out += "Words: ";
    out += comma_join(shot.keywords);
    out += "\nSentence: ";
    out += shot.sentence;
    out += "\n";
  }
  return out;
}

// Keyword first, then the remaining forms in sorted order.
std::string render_clause(const Clause& clause) {
  std::vector<std::string> forms = clause.forms();
  std::vector<std::string> ordered;
  for (const auto& lit : clause.literals) {
    if (std::count(forms.begin(), forms.end(), lit.keyword) &&
        !std::count(ordered.begin(), ordered.end(), lit.keyword))
      ordered.push_back(lit.keyword);
  }
  for (const auto& f : forms)
    if (!std::count(ordered.begin(), ordered.end(), f)) ordered.push_back(f);

  std::string out = "(";
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (i) out += " or ";
    out += ordered[i];
  }
  out += ")";
  return out;
}

}  // namespace

ShotExample make_shot(std::vector<std::string> keywords, std::string sentence,
                      const InflectionLexicon& lexicon) {
  const auto c = CnfConstraint::from_keywords(keywords, lexicon);
  if (!is_satisfied(evaluate_text(sentence, c)))
    throw std::invalid_argument("shot sentence does not satisfy its keywords: '" + sentence +
                                "'");
  return ShotExample{std::move(keywords), std::move(sentence)};
}

std::vector<ShotExample> load_shots(const std::string& path, const InflectionLexicon& lexicon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shots file: " + path);
  std::vector<ShotExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      std::vector<std::string> keywords;
      for (const auto& k : j.at("keywords")) keywords.push_back(k.get<std::string>());
      out.push_back(make_shot(std::move(keywords), j.at("sentence").get<std::string>(), lexicon));
    } catch (const std::exception& e) {
      throw std::runtime_error("shots line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string build_abs(std::span<const std::string> keywords,
                      std::span<const ShotExample> shots) {
  if (keywords.empty()) throw std::invalid_argument("no keywords given");
  const std::string x = comma_join(keywords);
  std::string out = "Given a set of words " + x +
                    ", write a sentence using all words in " + x + " or inflections of " + x;
  out += "\n";
  out += shot_blocks(shots);
  out += "Words: " + x + "\nSentence:";
  return out;
}

std::string build_cnf(const CnfConstraint& c, std::span<const ShotExample> shots) {
  if (c.positive_clause_count() == 0)
    throw std::invalid_argument("constraint has no positive clause");

  std::string rendered;
  bool first = true;
  for (const auto& clause : c.clauses()) {
    if (clause.polarity != Polarity::require) continue;
    if (!first) rendered += " and ";
    rendered += render_clause(clause);
    first = false;
  }
  for (const auto& clause : c.clauses()) {
    if (clause.polarity != Polarity::forbid) continue;
    rendered += " and do not use ";
    rendered += render_clause(clause);
  }

  std::string out = "Write a sentence using the words " + rendered;
  out += "\n";
  out += shot_blocks(shots);
  out += "Sentence:";
  return out;
}

std::string rewrite_query(std::string_view question, const Ontology& o, const Gazetteer& g) {
  const auto words = text::words(question);
  const auto mentions = detect_mentions(words, g);
  if (mentions.empty()) return std::string(question);

  std::set<std::string> focus;
  for (const auto& m : mentions)
    for (const auto& [ref, p] : m.candidates) focus.insert(ref);

  const auto facts = constraints_to_text(o, focus);
  if (facts.empty()) return std::string(question);

  std::string out = "Step-by-step facts:\n";
  for (std::size_t i = 0; i < facts.size(); ++i)
    out += std::to_string(i + 1) + ". " + facts[i] + "\n";
  out += question;
  return out;
}

}  // namespace consist
