#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "consist/constraints.hpp"
#include "consist/ontology.hpp"

namespace consist {

struct ShotExample {
  std::vector<std::string> keywords;
  std::string sentence;
};

// Validates that the sentence satisfies from_keywords(keywords, lexicon);
// throws std::invalid_argument otherwise.
ShotExample make_shot(std::vector<std::string> keywords, std::string sentence,
                      const InflectionLexicon& lexicon);

// JSONL, one {"keywords":[...], "sentence":"..."} per line.
std::vector<ShotExample> load_shots(const std::string& path,
                                    const InflectionLexicon& lexicon);

// Abstract-style prompt: the instruction names the keyword list, shots render
// as "Words: ...\nSentence: ..." blocks, and the query block ends "Sentence:".
std::string build_abs(std::span<const std::string> keywords,
                      std::span<const ShotExample> shots);

// Conjunctive-normal-form prompt: clauses render as "(f1 or f2 or ...)"
// joined with " and "; forbid clauses append " and do not use (...)".
std::string build_cnf(const CnfConstraint& c, std::span<const ShotExample> shots);

// Prefixes the question with numbered fact sentences about the referents its
// mentions resolve to ("Step-by-step facts:"). Questions with no gazetteer
// hits (or no applicable facts) come back unchanged; the original question
// is always the suffix.
std::string rewrite_query(std::string_view question, const Ontology& o,
                          const Gazetteer& g);

}  // namespace consist
