#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace consist {

enum class AxiomKind { sub, disjoint, member, rel, domain, range };

// Sub(a,b): every a is a b. Disjoint(a,b): no common member (stored with
// a <= b; queries are symmetric). Member(a,b): individual a belongs to
// concept b. Rel(p,a,b): predicate p holds between a and b.
// Domain(p,b)/Range(p,b): subject/object of p belongs to b (field a unused).
struct Axiom {
  AxiomKind kind;
  std::string a;
  std::string b;
  std::string p;  // predicate name; rel/domain/range only

  static Axiom sub(std::string sub_c, std::string sup_c);
  static Axiom disjoint(std::string c, std::string d);
  static Axiom member(std::string ind, std::string concept_name);
  static Axiom rel(std::string pred, std::string subj, std::string obj);
  static Axiom domain(std::string pred, std::string concept_name);
  static Axiom range(std::string pred, std::string concept_name);

  auto operator<=>(const Axiom&) const = default;

  std::string str() const;
};

struct Violation {
  Axiom axiom;                         // the violated axiom
  std::vector<std::string> grounding;  // referents involved
  double probability = 1.0;
};

class Ontology {
 public:
  Ontology() = default;

  void add_concept(std::string name);
  void add_individual(std::string name);
  void add_predicate(std::string name);

  // Registers any unseen names. Rejects Sub(C,C); self-disjointness is
  // representable (it can be derived and makes every member inconsistent).
  void add_axiom(const Axiom& ax);

  const std::set<std::string>& concepts() const { return concepts_; }
  const std::set<std::string>& individuals() const { return individuals_; }
  const std::set<std::string>& predicates() const { return predicates_; }
  const std::set<Axiom>& axioms() const { return axioms_; }

  bool has_axiom(const Axiom& ax) const;
  bool is_disjoint(std::string_view c, std::string_view d) const;
  bool is_member(std::string_view ind, std::string_view concept_name) const;
  std::vector<std::string> concepts_of(std::string_view ind) const;

  // Least fixpoint of:
  //   R1  Sub(C,D), Sub(D,E)        => Sub(C,E)        (reflexive edges skipped)
  //   R2  Member(a,C), Sub(C,D)     => Member(a,D)
  //   R3  Sub(C,D), Disjoint(D,E)   => Disjoint(C,E)
  //   R4  Rel(p,a,b), Domain(p,C)   => Member(a,C)
  //   R5  Rel(p,a,b), Range(p,C)    => Member(b,C)
  Ontology closure() const;

  // False iff the closure holds Member(a,C), Member(a,D), Disjoint(C,D).
  // Violations are certain (probability 1).
  std::pair<bool, std::vector<Violation>> is_consistent() const;

  // Greedy closure-preserving deletion in canonical axiom order. Sub edges
  // end up as the transitive reduction; redundant Member/Disjoint facts are
  // dropped. Errors on a cyclic Sub graph.
  Ontology minimal_axioms() const;

  // JSON schema: {"concepts":[...], "individuals":[...], "predicates":[...],
  // "axioms":[{"kind":"sub","sub":...,"sup":...}, {"kind":"disjoint","a":...,"b":...},
  // {"kind":"member","ind":...,"concept":...}, {"kind":"rel","pred":...,"subj":...,"obj":...},
  // {"kind":"domain"|"range","pred":...,"concept":...}]}.
  // Unlike add_axiom, referenced names must already be declared.
  static Ontology load(const std::string& path);
  static Ontology from_json_text(std::string_view json_text);
  std::string to_json_text() const;

 private:
  std::set<std::string> concepts_;
  std::set<std::string> individuals_;
  std::set<std::string> predicates_;
  std::set<Axiom> axioms_;
};

// surface form -> candidate referents with probabilities in (0,1], sum <= 1.
// Residual mass means "no referent". Forms may span up to three words.
class Gazetteer {
 public:
  Gazetteer() = default;

  void add(std::string_view form, std::vector<std::pair<std::string, double>> candidates);

  // File format: JSON object {form: [["referent", prob], ...]}.
  static Gazetteer load(const std::string& path);
  static Gazetteer from_json_text(std::string_view json_text);

  // Keys are normalized word sequences joined by single spaces.
  const std::vector<std::pair<std::string, double>>* lookup_joined(std::string_view key) const;
  std::size_t max_form_words() const { return max_form_words_; }

 private:
  std::map<std::string, std::vector<std::pair<std::string, double>>, std::less<>> entries_;
  std::size_t max_form_words_ = 0;
};

struct Mention {
  std::size_t begin = 0;  // word index, inclusive
  std::size_t end = 0;    // word index, exclusive
  std::vector<std::pair<std::string, double>> candidates;
};

// Leftmost-longest non-overlapping scan of `words` against gazetteer forms.
std::vector<Mention> detect_mentions(std::span<const std::string> words, const Gazetteer& g);

// Extracts copula assertions "<mention> is a|an <mention or concept word>",
// grounds them against closure(o), and scores contradictions. Each violating
// assertion contributes p = product of the involved candidate probabilities;
// the total is 1 - prod(1 - p_i) under independence.
std::pair<double, std::vector<Violation>> violation_probability(
    std::span<const std::string> words, const Ontology& o, const Gazetteer& g);

// Template rendering of axioms about the focus referents (plus Sub axioms one
// hop up from the concepts those axioms mention), in deterministic name order.
// Domain/Range axioms have no sentence template and are skipped.
std::vector<std::string> constraints_to_text(const Ontology& o,
                                             const std::set<std::string>& focus);

}  // namespace consist
