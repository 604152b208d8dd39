#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "consist/ontology.hpp"
#include "consist/rng.hpp"
#include "consist/text.hpp"
#include "support.hpp"

using namespace consist;

namespace {

Ontology president_example() {
  Ontology o;
  o.add_axiom(Axiom::sub("President", "Person"));
  o.add_axiom(Axiom::sub("Person", "Agent"));
  o.add_axiom(Axiom::member("obama", "President"));
  o.add_axiom(Axiom::rel("partyOf", "obama", "democratic_party"));
  o.add_axiom(Axiom::domain("partyOf", "Person"));
  return o;
}

Ontology random_ontology(std::mt19937_64& gen, bool acyclic_sub) {
  const std::size_t nc = 2 + rng::below(gen, 7);   // <= 8 concepts
  const std::size_t ni = 1 + rng::below(gen, 3);
  Ontology o;
  std::vector<std::string> cs, is;
  for (std::size_t i = 0; i < nc; ++i) {
    cs.push_back("C" + std::to_string(i));
    o.add_concept(cs.back());
  }
  for (std::size_t i = 0; i < ni; ++i) {
    is.push_back("i" + std::to_string(i));
    o.add_individual(is.back());
  }
  o.add_predicate("p");

  const std::size_t n_ax = 1 + rng::below(gen, 12);
  for (std::size_t k = 0; k < n_ax; ++k) {
    switch (rng::below(gen, 5)) {
      case 0: {
        std::size_t a = rng::below(gen, nc), b = rng::below(gen, nc);
        if (a == b) break;
        if (acyclic_sub && a > b) std::swap(a, b);  // edges point up the index order
        o.add_axiom(Axiom::sub(cs[a], cs[b]));
        break;
      }
      case 1: {
        const std::size_t a = rng::below(gen, nc), b = rng::below(gen, nc);
        o.add_axiom(Axiom::disjoint(cs[a], cs[b]));
        break;
      }
      case 2:
        o.add_axiom(Axiom::member(is[rng::below(gen, ni)], cs[rng::below(gen, nc)]));
        break;
      case 3:
        o.add_axiom(Axiom::rel("p", is[rng::below(gen, ni)], is[rng::below(gen, ni)]));
        break;
      case 4:
        o.add_axiom(rng::below(gen, 2) ? Axiom::domain("p", cs[rng::below(gen, nc)])
                                       : Axiom::range("p", cs[rng::below(gen, nc)]));
        break;
    }
  }
  return o;
}

}  // namespace

TEST_CASE("closure: spec examples") {
  {
    Ontology o;
    o.add_axiom(Axiom::sub("President", "Person"));
    o.add_axiom(Axiom::sub("Person", "Agent"));
    CHECK(o.closure().has_axiom(Axiom::sub("President", "Agent")));
  }
  {
    Ontology o;
    o.add_axiom(Axiom::member("obama", "President"));
    o.add_axiom(Axiom::sub("President", "Person"));
    CHECK(o.closure().has_axiom(Axiom::member("obama", "Person")));
  }
  {
    Ontology o;
    o.add_axiom(Axiom::disjoint("Dog", "Cat"));
    o.add_axiom(Axiom::sub("Puppy", "Dog"));
    CHECK(o.closure().has_axiom(Axiom::disjoint("Cat", "Puppy")));
  }
}

TEST_CASE("closure: R4/R5 via predicates") {
  Ontology o;
  o.add_axiom(Axiom::rel("partyOf", "obama", "dems"));
  o.add_axiom(Axiom::domain("partyOf", "Person"));
  o.add_axiom(Axiom::range("partyOf", "Party"));
  const auto cl = o.closure();
  CHECK(cl.has_axiom(Axiom::member("obama", "Person")));
  CHECK(cl.has_axiom(Axiom::member("dems", "Party")));
}

TEST_CASE("closure: idempotent, monotone, matches matrix oracle on 500 random ontologies") {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 500; ++i) {
    const auto o = random_ontology(gen, false);
    const auto cl = o.closure();
    CHECK(cl.closure().axioms() == cl.axioms());  // idempotent
    for (const auto& ax : o.axioms()) CHECK(cl.has_axiom(ax));  // monotone
    CHECK(cl.axioms() == testsup::closure_oracle(o).axioms());
  }
}

TEST_CASE("is_consistent") {
  Ontology o;
  o.add_axiom(Axiom::disjoint("Democrat", "Republican"));
  o.add_axiom(Axiom::member("x", "Democrat"));
  o.add_axiom(Axiom::member("x", "Republican"));
  const auto [ok, violations] = o.is_consistent();
  CHECK_FALSE(ok);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].probability == 1.0);
  CHECK(violations[0].grounding[0] == "x");

  CHECK(Ontology{}.is_consistent().first);
  CHECK(president_example().is_consistent().first);
}

TEST_CASE("minimal_axioms: spec examples") {
  {
    Ontology o;
    o.add_axiom(Axiom::sub("A", "B"));
    o.add_axiom(Axiom::sub("B", "C"));
    o.add_axiom(Axiom::sub("A", "C"));
    const auto m = o.minimal_axioms();
    CHECK(m.axioms() == std::set<Axiom>{Axiom::sub("A", "B"), Axiom::sub("B", "C")});
    CHECK(m.minimal_axioms().axioms() == m.axioms());  // idempotent
  }
  {
    Ontology o;
    o.add_axiom(Axiom::member("a", "B"));
    o.add_axiom(Axiom::member("a", "A"));
    o.add_axiom(Axiom::sub("A", "B"));
    const auto m = o.minimal_axioms();
    CHECK(m.axioms() == std::set<Axiom>{Axiom::member("a", "A"), Axiom::sub("A", "B")});
  }
  {
    Ontology o;
    o.add_axiom(Axiom::sub("A", "B"));
    o.add_axiom(Axiom::sub("B", "A"));
    CHECK_THROWS_AS(o.minimal_axioms(), std::invalid_argument);
  }
}

TEST_CASE("minimal_axioms: closure preserved; brute-force minimum cardinality") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 120; ++i) {
    const auto o = random_ontology(gen, true);
    if (!o.is_consistent().first) continue;
    const auto m = o.minimal_axioms();
    CHECK(m.closure().axioms() == o.closure().axioms());
    CHECK(m.axioms().size() <= o.axioms().size());
    CHECK(m.minimal_axioms().axioms() == m.axioms());

    std::vector<Axiom> axs(o.axioms().begin(), o.axioms().end());
    if (axs.size() > 10) continue;
    const auto target = o.closure().axioms();
    std::size_t best = axs.size();
    for (std::size_t mask = 0; mask < (1u << axs.size()); ++mask) {
      Ontology trial;
      for (const auto& c : o.concepts()) trial.add_concept(c);
      for (const auto& ind : o.individuals()) trial.add_individual(ind);
      for (const auto& p : o.predicates()) trial.add_predicate(p);
      std::size_t count = 0;
      for (std::size_t k = 0; k < axs.size(); ++k)
        if (mask & (1u << k)) {
          trial.add_axiom(axs[k]);
          ++count;
        }
      if (count >= best) continue;
      if (trial.closure().axioms() == target) best = count;
    }
    CHECK(m.axioms().size() == best);
  }
}

TEST_CASE("detect_mentions: gazetteer lookup with distributions") {
  Gazetteer g;
  g.add("obama", {{"obama_i", 0.9}});
  g.add("paris", {{"paris_i", 0.8}, {"paris_texas_i", 0.1}});
  const auto words = text::words("obama visited paris");
  const auto mentions = detect_mentions(words, g);
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].begin == 0);
  CHECK(mentions[0].candidates[0].first == "obama_i");
  CHECK(mentions[1].candidates.size() == 2);

  CHECK(detect_mentions(text::words("nothing here"), g).empty());
}

TEST_CASE("detect_mentions: leftmost-longest wins and spans are sorted") {
  Gazetteer g;
  g.add("new york", {{"nyc", 0.9}});
  g.add("york", {{"york_uk", 0.8}});
  const auto words = text::words("i love new york pizza");
  const auto mentions = detect_mentions(words, g);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].begin == 2);
  CHECK(mentions[0].end == 4);
  CHECK(mentions[0].candidates[0].first == "nyc");

  Gazetteer g2;
  g2.add("a b", {{"ab", 0.5}});
  g2.add("b", {{"b", 0.5}});
  const auto ws2 = text::words("a b b a b");
  const auto ms = detect_mentions(ws2, g2);
  for (std::size_t i = 1; i < ms.size(); ++i) CHECK(ms[i - 1].end <= ms[i].begin);
}

TEST_CASE("gazetteer invariants") {
  Gazetteer g;
  CHECK_THROWS_AS(g.add("x", {{"a", 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(g.add("x", {{"a", 0.7}, {"b", 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(g.add("one two three four", {{"a", 0.5}}), std::invalid_argument);
}

TEST_CASE("violation_probability: spec examples") {
  Ontology o;
  o.add_axiom(Axiom::member("bernie_i", "Democrat"));
  o.add_axiom(Axiom::disjoint("Democrat", "Republican"));
  Gazetteer g;
  g.add("bernie", {{"bernie_i", 0.9}});

  {
    const auto words = text::words("bernie is a republican");
    const auto [total, violations] = violation_probability(words, o, g);
    CHECK(total == doctest::Approx(0.9).epsilon(1e-12));
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].grounding[0] == "bernie_i");
  }
  {
    const auto words = text::words("bernie is a democrat");
    const auto [total, violations] = violation_probability(words, o, g);
    CHECK(total == 0.0);
    CHECK(violations.empty());
  }
  {
    const auto [total, violations] = violation_probability(text::words("hello world"), o, g);
    CHECK(total == 0.0);
    CHECK(violations.empty());
  }
}

TEST_CASE("violation_probability: two independent 0.5 violations total 0.75") {
  Ontology o;
  o.add_axiom(Axiom::member("x_i", "Blue"));
  o.add_axiom(Axiom::member("y_i", "Blue"));
  o.add_axiom(Axiom::disjoint("Blue", "Red"));
  Gazetteer g;
  g.add("xx", {{"x_i", 0.5}});
  g.add("yy", {{"y_i", 0.5}});
  const auto words = text::words("xx is a red and yy is a red");
  const auto [total, violations] = violation_probability(words, o, g);
  REQUIRE(violations.size() == 2);
  CHECK(total == doctest::Approx(0.75).epsilon(1e-12));
}

namespace {

// Exhaustive joint-assignment oracle: every mention independently resolves to
// one of its candidates or to nothing (residual mass); an assignment violates
// if any copula assertion grounds to Member(a,C) against a disjoint class.
double enumeration_oracle(const std::vector<std::string>& words, const Ontology& o,
                          const Gazetteer& g) {
  const Ontology cl = o.closure();
  const auto mentions = detect_mentions(words, g);
  if (mentions.empty()) return 0.0;
  double total = 0.0;
  std::vector<std::size_t> pick(mentions.size(), 0);

  const auto violates = [&](const std::vector<std::size_t>& choice, double& prob_out) -> bool {
    double prob = 1.0;
    std::map<std::size_t, std::string> referent_at;  // mention begin -> referent
    for (std::size_t mi = 0; mi < mentions.size(); ++mi) {
      const auto& cands = mentions[mi].candidates;
      if (choice[mi] < cands.size()) {
        prob *= cands[choice[mi]].second;
        referent_at[mentions[mi].begin] = cands[choice[mi]].first;
      } else {
        double used = 0.0;
        for (const auto& [r, p] : cands) used += p;
        prob *= (1.0 - used);
      }
    }
    prob_out = prob;

    for (std::size_t mi = 0; mi < mentions.size(); ++mi) {
      const auto& m = mentions[mi];
      if (m.end + 2 >= words.size()) continue;
      if (words[m.end] != "is" || (words[m.end + 1] != "a" && words[m.end + 1] != "an")) continue;
      auto it = referent_at.find(m.begin);
      if (it == referent_at.end()) continue;
      const std::string& subj = it->second;
      if (!cl.individuals().count(subj)) continue;

      std::string object_concept;
      const std::size_t obj_pos = m.end + 2;
      for (const auto& [pos, ref] : referent_at)
        if (pos == obj_pos && cl.concepts().count(ref)) object_concept = ref;
      if (object_concept.empty()) {
        for (const auto& cname : cl.concepts())
          if (text::lower(cname) == words[obj_pos]) object_concept = cname;
      }
      if (object_concept.empty()) continue;

      for (const auto& existing : cl.concepts_of(subj))
        if (cl.is_disjoint(existing, object_concept)) return true;
    }
    return false;
  };

  while (true) {
    double prob = 0.0;
    if (violates(pick, prob)) total += prob;
    std::size_t mi = 0;
    for (; mi < mentions.size(); ++mi) {
      if (++pick[mi] <= mentions[mi].candidates.size()) break;
      pick[mi] = 0;
    }
    if (mi == mentions.size()) break;
  }
  return total;
}

}  // namespace

TEST_CASE("violation_probability matches joint-assignment enumeration, <=3 mentions") {
  std::mt19937_64 gen(23);
  for (int tested = 0; tested < 200; ++tested) {
    // One or two copula assertions over distinct mentions; at most one
    // violating candidate per mention keeps the independence model exact.
    const int n_assert = 1 + static_cast<int>(rng::below(gen, 2));
    Ontology o;
    o.add_axiom(Axiom::disjoint("Blue", "Red"));
    Gazetteer g;
    std::vector<std::string> words;
    for (int a = 0; a < n_assert; ++a) {
      const std::string surf = "m" + std::to_string(a);
      const std::string ind = surf + "_i";
      const double p = 0.1 + 0.8 * rng::uniform01(gen);
      const bool violating = rng::below(gen, 2) == 0;
      o.add_individual(ind);
      if (violating) o.add_axiom(Axiom::member(ind, "Blue"));
      std::vector<std::pair<std::string, double>> cands = {{ind, p}};
      if (rng::below(gen, 2) == 0) cands.emplace_back("ghost_" + surf, 0.05);  // not in ontology
      g.add(surf, cands);
      if (a) words.push_back("and");
      for (const auto& w : {surf, std::string("is"), std::string("a"), std::string("red")})
        words.push_back(w);
    }
    words.push_back("today");  // keep the object word in bounds
    const auto [total, violations] = violation_probability(words, o, g);
    const double expect = enumeration_oracle(words, o, g);
    CHECK(total == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("constraints_to_text templates and focus filter") {
  const auto o = president_example();
  const auto facts = constraints_to_text(o, {"obama"});
  REQUIRE(facts.size() == 3);
  CHECK(facts[0] == "obama partyOf democratic_party.");
  CHECK(facts[1] == "obama is a President.");
  CHECK(facts[2] == "Every President is a Person.");
  bool has_pres_person = false, has_person_agent = false;
  for (const auto& f : facts) {
    if (f == "Every President is a Person.") has_pres_person = true;
    if (f == "Every Person is a Agent.") has_person_agent = true;
  }
  CHECK(has_pres_person);
  CHECK_FALSE(has_person_agent);  // two Sub hops away

  Ontology unrelated = o;
  unrelated.add_axiom(Axiom::sub("Dog", "Animal"));
  for (const auto& f : constraints_to_text(unrelated, {"obama"}))
    CHECK(f.find("Dog") == std::string::npos);

  Ontology dd;
  dd.add_axiom(Axiom::disjoint("Cat", "Dog"));
  const auto facts3 = constraints_to_text(dd, {"Cat"});
  REQUIRE(facts3.size() == 1);
  CHECK(facts3[0] == "No Cat is a Dog.");

  Ontology rel;
  rel.add_axiom(Axiom::rel("partyOf", "obama", "dems"));
  const auto facts4 = constraints_to_text(rel, {"obama"});
  REQUIRE(facts4.size() == 1);
  CHECK(facts4[0] == "obama partyOf dems.");
}

TEST_CASE("ontology json round trip and validation") {
  const char* text = R"({
    "concepts": ["President", "Person"],
    "individuals": ["obama"],
    "predicates": ["partyOf"],
    "axioms": [
      {"kind":"sub","sub":"President","sup":"Person"},
      {"kind":"member","ind":"obama","concept":"President"},
      {"kind":"domain","pred":"partyOf","concept":"Person"}
    ]
  })";
  const auto o = Ontology::from_json_text(text);
  CHECK(o.axioms().size() == 3);
  const auto again = Ontology::from_json_text(o.to_json_text());
  CHECK(again.axioms() == o.axioms());

  CHECK_THROWS_AS(Ontology::from_json_text(R"({"axioms":[{"kind":"sub","sub":"A","sup":"B"}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      Ontology::from_json_text(
          R"({"concepts":["A"],"axioms":[{"kind":"sub","sub":"A","sup":"A"}]})"),
      std::invalid_argument);
}
