#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "consist/constraints.hpp"
#include "consist/rng.hpp"
#include "consist/text.hpp"
#include "support.hpp"

using namespace consist;

TEST_CASE("parse: positive clauses with sizes") {
  const auto c = CnfConstraint::parse("(dog|dogs)&(run|runs|running|ran)&(field|fields)");
  REQUIRE(c.clauses().size() == 3);
  CHECK(c.clauses()[0].size() == 2);
  CHECK(c.clauses()[1].size() == 4);
  CHECK(c.clauses()[2].size() == 2);
  for (const auto& cl : c.clauses()) CHECK(cl.polarity == Polarity::require);
}

TEST_CASE("parse: forbid clause") {
  const auto c = CnfConstraint::parse("!(cat|cats)");
  REQUIRE(c.clauses().size() == 1);
  CHECK(c.clauses()[0].polarity == Polarity::forbid);
  CHECK(c.clauses()[0].size() == 2);
}

TEST_CASE("parse: errors with positions") {
  CHECK_THROWS_WITH_AS(CnfConstraint::parse("()"), "empty clause at offset 0", ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse(""), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("   "), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("(a|b"), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("(a))&(b)"), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("(Dog)"), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("(a)&"), ParseError);
  CHECK_THROWS_AS(CnfConstraint::parse("(a|)"), ParseError);
  try {
    CnfConstraint::parse("(ok)&()");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("parse round-trips through to_spec") {
  const char* specs[] = {"(dog|dogs)&(run|ran)", "!(cat)", "(a)&!(b|c)&(d)"};
  for (const auto* s : specs) {
    const auto c = CnfConstraint::parse(s);
    CHECK(CnfConstraint::parse(c.to_spec()).to_spec() == c.to_spec());
  }
}

TEST_CASE("from_keywords uses lexicon sets in keyword order") {
  InflectionLexicon lex;
  lex.add("dog", {"dog", "dogs"});
  lex.add("run", {"run", "runs", "running", "ran"});
  lex.add("field", {"field", "fields"});
  const std::vector<std::string> ks = {"dog", "run", "field"};
  const auto c = CnfConstraint::from_keywords(ks, lex);
  REQUIRE(c.clauses().size() == 3);
  CHECK(c.clauses()[0].forms() == std::vector<std::string>{"dog", "dogs"});
  CHECK(c.clauses()[1].forms() == std::vector<std::string>{"ran", "run", "running", "runs"});
  CHECK(c.clauses()[2].forms() == std::vector<std::string>{"field", "fields"});

  const std::vector<std::string> one = {"dog"};
  CHECK(CnfConstraint::from_keywords(one, lex).clauses().size() == 1);

  const std::vector<std::string> none;
  CHECK_THROWS_AS(CnfConstraint::from_keywords(none, lex), std::invalid_argument);
}

TEST_CASE("from_keywords falls back to suffix rules") {
  InflectionLexicon lex;
  const std::vector<std::string> ks = {"zxq"};
  const auto c = CnfConstraint::from_keywords(ks, lex);
  REQUIRE(c.clauses().size() == 1);
  CHECK(c.clauses()[0].forms() ==
        std::vector<std::string>{"zxq", "zxqed", "zxqes", "zxqing", "zxqs"});
}

TEST_CASE("lexicon invariants") {
  InflectionLexicon lex;
  lex.add("Dog", {"DOGS"});
  CHECK(lex.contains("dog"));
  CHECK(lex.forms("dog").count("dog"));  // keyword inserted into its own set
  CHECK(lex.forms("dog").count("dogs"));
  CHECK_THROWS_AS(lex.add("ice cream", {}), std::invalid_argument);
  const auto loaded = InflectionLexicon::from_json_text(R"({"run": ["running"]})");
  CHECK(loaded.forms("run").count("run"));
}

TEST_CASE("evaluate: spec examples") {
  InflectionLexicon lex;
  for (const char* k : {"dog", "run", "field"}) {
    const auto f = InflectionLexicon::fallback_forms(k);
    lex.add(k, {f.begin(), f.end()});
  }
  const std::vector<std::string> ks = {"dog", "run", "field"};
  const auto c = CnfConstraint::from_keywords(ks, lex);

  auto s1 = evaluate_text("the dog runs across green fields", c);
  CHECK(coverage(s1) == 1.0);
  CHECK(is_satisfied(s1));

  auto s2 = evaluate_text("the dog sleeps", c);
  CHECK(s2.clause_status[0] == ClauseStatus::met);
  CHECK(s2.clause_status[1] == ClauseStatus::unmet);
  CHECK(s2.clause_status[2] == ClauseStatus::unmet);
  CHECK(coverage(s2) == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(is_satisfied(s2));

  const auto forbid = CnfConstraint::parse("!(cat|cats)");
  CHECK(evaluate_text("the cat sat", forbid).clause_status[0] == ClauseStatus::violated);
  CHECK_FALSE(is_satisfied(evaluate_text("the cat sat", forbid)));

  // punctuation and case strip
  auto s3 = evaluate_text("The DOG, runs; (fields)!", c);
  CHECK(is_satisfied(s3));
}

TEST_CASE("advance: incremental equals batch; violations are sticky") {
  const auto c = CnfConstraint::parse("(dog|dogs)&!(cat)");
  auto s = evaluate_text("the dog", c);
  s = advance(s, "runs", c);  // no-form word leaves the state alone
  CHECK(testsup::states_equal(s, evaluate_text("the dog runs", c)));

  s = advance(s, "cat", c);
  CHECK(s.clause_status[1] == ClauseStatus::violated);
  s = advance(s, "dog", c);
  CHECK(s.clause_status[1] == ClauseStatus::violated);  // stays violated
}

TEST_CASE("coverage edge cases") {
  const auto only_forbid = CnfConstraint::parse("!(cat)");
  const auto s = evaluate_text("the dog", only_forbid);
  CHECK(coverage(s) == 1.0);
  CHECK(is_satisfied(s));
}

namespace {

std::vector<std::string> fuzz_vocab() {
  return {"dog", "dogs", "cat", "cats", "run", "runs", "ran", "field", "fields",
          "the", "a", "green", "sat", "tree", "trees"};
}

CnfConstraint random_constraint(std::mt19937_64& gen) {
  const auto vocab = fuzz_vocab();
  const std::size_t n_clauses = 1 + consist::rng::below(gen, 3);
  std::string spec;
  for (std::size_t i = 0; i < n_clauses; ++i) {
    if (i) spec += "&";
    const bool forbid = consist::rng::below(gen, 4) == 0;
    if (forbid) spec += "!";
    spec += "(";
    const std::size_t n_forms = 1 + consist::rng::below(gen, 3);
    std::set<std::string> forms;
    while (forms.size() < n_forms) forms.insert(vocab[consist::rng::below(gen, vocab.size())]);
    std::size_t k = 0;
    for (const auto& f : forms) spec += (k++ ? "|" : "") + f;
    spec += ")";
  }
  return CnfConstraint::parse(spec);
}

std::vector<std::string> random_sentence(std::mt19937_64& gen) {
  const auto vocab = fuzz_vocab();
  const std::size_t len = consist::rng::below(gen, 10);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < len; ++i)
    words.push_back(vocab[consist::rng::below(gen, vocab.size())]);
  return words;
}

}  // namespace

TEST_CASE("oracle: evaluate matches brute-force pattern matching, 1000 cases") {
  std::mt19937_64 gen(42);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_constraint(gen);
    const auto words = random_sentence(gen);
    CHECK(testsup::states_equal(evaluate(words, c), testsup::lexical_oracle(words, c)));
  }
}

TEST_CASE("property: fold of advance equals evaluate, 1000 cases") {
  std::mt19937_64 gen(43);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_constraint(gen);
    const auto words = random_sentence(gen);
    auto folded = c.initial_state();
    for (const auto& w : words) folded = advance(std::move(folded), w, c);
    CHECK(testsup::states_equal(folded, evaluate(words, c)));
  }
}

TEST_CASE("property: appending words never lowers coverage without forbid clauses") {
  std::mt19937_64 gen(44);
  for (int i = 0; i < 300; ++i) {
    auto c = random_constraint(gen);
    bool has_forbid = false;
    for (const auto& cl : c.clauses())
      if (cl.polarity == Polarity::forbid) has_forbid = true;
    if (has_forbid) continue;
    const auto words = random_sentence(gen);
    auto state = c.initial_state();
    double last = coverage(state);
    for (const auto& w : words) {
      state = advance(std::move(state), w, c);
      CHECK(coverage(state) >= last);
      last = coverage(state);
    }
    CHECK((coverage(state) == 1.0) == is_satisfied(state));
  }
}
