#include "consist/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "consist/text.hpp"
#include "json.hpp"

namespace consist {

namespace {

const char* kind_name(AxiomKind k) {
  switch (k) {
    case AxiomKind::sub: return "sub";
    case AxiomKind::disjoint: return "disjoint";
    case AxiomKind::member: return "member";
    case AxiomKind::rel: return "rel";
    case AxiomKind::domain: return "domain";
    case AxiomKind::range: return "range";
  }
  return "?";
}

}  // namespace

Axiom Axiom::sub(std::string sub_c, std::string sup_c) {
  return Axiom{AxiomKind::sub, std::move(sub_c), std::move(sup_c), {}};
}

Axiom Axiom::disjoint(std::string c, std::string d) {
  if (d < c) std::swap(c, d);  // canonical unordered pair
  return Axiom{AxiomKind::disjoint, std::move(c), std::move(d), {}};
}

Axiom Axiom::member(std::string ind, std::string concept_name) {
  return Axiom{AxiomKind::member, std::move(ind), std::move(concept_name), {}};
}

Axiom Axiom::rel(std::string pred, std::string subj, std::string obj) {
  return Axiom{AxiomKind::rel, std::move(subj), std::move(obj), std::move(pred)};
}

Axiom Axiom::domain(std::string pred, std::string concept_name) {
  return Axiom{AxiomKind::domain, {}, std::move(concept_name), std::move(pred)};
}

Axiom Axiom::range(std::string pred, std::string concept_name) {
  return Axiom{AxiomKind::range, {}, std::move(concept_name), std::move(pred)};
}

std::string Axiom::str() const {
  std::ostringstream os;
  os << kind_name(kind) << "(";
  switch (kind) {
    case AxiomKind::rel: os << p << "," << a << "," << b; break;
    case AxiomKind::domain:
    case AxiomKind::range: os << p << "," << b; break;
    default: os << a << "," << b;
  }
  os << ")";
  return os.str();
}

void Ontology::add_concept(std::string name) { concepts_.insert(std::move(name)); }
void Ontology::add_individual(std::string name) { individuals_.insert(std::move(name)); }
void Ontology::add_predicate(std::string name) { predicates_.insert(std::move(name)); }

void Ontology::add_axiom(const Axiom& ax) {
  switch (ax.kind) {
    case AxiomKind::sub:
      if (ax.a == ax.b) throw std::invalid_argument("Sub(" + ax.a + "," + ax.b + ") is reflexive");
      concepts_.insert(ax.a);
      concepts_.insert(ax.b);
      break;
    case AxiomKind::disjoint:
      concepts_.insert(ax.a);
      concepts_.insert(ax.b);
      break;
    case AxiomKind::member:
      individuals_.insert(ax.a);
      concepts_.insert(ax.b);
      break;
    case AxiomKind::rel:
      predicates_.insert(ax.p);
      individuals_.insert(ax.a);
      individuals_.insert(ax.b);
      break;
    case AxiomKind::domain:
    case AxiomKind::range:
      predicates_.insert(ax.p);
      concepts_.insert(ax.b);
      break;
  }
  axioms_.insert(ax);
}

bool Ontology::has_axiom(const Axiom& ax) const { return axioms_.count(ax) > 0; }

bool Ontology::is_disjoint(std::string_view c, std::string_view d) const {
  return has_axiom(Axiom::disjoint(std::string(c), std::string(d)));
}

bool Ontology::is_member(std::string_view ind, std::string_view concept_name) const {
  return has_axiom(Axiom::member(std::string(ind), std::string(concept_name)));
}

std::vector<std::string> Ontology::concepts_of(std::string_view ind) const {
  std::vector<std::string> out;
  for (const auto& ax : axioms_)
    if (ax.kind == AxiomKind::member && ax.a == ind) out.push_back(ax.b);
  return out;
}

Ontology Ontology::closure() const {
  Ontology out = *this;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Axiom> fresh;
    const auto& axs = out.axioms_;
    for (const auto& x : axs) {
      if (x.kind == AxiomKind::sub) {
        for (const auto& y : axs) {
          // R1: Sub(C,D), Sub(D,E) => Sub(C,E); reflexive results carry no
          // information and are skipped so cyclic graphs stay representable.
          if (y.kind == AxiomKind::sub && y.a == x.b && y.b != x.a)
            fresh.push_back(Axiom::sub(x.a, y.b));
          // R3: Sub(C,D), Disjoint(D,E) => Disjoint(C,E). E may equal C or D;
          // a derived Disjoint(C,C) marks C as necessarily empty.
          if (y.kind == AxiomKind::disjoint) {
            if (y.a == x.b) fresh.push_back(Axiom::disjoint(x.a, y.b));
            if (y.b == x.b) fresh.push_back(Axiom::disjoint(x.a, y.a));
          }
          // R2: Member(a,C), Sub(C,D) => Member(a,D)
          if (y.kind == AxiomKind::member && y.b == x.a)
            fresh.push_back(Axiom::member(y.a, x.b));
        }
      } else if (x.kind == AxiomKind::rel) {
        for (const auto& y : axs) {
          // R4 / R5: Domain/Range propagate memberships to rel arguments.
          if (y.kind == AxiomKind::domain && y.p == x.p)
            fresh.push_back(Axiom::member(x.a, y.b));
          if (y.kind == AxiomKind::range && y.p == x.p)
            fresh.push_back(Axiom::member(x.b, y.b));
        }
      }
    }
    for (const auto& ax : fresh) {
      if (ax.kind == AxiomKind::sub && ax.a == ax.b) continue;
      if (!out.axioms_.count(ax)) {
        out.axioms_.insert(ax);
        changed = true;
      }
    }
  }
  return out;
}

std::pair<bool, std::vector<Violation>> Ontology::is_consistent() const {
  const Ontology cl = closure();
  std::vector<Violation> violations;
  for (const auto& ind : cl.individuals_) {
    const auto concepts = cl.concepts_of(ind);
    for (std::size_t i = 0; i < concepts.size(); ++i) {
      for (std::size_t j = i; j < concepts.size(); ++j) {
        if (i == j && !cl.is_disjoint(concepts[i], concepts[i])) continue;
        if (cl.is_disjoint(concepts[i], concepts[j])) {
          Violation v;
          v.axiom = Axiom::disjoint(concepts[i], concepts[j]);
          v.grounding = {ind, concepts[i], concepts[j]};
          v.probability = 1.0;
          violations.push_back(std::move(v));
        }
      }
    }
  }
  return {violations.empty(), violations};
}

Ontology Ontology::minimal_axioms() const {
  // Cyclic Sub graphs have no transitive reduction over distinct concepts.
  const Ontology cl = closure();
  for (const auto& x : cl.axioms_) {
    if (x.kind != AxiomKind::sub) continue;
    if (cl.has_axiom(Axiom::sub(x.b, x.a)))
      throw std::invalid_argument("cyclic Sub graph (equivalent concepts unsupported): " +
                                  x.str());
  }

  Ontology out = *this;
  const std::set<Axiom> target = cl.axioms_;
  // Greedy deletion in canonical (set) order: an axiom derivable from the
  // remaining ones keeps the closure intact and gets dropped. Derivability
  // is monotone in the axiom set, so one pass is enough and idempotent.
  std::vector<Axiom> order(out.axioms_.begin(), out.axioms_.end());
  for (const auto& ax : order) {
    Ontology trial = out;
    trial.axioms_.erase(ax);
    if (trial.closure().axioms_ == target) out.axioms_.erase(ax);
  }
  return out;
}

Ontology Ontology::from_json_text(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  Ontology o;
  for (const auto& c : j.value("concepts", nlohmann::json::array()))
    o.add_concept(c.get<std::string>());
  for (const auto& c : j.value("individuals", nlohmann::json::array()))
    o.add_individual(c.get<std::string>());
  for (const auto& c : j.value("predicates", nlohmann::json::array()))
    o.add_predicate(c.get<std::string>());

  auto require_concept = [&](const std::string& n) {
    if (!o.concepts_.count(n)) throw std::invalid_argument("undeclared concept_name: " + n);
  };
  auto require_individual = [&](const std::string& n) {
    if (!o.individuals_.count(n)) throw std::invalid_argument("undeclared individual: " + n);
  };
  auto require_predicate = [&](const std::string& n) {
    if (!o.predicates_.count(n)) throw std::invalid_argument("undeclared predicate: " + n);
  };

  for (const auto& a : j.value("axioms", nlohmann::json::array())) {
    const std::string kind = a.at("kind").get<std::string>();
    if (kind == "sub") {
      auto s = a.at("sub").get<std::string>(), t = a.at("sup").get<std::string>();
      require_concept(s);
      require_concept(t);
      o.add_axiom(Axiom::sub(s, t));
    } else if (kind == "disjoint") {
      auto s = a.at("a").get<std::string>(), t = a.at("b").get<std::string>();
      require_concept(s);
      require_concept(t);
      o.add_axiom(Axiom::disjoint(s, t));
    } else if (kind == "member") {
      auto s = a.at("ind").get<std::string>(), t = a.at("concept").get<std::string>();
      require_individual(s);
      require_concept(t);
      o.add_axiom(Axiom::member(s, t));
    } else if (kind == "rel") {
      auto p = a.at("pred").get<std::string>();
      auto s = a.at("subj").get<std::string>(), t = a.at("obj").get<std::string>();
      require_predicate(p);
      require_individual(s);
      require_individual(t);
      o.add_axiom(Axiom::rel(p, s, t));
    } else if (kind == "domain" || kind == "range") {
      auto p = a.at("pred").get<std::string>();
      auto t = a.at("concept").get<std::string>();
      require_predicate(p);
      require_concept(t);
      o.add_axiom(kind == "domain" ? Axiom::domain(p, t) : Axiom::range(p, t));
    } else {
      throw std::invalid_argument("unknown axiom kind: " + kind);
    }
  }
  return o;
}

Ontology Ontology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ontology file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Ontology::to_json_text() const {
  nlohmann::ordered_json j;
  j["concepts"] = concepts_;
  j["individuals"] = individuals_;
  j["predicates"] = predicates_;
  nlohmann::ordered_json axs = nlohmann::ordered_json::array();
  for (const auto& ax : axioms_) {
    nlohmann::ordered_json a;
    a["kind"] = kind_name(ax.kind);
    switch (ax.kind) {
      case AxiomKind::sub: a["sub"] = ax.a; a["sup"] = ax.b; break;
      case AxiomKind::disjoint: a["a"] = ax.a; a["b"] = ax.b; break;
      case AxiomKind::member: a["ind"] = ax.a; a["concept"] = ax.b; break;
      case AxiomKind::rel: a["pred"] = ax.p; a["subj"] = ax.a; a["obj"] = ax.b; break;
      case AxiomKind::domain:
      case AxiomKind::range: a["pred"] = ax.p; a["concept"] = ax.b; break;
    }
    axs.push_back(std::move(a));
  }
  j["axioms"] = std::move(axs);
  return j.dump(2);
}

void Gazetteer::add(std::string_view form,
                    std::vector<std::pair<std::string, double>> candidates) {
  const auto ws = text::words(form);
  if (ws.empty()) throw std::invalid_argument("blank gazetteer form");
  if (ws.size() > 3)
    throw std::invalid_argument("gazetteer form longer than 3 words: '" + std::string(form) + "'");
  double sum = 0.0;
  for (const auto& [ref, p] : candidates) {
    if (!(p > 0.0) || p > 1.0)
      throw std::invalid_argument("gazetteer probability out of (0,1] for '" + ref + "'");
    sum += p;
  }
  if (sum > 1.0 + 1e-9)
    throw std::invalid_argument("gazetteer probabilities exceed 1 for '" + std::string(form) + "'");
  max_form_words_ = std::max(max_form_words_, ws.size());
  entries_[text::join(ws)] = std::move(candidates);
}

Gazetteer Gazetteer::from_json_text(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("gazetteer file must be a JSON object");
  Gazetteer g;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::vector<std::pair<std::string, double>> cands;
    for (const auto& entry : it.value())
      cands.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<double>());
    g.add(it.key(), std::move(cands));
  }
  return g;
}

Gazetteer Gazetteer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gazetteer file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const std::vector<std::pair<std::string, double>>* Gazetteer::lookup_joined(
    std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<Mention> detect_mentions(std::span<const std::string> words, const Gazetteer& g) {
  std::vector<Mention> out;
  const std::size_t max_len = std::max<std::size_t>(g.max_form_words(), 1);
  std::size_t i = 0;
  while (i < words.size()) {
    bool hit = false;
    for (std::size_t len = std::min(max_len, words.size() - i); len >= 1; --len) {
      std::string key = words[i];
      for (std::size_t k = 1; k < len; ++k) {
        key += ' ';
        key += words[i + k];
      }
      if (const auto* cands = g.lookup_joined(key)) {
        out.push_back(Mention{i, i + len, *cands});
        i += len;
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return out;
}

namespace {

// "X is a C" / "X is an C" immediately after a mention.
struct Assertion {
  std::size_t subject_mention;                              // index into mentions
  std::vector<std::pair<std::string, double>> object_cands;  // concept_name candidates
};

}  // namespace

std::pair<double, std::vector<Violation>> violation_probability(
    std::span<const std::string> words, const Ontology& o, const Gazetteer& g) {
  const Ontology cl = o.closure();
  const auto mentions = detect_mentions(words, g);

  // Lowercased concept names resolve copula objects with probability 1.
  std::map<std::string, std::vector<std::string>> concept_by_word;
  for (const auto& c : cl.concepts()) concept_by_word[text::lower(c)].push_back(c);

  std::vector<Assertion> assertions;
  for (std::size_t mi = 0; mi < mentions.size(); ++mi) {
    const auto& m = mentions[mi];
    const std::size_t j = m.end;
    if (j + 2 >= words.size()) continue;
    if (words[j] != "is") continue;
    if (words[j + 1] != "a" && words[j + 1] != "an") continue;
    const std::size_t obj_pos = j + 2;

    Assertion as;
    as.subject_mention = mi;
    // Prefer a detected mention at the object position; otherwise a literal
    // concept-name word counts with probability 1.
    const Mention* obj_mention = nullptr;
    for (const auto& m2 : mentions)
      if (m2.begin == obj_pos) {
        obj_mention = &m2;
        break;
      }
    if (obj_mention) {
      for (const auto& [ref, p] : obj_mention->candidates)
        if (cl.concepts().count(ref)) as.object_cands.emplace_back(ref, p);
    }
    if (as.object_cands.empty()) {
      auto it = concept_by_word.find(words[obj_pos]);
      if (it != concept_by_word.end())
        for (const auto& c : it->second) as.object_cands.emplace_back(c, 1.0);
    }
    if (!as.object_cands.empty()) assertions.push_back(std::move(as));
  }

  std::vector<Violation> violations;
  for (const auto& as : assertions) {
    const auto& subj = mentions[as.subject_mention];
    for (const auto& [ind, p_ind] : subj.candidates) {
      if (!cl.individuals().count(ind)) continue;
      const auto member_of = cl.concepts_of(ind);
      for (const auto& [concept_name, p_con] : as.object_cands) {
        // Asserting Member(ind, concept_name): contradicted when ind already
        // belongs to something disjoint with it.
        for (const auto& existing : member_of) {
          if (cl.is_disjoint(existing, concept_name) ||
              (existing == concept_name && cl.is_disjoint(concept_name, concept_name))) {
            Violation v;
            v.axiom = Axiom::disjoint(existing, concept_name);
            v.grounding = {ind, existing, concept_name};
            v.probability = p_ind * p_con;
            violations.push_back(std::move(v));
            break;  // one violation per grounded assertion
          }
        }
      }
    }
  }

  double none = 1.0;
  for (const auto& v : violations) none *= (1.0 - v.probability);
  return {1.0 - none, violations};
}

namespace {

std::string render_axiom(const Axiom& ax) {
  switch (ax.kind) {
    case AxiomKind::sub: return "Every " + ax.a + " is a " + ax.b + ".";
    case AxiomKind::disjoint: return "No " + ax.a + " is a " + ax.b + ".";
    case AxiomKind::member: return ax.a + " is a " + ax.b + ".";
    case AxiomKind::rel: return ax.a + " " + ax.p + " " + ax.b + ".";
    default: return {};  // domain/range: no sentence template
  }
}

bool mentions_any(const Axiom& ax, const std::set<std::string>& names) {
  return names.count(ax.a) || names.count(ax.b) || (!ax.p.empty() && names.count(ax.p));
}

}  // namespace

std::vector<std::string> constraints_to_text(const Ontology& o,
                                             const std::set<std::string>& focus) {
  std::vector<Axiom> emitted;
  std::set<std::string> level1;  // concepts the focus axioms talk about
  for (const auto& n : focus)
    if (o.concepts().count(n)) level1.insert(n);

  for (const auto& ax : o.axioms()) {
    if (!mentions_any(ax, focus)) continue;
    emitted.push_back(ax);
    if (o.concepts().count(ax.a)) level1.insert(ax.a);
    if (o.concepts().count(ax.b)) level1.insert(ax.b);
  }
  // One Sub hop up from the concepts already in play.
  for (const auto& ax : o.axioms()) {
    if (ax.kind != AxiomKind::sub || !level1.count(ax.a)) continue;
    if (std::find(emitted.begin(), emitted.end(), ax) == emitted.end()) emitted.push_back(ax);
  }

  std::sort(emitted.begin(), emitted.end(), [](const Axiom& x, const Axiom& y) {
    const auto key = [](const Axiom& ax) {
      return std::tuple(text::lower(ax.a), text::lower(ax.b), static_cast<int>(ax.kind));
    };
    return key(x) < key(y);
  });

  std::vector<std::string> out;
  for (const auto& ax : emitted) {
    std::string s = render_axiom(ax);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace consist
