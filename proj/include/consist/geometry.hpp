#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "consist/ontology.hpp"

namespace consist {

// Concepts as balls (center + radius) and individuals as points in R^n.
// Axiom semantics: Sub = containment, Disjoint = separation, Member =
// point inside ball.
struct BallEmbedding {
  int dim = 2;
  std::map<std::string, std::pair<std::vector<double>, double>> concepts;  // center, radius
  std::map<std::string, std::vector<double>> individuals;

  // Flat JSON: {name: {"center":[...],"radius":r}} for concepts,
  // {name: {"point":[...]}} for individuals (merged if a name is both).
  std::string to_json_text() const;
  static BallEmbedding from_json_text(std::string_view json_text);
};

struct TrainConfig {
  int dim = 2;
  double margin = 0.05;      // hinge margin gamma
  double lr = 0.1;
  int epochs = 2000;
  std::uint64_t seed = 0;
  double radius_cap = 10.0;  // R_max
};

// Hinge losses per axiom (zero branch on ties at the boundary):
//   Sub(C,D):      max(0, ||c_C - c_D|| + r_C - r_D + gamma)
//   Disjoint(C,D): max(0, r_C + r_D - ||c_C - c_D|| + gamma)
//   Member(a,C):   max(0, ||p_a - c_C|| - r_C + gamma)
// Rel/Domain/Range axioms contribute 0 here; their derived Member facts
// appear in the closure that total_loss sums over.
double axiom_loss(const BallEmbedding& e, const Axiom& ax, double gamma);

// Sum of axiom_loss over closure(o) plus the radius regularizer
// sum(max(0, r - radius_cap)).
double total_loss(const BallEmbedding& e, const Ontology& o, double gamma,
                  double radius_cap);

struct EmbeddingGrad {
  std::map<std::string, std::pair<std::vector<double>, double>> concepts;
  std::map<std::string, std::vector<double>> individuals;
};

// Analytic subgradients of total_loss; inactive hinges contribute zero.
EmbeddingGrad gradients(const BallEmbedding& e, const Ontology& o, double gamma,
                        double radius_cap);

struct TrainOutcome {
  BallEmbedding embedding;
  std::vector<double> trace;  // loss per accepted step, non-increasing
};

// Seeded init (centers/points uniform in [-1,1]^n, radii 0.5) followed by
// full-batch descent. A step that would increase the loss is retried with a
// halved rate, up to 20 times per epoch; radii are clamped to
// [1e-4, radius_cap] after every step. Errors on an inconsistent ontology.
TrainOutcome train(const Ontology& o, const TrainConfig& cfg);

struct VerifyReport {
  double fraction = 1.0;
  std::size_t satisfied = 0;
  std::size_t total = 0;
  std::vector<Axiom> failing;
};

// Geometric check of the closure's Sub/Disjoint/Member axioms at gamma = 0,
// with 1e-9 slack on the inequalities.
VerifyReport verify(const BallEmbedding& e, const Ontology& o);

}  // namespace consist
