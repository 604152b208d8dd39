#include "consist/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "consist/rng.hpp"
#include "json.hpp"

namespace consist {

namespace {

constexpr double kRadiusFloor = 1e-4;
constexpr double kVerifySlack = 1e-9;

double dist(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

const std::pair<std::vector<double>, double>& ball_of(const BallEmbedding& e,
                                                      const std::string& name) {
  auto it = e.concepts.find(name);
  if (it == e.concepts.end()) throw std::invalid_argument("concept not embedded: " + name);
  return it->second;
}

const std::vector<double>& point_of(const BallEmbedding& e, const std::string& name) {
  auto it = e.individuals.find(name);
  if (it == e.individuals.end()) throw std::invalid_argument("individual not embedded: " + name);
  return it->second;
}

}  // namespace

double axiom_loss(const BallEmbedding& e, const Axiom& ax, double gamma) {
  switch (ax.kind) {
    case AxiomKind::sub: {
      const auto& [cc, rc] = ball_of(e, ax.a);
      const auto& [cd, rd] = ball_of(e, ax.b);
      return std::max(0.0, dist(cc, cd) + rc - rd + gamma);
    }
    case AxiomKind::disjoint: {
      const auto& [cc, rc] = ball_of(e, ax.a);
      const auto& [cd, rd] = ball_of(e, ax.b);
      return std::max(0.0, rc + rd - dist(cc, cd) + gamma);
    }
    case AxiomKind::member: {
      const auto& p = point_of(e, ax.a);
      const auto& [cc, rc] = ball_of(e, ax.b);
      return std::max(0.0, dist(p, cc) - rc + gamma);
    }
    default:
      // Rel/Domain/Range act through their derived Member facts in the closure.
      return 0.0;
  }
}

double total_loss(const BallEmbedding& e, const Ontology& o, double gamma, double radius_cap) {
  const Ontology cl = o.closure();
  double sum = 0.0;
  for (const auto& ax : cl.axioms()) sum += axiom_loss(e, ax, gamma);
  for (const auto& [name, ball] : e.concepts) sum += std::max(0.0, ball.second - radius_cap);
  return sum;
}

EmbeddingGrad gradients(const BallEmbedding& e, const Ontology& o, double gamma,
                        double radius_cap) {
  EmbeddingGrad g;
  for (const auto& [name, ball] : e.concepts)
    g.concepts[name] = {std::vector<double>(static_cast<std::size_t>(e.dim), 0.0), 0.0};
  for (const auto& [name, pt] : e.individuals)
    g.individuals[name] = std::vector<double>(static_cast<std::size_t>(e.dim), 0.0);

  const Ontology cl = o.closure();
  for (const auto& ax : cl.axioms()) {
    // Inactive hinge (including the boundary tie) contributes nothing.
    if (axiom_loss(e, ax, gamma) <= 0.0) continue;
    switch (ax.kind) {
      case AxiomKind::sub: {
        const auto& [cc, rc] = ball_of(e, ax.a);
        const auto& [cd, rd] = ball_of(e, ax.b);
        (void)rc;
        (void)rd;
        const double d = dist(cc, cd);
        auto& gc = g.concepts[ax.a];
        auto& gd = g.concepts[ax.b];
        if (d > 0.0) {
          for (int i = 0; i < e.dim; ++i) {
            const double u = (cc[static_cast<std::size_t>(i)] - cd[static_cast<std::size_t>(i)]) / d;
            gc.first[static_cast<std::size_t>(i)] += u;
            gd.first[static_cast<std::size_t>(i)] -= u;
          }
        }
        gc.second += 1.0;
        gd.second -= 1.0;
        break;
      }
      case AxiomKind::disjoint: {
        const auto& [cc, rc] = ball_of(e, ax.a);
        const auto& [cd, rd] = ball_of(e, ax.b);
        (void)rc;
        (void)rd;
        const double d = dist(cc, cd);
        auto& gc = g.concepts[ax.a];
        auto& gd = g.concepts[ax.b];
        if (d > 0.0) {
          for (int i = 0; i < e.dim; ++i) {
            const double u = (cc[static_cast<std::size_t>(i)] - cd[static_cast<std::size_t>(i)]) / d;
            gc.first[static_cast<std::size_t>(i)] -= u;
            gd.first[static_cast<std::size_t>(i)] += u;
          }
        }
        gc.second += 1.0;
        gd.second += 1.0;
        break;
      }
      case AxiomKind::member: {
        const auto& p = point_of(e, ax.a);
        const auto& [cc, rc] = ball_of(e, ax.b);
        (void)rc;
        const double d = dist(p, cc);
        auto& gp = g.individuals[ax.a];
        auto& gc = g.concepts[ax.b];
        if (d > 0.0) {
          for (int i = 0; i < e.dim; ++i) {
            const double u = (p[static_cast<std::size_t>(i)] - cc[static_cast<std::size_t>(i)]) / d;
            gp[static_cast<std::size_t>(i)] += u;
            gc.first[static_cast<std::size_t>(i)] -= u;
          }
        }
        gc.second -= 1.0;
        break;
      }
      default:
        break;
    }
  }

  for (auto& [name, ball] : g.concepts)
    if (e.concepts.at(name).second > radius_cap) ball.second += 1.0;
  return g;
}

TrainOutcome train(const Ontology& o, const TrainConfig& cfg) {
  if (cfg.dim < 2) throw std::invalid_argument("dim must be >= 2");
  if (cfg.margin < 0.0) throw std::invalid_argument("margin must be >= 0");
  auto [ok, violations] = o.is_consistent();
  if (!ok)
    throw std::invalid_argument("ontology is inconsistent; first violation: " +
                                violations.front().axiom.str());
  const Ontology cl = o.closure();  // idempotent; avoids refixpointing per epoch

  std::mt19937_64 gen(cfg.seed);
  BallEmbedding e;
  e.dim = cfg.dim;
  for (const auto& name : o.concepts()) {  // sorted order fixes the init layout
    std::vector<double> center(static_cast<std::size_t>(cfg.dim));
    for (auto& x : center) x = rng::uniform(gen, -1.0, 1.0);
    e.concepts[name] = {std::move(center), 0.5};
  }
  for (const auto& name : o.individuals()) {
    std::vector<double> pt(static_cast<std::size_t>(cfg.dim));
    for (auto& x : pt) x = rng::uniform(gen, -1.0, 1.0);
    e.individuals[name] = std::move(pt);
  }

  TrainOutcome out;
  double loss = total_loss(e, cl, cfg.margin, cfg.radius_cap);
  out.trace.push_back(loss);

  for (int epoch = 0; epoch < cfg.epochs && loss > 0.0; ++epoch) {
    const EmbeddingGrad g = gradients(e, cl, cfg.margin, cfg.radius_cap);
    double eta = cfg.lr;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      BallEmbedding trial = e;
      for (auto& [name, ball] : trial.concepts) {
        const auto& gc = g.concepts.at(name);
        for (int i = 0; i < cfg.dim; ++i)
          ball.first[static_cast<std::size_t>(i)] -= eta * gc.first[static_cast<std::size_t>(i)];
        ball.second =
            std::clamp(ball.second - eta * gc.second, kRadiusFloor, cfg.radius_cap);
      }
      for (auto& [name, pt] : trial.individuals) {
        const auto& gp = g.individuals.at(name);
        for (int i = 0; i < cfg.dim; ++i)
          pt[static_cast<std::size_t>(i)] -= eta * gp[static_cast<std::size_t>(i)];
      }
      const double trial_loss = total_loss(trial, cl, cfg.margin, cfg.radius_cap);
      if (trial_loss <= loss) {
        e = std::move(trial);
        loss = trial_loss;
        out.trace.push_back(loss);
        accepted = true;
        break;
      }
      eta /= 2.0;
    }
    if (!accepted) break;  // stuck at a kink; the trace stays monotone
  }

  out.embedding = std::move(e);
  return out;
}

VerifyReport verify(const BallEmbedding& e, const Ontology& o) {
  const Ontology cl = o.closure();
  VerifyReport report;
  for (const auto& ax : cl.axioms()) {
    if (ax.kind != AxiomKind::sub && ax.kind != AxiomKind::disjoint &&
        ax.kind != AxiomKind::member)
      continue;
    ++report.total;
    if (axiom_loss(e, ax, 0.0) <= kVerifySlack) {
      ++report.satisfied;
    } else {
      report.failing.push_back(ax);
    }
  }
  report.fraction = report.total == 0
                        ? 1.0
                        : static_cast<double>(report.satisfied) / static_cast<double>(report.total);
  return report;
}

std::string BallEmbedding::to_json_text() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, ball] : concepts) {
    j[name]["center"] = ball.first;
    j[name]["radius"] = ball.second;
  }
  for (const auto& [name, pt] : individuals) j[name]["point"] = pt;
  return j.dump(2);
}

BallEmbedding BallEmbedding::from_json_text(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  BallEmbedding e;
  e.dim = 0;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& entry = it.value();
    if (entry.contains("center")) {
      std::vector<double> center = entry.at("center").get<std::vector<double>>();
      e.dim = static_cast<int>(center.size());
      e.concepts[it.key()] = {std::move(center), entry.at("radius").get<double>()};
    }
    if (entry.contains("point")) {
      std::vector<double> pt = entry.at("point").get<std::vector<double>>();
      e.dim = static_cast<int>(pt.size());
      e.individuals[it.key()] = std::move(pt);
    }
  }
  return e;
}

}  // namespace consist
