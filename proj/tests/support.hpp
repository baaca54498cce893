#pragma once

// shared helpers for unit and acceptance tests

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "symphony/bayesnet.hpp"
#include "symphony/rng.hpp"

namespace testsupport {

using namespace symphony;

inline ConditionalNode cond_node(NodeId id, std::string name,
                                 std::vector<NodeId> parents, size_t dom,
                                 std::vector<double> logits) {
  ConditionalNode c;
  c.id = id;
  c.name = std::move(name);
  c.parents = std::move(parents);
  for (size_t i = 0; i < dom; ++i) c.domain.push_back(static_cast<double>(i));
  c.logits = std::move(logits);
  return c;
}

// binary root with P(X=1) = p
inline ConditionalNode bernoulli_node(NodeId id, std::string name, double p) {
  const double logit = std::log(p / (1.0 - p));
  return cond_node(id, std::move(name), {}, 2, {0.0, logit});
}

// chain A -> B with P(A=1)=0.3, P(B=1|A=1)=0.9, P(B=1|A=0)=0.2
inline BayesNet chain2_net() {
  std::vector<Node> nodes;
  nodes.push_back(bernoulli_node(0, "A", 0.3));
  nodes.push_back(cond_node(1, "B", {0}, 2,
                            {0.0, std::log(0.2 / 0.8), 0.0, std::log(0.9 / 0.1)}));
  return build_network(std::move(nodes));
}

// random DAG over n nodes; edge i->j (i<j) with probability p; domains 2..max_dom
inline BayesNet random_dag(Rng& rng, size_t n, double p, size_t max_dom,
                           double logit_scale = 1.5) {
  std::vector<Node> nodes;
  std::vector<size_t> dom(n);
  std::vector<std::vector<NodeId>> parents(n);
  for (size_t j = 0; j < n; ++j) {
    dom[j] = 2 + rng.uniform_int(static_cast<uint32_t>(max_dom - 1));
    for (size_t i = 0; i < j; ++i)
      if (rng.next_double() < p) parents[j].push_back(static_cast<NodeId>(i));
  }
  for (size_t j = 0; j < n; ++j) {
    size_t rows = 1;
    for (NodeId q : parents[j]) rows *= dom[q];
    std::vector<double> logits(rows * dom[j]);
    for (auto& l : logits) l = logit_scale * (2.0 * rng.next_double() - 1.0);
    nodes.push_back(cond_node(static_cast<NodeId>(j), "n" + std::to_string(j),
                              parents[j], dom[j], std::move(logits)));
  }
  return build_network(std::move(nodes));
}

// conditional-independence verdict from the enumerated joint: max residual of
// the factorization over all value pairs and given-assignments
inline bool enum_independent(const BayesNet& net, NodeId i, NodeId j,
                             const std::set<NodeId>& given, double tol = 1e-9) {
  std::vector<NodeId> g(given.begin(), given.end());
  std::map<std::vector<int>, double> pg, pig, pjg, pijg;
  enumerate_joint(net, [&](const std::vector<int>& v, double p) {
    std::vector<int> key;
    for (NodeId q : g) key.push_back(v[q]);
    pg[key] += p;
    std::vector<int> ki = key;
    ki.push_back(v[i]);
    pig[ki] += p;
    std::vector<int> kj = key;
    kj.push_back(v[j]);
    pjg[kj] += p;
    ki.push_back(v[j]);
    pijg[ki] += p;
  });
  double worst = 0.0;
  for (const auto& [key, pij] : pijg) {
    std::vector<int> kg(key.begin(), key.end() - 2);
    std::vector<int> ki(key.begin(), key.end() - 1);
    std::vector<int> kj = kg;
    kj.push_back(key.back());
    const double z = pg[kg];
    if (z <= 0.0) continue;
    worst = std::max(worst, std::abs(pij / z - (pig[ki] / z) * (pjg[kj] / z)));
  }
  // cells where only one side is nonzero never appear in pijg; scan them too
  for (const auto& [key, pi] : pig) {
    std::vector<int> kg(key.begin(), key.end() - 1);
    const double z = pg[kg];
    if (z <= 0.0) continue;
    for (const auto& [kj, pj] : pjg) {
      if (!std::equal(kg.begin(), kg.end(), kj.begin())) continue;
      std::vector<int> kij = key;
      kij.push_back(kj.back());
      const double pij = pijg.count(kij) ? pijg[kij] : 0.0;
      worst = std::max(worst, std::abs(pij / z - (pi / z) * (pj / z)));
    }
  }
  return worst <= tol;
}

}  // namespace testsupport
