#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "symphony/bayesnet.hpp"

namespace symphony {

struct EstimatorStarved : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RecursionDepthExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat layout of Theta_BN: one logit block per conditional node, in node-id
// order. Gradient tensors returned by this module are dense vectors of
// `total` entries aligned with this layout.
struct BnParamLayout {
  struct Block {
    NodeId node = -1;
    size_t offset = 0;
    size_t rows = 0;
    size_t dom = 0;
  };
  std::vector<Block> blocks;
  std::vector<int> block_of_node;  // -1 for deterministic nodes
  size_t total = 0;

  static BnParamLayout of(const BayesNet& net);
  size_t index(NodeId node, size_t row, size_t value) const;
  // copies of the current logits in layout order / write-back
  std::vector<double> gather(const BayesNet& net) const;
  void scatter(BayesNet& net, const std::vector<double>& flat) const;
};

struct GradQuery {
  NodeId target = -1;
  int target_value = 0;
  Assignment evidence;
  size_t sample_budget = 100000;
};

struct GradDiagnostics {
  size_t min_denominator = std::numeric_limits<size_t>::max();
  size_t expansions = 0;  // number of estimator expansions (Q)
  std::vector<size_t> starved_queries;
  std::string to_json() const;
};

struct GradResult {
  BnParamLayout layout;
  std::vector<double> estimates;           // p-hat per query
  std::vector<std::vector<double>> grads;  // one layout-aligned tensor per query
  GradDiagnostics diagnostics;
};

// Decoupling set N plus the partition of the parents into groups that remain
// mutually d-connected after conditioning. All-singleton groups mean the
// fully factored form of the parent posterior applies; adjacent parents (or
// parents linked through another parent) can never be separated and are kept
// in one group, whose joint is counted directly.
struct DecouplingSet {
  std::set<NodeId> nodes;
  std::vector<std::vector<NodeId>> groups;
  bool fully_decoupled = true;
};

struct EstimatorOptions {
  size_t min_denominator = 25;  // starvation threshold on count denominators
  bool literal_eq3_weights = false;  // frequency-weighted expansion, as printed
  size_t depth_cap = 0;              // 0 = |V|
};

// decoupling set given the full ancestor set (the published contract)
DecouplingSet find_decoupling_set(const BayesNet& net, NodeId x);
// general form: `conditioned` is what will actually be conditioned on
DecouplingSet find_decoupling_set(const BayesNet& net, NodeId x,
                                  const std::set<NodeId>& conditioned);

// partial gradient of Pr(X = x | evidence) w.r.t. theta_X only
// (layout-aligned tensor; other blocks zero)
std::vector<double> grad_own_param(const BayesNet& net, const GradQuery& q,
                                   const SampleBatch& batch,
                                   const EstimatorOptions& opts = {});

// gradient w.r.t. Theta_BN \ theta_X
std::vector<double> grad_other_params(const BayesNet& net, const GradQuery& q,
                                      const SampleBatch& batch,
                                      const EstimatorOptions& opts = {});

// sampling estimate of Pr(parents(x) = y | evidence) through the decoupling
// machinery
double factor_parent_posterior(const BayesNet& net, NodeId x,
                               const std::vector<int>& parent_values,
                               const Assignment& evidence,
                               const DecouplingSet& n, const SampleBatch& batch,
                               const EstimatorOptions& opts = {});

// gradient of the parent posterior
std::vector<double> grad_parent_posterior(const BayesNet& net, NodeId x,
                                          const std::vector<int>& parent_values,
                                          const Assignment& evidence,
                                          const DecouplingSet& n,
                                          const SampleBatch& batch,
                                          const EstimatorOptions& opts = {});

// stacked gradients for a list of belief coordinates, sharing one sample
// batch drawn from (seed); starved queries get a zero tensor and are listed
// in the diagnostics
GradResult grad_belief(const BayesNet& net, const std::vector<GradQuery>& queries,
                       uint64_t seed, const EstimatorOptions& opts = {});
GradResult grad_belief(const BayesNet& net, const std::vector<GradQuery>& queries,
                       const SampleBatch& batch, const EstimatorOptions& opts = {});

// exact gradient of Pr(X = x | evidence) by joint enumeration, differentiated
// symbolically through the softmax CPDs; validation oracle
std::vector<double> exact_grad_oracle(const BayesNet& net, const GradQuery& q);

// central finite differences on the enumerated marginal (secondary check)
std::vector<double> finite_difference_grad(const BayesNet& net, const GradQuery& q,
                                           double step = 1e-5);

}  // namespace symphony
