#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "symphony/rng.hpp"

namespace symphony {

using NodeId = int32_t;

struct CycleDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownParent : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownNode : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroEvidence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Discrete node with a softmax CPD. `logits` is row-major
// [parent_assignment_row][value]; rows index parent values mixed-radix with
// the FIRST declared parent as the most significant digit. Keeping the CPD
// in logit space means gradient steps can never leave the simplex.
struct ConditionalNode {
  NodeId id = -1;
  std::string name;
  std::vector<NodeId> parents;
  std::vector<double> domain;  // ordered value labels, size >= 2
  std::vector<double> logits;  // rows * domain.size()
};

// Unary invertible map y = a*x + b applied to the parent's domain values.
// Value index k corresponds to the parent's index k, so probability mass
// transports exactly; |1/a| is the inverse-Jacobian factor for density
// bookkeeping on discretized grids.
struct DeterministicNode {
  NodeId id = -1;
  std::string name;
  NodeId parent = -1;
  double a = 1.0;
  double b = 0.0;
  std::vector<double> domain;  // image of the parent domain, index-aligned

  double forward(double x) const { return a * x + b; }
  double inverse(double y) const { return (y - b) / a; }
  double inverse_jacobian_logdet() const { return -std::log(std::abs(a)); }
};

using Node = std::variant<ConditionalNode, DeterministicNode>;

// Partial assignment of value indices, kept sorted by node id.
class Assignment {
 public:
  Assignment() = default;
  void set(NodeId node, int value_index);
  void erase(NodeId node);
  std::optional<int> get(NodeId node) const;
  bool contains(NodeId node) const { return get(node).has_value(); }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<std::pair<NodeId, int>>& items() const { return items_; }
  bool subsumes(const Assignment& other) const;  // every item of other present
  bool operator==(const Assignment& o) const { return items_ == o.items_; }

 private:
  std::vector<std::pair<NodeId, int>> items_;
};

// Columnar batch of complete samples; cols[node][i] is the value index of
// `node` in sample i.
struct SampleBatch {
  size_t count = 0;
  uint64_t seed = 0;
  std::vector<std::vector<uint8_t>> cols;
};

class BayesNet {
 public:
  BayesNet() = default;
  explicit BayesNet(std::vector<Node> nodes);

  size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<NodeId>& topo_order() const { return topo_order_; }
  const std::vector<NodeId>& children(NodeId id) const;

  bool is_conditional(NodeId id) const;
  const ConditionalNode& conditional(NodeId id) const;
  const DeterministicNode& deterministic(NodeId id) const;

  std::string_view name(NodeId id) const;
  NodeId find(const std::string& name) const;  // UnknownNode if absent
  size_t domain_size(NodeId id) const;
  double domain_value(NodeId id, int value_index) const;
  const std::vector<NodeId>& parents(NodeId id) const;

  // Conditional probability table row for a full parent assignment of `id`
  // (softmax over logits for conditional nodes; a delta row for
  // deterministic nodes). Rows are cached.
  const std::vector<double>& cpd_row(NodeId id, size_t row) const;
  size_t cpd_rows(NodeId id) const;
  // mixed-radix row index for parent value indices of `id`
  size_t parent_row(NodeId id, const std::vector<int>& parent_values) const;

  // training-owner mutation; invalidates cached probabilities
  void set_logits(NodeId id, std::vector<double> logits);

  // joint state count (product of domain sizes), saturating at 2^63-1
  double joint_states() const;

  bool descends(NodeId ancestor, NodeId node) const;  // directed path test

 private:
  void validate_and_build();

  std::vector<Node> nodes_;
  std::vector<NodeId> topo_order_;
  std::vector<std::vector<NodeId>> parent_lists_;
  std::vector<std::vector<NodeId>> children_;
  mutable std::vector<std::vector<std::vector<double>>> row_cache_;
};

// ---- construction ----

// Builds and validates a network from a parsed spec (see bayesnet_json.cpp
// for the file format). Throws CycleDetected / UnknownParent / EmptyDomain.
BayesNet build_network(std::vector<Node> nodes);

// ---- operations ----

SampleBatch forward_sample(const BayesNet& net, size_t n, uint64_t seed);

// number of samples consistent with `query`
size_t count(const SampleBatch& batch, const Assignment& query);

// count of samples matching `base` whose column `node` equals each value;
// one pass over the batch
std::vector<size_t> count_by_value(const SampleBatch& batch,
                                   const Assignment& base, NodeId node);

// match mask for an assignment (1 byte per sample)
std::vector<uint8_t> match_mask(const SampleBatch& batch, const Assignment& a);

// exact Pr(query | evidence) by full enumeration; cap 1e7 joint states
double exact_marginal(const BayesNet& net, const Assignment& query,
                      const Assignment& evidence);

// full-joint walk: invokes fn(values, probability) for every assignment with
// nonzero structural support; cap 1e7 states
void enumerate_joint(const BayesNet& net,
                     const std::function<void(const std::vector<int>&, double)>& fn);

// ancestor set Xi(X): nodes with a directed path to x, excluding parents
std::set<NodeId> ancestors(const BayesNet& net, NodeId x);
// ancestors including parents
std::set<NodeId> ancestral_closure(const BayesNet& net, NodeId x);

// nodes visited by the Bayes ball launched from `start` under the
// conditioning set; visited evidence nodes are exactly the requisite
// observations for queries on `start`
std::set<NodeId> bayes_ball_reachable(const BayesNet& net, NodeId start,
                                      const std::set<NodeId>& given);

// d-separation verdict of i and j given `given` (Bayes ball)
bool conditionally_independent(const BayesNet& net, NodeId i, NodeId j,
                               const std::set<NodeId>& given);

}  // namespace symphony
