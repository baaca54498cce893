#include "symphony/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "symphony/kern.hpp"

namespace symphony {

namespace {

NodeId node_id(const Node& n) {
  return std::visit([](const auto& v) { return v.id; }, n);
}

const std::string& node_name(const Node& n) {
  return std::visit([](const auto& v) -> const std::string& { return v.name; }, n);
}

std::vector<NodeId> node_parents(const Node& n) {
  if (const auto* c = std::get_if<ConditionalNode>(&n)) return c->parents;
  return {std::get<DeterministicNode>(n).parent};
}

}  // namespace

// ---- Assignment ----

void Assignment::set(NodeId node, int value_index) {
  auto it = std::lower_bound(items_.begin(), items_.end(),
                             std::make_pair(node, 0),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  if (it != items_.end() && it->first == node) {
    it->second = value_index;
  } else {
    items_.insert(it, {node, value_index});
  }
}

void Assignment::erase(NodeId node) {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const auto& p) { return p.first == node; });
  if (it != items_.end()) items_.erase(it);
}

std::optional<int> Assignment::get(NodeId node) const {
  auto it = std::lower_bound(items_.begin(), items_.end(),
                             std::make_pair(node, 0),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  if (it != items_.end() && it->first == node) return it->second;
  return std::nullopt;
}

bool Assignment::subsumes(const Assignment& other) const {
  for (const auto& [n, v] : other.items()) {
    auto mine = get(n);
    if (!mine || *mine != v) return false;
  }
  return true;
}

// ---- BayesNet ----

BayesNet::BayesNet(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  validate_and_build();
}

void BayesNet::validate_and_build() {
  const size_t n = nodes_.size();
  children_.assign(n, {});
  parent_lists_.assign(n, {});
  row_cache_.assign(n, {});

  for (size_t i = 0; i < n; ++i) {
    if (node_id(nodes_[i]) != static_cast<NodeId>(i))
      throw std::invalid_argument("node ids must be dense 0..V-1 in order");
    if (const auto* c = std::get_if<ConditionalNode>(&nodes_[i])) {
      if (c->domain.size() < 2) throw EmptyDomain("domain of '" + c->name + "' has size < 2");
    } else {
      const auto& d = std::get<DeterministicNode>(nodes_[i]);
      if (d.a == 0.0) throw std::invalid_argument("deterministic map must be invertible (a != 0)");
    }
    parent_lists_[i] = node_parents(nodes_[i]);
    for (NodeId p : parent_lists_[i]) {
      if (p < 0 || p >= static_cast<NodeId>(n))
        throw UnknownParent("node '" + node_name(nodes_[i]) + "' references unknown parent");
      children_[p].push_back(static_cast<NodeId>(i));
    }
  }

  // Kahn topological sort; leftover nodes mean a cycle
  std::vector<int> indeg(n, 0);
  for (size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(node_parents(nodes_[i]).size());
  std::deque<NodeId> q;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(static_cast<NodeId>(i));
  topo_order_.clear();
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    topo_order_.push_back(v);
    for (NodeId c : children_[v])
      if (--indeg[c] == 0) q.push_back(c);
  }
  if (topo_order_.size() != n) throw CycleDetected("graph has a directed cycle");

  // deterministic nodes: default the domain to the mapped parent domain
  for (auto& nd : nodes_) {
    if (auto* d = std::get_if<DeterministicNode>(&nd)) {
      const size_t pd = domain_size(d->parent);
      if (d->domain.empty()) {
        d->domain.resize(pd);
        for (size_t k = 0; k < pd; ++k) d->domain[k] = d->forward(domain_value(d->parent, static_cast<int>(k)));
      } else if (d->domain.size() != pd) {
        throw EmptyDomain("deterministic node '" + d->name + "' domain size mismatch");
      }
    }
  }

  // logits shape check
  for (const auto& nd : nodes_) {
    if (const auto* c = std::get_if<ConditionalNode>(&nd)) {
      size_t rows = 1;
      for (NodeId p : c->parents) rows *= domain_size(p);
      if (c->logits.size() != rows * c->domain.size())
        throw std::invalid_argument("logits of '" + c->name + "' have wrong size");
    }
  }
}

const Node& BayesNet::node(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) throw UnknownNode("node id out of range");
  return nodes_[id];
}

const std::vector<NodeId>& BayesNet::children(NodeId id) const {
  node(id);
  return children_[id];
}

bool BayesNet::is_conditional(NodeId id) const {
  return std::holds_alternative<ConditionalNode>(node(id));
}

const ConditionalNode& BayesNet::conditional(NodeId id) const {
  return std::get<ConditionalNode>(node(id));
}

const DeterministicNode& BayesNet::deterministic(NodeId id) const {
  return std::get<DeterministicNode>(node(id));
}

std::string_view BayesNet::name(NodeId id) const { return node_name(node(id)); }

NodeId BayesNet::find(const std::string& name) const {
  for (const auto& n : nodes_)
    if (node_name(n) == name) return node_id(n);
  throw UnknownNode("unknown node '" + name + "'");
}

size_t BayesNet::domain_size(NodeId id) const {
  return std::visit([](const auto& v) { return v.domain.size(); }, node(id));
}

double BayesNet::domain_value(NodeId id, int value_index) const {
  return std::visit([&](const auto& v) { return v.domain.at(value_index); }, node(id));
}

const std::vector<NodeId>& BayesNet::parents(NodeId id) const {
  node(id);
  return parent_lists_[id];
}

size_t BayesNet::cpd_rows(NodeId id) const {
  size_t rows = 1;
  for (NodeId p : parents(id)) rows *= domain_size(p);
  return rows;
}

size_t BayesNet::parent_row(NodeId id, const std::vector<int>& parent_values) const {
  const auto& ps = parents(id);
  size_t row = 0;
  for (size_t k = 0; k < ps.size(); ++k) row = row * domain_size(ps[k]) + static_cast<size_t>(parent_values[k]);
  return row;
}

const std::vector<double>& BayesNet::cpd_row(NodeId id, size_t row) const {
  auto& cache = row_cache_[id];
  if (cache.empty()) cache.resize(cpd_rows(id));
  auto& entry = cache[row];
  if (!entry.empty()) return entry;

  const size_t dom = domain_size(id);
  entry.assign(dom, 0.0);
  if (const auto* c = std::get_if<ConditionalNode>(&node(id))) {
    const double* l = c->logits.data() + row * dom;
    double mx = l[0];
    for (size_t v = 1; v < dom; ++v) mx = std::max(mx, l[v]);
    double z = 0.0;
    for (size_t v = 0; v < dom; ++v) {
      entry[v] = std::exp(l[v] - mx);
      z += entry[v];
    }
    for (size_t v = 0; v < dom; ++v) entry[v] /= z;
  } else {
    // delta on the index-aligned image value
    entry[row] = 1.0;
  }
  return entry;
}

void BayesNet::set_logits(NodeId id, std::vector<double> logits) {
  auto& c = std::get<ConditionalNode>(nodes_.at(id));
  if (logits.size() != c.logits.size())
    throw std::invalid_argument("set_logits: size mismatch for '" + c.name + "'");
  c.logits = std::move(logits);
  row_cache_[id].clear();
}

double BayesNet::joint_states() const {
  double s = 1.0;
  for (const auto& n : nodes_) {
    s *= static_cast<double>(std::visit([](const auto& v) { return v.domain.size(); }, n));
    if (s > 9.2e18) return 9.2e18;
  }
  return s;
}

bool BayesNet::descends(NodeId ancestor, NodeId node_) const {
  std::vector<uint8_t> seen(size(), 0);
  std::deque<NodeId> q{ancestor};
  seen[ancestor] = 1;
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    for (NodeId c : children_[v]) {
      if (c == node_) return true;
      if (!seen[c]) {
        seen[c] = 1;
        q.push_back(c);
      }
    }
  }
  return false;
}

BayesNet build_network(std::vector<Node> nodes) { return BayesNet(std::move(nodes)); }

// ---- sampling ----

SampleBatch forward_sample(const BayesNet& net, size_t n, uint64_t seed) {
  if (n == 0) throw std::invalid_argument("forward_sample: n must be > 0");
  SampleBatch batch;
  batch.count = n;
  batch.seed = seed;
  batch.cols.assign(net.size(), std::vector<uint8_t>(n));
  Rng rng(seed);

  std::vector<int> values(net.size(), 0);
  std::vector<int> pv;
  for (size_t i = 0; i < n; ++i) {
    for (NodeId v : net.topo_order()) {
      const auto& ps = net.parents(v);
      if (net.is_conditional(v)) {
        pv.clear();
        for (NodeId p : ps) pv.push_back(values[p]);
        const auto& probs = net.cpd_row(v, net.parent_row(v, pv));
        const double u = rng.next_double();
        double acc = 0.0;
        int picked = static_cast<int>(probs.size()) - 1;
        for (size_t k = 0; k < probs.size(); ++k) {
          acc += probs[k];
          if (u < acc) {
            picked = static_cast<int>(k);
            break;
          }
        }
        values[v] = picked;
      } else {
        values[v] = values[ps[0]];  // index-aligned deterministic map
      }
      batch.cols[v][i] = static_cast<uint8_t>(values[v]);
    }
  }
  return batch;
}

std::vector<uint8_t> match_mask(const SampleBatch& batch, const Assignment& a) {
  std::vector<uint8_t> mask(batch.count, 1);
  for (const auto& [node, value] : a.items()) {
    kern::mask_and_eq_u8(batch.cols[node].data(), batch.count,
                         static_cast<uint8_t>(value), mask.data());
  }
  return mask;
}

size_t count(const SampleBatch& batch, const Assignment& query) {
  if (query.empty()) return batch.count;
  if (query.size() == 1) {
    const auto& [node, value] = query.items()[0];
    return kern::count_eq_u8(batch.cols[node].data(), batch.count,
                             static_cast<uint8_t>(value));
  }
  const auto mask = match_mask(batch, query);
  return kern::count_nonzero_u8(mask.data(), batch.count);
}

std::vector<size_t> count_by_value(const SampleBatch& batch,
                                   const Assignment& base, NodeId node) {
  const auto& col = batch.cols[node];
  size_t dom = 0;
  for (uint8_t v : col) dom = std::max<size_t>(dom, v + 1);
  std::vector<size_t> counts(std::max<size_t>(dom, 1), 0);
  if (base.empty()) {
    for (size_t i = 0; i < batch.count; ++i) ++counts[col[i]];
    return counts;
  }
  const auto mask = match_mask(batch, base);
  for (size_t i = 0; i < batch.count; ++i)
    if (mask[i]) ++counts[col[i]];
  return counts;
}

// ---- enumeration ----

void enumerate_joint(const BayesNet& net,
                     const std::function<void(const std::vector<int>&, double)>& fn) {
  if (net.joint_states() > 1e7) throw TooLarge("joint enumeration above 1e7 states");
  const size_t n = net.size();
  std::vector<int> values(n, 0);
  std::vector<int> pv;

  // depth-first over the topo order so deterministic nodes take their single
  // admissible value and structural zeros are skipped
  const auto& order = net.topo_order();
  std::function<void(size_t, double)> rec = [&](size_t depth, double p) {
    if (depth == order.size()) {
      fn(values, p);
      return;
    }
    const NodeId v = order[depth];
    if (net.is_conditional(v)) {
      pv.clear();
      for (NodeId q : net.parents(v)) pv.push_back(values[q]);
      const size_t row = net.parent_row(v, pv);
      const auto probs = net.cpd_row(v, row);  // copy: recursion may refill cache
      for (size_t k = 0; k < probs.size(); ++k) {
        values[v] = static_cast<int>(k);
        rec(depth + 1, p * probs[k]);
      }
    } else {
      values[v] = values[net.parents(v)[0]];
      rec(depth + 1, p);
    }
    values[v] = 0;
  };
  rec(0, 1.0);
}

double exact_marginal(const BayesNet& net, const Assignment& query,
                      const Assignment& evidence) {
  double num = 0.0, den = 0.0;
  enumerate_joint(net, [&](const std::vector<int>& values, double p) {
    for (const auto& [n, v] : evidence.items())
      if (values[n] != v) return;
    den += p;
    for (const auto& [n, v] : query.items())
      if (values[n] != v) return;
    num += p;
  });
  if (den <= 0.0) throw ZeroEvidence("evidence has probability zero");
  return num / den;
}

// ---- graph queries ----

std::set<NodeId> ancestral_closure(const BayesNet& net, NodeId x) {
  net.node(x);
  std::set<NodeId> out;
  std::deque<NodeId> q{x};
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    for (NodeId p : net.parents(v)) {
      if (out.insert(p).second) q.push_back(p);
    }
  }
  return out;
}

std::set<NodeId> ancestors(const BayesNet& net, NodeId x) {
  auto out = ancestral_closure(net, x);
  for (NodeId p : net.parents(x)) out.erase(p);
  return out;
}

// Standard Bayes-ball reachability over (node, direction) states.
// direction: 0 = arrived from a child (moving up), 1 = from a parent (down).
std::set<NodeId> bayes_ball_reachable(const BayesNet& net, NodeId start,
                                      const std::set<NodeId>& given) {
  net.node(start);
  const size_t n = net.size();
  std::vector<uint8_t> visited(n * 2, 0);
  std::set<NodeId> touched;
  std::deque<std::pair<NodeId, int>> q;
  q.push_back({start, 0});  // as if arriving from a child below the start

  auto observed = [&](NodeId v) { return given.count(v) > 0; };

  while (!q.empty()) {
    auto [v, dir] = q.front();
    q.pop_front();
    if (visited[v * 2 + dir]) continue;
    visited[v * 2 + dir] = 1;
    touched.insert(v);

    if (dir == 0) {
      // arrived from a child: blocked when observed, else pass both ways
      if (!observed(v)) {
        for (NodeId p : net.parents(v)) q.push_back({p, 0});
        for (NodeId c : net.children(v)) q.push_back({c, 1});
      }
    } else {
      // arrived from a parent: pass down when unobserved, bounce back to
      // parents when observed (collider activation propagates to observed
      // descendants through the pass-down visits)
      if (!observed(v)) {
        for (NodeId c : net.children(v)) q.push_back({c, 1});
      } else {
        for (NodeId p : net.parents(v)) q.push_back({p, 0});
      }
    }
  }
  touched.erase(start);
  return touched;
}

bool conditionally_independent(const BayesNet& net, NodeId i, NodeId j,
                               const std::set<NodeId>& given) {
  net.node(j);
  if (i == j) throw std::invalid_argument("i and j must differ");
  return bayes_ball_reachable(net, i, given).count(j) == 0;
}

}  // namespace symphony
