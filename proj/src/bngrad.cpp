#include "symphony/bngrad.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "symphony/kern.hpp"

namespace symphony {

// ---- layout ----

BnParamLayout BnParamLayout::of(const BayesNet& net) {
  BnParamLayout l;
  l.block_of_node.assign(net.size(), -1);
  size_t off = 0;
  for (NodeId v = 0; v < static_cast<NodeId>(net.size()); ++v) {
    if (!net.is_conditional(v)) continue;
    Block b;
    b.node = v;
    b.offset = off;
    b.rows = net.cpd_rows(v);
    b.dom = net.domain_size(v);
    l.block_of_node[v] = static_cast<int>(l.blocks.size());
    off += b.rows * b.dom;
    l.blocks.push_back(b);
  }
  l.total = off;
  return l;
}

size_t BnParamLayout::index(NodeId node, size_t row, size_t value) const {
  const Block& b = blocks.at(block_of_node.at(node));
  return b.offset + row * b.dom + value;
}

std::vector<double> BnParamLayout::gather(const BayesNet& net) const {
  std::vector<double> flat(total, 0.0);
  for (const Block& b : blocks) {
    const auto& c = net.conditional(b.node);
    std::copy(c.logits.begin(), c.logits.end(), flat.begin() + b.offset);
  }
  return flat;
}

void BnParamLayout::scatter(BayesNet& net, const std::vector<double>& flat) const {
  for (const Block& b : blocks) {
    std::vector<double> logits(flat.begin() + b.offset,
                               flat.begin() + b.offset + b.rows * b.dom);
    net.set_logits(b.node, std::move(logits));
  }
}

std::string GradDiagnostics::to_json() const {
  std::ostringstream os;
  os << "{\"min_denominator\":" << (min_denominator == std::numeric_limits<size_t>::max()
                                        ? 0
                                        : min_denominator)
     << ",\"expansions\":" << expansions << ",\"starved_queries\":[";
  for (size_t i = 0; i < starved_queries.size(); ++i)
    os << (i ? "," : "") << starved_queries[i];
  os << "]}";
  return os.str();
}

// ---- decoupling ----

namespace {

DecouplingSet decouple(const BayesNet& net, const std::vector<NodeId>& relevant,
                       const std::set<NodeId>& conditioned,
                       const std::vector<NodeId>& candidates) {
  DecouplingSet d;
  if (relevant.size() < 2) {
    for (NodeId r : relevant) d.groups.push_back({r});
    return d;
  }

  auto connected_pairs = [&](const std::set<NodeId>& n) {
    std::set<NodeId> given = conditioned;
    given.insert(n.begin(), n.end());
    std::vector<std::pair<size_t, size_t>> out;
    for (size_t i = 0; i < relevant.size(); ++i)
      for (size_t j = i + 1; j < relevant.size(); ++j)
        if (!conditionally_independent(net, relevant[i], relevant[j], given))
          out.push_back({i, j});
    return out;
  };

  auto pairs = connected_pairs(d.nodes);
  for (NodeId c : candidates) {
    if (pairs.empty()) break;
    if (std::find(relevant.begin(), relevant.end(), c) != relevant.end()) continue;
    if (conditioned.count(c)) continue;
    std::set<NodeId> trial = d.nodes;
    trial.insert(c);
    auto trial_pairs = connected_pairs(trial);
    if (trial_pairs.size() < pairs.size()) {
      d.nodes = std::move(trial);
      pairs = std::move(trial_pairs);
    }
  }

  // union-find over the remaining connected pairs
  std::vector<size_t> root(relevant.size());
  for (size_t i = 0; i < root.size(); ++i) root[i] = i;
  std::function<size_t(size_t)> find = [&](size_t a) {
    while (root[a] != a) a = root[a] = root[root[a]];
    return a;
  };
  for (auto [i, j] : pairs) root[find(i)] = find(j);

  std::map<size_t, std::vector<NodeId>> comp;
  for (size_t i = 0; i < relevant.size(); ++i) comp[find(i)].push_back(relevant[i]);
  for (auto& [k, members] : comp) {
    std::sort(members.begin(), members.end());
    if (members.size() > 1) d.fully_decoupled = false;
    d.groups.push_back(std::move(members));
  }
  std::sort(d.groups.begin(), d.groups.end());
  return d;
}

}  // namespace

DecouplingSet find_decoupling_set(const BayesNet& net, NodeId x,
                                  const std::set<NodeId>& conditioned) {
  std::vector<NodeId> candidates;
  const auto xi = ancestors(net, x);
  for (NodeId v : net.topo_order())
    if (xi.count(v) && !conditioned.count(v)) candidates.push_back(v);
  return decouple(net, net.parents(x), conditioned, candidates);
}

DecouplingSet find_decoupling_set(const BayesNet& net, NodeId x) {
  return find_decoupling_set(net, x, ancestors(net, x));
}

// ---- sampling engine ----

namespace {

using Key = std::vector<int32_t>;

struct Est {
  double p = 0.0;
  std::vector<double> grad;
};

class GradEngine {
 public:
  GradEngine(const BayesNet& net, const BnParamLayout& layout,
             const SampleBatch& batch, const EstimatorOptions& opts)
      : net_(net), layout_(layout), batch_(batch), opts_(opts) {
    depth_cap_ = opts.depth_cap ? opts.depth_cap : 2 * net.size() + 2;
  }

  GradDiagnostics& diagnostics() { return diag_; }

  // Pr(v = value | evidence) with gradient; Eq. 2 + recursive expansion.
  // Evidence is pruned to the requisite observations first, so conditioning
  // on many irrelevant counters does not starve the counting estimators.
  const Est& conditional(NodeId v, int value, const Assignment& evidence, size_t depth) {
    if (depth > depth_cap_) throw RecursionDepthExceeded("estimator recursion too deep");
    const Assignment pruned = requisite_evidence({v}, evidence);
    Key key = make_key(0, {{v, value}}, pruned);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Est est = compute_conditional(v, value, pruned, depth);
    return memo_.emplace(std::move(key), std::move(est)).first->second;
  }

  // Pr(targets | evidence) with gradient, via the telescoping counting chain
  const Est& cond_joint(const Assignment& targets, const Assignment& evidence,
                        size_t depth) {
    if (depth > depth_cap_) throw RecursionDepthExceeded("estimator recursion too deep");
    std::vector<NodeId> target_nodes;
    for (const auto& [n, val] : targets.items()) target_nodes.push_back(n);
    const Assignment pruned = requisite_evidence(target_nodes, evidence);
    Key key = make_key(1, targets.items(), pruned);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Est est = compute_cond_joint(targets, pruned, depth);
    return memo_.emplace(std::move(key), std::move(est)).first->second;
  }

  // evidence nodes the Bayes ball can touch from any of the targets; the
  // rest provably do not move the conditional
  Assignment requisite_evidence(const std::vector<NodeId>& targets,
                                const Assignment& evidence) {
    if (evidence.empty()) return evidence;
    std::set<NodeId> given;
    for (const auto& [n, val] : evidence.items()) given.insert(n);
    std::set<NodeId> keep;
    for (NodeId t : targets) {
      if (evidence.contains(t)) {
        keep.insert(t);  // the target itself is pinned
        continue;
      }
      for (NodeId r : bayes_ball_reachable(net_, t, given))
        if (given.count(r)) keep.insert(r);
    }
    Assignment out;
    for (const auto& [n, val] : evidence.items())
      if (keep.count(n)) out.set(n, val);
    return out;
  }

  // Eq. 2 alone: estimate and the theta_X block of the gradient
  Est direct_own(NodeId v, int value, const Assignment& raw_evidence) {
    if (!net_.is_conditional(v))
      throw std::invalid_argument("grad_own_param target must be a conditional node");
    const Assignment evidence = requisite_evidence({v}, raw_evidence);
    Est est;
    est.grad.assign(layout_.total, 0.0);
    const size_t dom = net_.domain_size(v);

    // evidence pinning every parent collapses the ratio to one y term with
    // exactly weight one: no sampling enters at all
    const auto& parents = net_.parents(v);
    bool all_pinned = true;
    std::vector<int> pv;
    for (NodeId p : parents) {
      if (auto ev = evidence.get(p)) {
        pv.push_back(*ev);
      } else {
        all_pinned = false;
        break;
      }
    }
    if (all_pinned) {
      const size_t row = net_.parent_row(v, pv);
      const auto& p = net_.cpd_row(v, row);
      const double px = p[value];
      for (size_t u = 0; u < dom; ++u)
        est.grad[layout_.index(v, row, u)] =
            px * ((static_cast<int>(u) == value ? 1.0 : 0.0) - p[u]);
      est.p = px;
      return est;
    }

    const size_t n_e = masked_count(evidence, true);
    const auto& counts = row_counts(v, evidence);
    for (const auto& [row, c] : counts) {
      const double w = static_cast<double>(c) / static_cast<double>(n_e);
      const auto& p = net_.cpd_row(v, row);
      const double px = p[value];
      for (size_t u = 0; u < dom; ++u) {
        const double d = px * ((static_cast<int>(u) == value ? 1.0 : 0.0) - p[u]);
        est.grad[layout_.index(v, row, u)] += w * d;
      }
      est.p += w * px;
    }
    return est;
  }

  // parent-posterior estimate (the value side of the decoupled expansion)
  double parent_posterior_value(NodeId x, const std::vector<int>& parent_values,
                                const Assignment& evidence, const DecouplingSet& dset) {
    Est e = parent_posterior(x, parent_values, evidence, dset, 0, /*want_grad=*/false);
    return e.p;
  }

  Est parent_posterior_grad(NodeId x, const std::vector<int>& parent_values,
                            const Assignment& evidence, const DecouplingSet& dset) {
    return parent_posterior(x, parent_values, evidence, dset, 0, true);
  }

 private:
  Est compute_conditional(NodeId v, int value, const Assignment& evidence, size_t depth) {
    Est est;
    est.grad.assign(layout_.total, 0.0);

    if (auto ev = evidence.get(v)) {
      est.p = (*ev == value) ? 1.0 : 0.0;
      return est;
    }
    if (!net_.is_conditional(v)) {
      // deterministic, index-aligned: defer to the parent
      return conditional(net_.deterministic(v).parent, value, evidence, depth + 1);
    }

    // split evidence into non-descendants (usable directly) and strict
    // descendants of v (require the Bayes-flip through joint estimates)
    Assignment e_safe, e_desc;
    for (const auto& [n, val] : evidence.items()) {
      if (net_.descends(v, n))
        e_desc.set(n, val);
      else
        e_safe.set(n, val);
    }
    if (!e_desc.empty()) {
      Assignment num = e_desc;
      num.set(v, value);
      Est a = cond_joint(num, e_safe, depth + 1);
      Est b = cond_joint(e_desc, e_safe, depth + 1);
      if (b.p <= 0.0) throw EstimatorStarved("descendant evidence never sampled");
      est.p = a.p / b.p;
      const double inv_b2 = 1.0 / (b.p * b.p);
      for (size_t i = 0; i < layout_.total; ++i)
        est.grad[i] = (a.grad[i] * b.p - a.p * b.grad[i]) * inv_b2;
      return est;
    }

    ++diag_.expansions;
    est = direct_own(v, value, evidence);

    const auto& parents = net_.parents(v);
    std::vector<NodeId> unobserved;
    for (NodeId p : parents)
      if (!evidence.contains(p)) unobserved.push_back(p);
    if (unobserved.empty()) return est;  // all parents pinned: no Theta\theta_X flow

    // Eq. 3: expand over the distinct observed parent assignments
    const auto& counts = row_counts(v, evidence);
    std::vector<size_t> unconditional;
    if (opts_.literal_eq3_weights) unconditional = row_counts_plain(v);

    DecouplingSet dset;
    bool have_dset = false;

    for (const auto& [row, c] : counts) {
      std::vector<int> y = decode_row(v, row);
      double weight = 1.0;
      if (opts_.literal_eq3_weights)
        weight = static_cast<double>(unconditional[row]) / static_cast<double>(batch_.count);
      const double fx = net_.cpd_row(v, row)[value];
      if (fx == 0.0 || weight == 0.0) continue;

      Est inner;
      if (unobserved.size() == 1) {
        const size_t k = std::find(parents.begin(), parents.end(), unobserved[0]) -
                         parents.begin();
        inner = conditional(unobserved[0], y[k], evidence, depth + 1);
      } else {
        if (!have_dset) {
          std::set<NodeId> cond;
          for (const auto& [n, val] : evidence.items()) cond.insert(n);
          dset = decouple_for(v, unobserved, cond);
          have_dset = true;
        }
        std::vector<int> uv;
        for (NodeId u : unobserved) {
          const size_t k = std::find(parents.begin(), parents.end(), u) - parents.begin();
          uv.push_back(y[k]);
        }
        inner = mixture_over_decoupling(unobserved, uv, evidence, dset, depth + 1, true);
      }
      kern::axpy(weight * fx, inner.grad.data(), est.grad.data(), layout_.total);
    }
    return est;
  }

  // Pr(parents = y | evidence) through Eqs. 4/5 for the public surface; the
  // target node's observed parents collapse to consistency checks
  Est parent_posterior(NodeId x, const std::vector<int>& parent_values,
                       const Assignment& evidence, const DecouplingSet& dset,
                       size_t depth, bool want_grad) {
    const auto& parents = net_.parents(x);
    std::vector<NodeId> unobserved;
    std::vector<int> uv;
    for (size_t k = 0; k < parents.size(); ++k) {
      if (auto ev = evidence.get(parents[k])) {
        if (*ev != parent_values[k]) {
          Est zero;
          zero.grad.assign(layout_.total, 0.0);
          return zero;  // inconsistent with evidence
        }
      } else {
        unobserved.push_back(parents[k]);
        uv.push_back(parent_values[k]);
      }
    }
    if (unobserved.empty()) {
      Est one;
      one.p = 1.0;
      one.grad.assign(layout_.total, 0.0);
      return one;
    }
    return mixture_over_decoupling(unobserved, uv, evidence, dset, depth + 1, want_grad);
  }

  // sum over decoupling-set values of weight * product of group factors;
  // gradient includes the leave-one-out product terms and the gradient of
  // the mixture weight itself
  Est mixture_over_decoupling(const std::vector<NodeId>& members,
                              const std::vector<int>& values,
                              const Assignment& evidence, const DecouplingSet& dset,
                              size_t depth, bool want_grad) {
    Est out;
    out.grad.assign(layout_.total, 0.0);

    auto group_assignment = [&](const std::vector<NodeId>& group) {
      Assignment a;
      for (NodeId g : group) {
        const size_t k = std::find(members.begin(), members.end(), g) - members.begin();
        a.set(g, values[k]);
      }
      return a;
    };

    std::vector<std::vector<NodeId>> groups;
    std::set<NodeId> covered;
    for (const auto& g : dset.groups) {
      std::vector<NodeId> mine;
      for (NodeId m : g)
        if (std::find(members.begin(), members.end(), m) != members.end()) {
          mine.push_back(m);
          covered.insert(m);
        }
      if (!mine.empty()) groups.push_back(std::move(mine));
    }
    // members absent from the supplied partition fall back to singletons
    for (NodeId m : members)
      if (!covered.count(m)) groups.push_back({m});

    const std::vector<NodeId> nset(dset.nodes.begin(), dset.nodes.end());
    std::vector<Assignment> contexts;   // evidence + N=n_k
    std::vector<double> weights;        // n(E, n_k) / n(E)
    std::vector<Assignment> n_assigns;  // N=n_k alone

    if (nset.empty()) {
      contexts.push_back(evidence);
      weights.push_back(1.0);
      n_assigns.push_back({});
    } else {
      const size_t n_e = masked_count(evidence, true);
      for (const auto& [cfg, c] : config_counts(nset, evidence)) {
        if (c < opts_.min_denominator) continue;
        Assignment ctx = evidence;
        Assignment na;
        for (size_t i = 0; i < nset.size(); ++i) {
          ctx.set(nset[i], cfg[i]);
          na.set(nset[i], cfg[i]);
        }
        contexts.push_back(std::move(ctx));
        weights.push_back(static_cast<double>(c) / static_cast<double>(n_e));
        n_assigns.push_back(std::move(na));
      }
      if (contexts.empty())
        throw EstimatorStarved("all decoupling-set configurations starved");
      double wsum = 0.0;
      for (double w : weights) wsum += w;
      for (double& w : weights) w /= wsum;  // renormalize over retained configs
    }

    for (size_t k = 0; k < contexts.size(); ++k) {
      const Assignment& ctx = contexts[k];
      std::vector<double> factor(groups.size(), 0.0);
      for (size_t g = 0; g < groups.size(); ++g)
        factor[g] = counted_conditional(group_assignment(groups[g]), ctx);
      double prod = 1.0;
      for (double f : factor) prod *= f;
      out.p += weights[k] * prod;

      if (!want_grad) continue;

      // product rule with leave-one-out frequency products; a zero factor
      // still receives its own gradient term when the others are nonzero
      for (size_t g = 0; g < groups.size(); ++g) {
        double loo = weights[k];
        for (size_t h = 0; h < groups.size(); ++h)
          if (h != g) loo *= factor[h];
        if (loo == 0.0) continue;
        const Est& gg = cond_joint(group_assignment(groups[g]), ctx, depth + 1);
        kern::axpy(loo, gg.grad.data(), out.grad.data(), layout_.total);
      }
      // gradient of the mixture weight Pr(N = n_k | evidence); the printed
      // expansion omits this term, without it every coordinate upstream of N
      // silently vanishes
      if (!nset.empty() && prod != 0.0) {
        const Est& wg = cond_joint(n_assigns[k], evidence, depth + 1);
        kern::axpy(prod, wg.grad.data(), out.grad.data(), layout_.total);
      }
    }
    return out;
  }

  Est compute_cond_joint(const Assignment& targets, const Assignment& evidence,
                         size_t depth) {
    // order targets topologically so every factor conditions only on
    // non-descendants
    std::vector<std::pair<NodeId, int>> ordered;
    for (NodeId v : net_.topo_order())
      if (auto t = targets.get(v)) ordered.push_back({v, *t});

    Est out;
    out.grad.assign(layout_.total, 0.0);
    std::vector<double> factors;
    Assignment ctx = evidence;
    for (const auto& [v, val] : ordered) {
      Assignment want;
      want.set(v, val);
      factors.push_back(counted_conditional(want, ctx));
      ctx.set(v, val);
    }
    double prod = 1.0;
    for (double f : factors) prod *= f;
    out.p = prod;

    // product rule with counting leave-one-out factors
    ctx = evidence;
    for (size_t i = 0; i < ordered.size(); ++i) {
      double loo = 1.0;
      for (size_t j = 0; j < ordered.size(); ++j)
        if (j != i) loo *= factors[j];
      if (loo != 0.0) {
        const Est& gi = conditional(ordered[i].first, ordered[i].second, ctx, depth + 1);
        kern::axpy(loo, gi.grad.data(), out.grad.data(), layout_.total);
      }
      ctx.set(ordered[i].first, ordered[i].second);
    }
    return out;
  }

  // n(evidence, want) / n(evidence), the raw counting conditional
  double counted_conditional(const Assignment& want, const Assignment& evidence) {
    const size_t den = masked_count(evidence, true);
    Assignment joint = evidence;
    for (const auto& [n, v] : want.items()) joint.set(n, v);
    const size_t num = masked_count(joint, false);
    return static_cast<double>(num) / static_cast<double>(den);
  }

  DecouplingSet decouple_for(NodeId v, const std::vector<NodeId>& unobserved,
                             const std::set<NodeId>& conditioned) {
    Key key;
    key.push_back(2);
    key.push_back(v);
    for (NodeId u : unobserved) key.push_back(u);
    key.push_back(-1);
    for (NodeId c : conditioned) key.push_back(c);
    if (auto it = dset_memo_.find(key); it != dset_memo_.end()) return it->second;

    std::vector<NodeId> candidates;
    const auto xi = ancestors(net_, v);
    for (NodeId c : net_.topo_order())
      if (xi.count(c) && !conditioned.count(c)) candidates.push_back(c);
    DecouplingSet d = decouple(net_, unobserved, conditioned, candidates);
    dset_memo_.emplace(std::move(key), d);
    return d;
  }

  // ---- counting infrastructure ----

  size_t masked_count(const Assignment& a, bool enforce_min) {
    const auto& entry = mask_for(a);
    if (enforce_min) {
      diag_.min_denominator = std::min(diag_.min_denominator, entry.count);
      if (entry.count < opts_.min_denominator)
        throw EstimatorStarved("denominator count " + std::to_string(entry.count) +
                               " below threshold");
    }
    return entry.count;
  }

  struct MaskEntry {
    std::vector<uint8_t> mask;
    size_t count = 0;
  };

  const MaskEntry& mask_for(const Assignment& a) {
    Key key = make_key(3, a.items(), {});
    if (auto it = mask_memo_.find(key); it != mask_memo_.end()) return it->second;
    MaskEntry e;
    e.mask = match_mask(batch_, a);
    e.count = kern::count_nonzero_u8(e.mask.data(), batch_.count);
    return mask_memo_.emplace(std::move(key), std::move(e)).first->second;
  }

  // counts of parent rows of v among samples matching the evidence
  const std::map<size_t, size_t>& row_counts(NodeId v, const Assignment& evidence) {
    Key key = make_key(4, {{v, 0}}, evidence);
    if (auto it = rows_memo_.find(key); it != rows_memo_.end()) return it->second;

    std::map<size_t, size_t> counts;
    const auto& parents = net_.parents(v);
    if (parents.empty()) {
      counts[0] = masked_count(evidence, false);
    } else {
      const auto& m = mask_for(evidence).mask;
      for (size_t i = 0; i < batch_.count; ++i) {
        if (!m[i]) continue;
        size_t row = 0;
        for (NodeId p : parents) row = row * net_.domain_size(p) + batch_.cols[p][i];
        ++counts[row];
      }
    }
    return rows_memo_.emplace(std::move(key), std::move(counts)).first->second;
  }

  std::vector<size_t> row_counts_plain(NodeId v) {
    const auto& parents = net_.parents(v);
    std::vector<size_t> counts(net_.cpd_rows(v), 0);
    for (size_t i = 0; i < batch_.count; ++i) {
      size_t row = 0;
      for (NodeId p : parents) row = row * net_.domain_size(p) + batch_.cols[p][i];
      ++counts[row];
    }
    return counts;
  }

  // distinct value configurations of `nodes` with counts, among samples
  // matching the evidence
  std::vector<std::pair<std::vector<int>, size_t>> config_counts(
      const std::vector<NodeId>& nodes, const Assignment& evidence) {
    const auto& m = mask_for(evidence).mask;
    std::map<std::vector<int>, size_t> acc;
    std::vector<int> cfg(nodes.size());
    for (size_t i = 0; i < batch_.count; ++i) {
      if (!m[i]) continue;
      for (size_t k = 0; k < nodes.size(); ++k) cfg[k] = batch_.cols[nodes[k]][i];
      ++acc[cfg];
    }
    return {acc.begin(), acc.end()};
  }

  std::vector<int> decode_row(NodeId v, size_t row) const {
    const auto& parents = net_.parents(v);
    std::vector<int> y(parents.size(), 0);
    for (size_t k = parents.size(); k-- > 0;) {
      const size_t d = net_.domain_size(parents[k]);
      y[k] = static_cast<int>(row % d);
      row /= d;
    }
    return y;
  }

  static Key make_key(int kind, const std::vector<std::pair<NodeId, int>>& items,
                      const Assignment& evidence) {
    Key k;
    k.push_back(kind);
    for (const auto& [n, v] : items) {
      k.push_back(n);
      k.push_back(v);
    }
    k.push_back(-2);
    for (const auto& [n, v] : evidence.items()) {
      k.push_back(n);
      k.push_back(v);
    }
    return k;
  }

  static Key make_key(int kind, std::initializer_list<std::pair<NodeId, int>> items,
                      const Assignment& evidence) {
    return make_key(kind, std::vector<std::pair<NodeId, int>>(items), evidence);
  }

  const BayesNet& net_;
  const BnParamLayout& layout_;
  const SampleBatch& batch_;
  EstimatorOptions opts_;
  size_t depth_cap_;
  GradDiagnostics diag_;
  std::map<Key, Est> memo_;
  std::map<Key, MaskEntry> mask_memo_;
  std::map<Key, std::map<size_t, size_t>> rows_memo_;
  std::map<Key, DecouplingSet> dset_memo_;
};

}  // namespace

// ---- public surface ----

std::vector<double> grad_own_param(const BayesNet& net, const GradQuery& q,
                                   const SampleBatch& batch,
                                   const EstimatorOptions& opts) {
  const auto layout = BnParamLayout::of(net);
  GradEngine engine(net, layout, batch, opts);
  return engine.direct_own(q.target, q.target_value, q.evidence).grad;
}

std::vector<double> grad_other_params(const BayesNet& net, const GradQuery& q,
                                      const SampleBatch& batch,
                                      const EstimatorOptions& opts) {
  const auto layout = BnParamLayout::of(net);
  GradEngine engine(net, layout, batch, opts);
  std::vector<double> g = engine.conditional(q.target, q.target_value, q.evidence, 0).grad;
  if (net.is_conditional(q.target)) {
    const auto& b = layout.blocks[layout.block_of_node[q.target]];
    std::fill(g.begin() + b.offset, g.begin() + b.offset + b.rows * b.dom, 0.0);
  }
  return g;
}

double factor_parent_posterior(const BayesNet& net, NodeId x,
                               const std::vector<int>& parent_values,
                               const Assignment& evidence, const DecouplingSet& n,
                               const SampleBatch& batch, const EstimatorOptions& opts) {
  const auto layout = BnParamLayout::of(net);
  GradEngine engine(net, layout, batch, opts);
  return engine.parent_posterior_value(x, parent_values, evidence, n);
}

std::vector<double> grad_parent_posterior(const BayesNet& net, NodeId x,
                                          const std::vector<int>& parent_values,
                                          const Assignment& evidence,
                                          const DecouplingSet& n,
                                          const SampleBatch& batch,
                                          const EstimatorOptions& opts) {
  const auto layout = BnParamLayout::of(net);
  GradEngine engine(net, layout, batch, opts);
  return engine.parent_posterior_grad(x, parent_values, evidence, n).grad;
}

GradResult grad_belief(const BayesNet& net, const std::vector<GradQuery>& queries,
                       const SampleBatch& batch, const EstimatorOptions& opts) {
  if (queries.empty()) throw std::invalid_argument("grad_belief: no queries");
  GradResult result;
  result.layout = BnParamLayout::of(net);
  GradEngine engine(net, result.layout, batch, opts);
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    const auto& q = queries[qi];
    try {
      const auto& est = engine.conditional(q.target, q.target_value, q.evidence, 0);
      result.estimates.push_back(est.p);
      result.grads.push_back(est.grad);
    } catch (const EstimatorStarved&) {
      result.estimates.push_back(0.0);
      result.grads.push_back(std::vector<double>(result.layout.total, 0.0));
      engine.diagnostics().starved_queries.push_back(qi);
    }
  }
  result.diagnostics = engine.diagnostics();
  return result;
}

GradResult grad_belief(const BayesNet& net, const std::vector<GradQuery>& queries,
                       uint64_t seed, const EstimatorOptions& opts) {
  size_t budget = 0;
  for (const auto& q : queries) budget = std::max(budget, q.sample_budget);
  const SampleBatch batch = forward_sample(net, budget, seed);
  return grad_belief(net, queries, batch, opts);
}

// ---- oracles ----

std::vector<double> exact_grad_oracle(const BayesNet& net, const GradQuery& q) {
  const auto layout = BnParamLayout::of(net);
  double num = 0.0, den = 0.0;
  std::vector<double> dnum(layout.total, 0.0), dden(layout.total, 0.0);
  std::vector<double> dlogp(layout.total, 0.0);

  enumerate_joint(net, [&](const std::vector<int>& values, double p) {
    for (const auto& [n, v] : q.evidence.items())
      if (values[n] != v) return;

    // d log p / d logits, realized rows only
    std::fill(dlogp.begin(), dlogp.end(), 0.0);
    for (const auto& b : layout.blocks) {
      const auto& parents = net.parents(b.node);
      size_t row = 0;
      for (NodeId par : parents) row = row * net.domain_size(par) + values[par];
      const auto& probs = net.cpd_row(b.node, row);
      const int u = values[b.node];
      for (size_t w = 0; w < b.dom; ++w)
        dlogp[b.offset + row * b.dom + w] =
            (static_cast<int>(w) == u ? 1.0 : 0.0) - probs[w];
    }

    den += p;
    kern::axpy(p, dlogp.data(), dden.data(), layout.total);
    if (values[q.target] == q.target_value) {
      num += p;
      kern::axpy(p, dlogp.data(), dnum.data(), layout.total);
    }
  });

  if (den <= 0.0) throw ZeroEvidence("evidence has probability zero");
  std::vector<double> grad(layout.total, 0.0);
  const double inv = 1.0 / (den * den);
  for (size_t i = 0; i < layout.total; ++i)
    grad[i] = (dnum[i] * den - num * dden[i]) * inv;
  return grad;
}

std::vector<double> finite_difference_grad(const BayesNet& net, const GradQuery& q,
                                           double step) {
  const auto layout = BnParamLayout::of(net);
  Assignment target;
  target.set(q.target, q.target_value);

  BayesNet work = net;
  std::vector<double> flat = layout.gather(work);
  std::vector<double> grad(layout.total, 0.0);
  for (size_t i = 0; i < layout.total; ++i) {
    const double orig = flat[i];
    flat[i] = orig + step;
    layout.scatter(work, flat);
    const double up = exact_marginal(work, target, q.evidence);
    flat[i] = orig - step;
    layout.scatter(work, flat);
    const double dn = exact_marginal(work, target, q.evidence);
    flat[i] = orig;
    grad[i] = (up - dn) / (2.0 * step);
  }
  layout.scatter(work, flat);
  return grad;
}

}  // namespace symphony
