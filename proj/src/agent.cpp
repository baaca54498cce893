#include "symphony/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "symphony/bayesnet_io.hpp"
#include "symphony/kern.hpp"

namespace symphony {

namespace {

constexpr size_t kTopoNodeRaw = 9;  // [proc, resource, cpu, gpu, fpga, idle, ready, belief, bias]
constexpr size_t kTopoEdgeRaw = 2;  // [to_resource, to_proc]
constexpr size_t kBeliefSlot = 7;
constexpr size_t kDfgNodeRaw = 8;  // [ready, running, done, blocked, rt_cpu, rt_gpu, rt_fpga, bias]
constexpr size_t kDfgEdgeRaw = 2;
constexpr size_t kGlobalDim = 4;
constexpr size_t kEmbed = 16;
constexpr size_t kLstmHidden = 16;

size_t sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  size_t last = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = i;
    if (u < cum) return i;
  }
  return last;
}

}  // namespace

// ---- belief ----

BeliefState estimate_belief(const UtilizationBn& model, const RawObservation& obs,
                            size_t sample_budget, Rng& rng, Assignment* evidence_out) {
  const BayesNet& net = model.net;

  // per-counter t-corrected point value, discretized to evidence
  Assignment evidence;
  for (const auto& [name, readings] : obs.readings) {
    auto it = model.counter_nodes.find(name);
    if (it == model.counter_nodes.end()) continue;  // unknown counters ignored
    if (readings.empty()) continue;                 // missing: leave unobserved
    const auto summary = summarize(readings, name);
    double v = summary.mean;
    if (summary.dof >= 1) v = sample_true_value(summary, rng);
    v = std::clamp(v, 0.0, 1.0);
    evidence.set(it->second, discretize(v, model.bins));
  }
  if (evidence_out) *evidence_out = evidence;

  // likelihood-weighted posterior means over the utilization nodes
  std::vector<double> acc(net.size(), 0.0);
  double total_weight = 0.0;
  std::vector<int> values(net.size(), 0);
  std::vector<int> pv;
  for (size_t s = 0; s < sample_budget; ++s) {
    double w = 1.0;
    for (NodeId v : net.topo_order()) {
      pv.clear();
      for (NodeId p : net.parents(v)) pv.push_back(values[p]);
      if (net.is_conditional(v)) {
        const auto& probs = net.cpd_row(v, net.parent_row(v, pv));
        if (auto ev = evidence.get(v)) {
          values[v] = *ev;
          w *= probs[*ev];
        } else {
          values[v] = static_cast<int>(sample_index(probs, rng));
        }
      } else {
        values[v] = pv[0];
        if (auto ev = evidence.get(v); ev && *ev != values[v]) w = 0.0;
      }
      if (w == 0.0) break;
    }
    if (w == 0.0) continue;
    total_weight += w;
    for (const auto& [name, node] : model.util_nodes)
      acc[node] += w * net.domain_value(node, values[node]);
  }

  BeliefState out;
  for (const auto& rname : model.resources) {
    const NodeId node = model.util_nodes.at(rname);
    double mean = 0.5;
    if (total_weight > 0.0) mean = acc[node] / total_weight;
    out.utilization.push_back(std::clamp(mean, 0.0, 1.0));
    bool all_parents_observed = true;
    for (NodeId p : net.parents(node))
      if (!evidence.contains(p)) all_parents_observed = false;
    out.measured.push_back(all_parents_observed);
  }
  return out;
}

std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       const std::vector<double>& values,
                                       const std::vector<bool>& dones,
                                       double bootstrap_value, double discount) {
  const size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw std::invalid_argument("compute_advantages: length mismatch");
  std::vector<double> adv(n, 0.0);
  double ret = bootstrap_value;
  for (size_t i = n; i-- > 0;) {
    if (dones[i]) ret = 0.0;  // terminal: nothing bootstraps across the boundary
    ret = rewards[i] + discount * ret;
    adv[i] = ret - values[i];
  }
  return adv;
}

std::pair<double, double> a2c_losses(const std::vector<double>& log_probs,
                                     const std::vector<double>& advantages,
                                     size_t n_envs, size_t n_steps) {
  if (log_probs.size() != advantages.size())
    throw std::invalid_argument("a2c_losses: length mismatch");
  const double norm = 1.0 / static_cast<double>(n_envs * n_steps);
  double la = 0.0, lv = 0.0;
  for (size_t i = 0; i < log_probs.size(); ++i) {
    la -= norm * log_probs[i] * advantages[i];
    lv += norm * advantages[i] * advantages[i];
  }
  return {la, lv};
}

// ---- construction ----

SymphonyAgent::SymphonyAgent(const FabricTopology& topology, const ProfileSet& profiles,
                             const CounterModelConfig& counter_model, uint64_t seed,
                             TrainConfig cfg)
    : topology_(topology), profiles_(profiles), cfg_(cfg) {
  if (cfg_.discount < 0.0 || cfg_.discount >= 1.0)
    throw std::invalid_argument("discount must lie in [0, 1)");
  if (cfg_.n_envs < 1 || cfg_.n_steps < 1 || cfg_.unroll < 1)
    throw std::invalid_argument("n_envs, n_steps and unroll must be positive");
  // trainable thresholds start at the midpoint of their plausible range; the
  // environment keeps the true value to itself
  std::vector<UtilizationRelation> relations = counter_model.relations;
  for (auto& rel : relations)
    if (rel.form == UtilizationRelation::Form::Threshold && rel.theta_trainable)
      rel.theta = 0.5 * (1.0 + 16.0);
  std::vector<std::string> resources;
  for (const auto& rel : relations) resources.push_back(rel.output);
  util_bn_ = build_utilization_bn(resources, counter_model.counters, relations);
  bn_layout_ = BnParamLayout::of(util_bn_.net);

  Rng rng(seed);
  GnBlockConfig topo_cfg{kTopoNodeRaw, kTopoEdgeRaw, 8, kGlobalDim, kEmbed};
  GnBlockConfig dfg_cfg{kDfgNodeRaw, kDfgEdgeRaw, 8, kGlobalDim, kEmbed};
  topo_block_ = GnBlock::create(params_, "gn_topo", GnBlockKind::Topology, topo_cfg, rng);
  dfg_block_ = GnBlock::create(params_, "gn_dfg", GnBlockKind::Dfg, dfg_cfg, rng);
  lstm_ = LstmCell::create(params_, "lstm", 2 * kEmbed, kLstmHidden, rng);

  ActionSpace space;
  for (const auto& k : profiles_.kernels) space.kernel_ids.push_back(k.kernel);
  space.processor_count = topology_.processors.size();
  for (size_t p = 0; p < topology_.processors.size(); ++p)
    if (topology_.processors[p].kind == ProcKind::FpgaContext)
      space.fpga_processors.push_back(static_cast<int>(p));
  action_count_ = space.size();
  heads_ = PolicyValueHeads::create(params_, "heads", kLstmHidden, action_count_, rng);

  for (const auto& k : profiles_.kernels)
    for (const auto& [kind, rt] : k.base_runtime)
      max_base_runtime_ = std::max(max_base_runtime_, rt);
}

BeliefState SymphonyAgent::belief(const RawObservation& obs, Rng& rng,
                                  Assignment* evidence_out) const {
  return estimate_belief(util_bn_, obs, cfg_.belief_sample_budget, rng, evidence_out);
}

// ---- features ----

void SymphonyAgent::snapshot_env(const Env& env, StepRecord& rec) const {
  const auto& dfg = env.combined_dfg();
  rec.dfg_kernels.clear();
  for (const auto& n : dfg.nodes) rec.dfg_kernels.push_back(profiles_.index(n.kernel));
  rec.dfg_edges = dfg.edges;
  rec.node_status.clear();
  for (size_t n = 0; n < dfg.nodes.size(); ++n)
    rec.node_status.push_back(static_cast<uint8_t>(env.node_status(static_cast<int>(n))));
  rec.proc_idle.clear();
  rec.fpga_ready.clear();
  for (size_t p = 0; p < topology_.processors.size(); ++p) {
    rec.proc_idle.push_back(env.processor_idle(static_cast<int>(p)) ? 1 : 0);
    int8_t ready = -1;
    if (topology_.processors[p].kind == ProcKind::FpgaContext) {
      ready = 0;
      const auto& kernel = env.fpga_config(static_cast<int>(p));
      if (!kernel.empty())
        for (const auto& n : dfg.nodes)
          if (n.kernel == kernel && env.node_status(n.id) == NodeStatus::Ready) ready = 1;
    }
    rec.fpga_ready.push_back(ready);
  }
  rec.mask = env.valid_mask();
}

SymphonyAgent::PolicyOut SymphonyAgent::forward_policy(Tape& tape, const StepRecord& rec,
                                                       Tape::Id h, Tape::Id c) const {
  // topology graph: processor nodes, then one node per resource carrying its
  // belief coordinate as a vertex label
  GnGraph topo;
  const size_t n_proc = topology_.processors.size();
  for (size_t p = 0; p < n_proc; ++p) {
    std::vector<double> f(kTopoNodeRaw, 0.0);
    f[0] = 1.0;
    const auto kind = topology_.processors[p].kind;
    f[2] = kind == ProcKind::CpuThread ? 1.0 : 0.0;
    f[3] = kind == ProcKind::Gpu ? 1.0 : 0.0;
    f[4] = kind == ProcKind::FpgaContext ? 1.0 : 0.0;
    f[5] = rec.proc_idle[p] ? 1.0 : 0.0;
    f[6] = rec.fpga_ready[p] > 0 ? 1.0 : 0.0;
    f[8] = 1.0;
    topo.node_feats.push_back(std::move(f));
  }
  for (size_t r = 0; r < rec.belief.utilization.size(); ++r) {
    std::vector<double> f(kTopoNodeRaw, 0.0);
    f[1] = 1.0;
    f[kBeliefSlot] = rec.belief.utilization[r];
    f[8] = 1.0;
    topo.node_feats.push_back(std::move(f));
  }
  for (size_t p = 0; p < n_proc; ++p)
    for (int r : topology_.processors[p].path) {
      topo.edges.push_back({static_cast<int>(p), static_cast<int>(n_proc + r)});
      topo.edge_feats.push_back({1.0, 0.0});
      topo.edges.push_back({static_cast<int>(n_proc + r), static_cast<int>(p)});
      topo.edge_feats.push_back({0.0, 1.0});
    }
  topo.global_feat.assign(kGlobalDim, 0.0);

  GnGraph dfg;
  for (size_t n = 0; n < rec.dfg_kernels.size(); ++n) {
    std::vector<double> f(kDfgNodeRaw, 0.0);
    const auto status = static_cast<NodeStatus>(rec.node_status[n]);
    f[0] = status == NodeStatus::Ready ? 1.0 : 0.0;
    f[1] = status == NodeStatus::Running ? 1.0 : 0.0;
    f[2] = status == NodeStatus::Done ? 1.0 : 0.0;
    f[3] = status == NodeStatus::Blocked ? 1.0 : 0.0;
    const auto& prof = profiles_.kernels[rec.dfg_kernels[n]];
    auto rt_of = [&](ProcKind k) {
      auto it = prof.base_runtime.find(k);
      return it == prof.base_runtime.end() ? 0.0 : it->second / max_base_runtime_;
    };
    f[4] = rt_of(ProcKind::CpuThread);
    f[5] = rt_of(ProcKind::Gpu);
    f[6] = rt_of(ProcKind::FpgaContext);
    f[7] = 1.0;
    dfg.node_feats.push_back(std::move(f));
  }
  for (const auto& [s, d] : rec.dfg_edges) {
    dfg.edges.push_back({s, d});
    dfg.edge_feats.push_back({1.0, 1.0});
  }
  dfg.global_feat.assign(kGlobalDim, 0.0);

  auto o1 = topo_block_.forward(tape, topo);
  auto o2 = dfg_block_.forward(tape, dfg);

  PolicyOut out;
  out.resource_inputs.assign(o1.node_inputs.begin() + n_proc, o1.node_inputs.end());
  Tape::Id feat = tape.concat({o1.global, o2.global});
  auto [h2, c2] = lstm_.step(tape, feat, h, c);
  auto [logits, value] = heads_.forward(tape, h2);
  out.logits = logits;
  out.value = value;
  out.h = h2;
  out.c = c2;
  return out;
}

// ---- acting ----

SymphonyAgent::ActResult SymphonyAgent::act(const Env& env, const BeliefState& belief,
                                            const LstmState& lstm, bool sample,
                                            Rng& rng) const {
  StepRecord rec;
  rec.belief = belief;
  snapshot_env(env, rec);

  ParameterSet& mutable_params = const_cast<ParameterSet&>(params_);
  Tape tape(mutable_params);
  Tape::Id h = tape.input(lstm.h);
  Tape::Id c = tape.input(lstm.c);
  const PolicyOut out = forward_policy(tape, rec, h, c);

  ActResult result;
  result.logits = tape.value(out.logits);
  result.value = tape.value(out.value)[0];
  result.lstm = {tape.value(out.h), tape.value(out.c)};

  bool any_valid = false;
  for (bool m : rec.mask)
    if (m) any_valid = true;
  if (!any_valid) {
    result.action = Action::noop();
    result.action_index = env.action_space().noop_index();
    result.no_valid_action = true;
    return result;
  }

  const auto probs = masked_softmax(result.logits, rec.mask);
  size_t idx;
  if (sample) {
    idx = sample_index(probs, rng);
  } else {
    idx = 0;
    double best = -1.0;
    for (size_t i = 0; i < probs.size(); ++i)
      if (probs[i] > best + 1e-15) {
        best = probs[i];
        idx = i;
      }
  }
  result.action_index = idx;
  result.action = env.decode(idx);
  return result;
}

size_t SymphonyAgent::act_batch(Env& env, const BeliefState& belief, LstmState& lstm,
                                size_t batch_size, bool sample, Rng& rng,
                                EpisodeTrace* trace, StepOutcome* last_outcome) const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  // one invocation: a single forward pass; picks reuse the same logits with
  // refreshed masks between them
  StepRecord rec;
  rec.belief = belief;
  snapshot_env(env, rec);

  ParameterSet& mutable_params = const_cast<ParameterSet&>(params_);
  Tape tape(mutable_params);
  Tape::Id h = tape.input(lstm.h);
  Tape::Id c = tape.input(lstm.c);
  const PolicyOut out = forward_policy(tape, rec, h, c);
  const std::vector<double> logits = tape.value(out.logits);
  lstm = {tape.value(out.h), tape.value(out.c)};

  size_t applied = 0;
  while (applied < batch_size && !env.done()) {
    const auto mask = env.valid_mask();
    bool any = false;
    for (bool m : mask)
      if (m) any = true;
    Action action = Action::noop();
    if (any) {
      const auto probs = masked_softmax(logits, mask);
      const size_t idx =
          sample ? sample_index(probs, rng)
                 : static_cast<size_t>(std::max_element(probs.begin(), probs.end()) -
                                       probs.begin());
      action = env.decode(idx);
    }
    const auto outcome = env.step(action);
    ++applied;
    if (trace)
      trace->steps.push_back({trace->steps.size(), action_to_string(action, env),
                              outcome.reward, outcome.info.sim_time,
                              outcome.info.invalid});
    if (last_outcome) *last_outcome = outcome;
    if (action.kind == Action::Kind::NoOp) break;  // waiting ends the batch
  }
  return applied;
}

EpisodeTrace SymphonyAgent::run_episode(Env& env, size_t batch_size, bool sample,
                                        uint64_t seed) const {
  EpisodeTrace trace;
  Rng rng(seed);
  Rng belief_rng = rng.fork(1);
  LstmState lstm = LstmState::zero(kLstmHidden);
  StepOutcome obs = env.reset(seed);
  while (!env.done()) {
    const BeliefState b = belief(obs.observation, belief_rng);
    ++trace.invocations;
    act_batch(env, b, lstm, batch_size, sample, rng, &trace, &obs);
  }
  trace.makespan = env.makespan();
  return trace;
}

// ---- training ----

TrainLog SymphonyAgent::train(const EnvSupplier& supplier, size_t iterations,
                              uint64_t seed, bool zero_wallclock) {
  TrainLog log;
  if (iterations == 0) return log;

  Rng rng(seed);
  std::vector<EnvSlot> slots;
  size_t episode_counter = 0;
  for (size_t e = 0; e < cfg_.n_envs; ++e) {
    auto [env, oracle] = supplier(e, episode_counter++);
    EnvSlot slot{std::move(env), oracle, LstmState::zero(kLstmHidden), {}, {}, {}};
    slots.push_back(std::move(slot));
  }
  std::vector<Rng> env_rngs;
  for (size_t e = 0; e < slots.size(); ++e) {
    env_rngs.push_back(rng.fork(1000 + e));
    const StepOutcome first = slots[e].env.reset(rng.fork(2000 + e).next_u64());
    slots[e].belief = belief(first.observation, env_rngs[e], &slots[e].evidence);
  }

  double last_mean_norm = 0.0;
  for (size_t iter = 0; iter < iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<StepRecord>> windows(slots.size());
    std::vector<double> bootstraps(slots.size(), 0.0);
    std::vector<double> episode_norms;
    size_t invalid_count = 0, step_count = 0;

    // rollout: n_s steps in each of the n_e environments
    for (size_t e = 0; e < slots.size(); ++e) {
      EnvSlot& slot = slots[e];
      slot.window_start_lstm = slot.lstm;
      for (size_t i = 0; i < cfg_.n_steps; ++i) {
        ActResult a = act(slot.env, slot.belief, slot.lstm, /*sample=*/true, rng);
        StepRecord rec;
        rec.belief = slot.belief;
        rec.evidence = slot.evidence;
        snapshot_env(slot.env, rec);
        rec.action_index = a.action_index;

        StepOutcome outcome = slot.env.step(a.action);
        rec.reward = outcome.reward;
        rec.done = outcome.done;
        rec.invalid = outcome.info.invalid;
        slot.lstm = a.lstm;
        ++step_count;
        if (outcome.info.invalid) ++invalid_count;

        windows[e].push_back(std::move(rec));

        if (outcome.done) {
          episode_norms.push_back(slot.env.makespan() /
                                  std::max(1e-9, slot.oracle_makespan));
          auto [env2, oracle2] = supplier(e, episode_counter++);
          slot.env = std::move(env2);
          slot.oracle_makespan = oracle2;
          outcome = slot.env.reset(rng.fork(3000 + episode_counter).next_u64());
          slot.lstm = LstmState::zero(kLstmHidden);
        }
        // belief for the next step (also the bootstrap state)
        slot.belief = belief(outcome.observation, env_rngs[e], &slot.evidence);
      }
      // bootstrap value with gradients stopped: plain forward, value only
      {
        StepRecord rec;
        rec.belief = slot.belief;
        snapshot_env(slot.env, rec);
        Tape tape(params_);
        Tape::Id h = tape.input(slot.lstm.h);
        Tape::Id c = tape.input(slot.lstm.c);
        const PolicyOut out = forward_policy(tape, rec, h, c);
        const bool terminal = windows[e].back().done;
        bootstraps[e] = terminal ? 0.0 : tape.value(out.value)[0];
      }
    }

    // update: replay each window on one tape, losses per the n-step A2C form
    params_.zero_grad();
    std::vector<double> bn_grad(bn_layout_.total, 0.0);
    double loss_a_total = 0.0, loss_v_total = 0.0;
    const double norm = 1.0 / static_cast<double>(cfg_.n_envs * cfg_.n_steps);
    bool aborted = false;

    for (size_t e = 0; e < slots.size() && !aborted; ++e) {
      Tape tape(params_);
      Tape::Id h = tape.input(slots[e].window_start_lstm.h);
      Tape::Id c = tape.input(slots[e].window_start_lstm.c);

      std::vector<Tape::Id> logp_nodes, value_nodes;
      std::vector<std::vector<Tape::Id>> resource_inputs;
      std::vector<double> rewards, values;
      std::vector<bool> dones;
      size_t since_detach = 0;
      for (auto& rec : windows[e]) {
        const PolicyOut out = forward_policy(tape, rec, h, c);
        h = out.h;
        c = out.c;
        if (rec.done) {
          // next step starts a fresh episode: reset the recurrent state
          h = tape.input(std::vector<double>(kLstmHidden, 0.0));
          c = tape.input(std::vector<double>(kLstmHidden, 0.0));
          since_detach = 0;
        } else if (++since_detach >= cfg_.unroll) {
          // truncated backpropagation through time at the unroll length
          h = tape.input(tape.value(h));
          c = tape.input(tape.value(c));
          since_detach = 0;
        }
        bool valid_target = rec.mask[rec.action_index];
        Tape::Id logp = valid_target
                            ? tape.masked_log_softmax_pick(out.logits, rec.mask,
                                                           rec.action_index)
                            : tape.scale(tape.pick(out.logits, rec.action_index), 0.0);
        logp_nodes.push_back(logp);
        value_nodes.push_back(out.value);
        resource_inputs.push_back(out.resource_inputs);
        rewards.push_back(rec.reward);
        values.push_back(tape.value(out.value)[0]);
        dones.push_back(rec.done);
      }

      const auto advantages =
          compute_advantages(rewards, values, dones, bootstraps[e], cfg_.discount);

      // L^A = -(1/n_e n_s) sum logpi * A ; L^V = (1/n_e n_s) sum A^2
      std::vector<Tape::Id> parts;
      std::vector<double> logps;
      for (size_t i = 0; i < logp_nodes.size(); ++i) {
        parts.push_back(tape.scale(logp_nodes[i], -norm * advantages[i]));
        const double ret = advantages[i] + values[i];  // n-step return target
        Tape::Id diff = tape.add(tape.input({ret}), tape.scale(value_nodes[i], -1.0));
        parts.push_back(tape.scale(tape.square(diff), norm));
        logps.push_back(tape.value(logp_nodes[i])[0]);
      }
      const auto [la, lv] = a2c_losses(logps, advantages, cfg_.n_envs, cfg_.n_steps);
      loss_a_total += la;
      loss_v_total += lv;
      Tape::Id loss = tape.reduce_sum(tape.concat(parts));
      if (!std::isfinite(tape.value(loss)[0])) {
        aborted = true;  // NonFiniteLoss: skip this update entirely
        break;
      }
      tape.backward(loss);

      // chain rule into Theta_BN through the belief coordinates
      if (cfg_.train_bn && bn_layout_.total > 0) {
        for (size_t i = 0; i < windows[e].size(); ++i) {
          const auto& rec = windows[e][i];
          if (rec.evidence.empty()) continue;
          std::vector<double> dldb(util_bn_.resources.size(), 0.0);
          bool any = false;
          for (size_t r = 0; r < util_bn_.resources.size(); ++r) {
            dldb[r] = tape.grad(resource_inputs[i][r])[kBeliefSlot];
            if (dldb[r] != 0.0) any = true;
          }
          if (!any) continue;

          std::vector<GradQuery> queries;
          std::vector<std::pair<size_t, double>> weights;  // (query idx scale)
          for (size_t r = 0; r < util_bn_.resources.size(); ++r) {
            if (dldb[r] == 0.0) continue;
            const NodeId node = util_bn_.util_nodes.at(util_bn_.resources[r]);
            for (size_t v = 0; v < util_bn_.net.domain_size(node); ++v) {
              GradQuery q;
              q.target = node;
              q.target_value = static_cast<int>(v);
              q.evidence = rec.evidence;
              q.sample_budget = cfg_.grad_sample_budget;
              weights.push_back(
                  {queries.size(),
                   dldb[r] * util_bn_.net.domain_value(node, static_cast<int>(v))});
              queries.push_back(std::move(q));
            }
          }
          uint64_t mix = seed ^ (iter * 1315423911ULL) ^ (e << 16) ^ i;
          const uint64_t bseed = Rng::splitmix64(mix);
          GradResult gres = grad_belief(util_bn_.net, queries, bseed);
          for (const auto& [qi, w] : weights)
            kern::axpy(w, gres.grads[qi].data(), bn_grad.data(), bn_layout_.total);
        }
      }
    }

    double wall_ms = 0.0;
    if (!zero_wallclock) {
      wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    }

    if (!aborted) {
      params_.sgd_step(cfg_.learning_rate);
      if (cfg_.train_bn && bn_layout_.total > 0) {
        auto flat = bn_layout_.gather(util_bn_.net);
        kern::axpy(-cfg_.learning_rate, bn_grad.data(), flat.data(), flat.size());
        bn_layout_.scatter(util_bn_.net, flat);
      }
    }

    if (!episode_norms.empty()) {
      double m = 0.0;
      for (double v : episode_norms) m += v;
      last_mean_norm = m / static_cast<double>(episode_norms.size());
      log.episodes += episode_norms.size();
    }
    log.rows.push_back({iter, last_mean_norm, loss_a_total, loss_v_total,
                        step_count ? static_cast<double>(invalid_count) / step_count
                                   : 0.0,
                        wall_ms});
  }
  return log;
}

// ---- checkpointing ----

std::string SymphonyAgent::checkpoint() const {
  nlohmann::json j;
  j["format"] = "symphony-agent";
  j["version"] = 1;
  j["params"] = nlohmann::json::parse(params_.to_json());
  j["bn"] = nlohmann::json::parse(network_to_json(util_bn_.net));
  return j.dump();
}

void SymphonyAgent::restore(const std::string& blob) {
  const nlohmann::json j = nlohmann::json::parse(blob);
  if (j.value("format", "") != "symphony-agent")
    throw std::invalid_argument("not an agent checkpoint");
  params_ = ParameterSet::from_json(j.at("params").dump());
  BayesNet net = load_network_json(j.at("bn").dump());
  if (net.size() != util_bn_.net.size())
    throw std::invalid_argument("checkpoint BN does not match the configured model");
  util_bn_.net = std::move(net);
  bn_layout_ = BnParamLayout::of(util_bn_.net);

  GnBlockConfig topo_cfg{kTopoNodeRaw, kTopoEdgeRaw, 8, kGlobalDim, kEmbed};
  GnBlockConfig dfg_cfg{kDfgNodeRaw, kDfgEdgeRaw, 8, kGlobalDim, kEmbed};
  topo_block_ = GnBlock::locate(params_, "gn_topo", GnBlockKind::Topology, topo_cfg);
  dfg_block_ = GnBlock::locate(params_, "gn_dfg", GnBlockKind::Dfg, dfg_cfg);
  lstm_ = LstmCell::locate(params_, "lstm", 2 * kEmbed, kLstmHidden);
  heads_ = PolicyValueHeads::locate(params_, "heads", kLstmHidden, action_count_);
}

}  // namespace symphony
