#include "symphony/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace symphony {

// ---- construction ----

Env::Env(FabricTopology topology, ProfileSet profiles, CounterModelConfig counter_model,
         std::vector<DataFlowGraph> workloads, uint64_t seed, EnvConfig cfg)
    : topology_(std::move(topology)),
      profiles_(std::move(profiles)),
      counter_model_(std::move(counter_model)),
      workloads_(std::move(workloads)),
      cfg_(cfg),
      seed_(seed) {
  if (workloads_.empty()) throw ConfigError("no workloads");

  // disjoint union of the workloads
  int base = 0;
  for (const auto& w : workloads_) {
    if (!w.is_dag()) throw ConfigError("workload graph has a cycle");
    for (size_t i = 0; i < w.nodes.size(); ++i) {
      const auto& n = w.nodes[i];
      if (n.id != static_cast<int>(i))
        throw ConfigError("workload node ids must be dense 0..n-1");
      if (profiles_.index(n.kernel) < 0)
        throw ConfigError("workload kernel '" + n.kernel + "' has no profile");
      bool runnable = false;
      for (const auto& proc : topology_.processors)
        if (profiles_.at(n.kernel).available_on(proc.kind)) runnable = true;
      if (!runnable)
        throw ConfigError("kernel '" + n.kernel + "' has no implementation on this fabric");
      dfg_.nodes.push_back({base + n.id, n.kernel, n.data_size});
    }
    for (const auto& [s, d] : w.edges) dfg_.edges.push_back({base + s, base + d});
    base += static_cast<int>(w.nodes.size());
  }

  for (const auto& k : profiles_.kernels) space_.kernel_ids.push_back(k.kernel);
  space_.processor_count = topology_.processors.size();
  for (size_t p = 0; p < topology_.processors.size(); ++p)
    if (topology_.processors[p].kind == ProcKind::FpgaContext)
      space_.fpga_processors.push_back(static_cast<int>(p));

  double max_rt = 0.0;
  for (const auto& k : profiles_.kernels)
    for (const auto& [kind, rt] : k.base_runtime) max_rt = std::max(max_rt, rt);
  invalid_penalty_ = cfg_.invalid_penalty_scale * max_rt;

  validate_config();
  reset();
}

void Env::validate_config() {
  if (!cfg_.synthesize_observations) return;
  // each counter must be produced by exactly one primary relation
  std::map<std::string, size_t> owner;
  for (size_t r = 0; r < counter_model_.relations.size(); ++r) {
    const auto& rel = counter_model_.relations[r];
    bool fresh = true;
    for (const auto& in : rel.inputs)
      if (owner.count(in)) fresh = false;
    if (fresh)
      for (const auto& in : rel.inputs) owner[in] = r;
  }
  for (const auto& c : counter_model_.counters)
    if (!owner.count(c.name))
      throw ConfigError("counter '" + c.name + "' has no synthesizing relation");
  counter_owner_ = std::move(owner);
}

StepOutcome Env::reset() { return reset(seed_); }

StepOutcome Env::reset(uint64_t seed) {
  seed_ = seed;
  rng_ = Rng(seed ^ 0x9e3779b97f4a7c15ULL);
  clock_ = 0.0;
  done_ = false;
  steps_ = 0;
  completed_ = 0;
  records_.clear();
  status_.assign(dfg_.nodes.size(), NodeStatus::Blocked);
  const auto preds = dfg_.predecessors();
  for (size_t n = 0; n < dfg_.nodes.size(); ++n)
    if (preds[n].empty()) status_[n] = NodeStatus::Ready;
  busy_until_.assign(topology_.processors.size(), -1.0);
  running_node_.assign(topology_.processors.size(), -1);
  reconfig_goal_.assign(topology_.processors.size(), {});
  fpga_config_.assign(topology_.processors.size(), {});
  running_T_.assign(topology_.processors.size(), 0.0);
  return make_outcome(0.0, false);
}

// ---- state helpers ----

bool Env::any_idle_processor() const {
  for (double b : busy_until_)
    if (b < 0.0) return true;
  return false;
}

bool Env::anything_running() const {
  for (double b : busy_until_)
    if (b >= 0.0) return true;
  return false;
}

std::vector<Placement> Env::running_placements() const {
  std::vector<Placement> out;
  for (size_t p = 0; p < busy_until_.size(); ++p)
    if (busy_until_[p] >= 0.0 && running_node_[p] >= 0)
      out.push_back({running_node_[p], dfg_.nodes[running_node_[p]].kernel,
                     static_cast<int>(p)});
  return out;
}

bool Env::valid_execute(int node, int proc) const {
  if (node < 0 || node >= static_cast<int>(dfg_.nodes.size())) return false;
  if (proc < 0 || proc >= static_cast<int>(topology_.processors.size())) return false;
  if (status_[node] != NodeStatus::Ready) return false;
  if (busy_until_[proc] >= 0.0) return false;
  const auto& p = topology_.processors[proc];
  const auto& prof = profiles_.at(dfg_.nodes[node].kernel);
  if (!prof.available_on(p.kind)) return false;
  if (p.kind == ProcKind::FpgaContext && fpga_config_[proc] != dfg_.nodes[node].kernel)
    return false;  // context must be configured for this kernel first
  return true;
}

bool Env::valid_reconfigure(int proc, const std::string& kernel) const {
  if (proc < 0 || proc >= static_cast<int>(topology_.processors.size())) return false;
  const auto& p = topology_.processors[proc];
  if (p.kind != ProcKind::FpgaContext) return false;
  if (busy_until_[proc] >= 0.0) return false;
  const int k = profiles_.index(kernel);
  if (k < 0) return false;
  return profiles_.kernels[k].available_on(ProcKind::FpgaContext);
}

bool Env::is_valid(const Action& a) const {
  switch (a.kind) {
    case Action::Kind::Execute:
      return valid_execute(a.dfg_node, a.processor);
    case Action::Kind::Reconfigure:
      return valid_reconfigure(a.processor, a.kernel);
    case Action::Kind::NoOp:
      return anything_running();  // waiting needs something to wait for
  }
  return false;
}

std::vector<bool> Env::valid_mask() const {
  std::vector<bool> mask(space_.size(), false);
  for (size_t k = 0; k < space_.kernel_ids.size(); ++k) {
    // lowest ready instance of this kernel id, if any
    int node = -1;
    for (const auto& n : dfg_.nodes)
      if (n.kernel == space_.kernel_ids[k] && status_[n.id] == NodeStatus::Ready) {
        node = n.id;
        break;
      }
    if (node < 0) continue;
    for (size_t p = 0; p < space_.processor_count; ++p)
      if (valid_execute(node, static_cast<int>(p))) mask[space_.execute_index(k, p)] = true;
  }
  for (size_t f = 0; f < space_.fpga_processors.size(); ++f)
    for (size_t k = 0; k < space_.kernel_ids.size(); ++k)
      if (valid_reconfigure(space_.fpga_processors[f], space_.kernel_ids[k]))
        mask[space_.reconfigure_index(f, k)] = true;
  mask[space_.noop_index()] = anything_running();
  return mask;
}

Action Env::decode(size_t index) const {
  const size_t K = space_.kernel_ids.size();
  const size_t P = space_.processor_count;
  if (index < K * P) {
    const size_t k = index / P;
    const size_t p = index % P;
    int node = -1;
    for (const auto& n : dfg_.nodes)
      if (n.kernel == space_.kernel_ids[k] && status_[n.id] == NodeStatus::Ready) {
        node = n.id;
        break;
      }
    return Action::execute(node, static_cast<int>(p));
  }
  if (index < K * P + space_.fpga_processors.size() * K) {
    const size_t rest = index - K * P;
    const size_t f = rest / K;
    const size_t k = rest % K;
    return Action::reconfigure(space_.fpga_processors[f], space_.kernel_ids[k]);
  }
  return Action::noop();
}

// ---- dynamics ----

void Env::complete_next_event() {
  double t = 1e300;
  for (double b : busy_until_)
    if (b >= 0.0) t = std::min(t, b);
  clock_ = t;
  const auto preds = dfg_.predecessors();
  for (size_t p = 0; p < busy_until_.size(); ++p) {
    if (busy_until_[p] < 0.0 || busy_until_[p] > clock_) continue;
    if (running_node_[p] >= 0) {
      const int node = running_node_[p];
      status_[node] = NodeStatus::Done;
      ++completed_;
      records_.push_back({node, dfg_.nodes[node].kernel, static_cast<int>(p),
                          busy_until_[p] - running_T_[p], busy_until_[p]});
      // nodes whose dependencies just completed become ready
      for (size_t n = 0; n < dfg_.nodes.size(); ++n) {
        if (status_[n] != NodeStatus::Blocked) continue;
        bool all_done = true;
        for (int q : preds[n])
          if (status_[q] != NodeStatus::Done) all_done = false;
        if (all_done) status_[n] = NodeStatus::Ready;
      }
    } else if (!reconfig_goal_[p].empty()) {
      fpga_config_[p] = reconfig_goal_[p];
      reconfig_goal_[p].clear();
    }
    busy_until_[p] = -1.0;
    running_node_[p] = -1;
    running_T_[p] = 0.0;
  }
}

void Env::advance_to_decision_point() {
  for (;;) {
    bool all_dispatched = true;
    for (auto s : status_)
      if (s == NodeStatus::Blocked || s == NodeStatus::Ready) all_dispatched = false;
    if (all_dispatched) {
      // nothing left to schedule: fast-forward to the end of the episode
      while (anything_running()) complete_next_event();
      done_ = true;
      return;
    }
    if (any_idle_processor()) return;  // scheduler invocation point
    complete_next_event();
  }
}

double Env::reward_for(double dt) const {
  if (cfg_.reward_mode == RewardMode::MakespanDelta) return -dt;
  // paper-literal: minus the sum of inverse wall-clock times of the actions
  // executing now (reconfigurations count as kernels)
  double acc = 0.0;
  for (size_t p = 0; p < busy_until_.size(); ++p)
    if (busy_until_[p] >= 0.0 && running_T_[p] > 0.0) acc += 1.0 / running_T_[p];
  return -acc;
}

StepOutcome Env::make_outcome(double reward, bool invalid) {
  StepOutcome out;
  out.reward = reward;
  out.done = done_;
  out.info = {clock_, completed_, invalid};
  if (cfg_.synthesize_observations) out.observation = synthesize_observation();
  return out;
}

StepOutcome Env::step(const Action& action) {
  if (done_) throw EpisodeDone("episode is over");
  ++steps_;
  const double before = clock_;

  if (!is_valid(action)) {
    // incorrect decision: state unchanged, penalty reward
    return make_outcome(-invalid_penalty_, true);
  }

  switch (action.kind) {
    case Action::Kind::Execute: {
      const Placement pl{action.dfg_node, dfg_.nodes[action.dfg_node].kernel,
                         action.processor};
      const double rt =
          effective_runtime(topology_, profiles_, pl, running_placements(),
                            cfg_.interference);
      status_[action.dfg_node] = NodeStatus::Running;
      busy_until_[action.processor] = clock_ + rt;
      running_node_[action.processor] = action.dfg_node;
      running_T_[action.processor] = rt;
      break;
    }
    case Action::Kind::Reconfigure: {
      busy_until_[action.processor] = clock_ + cfg_.reconfig_time;
      running_node_[action.processor] = -1;
      reconfig_goal_[action.processor] = action.kernel;
      running_T_[action.processor] = cfg_.reconfig_time;
      fpga_config_[action.processor].clear();  // context is blank while loading
      break;
    }
    case Action::Kind::NoOp:
      complete_next_event();
      break;
  }
  advance_to_decision_point();
  return make_outcome(reward_for(clock_ - before), false);
}

double Env::makespan() const {
  double m = 0.0;
  for (const auto& r : records_) m = std::max(m, r.finish);
  return m;
}

std::map<std::string, double> Env::current_true_utilizations() const {
  return true_utilizations(topology_, profiles_, running_placements());
}

// ---- observation synthesis ----

RawObservation Env::synthesize_observation() {
  RawObservation obs;
  const auto truth = current_true_utilizations();

  // true counter values from the primary relations' generative inverses
  std::map<std::string, double> counter_truth;
  for (const auto& [counter, rel_idx] : counter_owner_) {
    const auto& rel = counter_model_.relations[rel_idx];
    auto it = truth.find(rel.output);
    const double u = it == truth.end() ? 0.0 : it->second;
    const size_t pos =
        std::find(rel.inputs.begin(), rel.inputs.end(), counter) - rel.inputs.begin();
    double value = 0.0;
    switch (rel.form) {
      case UtilizationRelation::Form::Identity:
        value = u;
        break;
      case UtilizationRelation::Form::Ratio: {
        const double den = 0.5 + 0.4 * u;
        value = pos == 0 ? u * den : den;
        break;
      }
      case UtilizationRelation::Form::Threshold: {
        const double act = 0.5 + 0.4 * u;
        value = pos == 0 ? u * rel.theta * act : act;
        break;
      }
      case UtilizationRelation::Form::Min:
        value = pos == 0 ? u : std::min(1.0, u + 0.2);
        break;
      case UtilizationRelation::Form::Product:
        value = std::sqrt(u);
        break;
    }
    counter_truth[counter] = value;
  }

  for (const auto& c : counter_model_.counters) {
    auto& readings = obs.readings[c.name];
    readings.resize(cfg_.counter_samples);
    const double v = counter_truth.at(c.name);
    for (auto& r : readings) {
      r = v + (cfg_.noise_sigma > 0.0 ? cfg_.noise_sigma * rng_.normal() : 0.0);
    }
  }
  return obs;
}

// ---- oracle ----

namespace {

// static per-node lower bound: cheapest runtime of the node plus the longest
// chain of cheapest runtimes below it
std::vector<double> tail_paths(const ProfileSet& profiles, const DataFlowGraph& dfg) {
  std::vector<double> cheapest(dfg.nodes.size(), 0.0);
  for (const auto& n : dfg.nodes) {
    double best = 1e300;
    for (const auto& [kind, rt] : profiles.at(n.kernel).base_runtime)
      best = std::min(best, rt);
    cheapest[n.id] = best;
  }
  std::vector<std::vector<int>> succ(dfg.nodes.size());
  for (const auto& [s, d] : dfg.edges) succ[s].push_back(d);
  std::vector<double> tail(dfg.nodes.size(), -1.0);
  std::function<double(int)> rec = [&](int v) -> double {
    if (tail[v] >= 0.0) return tail[v];
    double below = 0.0;
    for (int c : succ[v]) below = std::max(below, rec(c));
    return tail[v] = cheapest[v] + below;
  };
  for (const auto& n : dfg.nodes) rec(n.id);
  return tail;
}

}  // namespace

struct OracleSearch {
  const std::vector<double>& tails;
  size_t cap;
  size_t explored = 0;
  double best = 1e300;
  std::vector<Action> best_schedule;
  std::vector<Action> current;

  double lower_bound(const Env& env) const {
    double lb = 0.0;
    for (size_t n = 0; n < env.dfg_.nodes.size(); ++n) {
      const auto s = env.status_[n];
      if (s == NodeStatus::Done) continue;
      if (s == NodeStatus::Running) {
        // time left on this node plus the cheapest chain strictly below it
        for (size_t p = 0; p < env.busy_until_.size(); ++p)
          if (env.running_node_[p] == static_cast<int>(n))
            lb = std::max(lb, (env.busy_until_[p] - env.clock_) + tails[n] -
                                  cheapest_runtime(env, n));
      } else {
        lb = std::max(lb, tails[n]);
      }
    }
    return lb;
  }

  double cheapest_runtime(const Env& env, size_t n) const {
    double best_rt = 1e300;
    for (const auto& [kind, rt] :
         env.profiles_.at(env.dfg_.nodes[n].kernel).base_runtime)
      best_rt = std::min(best_rt, rt);
    return best_rt;
  }

  void explore(const Env& env) {
    if (explored > cap) throw TooLarge("oracle search exceeded the node cap");
    if (env.done()) {
      const double m = env.makespan();
      if (m < best - 1e-12) {
        best = m;
        best_schedule = current;
      }
      return;
    }
    // canonical branch order: executes by (node, processor), then useful
    // reconfigurations by (processor, kernel), then waiting
    std::vector<Action> branches;
    for (size_t n = 0; n < env.dfg_.nodes.size(); ++n)
      for (size_t p = 0; p < env.topology_.processors.size(); ++p)
        if (env.valid_execute(static_cast<int>(n), static_cast<int>(p)))
          branches.push_back(Action::execute(static_cast<int>(n), static_cast<int>(p)));
    for (int f : env.space_.fpga_processors) {
      if (env.busy_until_[f] >= 0.0) continue;
      for (const auto& k : env.space_.kernel_ids) {
        if (!env.valid_reconfigure(f, k) || env.fpga_config_[f] == k) continue;
        // only reconfigure toward kernels that still have unstarted nodes
        bool useful = false;
        for (const auto& n : env.dfg_.nodes)
          if (n.kernel == k && (env.status_[n.id] == NodeStatus::Ready ||
                                env.status_[n.id] == NodeStatus::Blocked))
            useful = true;
        if (useful) branches.push_back(Action::reconfigure(f, k));
      }
    }
    if (env.anything_running()) branches.push_back(Action::noop());

    for (const auto& a : branches) {
      Env child = env;
      ++explored;
      child.step(a);
      if (child.sim_time() + lower_bound(child) >= best - 1e-12) continue;
      current.push_back(a);
      explore(child);
      current.pop_back();
    }
  }
};

OracleResult oracle_schedule(const FabricTopology& topology, const ProfileSet& profiles,
                             const DataFlowGraph& dfg, const EnvConfig& cfg,
                             size_t node_cap) {
  EnvConfig quiet = cfg;
  quiet.synthesize_observations = false;
  Env env(topology, profiles, CounterModelConfig{}, {dfg}, 0, quiet);

  const auto tails = tail_paths(profiles, dfg);
  OracleSearch search{tails, node_cap, 0, 1e300, {}, {}};
  search.explore(env);
  if (search.best >= 1e300) throw TooLarge("oracle found no complete schedule");
  return {search.best, search.best_schedule, search.explored};
}

// ---- baselines ----

std::string action_to_string(const Action& a, const Env& env) {
  std::ostringstream os;
  switch (a.kind) {
    case Action::Kind::Execute:
      os << "execute:" << a.dfg_node << "@"
         << (a.processor >= 0 ? env.topology().processors[a.processor].name : "?");
      break;
    case Action::Kind::Reconfigure:
      os << "reconfigure:" << env.topology().processors[a.processor].name << "<-"
         << a.kernel;
      break;
    case Action::Kind::NoOp:
      os << "noop";
      break;
  }
  return os.str();
}

namespace {

void record_step(EpisodeTrace& trace, const Env& env, const Action& a,
                 const StepOutcome& out) {
  trace.steps.push_back({trace.steps.size(), action_to_string(a, env), out.reward,
                         out.info.sim_time, out.info.invalid});
}

}  // namespace

EpisodeTrace baseline_random(Env& env, uint64_t seed) {
  Rng rng(seed);
  EpisodeTrace trace;
  while (!env.done()) {
    const auto mask = env.valid_mask();
    std::vector<size_t> valid;
    for (size_t i = 0; i + 1 < mask.size(); ++i)
      if (mask[i]) valid.push_back(i);  // prefer real work over waiting
    Action a = Action::noop();
    if (!valid.empty())
      a = env.decode(valid[rng.uniform_int(static_cast<uint32_t>(valid.size()))]);
    ++trace.invocations;
    const auto out = env.step(a);
    record_step(trace, env, a, out);
  }
  trace.makespan = env.makespan();
  return trace;
}

EpisodeTrace baseline_sjf(Env& env) {
  EpisodeTrace trace;
  while (!env.done()) {
    // smallest base runtime among ready kernels, each on its fastest idle
    // processor
    Action pick = Action::noop();
    double best_rt = 1e300;
    for (const auto& n : env.combined_dfg().nodes) {
      if (env.node_status(n.id) != NodeStatus::Ready) continue;
      const auto& prof = env.profiles().at(n.kernel);
      for (size_t p = 0; p < env.topology().processors.size(); ++p) {
        if (!env.valid_execute(n.id, static_cast<int>(p))) continue;
        const double rt = prof.base_runtime.at(env.topology().processors[p].kind);
        if (rt < best_rt - 1e-12) {
          best_rt = rt;
          pick = Action::execute(n.id, static_cast<int>(p));
        }
      }
    }
    if (pick.kind == Action::Kind::NoOp && !env.is_valid(pick)) {
      // nothing running and nothing placeable: an fpga-only kernel is stuck
      // behind a blank context, so configure the cheapest one
      double best = 1e300;
      for (const auto& n : env.combined_dfg().nodes) {
        if (env.node_status(n.id) != NodeStatus::Ready) continue;
        const auto& prof = env.profiles().at(n.kernel);
        if (!prof.available_on(ProcKind::FpgaContext)) continue;
        for (int f : env.action_space().fpga_processors)
          if (env.valid_reconfigure(f, n.kernel) &&
              prof.base_runtime.at(ProcKind::FpgaContext) < best) {
            best = prof.base_runtime.at(ProcKind::FpgaContext);
            pick = Action::reconfigure(f, n.kernel);
          }
      }
    }
    ++trace.invocations;
    const auto out = env.step(pick);
    record_step(trace, env, pick, out);
  }
  trace.makespan = env.makespan();
  return trace;
}

}  // namespace symphony
