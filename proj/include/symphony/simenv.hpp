#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symphony/fabric.hpp"
#include "symphony/perfmodel.hpp"
#include "symphony/rng.hpp"

namespace symphony {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EpisodeDone : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RewardMode { MakespanDelta, PaperLiteral };

struct Action {
  enum class Kind { Execute, Reconfigure, NoOp };
  Kind kind = Kind::NoOp;
  int dfg_node = -1;   // Execute
  int processor = -1;  // Execute target or fpga context
  std::string kernel;  // Reconfigure payload

  static Action execute(int node, int proc) { return {Kind::Execute, node, proc, {}}; }
  static Action reconfigure(int proc, std::string kernel) {
    return {Kind::Reconfigure, -1, proc, std::move(kernel)};
  }
  static Action noop() { return {}; }
};

// Fixed grid over kernel ids and processors: execute entries, one
// reconfigure entry per (fpga context, kernel), and a trailing no-op.
struct ActionSpace {
  std::vector<std::string> kernel_ids;
  size_t processor_count = 0;
  std::vector<int> fpga_processors;

  size_t size() const {
    return kernel_ids.size() * processor_count +
           fpga_processors.size() * kernel_ids.size() + 1;
  }
  size_t execute_index(size_t kernel_idx, size_t proc) const {
    return kernel_idx * processor_count + proc;
  }
  size_t reconfigure_index(size_t fpga_pos, size_t kernel_idx) const {
    return kernel_ids.size() * processor_count + fpga_pos * kernel_ids.size() + kernel_idx;
  }
  size_t noop_index() const { return size() - 1; }
  int kernel_index(const std::string& k) const {
    for (size_t i = 0; i < kernel_ids.size(); ++i)
      if (kernel_ids[i] == k) return static_cast<int>(i);
    return -1;
  }
};

struct RawObservation {
  std::map<std::string, std::vector<double>> readings;  // counter -> N samples
};

struct StepInfo {
  double sim_time = 0.0;
  size_t completed = 0;
  bool invalid = false;
};

struct StepOutcome {
  RawObservation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EnvConfig {
  int counter_samples = 16;  // N readings per counter per observation
  double noise_sigma = 0.02;
  double reconfig_time = 0.5;
  RewardMode reward_mode = RewardMode::MakespanDelta;
  double invalid_penalty_scale = 10.0;  // times the max base runtime
  bool synthesize_observations = true;
  InterferenceModel interference;
};

enum class NodeStatus { Blocked, Ready, Running, Done };

struct KernelRecord {
  int dfg_node = -1;
  std::string kernel;
  int processor = -1;
  double start = 0.0;
  double finish = 0.0;
};

class Env {
 public:
  Env(FabricTopology topology, ProfileSet profiles, CounterModelConfig counter_model,
      std::vector<DataFlowGraph> workloads, uint64_t seed, EnvConfig cfg = {});

  StepOutcome reset();
  StepOutcome reset(uint64_t seed);
  StepOutcome step(const Action& action);

  bool done() const { return done_; }
  double sim_time() const { return clock_; }
  double makespan() const;
  size_t step_count() const { return steps_; }

  const ActionSpace& action_space() const { return space_; }
  std::vector<bool> valid_mask() const;
  Action decode(size_t action_index) const;
  bool is_valid(const Action& action) const;
  bool valid_execute(int node, int proc) const;
  bool valid_reconfigure(int proc, const std::string& kernel) const;

  const FabricTopology& topology() const { return topology_; }
  const ProfileSet& profiles() const { return profiles_; }
  const DataFlowGraph& combined_dfg() const { return dfg_; }
  const CounterModelConfig& counter_model() const { return counter_model_; }

  NodeStatus node_status(int node) const { return status_.at(node); }
  bool processor_idle(int proc) const { return busy_until_[proc] < 0.0; }
  // configured kernel of an fpga context ("" when blank)
  const std::string& fpga_config(int proc) const { return fpga_config_.at(proc); }
  std::map<std::string, double> current_true_utilizations() const;

  const std::vector<KernelRecord>& records() const { return records_; }
  const EnvConfig& config() const { return cfg_; }
  double invalid_penalty() const { return invalid_penalty_; }

 private:
  friend struct OracleSearch;

  void validate_config();
  void complete_next_event();
  void advance_to_decision_point();
  bool any_idle_processor() const;
  bool anything_running() const;
  std::vector<Placement> running_placements() const;
  RawObservation synthesize_observation();
  double reward_for(double dt) const;
  StepOutcome make_outcome(double reward, bool invalid);

  FabricTopology topology_;
  ProfileSet profiles_;
  CounterModelConfig counter_model_;
  std::vector<DataFlowGraph> workloads_;
  DataFlowGraph dfg_;  // disjoint union of the workloads
  EnvConfig cfg_;
  uint64_t seed_ = 0;
  ActionSpace space_;
  double invalid_penalty_ = 0.0;
  // owner relation: counter -> primary relation index (observation synthesis)
  std::map<std::string, size_t> counter_owner_;

  // episode state
  Rng rng_{0};
  double clock_ = 0.0;
  bool done_ = false;
  size_t steps_ = 0;
  std::vector<NodeStatus> status_;
  std::vector<double> busy_until_;          // per processor, < 0 when idle
  std::vector<int> running_node_;           // dfg node or -1 (reconfig/idle)
  std::vector<std::string> reconfig_goal_;  // nonempty while reconfiguring
  std::vector<std::string> fpga_config_;
  std::vector<double> running_T_;           // effective runtime of what's running
  std::vector<KernelRecord> records_;
  size_t completed_ = 0;
};

// exhaustive minimum-makespan search under identical environment dynamics;
// ties broken by the canonical action order (lexicographic)
struct OracleResult {
  double makespan = 0.0;
  std::vector<Action> schedule;
  size_t explored = 0;
};

OracleResult oracle_schedule(const FabricTopology& topology, const ProfileSet& profiles,
                             const DataFlowGraph& dfg, const EnvConfig& cfg = {},
                             size_t node_cap = 10000000);

struct TraceStep {
  size_t t = 0;
  std::string action;
  double reward = 0.0;
  double sim_time = 0.0;
  bool invalid = false;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  double makespan = 0.0;
  size_t invocations = 0;  // policy/scheduler invocations
};

std::string action_to_string(const Action& a, const Env& env);

// uniform choice among valid actions (no-op only when forced)
EpisodeTrace baseline_random(Env& env, uint64_t seed);
// shortest job first: the ready kernel with the smallest base runtime, on its
// fastest idle processor
EpisodeTrace baseline_sjf(Env& env);

}  // namespace symphony
