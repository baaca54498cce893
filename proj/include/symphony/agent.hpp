#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "symphony/bngrad.hpp"
#include "symphony/neural.hpp"
#include "symphony/perfmodel.hpp"
#include "symphony/simenv.hpp"

namespace symphony {

struct BeliefState {
  std::vector<double> utilization;  // per resource, UtilizationBn order
  std::vector<bool> measured;       // true when pinned by direct evidence
};

struct TrainConfig {
  double learning_rate = 0.005;
  size_t n_steps = 20;   // n_s
  size_t n_envs = 2;     // n_e
  size_t unroll = 20;    // LSTM unroll length
  double discount = 0.99;
  size_t belief_sample_budget = 2000;  // likelihood weighting
  size_t grad_sample_budget = 2000;    // sampling-based BN gradient
  size_t batch_size = 128;             // task batching for evaluation episodes
  bool train_bn = true;
};

// posterior means of the utilization nodes by likelihood-weighted sampling
// over the measurement BN; `evidence_out` receives the discretized counter
// evidence used (what the BN gradient conditions on)
BeliefState estimate_belief(const UtilizationBn& model, const RawObservation& obs,
                            size_t sample_budget, Rng& rng,
                            Assignment* evidence_out = nullptr);

// n-step advantages with a stop-gradient bootstrap; `dones` truncates the
// return at episode boundaries (terminal states bootstrap zero)
std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       const std::vector<double>& values,
                                       const std::vector<bool>& dones,
                                       double bootstrap_value, double discount);

// the n-step actor-critic loss pair, normalized by 1/(n_e * n_s):
//   L^A = -(1/n_e n_s) sum log pi * A      (advantages held constant)
//   L^V =  (1/n_e n_s) sum A^2
std::pair<double, double> a2c_losses(const std::vector<double>& log_probs,
                                     const std::vector<double>& advantages,
                                     size_t n_envs, size_t n_steps);

struct TrainLogRow {
  size_t iteration = 0;
  double mean_normalized_makespan = 0.0;
  double loss_a = 0.0;
  double loss_v = 0.0;
  double invalid_rate = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  size_t episodes = 0;
};

class SymphonyAgent {
 public:
  SymphonyAgent(const FabricTopology& topology, const ProfileSet& profiles,
                const CounterModelConfig& counter_model, uint64_t seed,
                TrainConfig cfg = {});

  // belief through this agent's (trainable) measurement BN
  BeliefState belief(const RawObservation& obs, Rng& rng,
                     Assignment* evidence_out = nullptr) const;

  struct ActResult {
    Action action;
    size_t action_index = 0;
    std::vector<double> logits;
    double value = 0.0;
    LstmState lstm;
    bool no_valid_action = false;
  };
  // masked softmax sample (training) or argmax (evaluation); an all-false
  // mask degenerates to NoOp
  ActResult act(const Env& env, const BeliefState& belief, const LstmState& lstm,
                bool sample, Rng& rng) const;

  // one policy invocation emitting up to `batch_size` actions by greedy
  // sequential decoding with mask updates between picks; returns the number
  // of actions applied and the last step outcome
  size_t act_batch(Env& env, const BeliefState& belief, LstmState& lstm,
                   size_t batch_size, bool sample, Rng& rng,
                   EpisodeTrace* trace = nullptr,
                   StepOutcome* last_outcome = nullptr) const;

  // full episode with task batching; counts policy invocations
  EpisodeTrace run_episode(Env& env, size_t batch_size, bool sample,
                           uint64_t seed) const;

  // fresh environment (and its oracle makespan) per (env slot, episode)
  using EnvSupplier = std::function<std::pair<Env, double>(size_t, size_t)>;

  TrainLog train(const EnvSupplier& supplier, size_t iterations, uint64_t seed,
                 bool zero_wallclock = false);

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const UtilizationBn& util_model() const { return util_bn_; }
  const BnParamLayout& bn_layout() const { return bn_layout_; }
  const TrainConfig& config() const { return cfg_; }

  std::string checkpoint() const;          // params + BN logits
  void restore(const std::string& blob);

  size_t action_count() const { return action_count_; }

 private:
  struct StepRecord {
    BeliefState belief;
    Assignment evidence;
    std::vector<int> dfg_kernels;  // kernel index per dfg node
    std::vector<std::pair<int, int>> dfg_edges;
    std::vector<uint8_t> node_status;
    std::vector<uint8_t> proc_idle;
    std::vector<int8_t> fpga_ready;
    std::vector<bool> mask;
    size_t action_index = 0;
    double reward = 0.0;
    bool done = false;
    bool invalid = false;
  };
  struct EnvSlot {
    Env env;
    double oracle_makespan = 1.0;
    LstmState lstm;
    BeliefState belief;
    Assignment evidence;
    LstmState window_start_lstm;
  };

  struct PolicyOut {
    Tape::Id logits = -1;
    Tape::Id value = -1;
    Tape::Id h = -1, c = -1;
    std::vector<Tape::Id> resource_inputs;  // for d loss / d belief
  };
  PolicyOut forward_policy(Tape& tape, const StepRecord& rec, Tape::Id h,
                           Tape::Id c) const;
  void snapshot_env(const Env& env, StepRecord& rec) const;

  FabricTopology topology_;
  ProfileSet profiles_;
  TrainConfig cfg_;
  UtilizationBn util_bn_;
  BnParamLayout bn_layout_;
  ParameterSet params_;
  GnBlock topo_block_;
  GnBlock dfg_block_;
  LstmCell lstm_;
  PolicyValueHeads heads_;
  size_t action_count_ = 0;
  double max_base_runtime_ = 1.0;
};

}  // namespace symphony
