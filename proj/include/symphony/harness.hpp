#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symphony/agent.hpp"
#include "symphony/simenv.hpp"

namespace symphony {

struct EmptyResults : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// single-file instance: topology + profiles + counter model + workload(s)
struct InstanceBundle {
  FabricTopology topology;
  ProfileSet profiles;
  CounterModelConfig counter_model;
  std::vector<DataFlowGraph> workloads;
};

InstanceBundle load_instance_bundle(const std::string& path);
std::string instance_bundle_to_json(const InstanceBundle& b);
InstanceBundle instance_bundle_from_json(const std::string& text);

// Built-in generated instance families.
//   tiny:  3-5 kernels on 2-3 processors, used for oracle-dominance checks
//   train: 4-kernel DFGs on 2 CPUs + 1 GPU with co-location interference,
//          the scaled learning benchmark
//   wide:  16+ independent kernels on 8 CPUs, used for batching amortization
InstanceBundle make_tiny_instance(uint64_t seed);
InstanceBundle make_training_instance(uint64_t seed);
InstanceBundle make_wide_instance(uint64_t seed, size_t kernels = 24);

Env make_env(const InstanceBundle& bundle, uint64_t seed, EnvConfig cfg = {});

// replay a fixed action schedule (e.g. the oracle's) and collect records
struct ScheduleRun {
  double makespan = 0.0;
  std::vector<KernelRecord> records;
};
ScheduleRun run_schedule(const InstanceBundle& bundle, const std::vector<Action>& schedule,
                         EnvConfig cfg = {});

// ---- evaluation reports ----

struct InstanceResult {
  size_t instance = 0;
  double scheduler_makespan = 0.0;
  double oracle_makespan = 0.0;
  std::vector<KernelRecord> scheduler_records;
  std::vector<KernelRecord> oracle_records;
  size_t invocations = 0;
};

struct EvalReport {
  // one row per kernel execution: oracle-normalized runtime
  struct Row {
    size_t instance = 0;
    int node = -1;
    std::string kernel;
    double scheduler_runtime = 0.0;
    double oracle_runtime = 0.0;
    double ratio = 1.0;
  };
  std::vector<Row> rows;
  std::vector<double> degradation;  // per instance: 1 - sum(t_s)/sum(t_oracle)
  std::vector<double> normalized_makespan;
  double median_ratio = 0.0;
  double p99_ratio = 0.0;
  double median_normalized_makespan = 0.0;
  // share of instances with no loss / loss in (0, 20%] / loss above 20%
  double bucket_none = 0.0, bucket_mild = 0.0, bucket_severe = 0.0;

  std::string kernel_csv() const;    // one row per kernel execution
  std::string instance_csv() const;  // one row per workload instance
  std::string summary_json() const;
};

EvalReport emit_report(const std::vector<InstanceResult>& results);

// ---- gradient-estimator suite (the `gradcheck` subcommand) ----

struct GradCheckEntry {
  std::string net;
  size_t query = 0;
  double score = 0.0;  // max over coordinates of |err| / max(|oracle|, floor)
};

struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool pass(double tol = 0.05) const { return worst <= tol; }
  std::string summary_json() const;
};

// runs every net JSON in `dir` ({"network":..., "queries":[...]}), averaging
// the estimator over `seeds` seeds and scoring against the exact oracle
GradCheckResult run_gradcheck_suite(const std::string& dir, int seeds = 10,
                                    uint64_t seed0 = 1, double rel_tol = 0.05,
                                    double abs_floor = 1e-3);

// ---- config parsing ----

EnvConfig env_config_from_json_text(const std::string& text);
TrainConfig train_config_from_json_text(const std::string& text);

// ---- learning experiment (the scaled scheduling benchmark) ----

struct LearnExperiment {
  size_t train_instances = 20;
  size_t heldout_instances = 20;
  size_t iterations = 1500;
  uint64_t instance_seed = 1;
  TrainConfig train;
  EnvConfig env;
};

struct LearnOutcome {
  TrainLog log;
  std::vector<double> agent_norms, sjf_norms, random_norms;  // held-out, per instance
  double agent_median = 0.0, sjf_median = 0.0, random_median = 0.0;
  std::string checkpoint;  // trained parameters + BN logits
};

double median_of(std::vector<double> v);
LearnOutcome run_learning_experiment(uint64_t agent_seed, const LearnExperiment& exp);

// ---- trace / log output ----

std::string trace_to_jsonl(const EpisodeTrace& trace);
std::string train_log_to_csv(const TrainLog& log);

// ---- manifests ----

uint64_t fnv1a64(const std::string& data);
std::string manifest_json(const std::string& command, const std::vector<std::string>& args,
                          uint64_t seed, const std::string& config_hash, bool serial);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace symphony
