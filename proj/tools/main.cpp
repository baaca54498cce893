// symphony command line: gradcheck / simulate / train / evaluate /
// sweep-batch / oracle
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "symphony/harness.hpp"
#include "symphony/kern.hpp"

using namespace symphony;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  uint64_t seed = 1;
  bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "config file (JSON)");
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_flag("--serial", opts.serial, "deterministic serial mode (scalar kernels)");
}

void apply_serial(const CommonOpts& opts) {
  if (opts.serial) kern::set_backend(kern::Backend::Scalar);
}

void write_manifest(const CommonOpts& opts, const std::string& command,
                    const std::vector<std::string>& args, const std::string& hashed) {
  if (opts.out.empty()) return;
  write_file(opts.out + "/manifest.json",
             manifest_json(command, args, opts.seed,
                           std::to_string(fnv1a64(hashed)), opts.serial));
}

InstanceBundle family_instance(const std::string& family, uint64_t seed) {
  if (family == "tiny") return make_tiny_instance(seed);
  if (family == "train") return make_training_instance(seed);
  if (family == "wide") return make_wide_instance(seed);
  throw std::invalid_argument("unknown instance family '" + family + "'");
}

SymphonyAgent make_agent(const InstanceBundle& proto, uint64_t seed,
                         const TrainConfig& cfg, const std::string& checkpoint_path,
                         bool zero_params) {
  SymphonyAgent agent(proto.topology, proto.profiles, proto.counter_model, seed, cfg);
  if (!checkpoint_path.empty()) {
    agent.restore(read_file(checkpoint_path));
  } else if (zero_params) {
    // a uniform policy: deterministic and prefers real work under argmax
    for (size_t i = 0; i < agent.params().count(); ++i) {
      auto& t = agent.params().at(static_cast<int>(i));
      std::fill(t.value.begin(), t.value.end(), 0.0);
    }
  }
  return agent;
}

struct EvalJob {
  std::string scheduler = "random";
  size_t instances = 50;
  std::string family = "tiny";
  std::string checkpoint;
  size_t batch_size = 1;
};

std::vector<InstanceResult> run_eval(const EvalJob& job, const CommonOpts& opts,
                                     const EnvConfig& env_cfg) {
  std::vector<InstanceResult> results;
  for (size_t i = 0; i < job.instances; ++i) {
    const auto inst = family_instance(job.family, opts.seed + i);
    const auto oracle = oracle_schedule(inst.topology, inst.profiles, inst.workloads[0]);
    const auto oracle_run = run_schedule(inst, oracle.schedule);

    InstanceResult res;
    res.instance = i;
    res.oracle_makespan = oracle.makespan;
    res.oracle_records = oracle_run.records;

    if (job.scheduler == "oracle") {
      res.scheduler_makespan = oracle.makespan;
      res.scheduler_records = oracle_run.records;
      res.invocations = oracle.schedule.size();
    } else if (job.scheduler == "random") {
      Env env = make_env(inst, opts.seed + i, env_cfg);
      const auto trace = baseline_random(env, opts.seed * 7919 + i);
      res.scheduler_makespan = trace.makespan;
      res.scheduler_records = env.records();
      res.invocations = trace.invocations;
    } else if (job.scheduler == "sjf") {
      Env env = make_env(inst, opts.seed + i, env_cfg);
      const auto trace = baseline_sjf(env);
      res.scheduler_makespan = trace.makespan;
      res.scheduler_records = env.records();
      res.invocations = trace.invocations;
    } else if (job.scheduler == "symphony") {
      SymphonyAgent agent = make_agent(inst, opts.seed, TrainConfig{}, job.checkpoint,
                                       job.checkpoint.empty());
      Env env = make_env(inst, opts.seed + i, env_cfg);
      const auto trace =
          agent.run_episode(env, job.batch_size, /*sample=*/false, opts.seed * 31 + i);
      res.scheduler_makespan = trace.makespan;
      res.scheduler_records = env.records();
      res.invocations = trace.invocations;
    } else {
      throw std::invalid_argument("unknown scheduler '" + job.scheduler + "'");
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symphony: inductive-bias-driven RL scheduler laboratory"};
  app.require_subcommand(1);

  std::vector<std::string> raw_args(argv + 1, argv + argc);

  auto* gradcheck = app.add_subcommand("gradcheck", "sampling gradient vs exact oracle");
  CommonOpts gc_opts;
  std::string gc_suite = "small-bns";
  int gc_seeds = 10;
  add_common(gradcheck, gc_opts);
  gradcheck->add_option("--suite", gc_suite, "suite name or directory");
  gradcheck->add_option("--seeds", gc_seeds, "seed replicas to average");

  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive minimum-makespan search");
  CommonOpts or_opts;
  std::string or_instance;
  add_common(oracle_cmd, or_opts);
  oracle_cmd->add_option("--instance", or_instance, "instance bundle (JSON)")->required();

  auto* simulate = app.add_subcommand("simulate", "run one episode and dump the trace");
  CommonOpts sim_opts;
  std::string sim_instance, sim_scheduler = "random", sim_checkpoint;
  size_t sim_batch = 1;
  add_common(simulate, sim_opts);
  simulate->add_option("--instance", sim_instance, "instance bundle (JSON)")->required();
  simulate->add_option("--scheduler", sim_scheduler, "random | sjf | symphony");
  simulate->add_option("--checkpoint", sim_checkpoint, "agent checkpoint (symphony)");
  simulate->add_option("--batch-size", sim_batch, "task batching width");

  auto* train = app.add_subcommand("train", "train the agent on the benchmark family");
  CommonOpts tr_opts;
  add_common(train, tr_opts);

  auto* evaluate = app.add_subcommand("evaluate", "oracle-normalized evaluation report");
  CommonOpts ev_opts;
  EvalJob ev_job;
  add_common(evaluate, ev_opts);
  evaluate->add_option("--scheduler", ev_job.scheduler, "oracle | random | sjf | symphony");
  evaluate->add_option("--instances", ev_job.instances, "instance count");
  evaluate->add_option("--family", ev_job.family, "tiny | train | wide");
  evaluate->add_option("--checkpoint", ev_job.checkpoint, "agent checkpoint");
  evaluate->add_option("--batch-size", ev_job.batch_size, "task batching width");

  auto* sweep = app.add_subcommand("sweep-batch", "invocation counts across batch sizes");
  CommonOpts sw_opts;
  std::string sw_sizes = "1,2,4,8";
  std::string sw_family = "wide";
  size_t sw_instances = 5;
  std::string sw_checkpoint;
  add_common(sweep, sw_opts);
  sweep->add_option("--batch-sizes", sw_sizes, "comma-separated batch sizes");
  sweep->add_option("--family", sw_family, "instance family");
  sweep->add_option("--instances", sw_instances, "instance count");
  sweep->add_option("--checkpoint", sw_checkpoint, "agent checkpoint");

  try {
    app.parse(argc, argv);

    if (*gradcheck) {
      apply_serial(gc_opts);
      std::string dir = gc_suite;
      if (gc_suite == "small-bns") dir = "configs/suites/small_bns";
      const auto result = run_gradcheck_suite(dir, gc_seeds, gc_opts.seed);
      for (const auto& e : result.entries)
        std::printf("%-24s query %zu  score %.4f\n", e.net.c_str(), e.query, e.score);
      std::printf("max relative error: %.4f (tolerance 0.05)\n", result.worst);
      if (!gc_opts.out.empty()) {
        write_file(gc_opts.out + "/summary.json", result.summary_json());
        write_manifest(gc_opts, "gradcheck", raw_args, dir);
      }
      return result.pass() ? 0 : 2;
    }

    if (*oracle_cmd) {
      apply_serial(or_opts);
      const auto inst = load_instance_bundle(or_instance);
      const auto result = oracle_schedule(inst.topology, inst.profiles, inst.workloads[0]);
      std::printf("makespan %.6f\n", result.makespan);
      std::printf("explored %zu states, %zu actions\n", result.explored,
                  result.schedule.size());
      if (!or_opts.out.empty()) {
        json j;
        j["makespan"] = result.makespan;
        j["explored"] = result.explored;
        write_file(or_opts.out + "/summary.json", j.dump(2));
        write_manifest(or_opts, "oracle", raw_args, read_file(or_instance));
      }
      return 0;
    }

    if (*simulate) {
      apply_serial(sim_opts);
      const auto inst = load_instance_bundle(sim_instance);
      EnvConfig env_cfg;
      if (!sim_opts.config.empty())
        env_cfg = env_config_from_json_text(read_file(sim_opts.config));
      Env env = make_env(inst, sim_opts.seed, env_cfg);
      EpisodeTrace trace;
      if (sim_scheduler == "random") {
        trace = baseline_random(env, sim_opts.seed);
      } else if (sim_scheduler == "sjf") {
        trace = baseline_sjf(env);
      } else if (sim_scheduler == "symphony") {
        SymphonyAgent agent = make_agent(inst, sim_opts.seed, TrainConfig{},
                                         sim_checkpoint, sim_checkpoint.empty());
        trace = agent.run_episode(env, sim_batch, false, sim_opts.seed);
      } else {
        throw std::invalid_argument("unknown scheduler '" + sim_scheduler + "'");
      }
      std::printf("makespan %.6f over %zu steps (%zu invocations)\n", trace.makespan,
                  trace.steps.size(), trace.invocations);
      if (!sim_opts.out.empty()) {
        write_file(sim_opts.out + "/trace.jsonl", trace_to_jsonl(trace));
        write_manifest(sim_opts, "simulate", raw_args, read_file(sim_instance));
      }
      return 0;
    }

    if (*train) {
      apply_serial(tr_opts);
      LearnExperiment exp;
      std::string config_text = "{}";
      if (!tr_opts.config.empty()) {
        config_text = read_file(tr_opts.config);
        const json j = json::parse(config_text);
        exp.train_instances = j.value("instances", exp.train_instances);
        exp.heldout_instances = j.value("heldout", exp.heldout_instances);
        exp.iterations = j.value("iterations", exp.iterations);
        exp.instance_seed = j.value("instance_seed", exp.instance_seed);
        if (j.contains("train")) exp.train = train_config_from_json_text(j["train"].dump());
        if (j.contains("env")) exp.env = env_config_from_json_text(j["env"].dump());
      }
      const auto outcome = run_learning_experiment(tr_opts.seed, exp);
      std::printf("episodes %zu; held-out medians: symphony %.3f, sjf %.3f, random %.3f\n",
                  outcome.log.episodes, outcome.agent_median, outcome.sjf_median,
                  outcome.random_median);
      if (!tr_opts.out.empty()) {
        TrainLog log = outcome.log;
        if (tr_opts.serial)
          for (auto& row : log.rows) row.wall_ms = 0.0;
        write_file(tr_opts.out + "/train_log.csv", train_log_to_csv(log));
        write_file(tr_opts.out + "/checkpoint.json", outcome.checkpoint);
        json held;
        held["agent_median"] = outcome.agent_median;
        held["sjf_median"] = outcome.sjf_median;
        held["random_median"] = outcome.random_median;
        held["agent_norms"] = outcome.agent_norms;
        write_file(tr_opts.out + "/heldout.json", held.dump(2));
        write_manifest(tr_opts, "train", raw_args, config_text);
      }
      return 0;
    }

    if (*evaluate) {
      apply_serial(ev_opts);
      EnvConfig env_cfg;
      if (!ev_opts.config.empty())
        env_cfg = env_config_from_json_text(read_file(ev_opts.config));
      const auto results = run_eval(ev_job, ev_opts, env_cfg);
      const auto report = emit_report(results);
      std::printf("%zu instances: median ratio %.3f, p99 %.3f, median makespan %.3fx\n",
                  results.size(), report.median_ratio, report.p99_ratio,
                  report.median_normalized_makespan);
      if (!ev_opts.out.empty()) {
        write_file(ev_opts.out + "/report.csv", report.instance_csv());
        write_file(ev_opts.out + "/kernels.csv", report.kernel_csv());
        write_file(ev_opts.out + "/summary.json", report.summary_json());
        write_manifest(ev_opts, "evaluate", raw_args,
                       ev_job.scheduler + "/" + ev_job.family);
      }
      return 0;
    }

    if (*sweep) {
      apply_serial(sw_opts);
      std::vector<size_t> sizes;
      std::stringstream ss(sw_sizes);
      for (std::string tok; std::getline(ss, tok, ',');) sizes.push_back(std::stoul(tok));

      std::ostringstream csv;
      csv << "batch_size,mean_invocations,mean_makespan\n";
      for (size_t bs : sizes) {
        double inv = 0.0, mk = 0.0;
        for (size_t i = 0; i < sw_instances; ++i) {
          const auto inst = family_instance(sw_family, sw_opts.seed + i);
          SymphonyAgent agent = make_agent(inst, sw_opts.seed, TrainConfig{},
                                           sw_checkpoint, sw_checkpoint.empty());
          EnvConfig env_cfg;
          env_cfg.counter_samples = 4;
          Env env = make_env(inst, sw_opts.seed + i, env_cfg);
          const auto trace = agent.run_episode(env, bs, false, sw_opts.seed + i);
          inv += static_cast<double>(trace.invocations);
          mk += trace.makespan;
        }
        inv /= static_cast<double>(sw_instances);
        mk /= static_cast<double>(sw_instances);
        char line[128];
        std::snprintf(line, sizeof line, "%zu,%.3f,%.6f\n", bs, inv, mk);
        csv << line;
        std::printf("batch %zu: %.1f invocations, makespan %.3f\n", bs, inv, mk);
      }
      if (!sw_opts.out.empty()) {
        write_file(sw_opts.out + "/sweep.csv", csv.str());
        write_manifest(sw_opts, "sweep-batch", raw_args, sw_sizes);
      }
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["type"] = typeid(e).name();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
