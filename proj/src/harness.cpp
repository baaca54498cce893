#include "symphony/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "symphony/bayesnet_io.hpp"

namespace symphony {

using nlohmann::json;

// ---- files ----

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- instance bundles ----

InstanceBundle instance_bundle_from_json(const std::string& text) {
  const json j = json::parse(text);
  InstanceBundle b;
  b.topology = load_topology_json(j.at("topology").dump());
  b.profiles = load_profiles_json(j.at("profiles").dump());
  if (j.contains("counter_model"))
    b.counter_model = load_counter_model_json(j["counter_model"].dump());
  if (j.contains("workloads")) {
    for (const auto& w : j["workloads"]) b.workloads.push_back(load_dfg_json(w.dump()));
  } else {
    b.workloads.push_back(load_dfg_json(j.at("workload").dump()));
  }
  return b;
}

InstanceBundle load_instance_bundle(const std::string& path) {
  return instance_bundle_from_json(read_file(path));
}

namespace {

json topology_to_json(const FabricTopology& t) {
  json j;
  j["resources"] = json::array();
  for (const auto& r : t.resources)
    j["resources"].push_back({{"name", r.name}, {"class", r.klass}});
  j["memories"] = t.memories;
  j["links"] = t.links;
  j["processors"] = json::array();
  for (const auto& p : t.processors) {
    json e;
    e["name"] = p.name;
    e["kind"] = to_string(p.kind);
    e["socket"] = p.socket;
    if (p.smt_group >= 0) e["smt_group"] = p.smt_group;
    e["path"] = json::array();
    for (int r : p.path) e["path"].push_back(t.resources[r].name);
    j["processors"].push_back(std::move(e));
  }
  j["edges"] = json::array();
  for (const auto& [a, b] : t.edges) j["edges"].push_back({a, b});
  return j;
}

json profiles_to_json(const ProfileSet& ps) {
  json j;
  j["kernels"] = json::array();
  for (const auto& k : ps.kernels) {
    json e;
    e["name"] = k.kernel;
    for (const auto& [kind, rt] : k.base_runtime) e["runtimes"][to_string(kind)] = rt;
    for (const auto& [kind, dm] : k.demands)
      for (const auto& [klass, f] : dm) e["demands"][to_string(kind)][klass] = f;
    j["kernels"].push_back(std::move(e));
  }
  return j;
}

json counter_model_to_json(const CounterModelConfig& cm) {
  json j;
  j["counters"] = json::array();
  for (const auto& c : cm.counters) {
    const char* cat = c.category == CounterCategory::OnCore
                          ? "on-core"
                          : (c.category == CounterCategory::Uncore ? "uncore" : "os-driver");
    j["counters"].push_back({{"name", c.name}, {"category", cat}});
  }
  j["relations"] = json::array();
  for (const auto& r : cm.relations) {
    json e;
    e["output"] = r.output;
    switch (r.form) {
      case UtilizationRelation::Form::Identity: e["form"] = "identity"; break;
      case UtilizationRelation::Form::Ratio: e["form"] = "ratio"; break;
      case UtilizationRelation::Form::Threshold: e["form"] = "threshold"; break;
      case UtilizationRelation::Form::Min: e["form"] = "min"; break;
      case UtilizationRelation::Form::Product: e["form"] = "product"; break;
    }
    e["inputs"] = r.inputs;
    if (r.form == UtilizationRelation::Form::Threshold) {
      e["theta"] = r.theta;
      e["theta_trainable"] = r.theta_trainable;
    }
    j["relations"].push_back(std::move(e));
  }
  return j;
}

}  // namespace

std::string instance_bundle_to_json(const InstanceBundle& b) {
  json j;
  j["topology"] = topology_to_json(b.topology);
  j["profiles"] = profiles_to_json(b.profiles);
  j["counter_model"] = counter_model_to_json(b.counter_model);
  j["workloads"] = json::array();
  for (const auto& w : b.workloads) j["workloads"].push_back(json::parse(dfg_to_json(w)));
  return j.dump(2);
}

// ---- built-in instance families ----

namespace {

CounterModelConfig identity_counter_model(const std::vector<std::string>& resources) {
  CounterModelConfig cm;
  for (const auto& r : resources) {
    cm.counters.push_back({"pc_" + r, CounterCategory::Uncore});
    UtilizationRelation rel;
    rel.output = r;
    rel.form = UtilizationRelation::Form::Identity;
    rel.inputs = {"pc_" + r};
    cm.relations.push_back(std::move(rel));
  }
  return cm;
}

FabricTopology two_cpu_one_gpu_topology() {
  FabricTopology t;
  t.resources = {{"smt0", "core"}, {"smt1", "core"}, {"mem_bw", "mem_bw"},
                 {"pcie_bw", "pcie_bw"}};
  t.memories = {"mem0"};
  t.links = {"pcie0"};
  t.processors = {
      {"cpu0", ProcKind::CpuThread, 0, 0, {0, 2}},
      {"cpu1", ProcKind::CpuThread, 0, 1, {1, 2}},
      {"gpu0", ProcKind::Gpu, 0, -1, {3, 2}},
  };
  t.edges = {{"cpu0", "mem0"}, {"cpu1", "mem0"}, {"gpu0", "pcie0"}, {"pcie0", "mem0"}};
  return t;
}

}  // namespace

InstanceBundle make_tiny_instance(uint64_t seed) {
  Rng rng(seed);
  InstanceBundle b;
  const size_t n_proc = 2 + rng.uniform_int(2);  // 2..3
  FabricTopology t;
  t.resources = {{"mem_bw", "mem_bw"}};
  t.memories = {"mem0"};
  for (size_t p = 0; p < n_proc; ++p) {
    const bool gpu = p == 2;  // third processor, when present, is a GPU
    Processor proc;
    proc.name = (gpu ? "gpu" : "cpu") + std::to_string(p);
    proc.kind = gpu ? ProcKind::Gpu : ProcKind::CpuThread;
    proc.socket = 0;
    proc.smt_group = gpu ? -1 : static_cast<int>(p);
    proc.path = {0};
    t.processors.push_back(proc);
    t.edges.push_back({proc.name, "mem0"});
  }
  b.topology = std::move(t);

  const size_t n_kernels = 3 + rng.uniform_int(3);  // 3..5
  for (size_t k = 0; k < n_kernels; ++k) {
    KernelProfile prof;
    prof.kernel = "k" + std::to_string(k);
    const double cpu_rt = 0.5 + 3.5 * rng.next_double();
    prof.base_runtime[ProcKind::CpuThread] = cpu_rt;
    if (rng.next_double() < 0.6)
      prof.base_runtime[ProcKind::Gpu] = cpu_rt * (0.2 + 1.3 * rng.next_double());
    prof.demands[ProcKind::CpuThread]["mem_bw"] = 0.2 + 0.6 * rng.next_double();
    if (prof.base_runtime.count(ProcKind::Gpu))
      prof.demands[ProcKind::Gpu]["mem_bw"] = 0.1 + 0.4 * rng.next_double();
    b.profiles.kernels.push_back(std::move(prof));
  }

  DataFlowGraph dfg;
  for (size_t k = 0; k < n_kernels; ++k) {
    dfg.nodes.push_back({static_cast<int>(k), "k" + std::to_string(k), 1.0});
    for (size_t p = 0; p < k; ++p)
      if (rng.next_double() < 0.35)
        dfg.edges.push_back({static_cast<int>(p), static_cast<int>(k)});
  }
  b.workloads.push_back(std::move(dfg));
  b.counter_model = identity_counter_model(b.topology.resource_names());
  return b;
}

InstanceBundle make_training_instance(uint64_t seed) {
  Rng rng(seed);
  InstanceBundle b;
  b.topology = two_cpu_one_gpu_topology();

  // four kernel classes; the mix is chosen so that greedy shortest-job-first
  // co-locates the bandwidth hogs and gives the accelerator to the wrong job
  auto make_kernel = [&](const std::string& name, int klass) {
    KernelProfile p;
    p.kernel = name;
    switch (klass) {
      case 0:  // crunch: an order of magnitude faster on the GPU
        p.base_runtime[ProcKind::CpuThread] = 3.6 + 0.8 * rng.next_double();
        p.base_runtime[ProcKind::Gpu] = 0.35 + 0.15 * rng.next_double();
        p.demands[ProcKind::CpuThread] = {{"core", 0.6}, {"mem_bw", 0.25}};
        p.demands[ProcKind::Gpu] = {{"pcie_bw", 0.5}};
        break;
      case 1:  // stream: short on CPU but saturates memory bandwidth
        p.base_runtime[ProcKind::CpuThread] = 1.0 + 0.4 * rng.next_double();
        p.base_runtime[ProcKind::Gpu] = 2.6 + 0.8 * rng.next_double();
        p.demands[ProcKind::CpuThread] = {{"core", 0.4}, {"mem_bw", 0.82}};
        p.demands[ProcKind::Gpu] = {{"pcie_bw", 0.4}};
        break;
      case 2:  // tiny: cpu-only filler
        p.base_runtime[ProcKind::CpuThread] = 0.5 + 0.2 * rng.next_double();
        p.demands[ProcKind::CpuThread] = {{"core", 0.3}, {"mem_bw", 0.15}};
        break;
      default:  // balanced
        p.base_runtime[ProcKind::CpuThread] = 1.8 + 0.4 * rng.next_double();
        p.base_runtime[ProcKind::Gpu] = 1.4 + 0.4 * rng.next_double();
        p.demands[ProcKind::CpuThread] = {{"core", 0.5}, {"mem_bw", 0.4}};
        p.demands[ProcKind::Gpu] = {{"pcie_bw", 0.45}};
        break;
    }
    return p;
  };

  // classes: one crunch, two streams, one wildcard
  const int wildcard = 2 + static_cast<int>(rng.uniform_int(2));
  b.profiles.kernels.push_back(make_kernel("crunch", 0));
  b.profiles.kernels.push_back(make_kernel("stream_a", 1));
  b.profiles.kernels.push_back(make_kernel("stream_b", 1));
  b.profiles.kernels.push_back(make_kernel("wild", wildcard));

  DataFlowGraph dfg;
  const std::vector<std::string> order = {"crunch", "stream_a", "stream_b", "wild"};
  for (size_t k = 0; k < order.size(); ++k)
    dfg.nodes.push_back({static_cast<int>(k), order[k], 1.0});
  for (size_t d = 1; d < order.size(); ++d)
    for (size_t s = 0; s < d; ++s)
      if (rng.next_double() < 0.3)
        dfg.edges.push_back({static_cast<int>(s), static_cast<int>(d)});
  b.workloads.push_back(std::move(dfg));
  b.counter_model = identity_counter_model(b.topology.resource_names());
  return b;
}

InstanceBundle make_wide_instance(uint64_t seed, size_t kernels) {
  Rng rng(seed);
  InstanceBundle b;
  // vary the per-kernel runtimes a little so the instances differ by seed
  const double jitter = 0.9 + 0.2 * rng.next_double();
  FabricTopology t;
  t.resources = {{"mem_bw", "mem_bw"}};
  t.memories = {"mem0"};
  for (size_t p = 0; p < 8; ++p) {
    Processor proc;
    proc.name = "cpu" + std::to_string(p);
    proc.kind = ProcKind::CpuThread;
    proc.socket = static_cast<int>(p / 4);
    proc.smt_group = static_cast<int>(p / 2);
    proc.path = {0};
    t.processors.push_back(proc);
    t.edges.push_back({proc.name, "mem0"});
  }
  b.topology = std::move(t);

  KernelProfile prof;
  prof.kernel = "unit";
  prof.base_runtime[ProcKind::CpuThread] = jitter;
  prof.demands[ProcKind::CpuThread]["mem_bw"] = 0.08;
  b.profiles.kernels.push_back(std::move(prof));

  DataFlowGraph dfg;
  for (size_t k = 0; k < kernels; ++k)
    dfg.nodes.push_back({static_cast<int>(k), "unit", 1.0});
  b.workloads.push_back(std::move(dfg));
  b.counter_model = identity_counter_model(b.topology.resource_names());
  return b;
}

Env make_env(const InstanceBundle& bundle, uint64_t seed, EnvConfig cfg) {
  return Env(bundle.topology, bundle.profiles, bundle.counter_model, bundle.workloads,
             seed, cfg);
}

ScheduleRun run_schedule(const InstanceBundle& bundle, const std::vector<Action>& schedule,
                         EnvConfig cfg) {
  cfg.synthesize_observations = false;
  Env env = make_env(bundle, 0, cfg);
  env.reset(0);
  for (const auto& a : schedule) {
    if (env.done()) break;
    env.step(a);
  }
  // drain anything the schedule left implicit
  while (!env.done()) {
    const auto out = env.step(Action::noop());
    if (out.info.invalid)
      throw std::invalid_argument("schedule is incomplete: nothing left to wait for");
  }
  return {env.makespan(), env.records()};
}

// ---- reports ----

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t idx = std::min(v.size() - 1,
                              static_cast<size_t>(std::ceil(p * v.size())) -
                                  (p > 0.0 ? 1 : 0));
  return v[idx];
}

}  // namespace

EvalReport emit_report(const std::vector<InstanceResult>& results) {
  if (results.empty()) throw EmptyResults("no completed episodes to report");
  EvalReport rep;
  std::vector<double> ratios;

  for (const auto& res : results) {
    // per-kernel ratios: match scheduler records to oracle records by node id
    std::map<int, const KernelRecord*> oracle_by_node;
    for (const auto& r : res.oracle_records) oracle_by_node[r.dfg_node] = &r;
    double sum_s = 0.0, sum_o = 0.0;
    for (const auto& r : res.scheduler_records) {
      auto it = oracle_by_node.find(r.dfg_node);
      if (it == oracle_by_node.end()) continue;
      const double ts = r.finish - r.start;
      const double to = it->second->finish - it->second->start;
      sum_s += ts;
      sum_o += to;
      EvalReport::Row row{res.instance, r.dfg_node, r.kernel, ts, to,
                          to > 0.0 ? ts / to : 1.0};
      ratios.push_back(row.ratio);
      rep.rows.push_back(std::move(row));
    }
    rep.degradation.push_back(sum_o > 0.0 ? 1.0 - sum_s / sum_o : 0.0);
    rep.normalized_makespan.push_back(
        res.oracle_makespan > 0.0 ? res.scheduler_makespan / res.oracle_makespan : 1.0);
  }

  rep.median_ratio = percentile(ratios, 0.5);
  rep.p99_ratio = percentile(ratios, 0.99);
  rep.median_normalized_makespan = percentile(rep.normalized_makespan, 0.5);

  size_t none = 0, mild = 0, severe = 0;
  for (double d : rep.degradation) {
    const double loss = std::max(0.0, -d);
    if (loss <= 1e-9)
      ++none;
    else if (loss <= 0.2)
      ++mild;
    else
      ++severe;
  }
  const double n = static_cast<double>(rep.degradation.size());
  rep.bucket_none = 100.0 * none / n;
  rep.bucket_mild = 100.0 * mild / n;
  rep.bucket_severe = 100.0 * severe / n;
  return rep;
}

std::string EvalReport::kernel_csv() const {
  std::ostringstream os;
  os << "instance,node,kernel,scheduler_runtime,oracle_runtime,ratio\n";
  for (const auto& r : rows)
    os << r.instance << "," << r.node << "," << r.kernel << ","
       << fmt(r.scheduler_runtime) << "," << fmt(r.oracle_runtime) << ","
       << fmt(r.ratio) << "\n";
  return os.str();
}

std::string EvalReport::instance_csv() const {
  std::ostringstream os;
  os << "instance,degradation,normalized_makespan\n";
  for (size_t i = 0; i < degradation.size(); ++i)
    os << i << "," << fmt(degradation[i]) << "," << fmt(normalized_makespan[i]) << "\n";
  return os.str();
}

std::string EvalReport::summary_json() const {
  json j;
  j["instances"] = degradation.size();
  j["median_ratio"] = median_ratio;
  j["p99_ratio"] = p99_ratio;
  j["median_normalized_makespan"] = median_normalized_makespan;
  j["buckets"] = {{"none", bucket_none}, {"mild", bucket_mild}, {"severe", bucket_severe}};
  j["degradation"] = degradation;
  j["normalized_makespan"] = normalized_makespan;
  return j.dump(2);
}

// ---- learning experiment ----

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LearnOutcome run_learning_experiment(uint64_t agent_seed, const LearnExperiment& exp) {
  // training pool with precomputed oracle makespans
  std::vector<InstanceBundle> pool;
  std::vector<double> pool_oracle;
  for (size_t i = 0; i < exp.train_instances; ++i) {
    pool.push_back(make_training_instance(exp.instance_seed + i));
    pool_oracle.push_back(
        oracle_schedule(pool.back().topology, pool.back().profiles, pool.back().workloads[0])
            .makespan);
  }

  const auto& proto = pool.front();
  SymphonyAgent agent(proto.topology, proto.profiles, proto.counter_model, agent_seed,
                      exp.train);

  const auto supplier = [&](size_t env_idx, size_t episode) {
    const size_t pick = (episode * 7919 + env_idx) % pool.size();
    Env env = make_env(pool[pick], agent_seed ^ (episode * 2654435761ULL), exp.env);
    return std::make_pair(std::move(env), pool_oracle[pick]);
  };

  LearnOutcome out;
  out.log = agent.train(supplier, exp.iterations, agent_seed, /*zero_wallclock=*/false);

  // held-out evaluation: same generator, disjoint seed range
  for (size_t i = 0; i < exp.heldout_instances; ++i) {
    const auto inst = make_training_instance(exp.instance_seed + 100000 + i);
    const double oracle =
        oracle_schedule(inst.topology, inst.profiles, inst.workloads[0]).makespan;

    Env ea = make_env(inst, 500 + i, exp.env);
    const auto ta = agent.run_episode(ea, 1, /*sample=*/false, 600 + i);
    out.agent_norms.push_back(ta.makespan / oracle);

    Env es = make_env(inst, 500 + i, exp.env);
    out.sjf_norms.push_back(baseline_sjf(es).makespan / oracle);

    Env er = make_env(inst, 500 + i, exp.env);
    out.random_norms.push_back(baseline_random(er, 700 + i).makespan / oracle);
  }
  out.agent_median = median_of(out.agent_norms);
  out.sjf_median = median_of(out.sjf_norms);
  out.random_median = median_of(out.random_norms);
  out.checkpoint = agent.checkpoint();
  return out;
}

// ---- trace / log ----

std::string trace_to_jsonl(const EpisodeTrace& trace) {
  std::ostringstream os;
  for (const auto& s : trace.steps) {
    json j;
    j["t"] = s.t;
    j["action"] = s.action;
    j["reward"] = s.reward;
    j["sim_time"] = s.sim_time;
    j["invalid"] = s.invalid;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string train_log_to_csv(const TrainLog& log) {
  std::ostringstream os;
  os << "iteration,mean_normalized_makespan,loss_A,loss_V,invalid_rate,wall_ms\n";
  for (const auto& r : log.rows)
    os << r.iteration << "," << fmt(r.mean_normalized_makespan) << "," << fmt(r.loss_a)
       << "," << fmt(r.loss_v) << "," << fmt(r.invalid_rate) << "," << fmt(r.wall_ms)
       << "\n";
  return os.str();
}

// ---- gradcheck suite ----

std::string GradCheckResult::summary_json() const {
  json j;
  j["worst"] = worst;
  j["entries"] = json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"net", e.net}, {"query", e.query}, {"score", e.score}});
  return j.dump(2);
}

GradCheckResult run_gradcheck_suite(const std::string& dir, int seeds, uint64_t seed0,
                                    double rel_tol, double abs_floor) {
  GradCheckResult result;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no suite files in '" + dir + "'");

  const double floor_as_rel = abs_floor / rel_tol;  // score denominator floor
  for (const auto& file : files) {
    const json spec = json::parse(read_file(file.string()));
    BayesNet net = load_network_json(spec.at("network").dump());

    size_t query_index = 0;
    for (const auto& jq : spec.at("queries")) {
      GradQuery q;
      q.target = net.find(jq.at("target").get<std::string>());
      q.target_value = jq.at("value").get<int>();
      for (const auto& [name, value] : jq.at("evidence").items())
        q.evidence.set(net.find(name), value.get<int>());
      q.sample_budget = jq.value("budget", 100000);

      const auto oracle = exact_grad_oracle(net, q);
      std::vector<double> mean(oracle.size(), 0.0);
      for (int s = 0; s < seeds; ++s) {
        const SampleBatch batch =
            forward_sample(net, q.sample_budget, seed0 + 977 * s + query_index);
        const GradResult r = grad_belief(net, {q}, batch);
        if (!r.diagnostics.starved_queries.empty())
          throw EstimatorStarved("suite query starved: " + file.filename().string());
        for (size_t i = 0; i < mean.size(); ++i) mean[i] += r.grads[0][i] / seeds;
      }
      double score = 0.0;
      for (size_t i = 0; i < mean.size(); ++i) {
        const double denom = std::max(std::abs(oracle[i]), floor_as_rel);
        score = std::max(score, std::abs(mean[i] - oracle[i]) / denom);
      }
      result.entries.push_back({file.stem().string(), query_index, score});
      result.worst = std::max(result.worst, score);
      ++query_index;
    }
  }
  return result;
}

// ---- config parsing ----

EnvConfig env_config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  EnvConfig c;
  c.counter_samples = j.value("counter_samples", c.counter_samples);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.reconfig_time = j.value("reconfig_time", c.reconfig_time);
  c.invalid_penalty_scale = j.value("invalid_penalty_scale", c.invalid_penalty_scale);
  const std::string mode = j.value("reward_mode", "makespan-delta");
  if (mode == "makespan-delta")
    c.reward_mode = RewardMode::MakespanDelta;
  else if (mode == "paper-literal")
    c.reward_mode = RewardMode::PaperLiteral;
  else
    throw std::invalid_argument("unknown reward mode '" + mode + "'");
  if (j.contains("interference")) {
    c.interference.cap = j["interference"].value("cap", c.interference.cap);
    c.interference.ramp_end = j["interference"].value("ramp_end", c.interference.ramp_end);
  }
  return c;
}

TrainConfig train_config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.n_steps = j.value("n_steps", c.n_steps);
  c.n_envs = j.value("n_envs", c.n_envs);
  c.unroll = j.value("unroll", c.unroll);
  c.discount = j.value("discount", c.discount);
  c.belief_sample_budget = j.value("belief_sample_budget", c.belief_sample_budget);
  c.grad_sample_budget = j.value("grad_sample_budget", c.grad_sample_budget);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.train_bn = j.value("train_bn", c.train_bn);
  return c;
}

// ---- manifests ----

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string manifest_json(const std::string& command, const std::vector<std::string>& args,
                          uint64_t seed, const std::string& config_hash, bool serial) {
  json j;
  j["tool"] = "symphony";
  j["version"] = "0.1.0";
  j["command"] = command;
  j["args"] = args;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["serial"] = serial;
  return j.dump(2);
}

}  // namespace symphony
