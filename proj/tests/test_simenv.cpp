#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "support.hpp"
#include "symphony/harness.hpp"
#include "symphony/simenv.hpp"

using namespace symphony;

namespace {

InstanceBundle serial_two_kernel_instance() {
  InstanceBundle b;
  FabricTopology t;
  t.resources = {{"mem_bw", "mem_bw"}};
  t.memories = {"mem0"};
  t.processors = {{"cpu0", ProcKind::CpuThread, 0, 0, {0}}};
  t.edges = {{"cpu0", "mem0"}};
  b.topology = std::move(t);

  for (auto [name, rt] : {std::pair<const char*, double>{"k0", 2.0}, {"k1", 3.0}}) {
    KernelProfile p;
    p.kernel = name;
    p.base_runtime[ProcKind::CpuThread] = rt;
    p.demands[ProcKind::CpuThread]["mem_bw"] = 0.1;
    b.profiles.kernels.push_back(p);
  }
  DataFlowGraph dfg;
  dfg.nodes = {{0, "k0", 1.0}, {1, "k1", 1.0}};
  dfg.edges = {{0, 1}};
  b.workloads.push_back(dfg);

  CounterModelConfig cm;
  cm.counters.push_back({"pc_mem_bw", CounterCategory::Uncore});
  UtilizationRelation rel;
  rel.output = "mem_bw";
  rel.form = UtilizationRelation::Form::Identity;
  rel.inputs = {"pc_mem_bw"};
  cm.relations.push_back(rel);
  b.counter_model = cm;
  return b;
}

double independent_list_sim(const InstanceBundle& b, const std::vector<int>& assign,
                            const std::vector<int>& order) {
  // deliberately separate implementation of the same dispatch semantics:
  // runtimes freeze at dispatch time using the then-running set
  const auto& dfg = b.workloads[0];
  const size_t n = dfg.nodes.size();
  std::vector<double> finish(n, -1.0), start(n, -1.0);
  std::vector<double> proc_free(b.topology.processors.size(), 0.0);
  std::vector<bool> started(n, false);
  const auto preds = dfg.predecessors();
  const InterferenceModel im;

  size_t remaining = n;
  double clock = 0.0;
  while (remaining > 0) {
    bool dispatched = false;
    for (int idx : order) {
      if (started[idx]) continue;
      bool ready = true;
      for (int p : preds[idx])
        if (finish[p] < 0.0 || finish[p] > clock + 1e-12) ready = false;
      if (!ready) continue;
      if (proc_free[assign[idx]] > clock + 1e-12) continue;
      std::vector<Placement> co;
      for (size_t m = 0; m < n; ++m)
        if (started[m] && finish[m] > clock + 1e-12)
          co.push_back({static_cast<int>(m), dfg.nodes[m].kernel, assign[m]});
      const Placement pl{idx, dfg.nodes[idx].kernel, assign[idx]};
      const double rt = effective_runtime(b.topology, b.profiles, pl, co, im);
      started[idx] = true;
      start[idx] = clock;
      finish[idx] = clock + rt;
      proc_free[assign[idx]] = clock + rt;
      --remaining;
      dispatched = true;
      break;
    }
    if (!dispatched) {
      // advance to the next completion or processor-free time
      double next = 1e300;
      for (size_t m = 0; m < n; ++m)
        if (started[m] && finish[m] > clock + 1e-12) next = std::min(next, finish[m]);
      if (next >= 1e300) return 1e300;  // infeasible assignment
      clock = next;
    }
  }
  return *std::max_element(finish.begin(), finish.end());
}

}  // namespace

TEST_CASE("reset: ready roots, determinism, multi-tenant union") {
  auto b = serial_two_kernel_instance();
  Env env = make_env(b, 5);
  CHECK(env.node_status(0) == NodeStatus::Ready);
  CHECK(env.node_status(1) == NodeStatus::Blocked);

  const auto o1 = env.reset(9);
  const auto o2 = env.reset(9);
  CHECK(o1.observation.readings == o2.observation.readings);
  CHECK(o1.info.sim_time == 0.0);

  // two workloads: the ready set is the union of both root sets
  InstanceBundle multi = b;
  multi.workloads.push_back(multi.workloads[0]);
  Env env2 = make_env(multi, 5);
  CHECK(env2.combined_dfg().nodes.size() == 4);
  CHECK(env2.node_status(0) == NodeStatus::Ready);
  CHECK(env2.node_status(2) == NodeStatus::Ready);
  CHECK(env2.node_status(1) == NodeStatus::Blocked);
  CHECK(env2.node_status(3) == NodeStatus::Blocked);
}

TEST_CASE("step: serial chain makespan, invalid actions, rewards") {
  auto b = serial_two_kernel_instance();
  Env env = make_env(b, 5);

  // executing the child before its parent finishes is an incorrect decision
  const auto bad = env.step(Action::execute(1, 0));
  CHECK(bad.info.invalid);
  CHECK(bad.reward == doctest::Approx(-env.invalid_penalty()));
  CHECK(env.sim_time() == 0.0);
  CHECK(env.node_status(1) == NodeStatus::Blocked);  // state unchanged

  const auto s1 = env.step(Action::execute(0, 0));
  CHECK_FALSE(s1.info.invalid);
  // one processor: dispatching fast-forwards to the next decision point
  CHECK(s1.reward == doctest::Approx(-2.0));  // makespan-delta
  const auto s2 = env.step(Action::execute(1, 0));
  CHECK(env.done());
  CHECK(s2.reward == doctest::Approx(-3.0));
  CHECK(env.makespan() == doctest::Approx(5.0));

  // every node completed exactly once
  CHECK(env.records().size() == 2);
  CHECK_THROWS_AS(env.step(Action::noop()), EpisodeDone);
}

TEST_CASE("paper-literal reward: one running action of T=4 scores -1/4") {
  auto b = serial_two_kernel_instance();
  b.profiles.kernels[0].base_runtime[ProcKind::CpuThread] = 4.0;
  // two independent nodes so the episode does not fast-forward on dispatch
  b.workloads[0].edges.clear();
  FabricTopology two = b.topology;
  two.processors.push_back({"cpu1", ProcKind::CpuThread, 0, 1, {0}});
  two.edges.push_back({"cpu1", "mem0"});
  b.topology = two;

  EnvConfig cfg;
  cfg.reward_mode = RewardMode::PaperLiteral;
  Env env = make_env(b, 5, cfg);
  const auto out = env.step(Action::execute(0, 0));
  CHECK_FALSE(out.done);
  CHECK(out.reward == doctest::Approx(-0.25));
}

TEST_CASE("noop advances to the next completion") {
  auto b = serial_two_kernel_instance();
  b.workloads[0].edges.clear();
  b.profiles.kernels[0].base_runtime[ProcKind::CpuThread] = 1.5;
  FabricTopology two = b.topology;
  two.processors.push_back({"cpu1", ProcKind::CpuThread, 0, 1, {0}});
  two.edges.push_back({"cpu1", "mem0"});
  b.topology = two;

  Env env = make_env(b, 5);
  env.step(Action::execute(0, 0));  // cpu1 still idle: no time passes
  CHECK(env.sim_time() == 0.0);
  const auto out = env.step(Action::noop());
  CHECK(out.reward == doctest::Approx(-1.5));
  CHECK(env.sim_time() == doctest::Approx(1.5));
}

TEST_CASE("fpga reconfiguration gates execution and costs time") {
  InstanceBundle b = serial_two_kernel_instance();
  b.workloads[0] = DataFlowGraph{{{0, "k0", 1.0}}, {}};
  b.profiles.kernels[0].base_runtime[ProcKind::FpgaContext] = 0.25;
  FabricTopology t = b.topology;
  t.processors.push_back({"fpga0", ProcKind::FpgaContext, 0, -1, {0}});
  t.edges.push_back({"fpga0", "mem0"});
  b.topology = t;

  Env env = make_env(b, 5);
  // blank context: executing on the fpga is invalid
  CHECK_FALSE(env.valid_execute(0, 1));
  const auto bad = env.step(Action::execute(0, 1));
  CHECK(bad.info.invalid);

  const auto rc = env.step(Action::reconfigure(1, "k0"));
  CHECK_FALSE(rc.info.invalid);
  // reconfiguration occupied the context for 0.5s; cpu0 stayed idle so the
  // clock did not advance yet
  CHECK(env.sim_time() == 0.0);
  env.step(Action::noop());
  CHECK(env.sim_time() == doctest::Approx(0.5));
  CHECK(env.fpga_config(1) == "k0");
  CHECK(env.valid_execute(0, 1));
  env.step(Action::execute(0, 1));
  CHECK(env.done());
  CHECK(env.makespan() == doctest::Approx(0.75));  // 0.5 reconfig + 0.25 run
}

TEST_CASE("determinism: same seed and action sequence, identical trace") {
  auto b = serial_two_kernel_instance();
  EnvConfig cfg;
  cfg.noise_sigma = 0.05;
  Env e1 = make_env(b, 77, cfg);
  Env e2 = make_env(b, 77, cfg);
  const auto a1 = e1.step(Action::execute(0, 0));
  const auto a2 = e2.step(Action::execute(0, 0));
  CHECK(a1.observation.readings == a2.observation.readings);
  CHECK(a1.reward == a2.reward);
  const auto b1 = e1.step(Action::execute(1, 0));
  const auto b2 = e2.step(Action::execute(1, 0));
  CHECK(b1.observation.readings == b2.observation.readings);
  CHECK(e1.makespan() == e2.makespan());
}

TEST_CASE("oracle: two independent kernels") {
  // two processors: runtimes 2 and 3 run in parallel
  InstanceBundle b = serial_two_kernel_instance();
  b.workloads[0].edges.clear();
  b.profiles.kernels[0].demands.clear();
  b.profiles.kernels[1].demands.clear();
  FabricTopology two = b.topology;
  two.processors.push_back({"cpu1", ProcKind::CpuThread, 0, 1, {0}});
  two.edges.push_back({"cpu1", "mem0"});

  InstanceBundle par = b;
  par.topology = two;
  CHECK(oracle_schedule(par.topology, par.profiles, par.workloads[0]).makespan ==
        doctest::Approx(3.0));

  // one processor: they serialize
  CHECK(oracle_schedule(b.topology, b.profiles, b.workloads[0]).makespan ==
        doctest::Approx(5.0));
}

TEST_CASE("oracle equals the independent permutation enumerator") {
  // 4-kernel diamond on two heterogeneous processors, no interference
  InstanceBundle b;
  FabricTopology t;
  t.resources = {{"mem_bw", "mem_bw"}};
  t.memories = {"mem0"};
  t.processors = {{"cpu0", ProcKind::CpuThread, 0, 0, {0}},
                  {"gpu0", ProcKind::Gpu, 0, -1, {0}}};
  t.edges = {{"cpu0", "mem0"}, {"gpu0", "mem0"}};
  b.topology = std::move(t);
  const double cpu_rt[4] = {2.0, 1.0, 1.5, 0.8};
  const double gpu_rt[4] = {0.9, 1.6, 0.7, 1.1};
  for (int k = 0; k < 4; ++k) {
    KernelProfile p;
    p.kernel = "k" + std::to_string(k);
    p.base_runtime[ProcKind::CpuThread] = cpu_rt[k];
    p.base_runtime[ProcKind::Gpu] = gpu_rt[k];
    b.profiles.kernels.push_back(p);
  }
  DataFlowGraph dfg;
  dfg.nodes = {{0, "k0", 1.0}, {1, "k1", 1.0}, {2, "k2", 1.0}, {3, "k3", 1.0}};
  dfg.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  b.workloads.push_back(dfg);

  const auto oracle = oracle_schedule(b.topology, b.profiles, b.workloads[0]);

  // brute force over assignments and priority orders with a separate
  // list-scheduling simulator
  double best = 1e300;
  std::vector<int> order = {0, 1, 2, 3};
  do {
    for (int bits = 0; bits < 16; ++bits) {
      std::vector<int> assign(4);
      for (int k = 0; k < 4; ++k) assign[k] = (bits >> k) & 1;
      best = std::min(best, independent_list_sim(b, assign, order));
    }
  } while (std::next_permutation(order.begin(), order.end()));

  CHECK(oracle.makespan == doctest::Approx(best).epsilon(1e-9));

  // replaying the oracle's schedule reproduces its makespan
  const auto replay = run_schedule(b, oracle.schedule);
  CHECK(replay.makespan == doctest::Approx(oracle.makespan));
}

TEST_CASE("baselines: sjf parallelizes, random is reproducible, oracle dominates") {
  InstanceBundle b = serial_two_kernel_instance();
  b.workloads[0].edges.clear();
  b.profiles.kernels[0].demands.clear();
  b.profiles.kernels[1].demands.clear();
  FabricTopology two = b.topology;
  two.processors.push_back({"cpu1", ProcKind::CpuThread, 0, 1, {0}});
  two.edges.push_back({"cpu1", "mem0"});
  b.topology = two;

  Env env = make_env(b, 3);
  const auto sjf = baseline_sjf(env);
  CHECK(sjf.makespan == doctest::Approx(3.0));

  Env e1 = make_env(b, 3);
  Env e2 = make_env(b, 3);
  const auto r1 = baseline_random(e1, 11);
  const auto r2 = baseline_random(e2, 11);
  CHECK(r1.makespan == r2.makespan);
  CHECK(r1.steps.size() == r2.steps.size());

  // oracle dominance over both baselines on a batch of random tiny instances
  Rng rng(404);
  for (int t = 0; t < 10; ++t) {
    const auto inst = make_tiny_instance(rng.next_u64());
    const auto oracle = oracle_schedule(inst.topology, inst.profiles, inst.workloads[0]);
    Env es = make_env(inst, 1);
    const auto m_sjf = baseline_sjf(es).makespan;
    Env er = make_env(inst, 1);
    const auto m_rnd = baseline_random(er, 1000 + t).makespan;
    CHECK(oracle.makespan <= m_sjf + 1e-9);
    CHECK(oracle.makespan <= m_rnd + 1e-9);
  }
}

TEST_CASE("conservation and clock monotonicity under random play") {
  Rng rng(2024);
  for (int t = 0; t < 8; ++t) {
    const auto inst = make_tiny_instance(rng.next_u64());
    Env env = make_env(inst, 9 + t);
    double last_time = 0.0;
    size_t guard = 0;
    Rng pick(55 + t);
    while (!env.done() && ++guard < 10000) {
      const auto mask = env.valid_mask();
      std::vector<size_t> valid;
      for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) valid.push_back(i);
      REQUIRE(!valid.empty());
      const auto out =
          env.step(env.decode(valid[pick.uniform_int(static_cast<uint32_t>(valid.size()))]));
      CHECK(out.info.sim_time >= last_time - 1e-12);  // clock never runs backward
      last_time = out.info.sim_time;
    }
    CHECK(env.done());
    // conservation: every node completed exactly once
    CHECK(env.records().size() == inst.workloads[0].nodes.size());
    std::set<int> seen;
    for (const auto& r : env.records()) CHECK(seen.insert(r.dfg_node).second);
  }
}
