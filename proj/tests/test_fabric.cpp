#include <doctest.h>

#include "support.hpp"
#include "symphony/fabric.hpp"
#include "symphony/perfmodel.hpp"

using namespace symphony;

namespace {

const char* kMinimalTopology = R"({
  "resources": [{"name":"mem_bw","class":"mem_bw"}],
  "memories": ["mem0"],
  "processors": [{"name":"cpu0","kind":"cpu-thread","socket":0,"smt_group":0,
                   "path":["mem_bw"]}],
  "edges": [["cpu0","mem0"]]
})";

ProfileSet two_kernel_profiles() {
  ProfileSet ps;
  KernelProfile a;
  a.kernel = "a";
  a.base_runtime[ProcKind::CpuThread] = 2.0;
  a.demands[ProcKind::CpuThread]["mem_bw"] = 0.8;
  KernelProfile b;
  b.kernel = "b";
  b.base_runtime[ProcKind::CpuThread] = 3.0;
  b.demands[ProcKind::CpuThread]["mem_bw"] = 0.8;
  ps.kernels = {a, b};
  return ps;
}

FabricTopology two_cpu_topology() {
  FabricTopology t;
  t.resources = {{"mem_bw", "mem_bw"}};
  t.memories = {"mem0"};
  t.processors = {{"cpu0", ProcKind::CpuThread, 0, 0, {0}},
                  {"cpu1", ProcKind::CpuThread, 0, 1, {0}}};
  t.edges = {{"cpu0", "mem0"}, {"cpu1", "mem0"}};
  return t;
}

}  // namespace

TEST_CASE("topology loading: minimal valid, disconnected rejected") {
  FabricTopology t = load_topology_json(kMinimalTopology);
  CHECK(t.processors.size() == 1);
  CHECK(t.resource_index("mem_bw") == 0);

  const char* disconnected = R"({
    "resources": [{"name":"mem_bw","class":"mem_bw"}],
    "memories": ["mem0"],
    "processors": [{"name":"cpu0","kind":"cpu-thread","path":["mem_bw"]}],
    "edges": []
  })";
  CHECK_THROWS_AS(load_topology_json(disconnected), Disconnected);

  const char* bad_resource = R"({
    "resources": [],
    "memories": ["mem0"],
    "processors": [{"name":"cpu0","kind":"cpu-thread","path":["nope"]}],
    "edges": [["cpu0","mem0"]]
  })";
  CHECK_THROWS_AS(load_topology_json(bad_resource), UnknownResource);
}

TEST_CASE("effective_runtime: isolation, saturation, harmless co-location") {
  const auto topo = two_cpu_topology();
  const auto profiles = two_kernel_profiles();
  const InterferenceModel im;

  const Placement a{0, "a", 0};
  CHECK(effective_runtime(topo, profiles, a, {}, im) == doctest::Approx(2.0));

  // two kernels at 0.8 demand each on one shared resource: multiplier is the
  // cap, 1.67 (a 40% throughput loss)
  const Placement b{1, "b", 1};
  CHECK(effective_runtime(topo, profiles, a, {b}, im) ==
        doctest::Approx(2.0 * (5.0 / 3.0)).epsilon(1e-9));

  // demands that fit produce no slowdown at all
  ProfileSet mild = profiles;
  mild.kernels[0].demands[ProcKind::CpuThread]["mem_bw"] = 0.4;
  mild.kernels[1].demands[ProcKind::CpuThread]["mem_bw"] = 0.5;
  CHECK(effective_runtime(topo, mild, a, {b}, im) == doctest::Approx(2.0));

  // no implementation for the processor kind
  FabricTopology with_gpu = topo;
  with_gpu.processors.push_back({"gpu0", ProcKind::Gpu, 0, -1, {0}});
  with_gpu.edges.push_back({"gpu0", "mem0"});
  CHECK_THROWS_AS(effective_runtime(with_gpu, profiles, Placement{0, "a", 2}, {}, im),
                  NotAvailable);
}

TEST_CASE("interference monotonicity: co-runners never speed things up") {
  const auto topo = two_cpu_topology();
  Rng rng(12);
  const InterferenceModel im;
  for (int trial = 0; trial < 200; ++trial) {
    ProfileSet ps;
    for (int k = 0; k < 3; ++k) {
      KernelProfile p;
      p.kernel = "k" + std::to_string(k);
      p.base_runtime[ProcKind::CpuThread] = 0.5 + 3.0 * rng.next_double();
      p.demands[ProcKind::CpuThread]["mem_bw"] = rng.next_double();
      ps.kernels.push_back(p);
    }
    const Placement target{0, "k0", 0};
    const Placement co{1, "k1", 1};
    const double alone = effective_runtime(topo, ps, target, {}, im);
    const double together = effective_runtime(topo, ps, target, {co}, im);
    CHECK(together >= alone - 1e-12);
  }
}

TEST_CASE("true_utilizations: zeros, single demand, clamping") {
  const auto topo = two_cpu_topology();
  auto profiles = two_kernel_profiles();
  profiles.kernels[0].demands[ProcKind::CpuThread]["mem_bw"] = 0.3;

  CHECK(true_utilizations(topo, profiles, {}).at("mem_bw") == 0.0);
  CHECK(true_utilizations(topo, profiles, {{0, "a", 0}}).at("mem_bw") ==
        doctest::Approx(0.3));

  profiles.kernels[0].demands[ProcKind::CpuThread]["mem_bw"] = 0.8;
  const auto clamped =
      true_utilizations(topo, profiles, {{0, "a", 0}, {1, "b", 1}});
  CHECK(clamped.at("mem_bw") == doctest::Approx(1.0));
}

TEST_CASE("workload generation: sizes, shapes, determinism, acyclicity") {
  ProfileSet ps;
  for (const char* name : {"align", "ir", "hc"}) {
    KernelProfile p;
    p.kernel = name;
    p.base_runtime[ProcKind::CpuThread] = 1.0;
    if (std::string(name) != "ir") {
      p.base_runtime[ProcKind::Gpu] = 0.5;
      p.base_runtime[ProcKind::FpgaContext] = 0.1;
    }
    ps.kernels.push_back(p);
  }

  const auto single = generate_workload(WorkloadTemplate::Random, 1, 7, ps);
  CHECK(single.nodes.size() == 1);
  CHECK(single.edges.empty());

  // genomics template: linear pipeline with a CPU-only stage in the rotation
  const auto gen = generate_workload(WorkloadTemplate::Genomics, 5, 11, ps);
  CHECK(gen.nodes.size() == 5);
  CHECK(gen.edges.size() == 4);
  for (size_t i = 0; i + 1 < 5; ++i)
    CHECK(gen.edges[i] == std::pair<int, int>{static_cast<int>(i), static_cast<int>(i + 1)});
  bool has_cpu_only = false;
  for (const auto& n : gen.nodes)
    if (!ps.at(n.kernel).available_on(ProcKind::Gpu)) has_cpu_only = true;
  CHECK(has_cpu_only);

  const auto w1 = generate_workload(WorkloadTemplate::Security, 9, 42, ps);
  const auto w2 = generate_workload(WorkloadTemplate::Security, 9, 42, ps);
  CHECK(dfg_to_json(w1) == dfg_to_json(w2));

  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    const auto tmpl = static_cast<WorkloadTemplate>(rng.uniform_int(4));
    const auto g = generate_workload(tmpl, 1 + rng.uniform_int(12), rng.next_u64(), ps);
    CHECK(g.is_dag());
  }
}

TEST_CASE("dfg json round trip") {
  const char* text = R"({"nodes":[{"id":0,"kernel":"align"},{"id":1,"kernel":"hc"}],
                          "edges":[[0,1]]})";
  const auto g = load_dfg_json(text);
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.size() == 1);
  const auto back = load_dfg_json(dfg_to_json(g));
  CHECK(back.nodes[1].kernel == "hc");

  const char* cyclic = R"({"nodes":[{"id":0,"kernel":"a"},{"id":1,"kernel":"b"}],
                            "edges":[[0,1],[1,0]]})";
  CHECK_THROWS(load_dfg_json(cyclic));
}
