#include "symphony/fabric.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "symphony/perfmodel.hpp"  // UnknownResource

namespace symphony {

using nlohmann::json;

std::string to_string(ProcKind k) {
  switch (k) {
    case ProcKind::CpuThread: return "cpu-thread";
    case ProcKind::Gpu: return "gpu";
    case ProcKind::FpgaContext: return "fpga-context";
  }
  return "?";
}

ProcKind proc_kind_from_string(const std::string& s) {
  if (s == "cpu-thread") return ProcKind::CpuThread;
  if (s == "gpu") return ProcKind::Gpu;
  if (s == "fpga-context") return ProcKind::FpgaContext;
  throw std::invalid_argument("unknown processor kind '" + s + "'");
}

int FabricTopology::resource_index(const std::string& name) const {
  for (size_t i = 0; i < resources.size(); ++i)
    if (resources[i].name == name) return static_cast<int>(i);
  return -1;
}

int FabricTopology::processor_index(const std::string& name) const {
  for (size_t i = 0; i < processors.size(); ++i)
    if (processors[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> FabricTopology::resource_names() const {
  std::vector<std::string> out;
  for (const auto& r : resources) out.push_back(r.name);
  return out;
}

FabricTopology load_topology_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  FabricTopology t;
  for (const auto& r : j.at("resources"))
    t.resources.push_back({r.at("name").get<std::string>(), r.value("class", "generic")});
  for (const auto& m : j.at("memories")) t.memories.push_back(m.get<std::string>());
  if (j.contains("links"))
    for (const auto& l : j["links"]) t.links.push_back(l.get<std::string>());
  for (const auto& p : j.at("processors")) {
    Processor proc;
    proc.name = p.at("name").get<std::string>();
    proc.kind = proc_kind_from_string(p.at("kind").get<std::string>());
    proc.socket = p.value("socket", 0);
    proc.smt_group = p.value("smt_group", -1);
    for (const auto& r : p.at("path")) {
      const int idx = t.resource_index(r.get<std::string>());
      if (idx < 0)
        throw UnknownResource("processor '" + proc.name + "' touches unknown resource '" +
                              r.get<std::string>() + "'");
      proc.path.push_back(idx);
    }
    t.processors.push_back(std::move(proc));
  }
  if (j.contains("edges"))
    for (const auto& e : j["edges"])
      t.edges.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});

  // every processor must reach a memory through the undirected element graph
  std::set<std::string> mems(t.memories.begin(), t.memories.end());
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : t.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (const auto& p : t.processors) {
    std::set<std::string> seen{p.name};
    std::deque<std::string> q{p.name};
    bool ok = false;
    while (!q.empty() && !ok) {
      auto v = q.front();
      q.pop_front();
      if (mems.count(v)) ok = true;
      for (const auto& n : adj[v])
        if (seen.insert(n).second) q.push_back(n);
    }
    if (!ok) throw Disconnected("processor '" + p.name + "' has no path to memory");
  }
  return t;
}

FabricTopology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology_json(ss.str());
}

double KernelProfile::demand(ProcKind k, const std::string& klass) const {
  auto it = demands.find(k);
  if (it == demands.end()) return 0.0;
  auto jt = it->second.find(klass);
  return jt == it->second.end() ? 0.0 : jt->second;
}

int ProfileSet::index(const std::string& kernel) const {
  for (size_t i = 0; i < kernels.size(); ++i)
    if (kernels[i].kernel == kernel) return static_cast<int>(i);
  return -1;
}

const KernelProfile& ProfileSet::at(const std::string& kernel) const {
  const int i = index(kernel);
  if (i < 0) throw std::invalid_argument("unknown kernel '" + kernel + "'");
  return kernels[i];
}

ProfileSet load_profiles_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ProfileSet set;
  for (const auto& k : j.at("kernels")) {
    KernelProfile p;
    p.kernel = k.at("name").get<std::string>();
    for (const auto& [kind, rt] : k.at("runtimes").items()) {
      const double v = rt.get<double>();
      if (v <= 0.0) throw std::invalid_argument("base runtime must be positive");
      p.base_runtime[proc_kind_from_string(kind)] = v;
    }
    if (k.contains("demands"))
      for (const auto& [kind, dm] : k["demands"].items())
        for (const auto& [klass, frac] : dm.items()) {
          const double f = frac.get<double>();
          if (f < 0.0 || f > 1.0)
            throw std::invalid_argument("demand fraction outside [0,1]");
          p.demands[proc_kind_from_string(kind)][klass] = f;
        }
    set.kernels.push_back(std::move(p));
  }
  return set;
}

ProfileSet load_profiles_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profiles '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_profiles_json(ss.str());
}

std::vector<std::vector<int>> DataFlowGraph::predecessors() const {
  std::vector<std::vector<int>> pred(nodes.size());
  for (const auto& [src, dst] : edges) pred[dst].push_back(src);
  return pred;
}

bool DataFlowGraph::is_dag() const {
  std::vector<int> indeg(nodes.size(), 0);
  std::vector<std::vector<int>> succ(nodes.size());
  for (const auto& [src, dst] : edges) {
    ++indeg[dst];
    succ[src].push_back(dst);
  }
  std::deque<int> q;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (indeg[i] == 0) q.push_back(static_cast<int>(i));
  size_t seen = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    ++seen;
    for (int c : succ[v])
      if (--indeg[c] == 0) q.push_back(c);
  }
  return seen == nodes.size();
}

DataFlowGraph load_dfg_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  DataFlowGraph g;
  for (const auto& n : j.at("nodes")) {
    DataFlowGraph::NodeInst inst;
    inst.id = n.at("id").get<int>();
    inst.kernel = n.at("kernel").get<std::string>();
    inst.data_size = n.value("data_size", 1.0);
    g.nodes.push_back(std::move(inst));
  }
  for (const auto& e : j.at("edges"))
    g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  if (!g.is_dag()) throw std::invalid_argument("workload graph has a cycle");
  return g;
}

std::string dfg_to_json(const DataFlowGraph& dfg) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : dfg.nodes)
    j["nodes"].push_back({{"id", n.id}, {"kernel", n.kernel}, {"data_size", n.data_size}});
  j["edges"] = json::array();
  for (const auto& [s, d] : dfg.edges) j["edges"].push_back({s, d});
  return j.dump();
}

WorkloadTemplate workload_template_from_string(const std::string& s) {
  if (s == "genomics-like" || s == "genomics") return WorkloadTemplate::Genomics;
  if (s == "eeg-like" || s == "eeg") return WorkloadTemplate::Eeg;
  if (s == "security-like" || s == "security") return WorkloadTemplate::Security;
  if (s == "random") return WorkloadTemplate::Random;
  throw std::invalid_argument("unknown workload template '" + s + "'");
}

DataFlowGraph generate_workload(WorkloadTemplate tmpl, size_t size, uint64_t seed,
                                const ProfileSet& profiles) {
  if (size < 1) throw std::invalid_argument("workload size must be >= 1");
  Rng rng(seed);
  DataFlowGraph g;

  auto pool_or = [&](std::vector<std::string> wanted) {
    std::vector<std::string> found;
    for (const auto& k : wanted)
      if (profiles.index(k) >= 0) found.push_back(k);
    if (found.empty())
      for (const auto& k : profiles.kernels) found.push_back(k.kernel);
    return found;
  };

  switch (tmpl) {
    case WorkloadTemplate::Genomics: {
      // linear Align -> IR -> HC pipeline shape; IR stages are CPU-only
      const auto pool = pool_or({"align", "ir", "hc"});
      for (size_t i = 0; i < size; ++i) {
        g.nodes.push_back({static_cast<int>(i), pool[i % pool.size()], 1.0});
        if (i > 0) g.edges.push_back({static_cast<int>(i - 1), static_cast<int>(i)});
      }
      break;
    }
    case WorkloadTemplate::Eeg: {
      // fan-out: a prepare stage feeding parallel channel detectors, then a join
      const auto pool = pool_or({"eeg_prep", "eeg_detect"});
      g.nodes.push_back({0, pool.front(), 1.0});
      for (size_t i = 1; i < size; ++i) {
        g.nodes.push_back({static_cast<int>(i), pool[std::min<size_t>(1, pool.size() - 1)], 1.0});
        g.edges.push_back({0, static_cast<int>(i)});
      }
      break;
    }
    case WorkloadTemplate::Security: {
      // diamond mixes: layers of width 1-2 with cross links
      const auto pool = pool_or({"at_scan", "at_tag", "at_report"});
      size_t made = 0;
      std::vector<int> prev_layer;
      while (made < size) {
        const size_t width = std::min<size_t>(1 + rng.uniform_int(2), size - made);
        std::vector<int> layer;
        for (size_t w = 0; w < width; ++w) {
          const int id = static_cast<int>(made++);
          g.nodes.push_back({id, pool[rng.uniform_int(static_cast<uint32_t>(pool.size()))], 1.0});
          layer.push_back(id);
          for (int p : prev_layer)
            if (prev_layer.size() == 1 || rng.next_double() < 0.7)
              g.edges.push_back({p, id});
        }
        prev_layer = layer;
      }
      break;
    }
    case WorkloadTemplate::Random: {
      std::vector<std::string> pool;
      for (const auto& k : profiles.kernels) pool.push_back(k.kernel);
      for (size_t i = 0; i < size; ++i) {
        g.nodes.push_back({static_cast<int>(i),
                           pool[rng.uniform_int(static_cast<uint32_t>(pool.size()))], 1.0});
        for (size_t p = 0; p < i; ++p)
          if (rng.next_double() < 0.3)
            g.edges.push_back({static_cast<int>(p), static_cast<int>(i)});
      }
      break;
    }
  }
  return g;
}

double placement_demand(const FabricTopology& topo, const ProfileSet& profiles,
                        const Placement& pl, int resource) {
  const Processor& proc = topo.processors.at(pl.processor);
  if (std::find(proc.path.begin(), proc.path.end(), resource) == proc.path.end())
    return 0.0;
  return profiles.at(pl.kernel).demand(proc.kind, topo.resources[resource].klass);
}

double effective_runtime(const FabricTopology& topo, const ProfileSet& profiles,
                         const Placement& pl, const std::vector<Placement>& co_running,
                         const InterferenceModel& im) {
  const Processor& proc = topo.processors.at(pl.processor);
  const KernelProfile& prof = profiles.at(pl.kernel);
  if (!prof.available_on(proc.kind))
    throw NotAvailable("kernel '" + pl.kernel + "' has no implementation for " +
                       to_string(proc.kind));
  double runtime = prof.base_runtime.at(proc.kind);
  for (int r : proc.path) {
    double total = placement_demand(topo, profiles, pl, r);
    for (const auto& co : co_running) total += placement_demand(topo, profiles, co, r);
    runtime *= im.multiplier(total);
  }
  return runtime;
}

std::map<std::string, double> true_utilizations(const FabricTopology& topo,
                                                const ProfileSet& profiles,
                                                const std::vector<Placement>& running) {
  std::map<std::string, double> out;
  for (size_t r = 0; r < topo.resources.size(); ++r) {
    double total = 0.0;
    for (const auto& pl : running)
      total += placement_demand(topo, profiles, pl, static_cast<int>(r));
    out[topo.resources[r].name] = std::min(1.0, total);
  }
  return out;
}

}  // namespace symphony
