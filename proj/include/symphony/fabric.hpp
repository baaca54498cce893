#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symphony/rng.hpp"

namespace symphony {

struct Disconnected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotAvailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProcKind { CpuThread, Gpu, FpgaContext };

std::string to_string(ProcKind k);
ProcKind proc_kind_from_string(const std::string& s);

struct ResourceDecl {
  std::string name;
  std::string klass;  // demand class ("core", "mem_bw", "pcie_bw", ...)
};

struct Processor {
  std::string name;
  ProcKind kind = ProcKind::CpuThread;
  int socket = 0;
  int smt_group = -1;               // cpu threads only
  std::vector<int> path;            // resource indices touched on the way to memory
};

struct FabricTopology {
  std::vector<Processor> processors;
  std::vector<std::string> memories;
  std::vector<std::string> links;
  std::vector<ResourceDecl> resources;
  std::vector<std::pair<std::string, std::string>> edges;

  int resource_index(const std::string& name) const;  // -1 when absent
  int processor_index(const std::string& name) const;
  std::vector<std::string> resource_names() const;
};

FabricTopology load_topology_json(const std::string& json_text);
FabricTopology load_topology_file(const std::string& path);

struct KernelProfile {
  std::string kernel;
  std::map<ProcKind, double> base_runtime;  // seconds; absent kind = unavailable
  std::map<ProcKind, std::map<std::string, double>> demands;  // kind -> class -> fraction

  bool available_on(ProcKind k) const { return base_runtime.count(k) > 0; }
  double demand(ProcKind k, const std::string& klass) const;
};

struct ProfileSet {
  std::vector<KernelProfile> kernels;
  int index(const std::string& kernel) const;  // -1 when absent
  const KernelProfile& at(const std::string& kernel) const;
};

ProfileSet load_profiles_json(const std::string& json_text);
ProfileSet load_profiles_file(const std::string& path);

struct DataFlowGraph {
  struct NodeInst {
    int id = 0;
    std::string kernel;
    double data_size = 1.0;
  };
  std::vector<NodeInst> nodes;
  std::vector<std::pair<int, int>> edges;  // src -> dst dependency

  std::vector<std::vector<int>> predecessors() const;
  bool is_dag() const;
};

DataFlowGraph load_dfg_json(const std::string& json_text);
std::string dfg_to_json(const DataFlowGraph& dfg);

enum class WorkloadTemplate { Genomics, Eeg, Security, Random };
WorkloadTemplate workload_template_from_string(const std::string& s);

// Synthetic stand-ins for the evaluation workloads: chain-heavy genomics
// pipelines (with CPU-only stages), fan-out EEG channel processing, and
// diamond-mix security analytics; `random` draws from the whole profile set.
DataFlowGraph generate_workload(WorkloadTemplate tmpl, size_t size, uint64_t seed,
                                const ProfileSet& profiles);

// Piecewise-linear co-location penalty per shared resource: 1 while total
// demand fits, then a linear ramp capped at `cap` (default 1.67, i.e. a
// co-located kernel still runs at >= 60% speed).
struct InterferenceModel {
  double cap = 5.0 / 3.0;
  double ramp_end = 1.6;  // demand at which the cap is reached

  double multiplier(double total_demand) const {
    if (total_demand <= 1.0) return 1.0;
    const double slope = (cap - 1.0) / (ramp_end - 1.0);
    return std::min(cap, 1.0 + slope * (total_demand - 1.0));
  }
};

struct Placement {
  int dfg_node = -1;
  std::string kernel;
  int processor = -1;
};

// demand a kernel running on `proc` puts on resource index r (0 when r is
// not on the processor's path)
double placement_demand(const FabricTopology& topo, const ProfileSet& profiles,
                        const Placement& pl, int resource);

// base runtime scaled by the interference multipliers over every shared
// resource on the processor's path, given what else is running
double effective_runtime(const FabricTopology& topo, const ProfileSet& profiles,
                         const Placement& pl, const std::vector<Placement>& co_running,
                         const InterferenceModel& im);

// ground-truth per-resource utilization for the running placements
std::map<std::string, double> true_utilizations(const FabricTopology& topo,
                                                const ProfileSet& profiles,
                                                const std::vector<Placement>& running);

}  // namespace symphony
