#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symphony/bayesnet.hpp"
#include "symphony/rng.hpp"

namespace symphony {

struct DegenerateDof : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownCounter : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownResource : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CounterCategory { OnCore, Uncore, OsDriver };

struct CounterSpec {
  std::string name;
  CounterCategory category = CounterCategory::OnCore;
};

struct MeasurementSummary {
  std::string counter;
  size_t n = 0;
  double mean = 0.0;
  double sample_variance = 0.0;
  int dof = 0;  // n - 1
};

// Algebraic relation producing one utilization in [0,1] from counter values.
//   identity:   u = a
//   ratio:      u = a / b            (0 when b == 0)
//   threshold:  u = (a / b) / theta  (0 when b == 0), theta >= 1
//   min:        u = min(a, b)
//   product:    u = a * b
// All outputs clamp to [0,1].
struct UtilizationRelation {
  enum class Form { Identity, Ratio, Threshold, Min, Product };
  std::string output;  // resource / utilization name
  Form form = Form::Identity;
  std::vector<std::string> inputs;  // counter names
  double theta = 1.0;               // threshold form only
  bool theta_trainable = false;
};

struct UtilizationBins {
  int bin_count = 10;
  double center(int i) const { return (i + 0.5) / bin_count; }
  double lower(int i) const { return static_cast<double>(i) / bin_count; }
};

MeasurementSummary summarize(std::span<const double> readings,
                             const std::string& counter = {});

// central interval of the scaled/shifted t posterior for the true value
std::pair<double, double> t_interval(const MeasurementSummary& s,
                                     double confidence = 0.95);

// one draw v ~ mean + (S/sqrt(N)) * t_{dof}
double sample_true_value(const MeasurementSummary& s, Rng& rng);

double apply_relation(const UtilizationRelation& rel,
                      const std::map<std::string, double>& counter_values);

int discretize(double utilization, const UtilizationBins& bins);

// Student t distribution helpers (quantile via the regularized incomplete
// beta function)
double student_t_cdf(double t, double dof);
double student_t_quantile(double p, double dof);
double regularized_incomplete_beta(double a, double b, double x);

// The measurement BN: counters are root nodes (they are what is directly
// measured and conditioned on), utilizations are their children with CPDs
// peaked around the discretized relation output.
struct UtilizationBn {
  BayesNet net;
  UtilizationBins bins;
  std::vector<std::string> resources;           // utilization node order
  std::map<std::string, NodeId> counter_nodes;  // measured roots
  std::map<std::string, NodeId> util_nodes;
};

// CPD sharpness for relation-seeded tables: logit = -|center - expected| / temperature
inline constexpr double kRelationCpdTemperature = 0.05;

UtilizationBn build_utilization_bn(const std::vector<std::string>& resources,
                                   const std::vector<CounterSpec>& counters,
                                   const std::vector<UtilizationRelation>& relations,
                                   const UtilizationBins& bins = {});

// config file form: {"counters":[{name,category}],
//                    "relations":[{output,form,inputs,theta?}]}
struct CounterModelConfig {
  std::vector<CounterSpec> counters;
  std::vector<UtilizationRelation> relations;
};
CounterModelConfig load_counter_model_json(const std::string& json_text);
CounterModelConfig load_counter_model_file(const std::string& path);

}  // namespace symphony
