#include "symphony/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace symphony {

MeasurementSummary summarize(std::span<const double> readings,
                             const std::string& counter) {
  if (readings.empty()) throw std::invalid_argument("summarize: no readings");
  MeasurementSummary s;
  s.counter = counter;
  s.n = readings.size();
  s.dof = static_cast<int>(s.n) - 1;
  double mean = 0.0;
  for (double r : readings) mean += r;
  mean /= static_cast<double>(s.n);
  s.mean = mean;
  if (s.dof > 0) {
    double acc = 0.0;
    for (double r : readings) acc += (r - mean) * (r - mean);
    s.sample_variance = acc / static_cast<double>(s.dof);
  }
  return s;
}

// ---- incomplete beta / Student t ----

namespace {

// continued-fraction evaluation (Lentz)
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("quantile p must be in (0,1)");
  if (p == 0.5) return 0.0;
  // monotone bisection; the cdf is smooth and strictly increasing
  double lo = -1e8, hi = 1e8;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> t_interval(const MeasurementSummary& s, double confidence) {
  if (s.dof < 1) throw DegenerateDof("t_interval needs at least 2 readings");
  if (confidence <= 0.0 || confidence >= 1.0)
    throw std::invalid_argument("confidence must be in (0,1)");
  const double scale = std::sqrt(s.sample_variance / static_cast<double>(s.n));
  if (scale == 0.0) return {s.mean, s.mean};
  const double q = student_t_quantile(0.5 + confidence / 2.0, s.dof);
  return {s.mean - q * scale, s.mean + q * scale};
}

double sample_true_value(const MeasurementSummary& s, Rng& rng) {
  if (s.dof < 1) throw DegenerateDof("sample_true_value needs at least 2 readings");
  const double scale = std::sqrt(s.sample_variance / static_cast<double>(s.n));
  if (scale == 0.0) return s.mean;
  return s.mean + scale * rng.student_t(s.dof);
}

// ---- utilization algebra ----

double apply_relation(const UtilizationRelation& rel,
                      const std::map<std::string, double>& counter_values) {
  std::vector<double> in;
  for (const auto& name : rel.inputs) {
    auto it = counter_values.find(name);
    if (it == counter_values.end()) throw MissingInput("missing counter '" + name + "'");
    if (it->second < 0.0)
      throw std::invalid_argument("counter '" + name + "' must be nonnegative");
    in.push_back(it->second);
  }
  auto need = [&](size_t k) {
    if (in.size() != k)
      throw std::invalid_argument("relation '" + rel.output + "' needs " +
                                  std::to_string(k) + " inputs");
  };
  double u = 0.0;
  switch (rel.form) {
    case UtilizationRelation::Form::Identity:
      need(1);
      u = in[0];
      break;
    case UtilizationRelation::Form::Ratio:
      need(2);
      u = in[1] == 0.0 ? 0.0 : in[0] / in[1];
      break;
    case UtilizationRelation::Form::Threshold:
      need(2);
      u = in[1] == 0.0 ? 0.0 : (in[0] / in[1]) / std::max(rel.theta, 1.0);
      break;
    case UtilizationRelation::Form::Min:
      need(2);
      u = std::min(in[0], in[1]);
      break;
    case UtilizationRelation::Form::Product:
      need(2);
      u = in[0] * in[1];
      break;
  }
  return std::clamp(u, 0.0, 1.0);
}

int discretize(double utilization, const UtilizationBins& bins) {
  if (utilization < 0.0 || utilization > 1.0)
    throw OutOfRange("utilization outside [0,1]");
  const int idx = static_cast<int>(utilization * bins.bin_count);
  return std::min(idx, bins.bin_count - 1);  // u = 1 falls in the last bin
}

// ---- BN construction ----

UtilizationBn build_utilization_bn(const std::vector<std::string>& resources,
                                   const std::vector<CounterSpec>& counters,
                                   const std::vector<UtilizationRelation>& relations,
                                   const UtilizationBins& bins) {
  UtilizationBn out;
  out.bins = bins;
  out.resources = resources;

  std::map<std::string, const UtilizationRelation*> relation_of;
  for (const auto& rel : relations) {
    if (std::find(resources.begin(), resources.end(), rel.output) == resources.end())
      throw UnknownResource("relation output '" + rel.output + "' not a declared resource");
    relation_of[rel.output] = &rel;
  }
  for (const auto& r : resources)
    if (!relation_of.count(r))
      throw UnknownResource("resource '" + r + "' has no relation");

  std::map<std::string, const CounterSpec*> counter_of;
  for (const auto& c : counters) counter_of[c.name] = &c;
  for (const auto& rel : relations)
    for (const auto& in : rel.inputs)
      if (!counter_of.count(in))
        throw UnknownCounter("relation '" + rel.output + "' references unknown counter '" +
                             in + "'");

  std::vector<Node> nodes;
  NodeId next = 0;
  const size_t dom = static_cast<size_t>(bins.bin_count);

  // measured counters as roots with flat priors
  for (const auto& c : counters) {
    ConditionalNode n;
    n.id = next;
    n.name = c.name;
    for (size_t i = 0; i < dom; ++i) n.domain.push_back(bins.center(static_cast<int>(i)));
    n.logits.assign(dom, 0.0);
    out.counter_nodes[c.name] = next;
    nodes.push_back(std::move(n));
    ++next;
  }

  // one utilization node per resource, CPD seeded from its relation
  for (const auto& r : resources) {
    const UtilizationRelation& rel = *relation_of[r];
    ConditionalNode n;
    n.id = next;
    n.name = r;
    for (const auto& in : rel.inputs) n.parents.push_back(out.counter_nodes[in]);
    for (size_t i = 0; i < dom; ++i) n.domain.push_back(bins.center(static_cast<int>(i)));

    size_t rows = 1;
    for (size_t k = 0; k < rel.inputs.size(); ++k) rows *= dom;
    n.logits.assign(rows * dom, 0.0);
    for (size_t row = 0; row < rows; ++row) {
      // decode parent bin indices (first parent most significant)
      std::map<std::string, double> vals;
      size_t rest = row;
      for (size_t k = rel.inputs.size(); k-- > 0;) {
        const int bin = static_cast<int>(rest % dom);
        rest /= dom;
        vals[rel.inputs[k]] = bins.center(bin);
      }
      const double expected = apply_relation(rel, vals);
      for (size_t v = 0; v < dom; ++v) {
        const double delta = std::abs(bins.center(static_cast<int>(v)) - expected);
        n.logits[row * dom + v] = -delta / kRelationCpdTemperature;
      }
    }
    out.util_nodes[r] = next;
    nodes.push_back(std::move(n));
    ++next;
  }

  out.net = build_network(std::move(nodes));
  return out;
}

// ---- config ----

namespace {

UtilizationRelation::Form parse_form(const std::string& s) {
  if (s == "identity") return UtilizationRelation::Form::Identity;
  if (s == "ratio") return UtilizationRelation::Form::Ratio;
  if (s == "threshold" || s == "ratio_of_threshold_counts")
    return UtilizationRelation::Form::Threshold;
  if (s == "min") return UtilizationRelation::Form::Min;
  if (s == "product") return UtilizationRelation::Form::Product;
  throw std::invalid_argument("unknown relation form '" + s + "'");
}

CounterCategory parse_category(const std::string& s) {
  if (s == "on-core") return CounterCategory::OnCore;
  if (s == "uncore" || s == "un-core") return CounterCategory::Uncore;
  if (s == "os-driver") return CounterCategory::OsDriver;
  throw std::invalid_argument("unknown counter category '" + s + "'");
}

}  // namespace

CounterModelConfig load_counter_model_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  CounterModelConfig cfg;
  for (const auto& c : j.at("counters")) {
    CounterSpec spec;
    spec.name = c.at("name").get<std::string>();
    spec.category = parse_category(c.at("category").get<std::string>());
    cfg.counters.push_back(std::move(spec));
  }
  for (const auto& r : j.at("relations")) {
    UtilizationRelation rel;
    rel.output = r.at("output").get<std::string>();
    rel.form = parse_form(r.at("form").get<std::string>());
    for (const auto& in : r.at("inputs")) rel.inputs.push_back(in.get<std::string>());
    if (r.contains("theta")) {
      rel.theta = r["theta"].get<double>();
      rel.theta_trainable = r.value("theta_trainable", true);
    }
    cfg.relations.push_back(std::move(rel));
  }
  return cfg;
}

CounterModelConfig load_counter_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open counter model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_counter_model_json(ss.str());
}

}  // namespace symphony
