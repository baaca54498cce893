#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "symphony/rng.hpp"

namespace symphony {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StaleTape : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParamTensor {
  std::string id;
  std::vector<size_t> shape;  // {rows, cols} or {n}
  std::vector<double> value;
  std::vector<double> grad;

  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
  size_t size() const { return value.size(); }
};

class ParameterSet {
 public:
  // zero-initialized
  int add(const std::string& id, std::vector<size_t> shape);
  // uniform +-sqrt(6/(fan_in+fan_out))
  int add(const std::string& id, std::vector<size_t> shape, Rng& rng);
  int find(const std::string& id) const;  // -1 when absent
  ParamTensor& at(int idx) { return tensors_.at(idx); }
  const ParamTensor& at(int idx) const { return tensors_.at(idx); }
  size_t count() const { return tensors_.size(); }
  size_t total_size() const;
  void zero_grad();
  void sgd_step(double lr);

  std::string to_json() const;  // versioned checkpoint
  static ParameterSet from_json(const std::string& text);

 private:
  std::vector<ParamTensor> tensors_;
  std::map<std::string, int> index_;
};

// Reverse-mode tape over f64 vectors. Values live on the tape; parameters
// accumulate gradients into their ParameterSet on backward(), additively
// across repeated calls.
class Tape {
 public:
  using Id = int;

  explicit Tape(ParameterSet& params) : params_(&params) {}

  Id input(std::vector<double> v, bool needs_grad = false);
  Id zeros(size_t dim);
  Id matvec(int w_tensor, Id x);              // W * x
  Id affine(int w_tensor, int b_tensor, Id x);  // W * x + b
  Id add(Id a, Id b);
  Id mul(Id a, Id b);
  Id relu(Id a);
  Id tanh_(Id a);
  Id sigmoid_(Id a);
  Id concat(const std::vector<Id>& parts);
  Id slice(Id a, size_t offset, size_t len);
  Id sum_vecs(const std::vector<Id>& parts, size_t dim);  // empty sum = zeros
  Id scale(Id a, double s);
  Id square(Id a);
  Id reduce_sum(Id a);  // scalar
  Id pick(Id a, size_t index);
  // log softmax over the masked entries, evaluated at `index`; masked-out
  // entries carry exactly zero probability
  Id masked_log_softmax_pick(Id logits, const std::vector<bool>& mask, size_t index);

  const std::vector<double>& value(Id id) const { return nodes_.at(id).val; }
  const std::vector<double>& grad(Id id) const { return nodes_.at(id).grad; }

  // reverse pass from a scalar; throws NonFiniteLoss on a non-finite seed
  // value, StaleTape when the tape is empty
  void backward(Id scalar, double seed = 1.0);

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Input,
    Zeros,
    MatVec,
    Affine,
    Add,
    Mul,
    Relu,
    Tanh,
    Sigmoid,
    Concat,
    Slice,
    SumVecs,
    Scale,
    Square,
    ReduceSum,
    Pick,
    MaskedLogSoftmaxPick,
  };
  struct TNode {
    Op op;
    std::vector<Id> in;
    int w = -1, b = -1;
    size_t offset = 0, len = 0;
    double scalar = 0.0;
    std::vector<bool> mask;
    std::vector<double> val;
    std::vector<double> grad;
  };

  Id push(TNode n);
  ParameterSet* params_;
  std::vector<TNode> nodes_;
};

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& mask);

// FCNN(a, b): two ReLU hidden layers of widths a and b, linear output
struct FcnnSpec {
  size_t in = 0, hidden_a = 0, hidden_b = 0, out = 0;
};

struct Fcnn {
  FcnnSpec spec;
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1, w3 = -1, b3 = -1;

  static Fcnn create(ParameterSet& params, const std::string& prefix, FcnnSpec spec,
                     Rng& rng);
  static Fcnn locate(const ParameterSet& params, const std::string& prefix,
                     FcnnSpec spec);
  Tape::Id forward(Tape& tape, Tape::Id x) const;
};

// standard LSTM cell (input/forget/output gates, tanh candidate)
struct LstmCell {
  size_t input_dim = 0;
  size_t hidden_dim = 16;
  int w_ih = -1, w_hh = -1, b = -1;

  static LstmCell create(ParameterSet& params, const std::string& prefix,
                         size_t input_dim, size_t hidden_dim, Rng& rng);
  static LstmCell locate(const ParameterSet& params, const std::string& prefix,
                         size_t input_dim, size_t hidden_dim);
  // returns {h', c'}
  std::pair<Tape::Id, Tape::Id> step(Tape& tape, Tape::Id x, Tape::Id h,
                                     Tape::Id c) const;
};

struct LstmState {
  std::vector<double> h, c;
  static LstmState zero(size_t dim) { return {std::vector<double>(dim, 0.0),
                                              std::vector<double>(dim, 0.0)}; }
};

struct GnGraph {
  std::vector<std::vector<double>> node_feats;
  std::vector<std::pair<int, int>> edges;  // (src, dst); aggregation at dst
  std::vector<std::vector<double>> edge_feats;
  std::vector<double> global_feat;
};

// Two block flavors, after the layer-function table:
//   Topology block: phi_e FCNN(64,32), phi_v FCNN(32,16), phi_u FCNN(16,16),
//                   rho e->v = sum, rho v->u = sum
//   Dfg block:      phi_e FCNN(64,32), phi_u FCNN(32,16), rho e->u = sum of
//                   ReLU(e'); node features pass through unchanged
enum class GnBlockKind { Topology, Dfg };

struct GnBlockConfig {
  size_t node_raw = 0;
  size_t edge_raw = 0;
  size_t proj = 8;     // linear projection of raw node/edge features
  size_t global = 4;   // global feature width
  size_t out = 16;     // edge/node/global embedding width
};

struct GnBlock {
  GnBlockKind kind = GnBlockKind::Topology;
  GnBlockConfig cfg;
  int p_node = -1, p_edge = -1;  // projections
  Fcnn phi_e, phi_v, phi_u;

  static GnBlock create(ParameterSet& params, const std::string& prefix,
                        GnBlockKind kind, GnBlockConfig cfg, Rng& rng);
  static GnBlock locate(const ParameterSet& params, const std::string& prefix,
                        GnBlockKind kind, GnBlockConfig cfg);

  struct Out {
    std::vector<Tape::Id> nodes;
    Tape::Id global = -1;
    std::vector<Tape::Id> node_inputs;  // raw node features as tape inputs
  };
  Out forward(Tape& tape, const GnGraph& graph) const;
};

// linear policy and value heads over a shared feature vector
struct PolicyValueHeads {
  size_t feature_dim = 0;
  size_t action_count = 0;
  int w_pi = -1, b_pi = -1, w_v = -1, b_v = -1;

  static PolicyValueHeads create(ParameterSet& params, const std::string& prefix,
                                 size_t feature_dim, size_t action_count, Rng& rng);
  static PolicyValueHeads locate(const ParameterSet& params, const std::string& prefix,
                                 size_t feature_dim, size_t action_count);
  // returns {action logits, value scalar}
  std::pair<Tape::Id, Tape::Id> forward(Tape& tape, Tape::Id features) const;
};

// Central finite-difference check over up to `max_coords` sampled parameter
// coordinates. `run(true)` must build a fresh tape, call backward and return
// the loss; `run(false)` only returns the loss. Returns the max relative
// error (absolute floor applied near zero).
double finite_difference_check(ParameterSet& params,
                               const std::function<double(bool)>& run,
                               size_t max_coords, Rng& rng, double step = 1e-5,
                               double abs_floor = 1e-6);

}  // namespace symphony
