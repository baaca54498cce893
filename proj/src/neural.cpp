#include "symphony/neural.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "symphony/kern.hpp"

namespace symphony {

// ---- ParameterSet ----

int ParameterSet::add(const std::string& id, std::vector<size_t> shape) {
  if (index_.count(id)) throw std::invalid_argument("duplicate parameter '" + id + "'");
  ParamTensor t;
  t.id = id;
  t.shape = std::move(shape);
  size_t n = 1;
  for (size_t s : t.shape) n *= s;
  t.value.assign(n, 0.0);
  t.grad.assign(n, 0.0);
  const int idx = static_cast<int>(tensors_.size());
  index_[id] = idx;
  tensors_.push_back(std::move(t));
  return idx;
}

int ParameterSet::add(const std::string& id, std::vector<size_t> shape, Rng& rng) {
  const int idx = add(id, shape);
  ParamTensor& t = tensors_[idx];
  const double fan_in = static_cast<double>(t.cols());
  const double fan_out = static_cast<double>(t.rows());
  const double bound = std::sqrt(6.0 / std::max(1.0, fan_in + fan_out));
  for (auto& v : t.value) v = bound * (2.0 * rng.next_double() - 1.0);
  return idx;
}

int ParameterSet::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

size_t ParameterSet::total_size() const {
  size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void ParameterSet::sgd_step(double lr) {
  for (auto& t : tensors_) kern::axpy(-lr, t.grad.data(), t.value.data(), t.size());
}

std::string ParameterSet::to_json() const {
  nlohmann::json j;
  j["format"] = "symphony-checkpoint";
  j["version"] = 1;
  j["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors_) {
    nlohmann::json e;
    e["id"] = t.id;
    e["shape"] = t.shape;
    e["values"] = t.value;
    j["tensors"].push_back(std::move(e));
  }
  return j.dump();
}

ParameterSet ParameterSet::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "symphony-checkpoint")
    throw std::invalid_argument("not a checkpoint file");
  if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported checkpoint version");
  ParameterSet p;
  for (const auto& e : j.at("tensors")) {
    const int idx = p.add(e.at("id").get<std::string>(),
                          e.at("shape").get<std::vector<size_t>>());
    auto vals = e.at("values").get<std::vector<double>>();
    if (vals.size() != p.at(idx).size())
      throw ShapeMismatch("checkpoint tensor size mismatch for " +
                          e.at("id").get<std::string>());
    p.at(idx).value = std::move(vals);
  }
  return p;
}

// ---- Tape ----

Tape::Id Tape::push(TNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(std::vector<double> v, bool needs_grad) {
  TNode n;
  n.op = Op::Input;
  n.scalar = needs_grad ? 1.0 : 0.0;
  n.val = std::move(v);
  return push(std::move(n));
}

Tape::Id Tape::zeros(size_t dim) {
  TNode n;
  n.op = Op::Zeros;
  n.val.assign(dim, 0.0);
  return push(std::move(n));
}

Tape::Id Tape::matvec(int w_tensor, Id x) {
  const ParamTensor& w = params_->at(w_tensor);
  const auto& xv = nodes_.at(x).val;
  if (w.cols() != xv.size()) throw ShapeMismatch("matvec: " + w.id);
  TNode n;
  n.op = Op::MatVec;
  n.in = {x};
  n.w = w_tensor;
  n.val.resize(w.rows());
  kern::matvec(w.value.data(), xv.data(), nullptr, n.val.data(), w.rows(), w.cols());
  return push(std::move(n));
}

Tape::Id Tape::affine(int w_tensor, int b_tensor, Id x) {
  const ParamTensor& w = params_->at(w_tensor);
  const ParamTensor& b = params_->at(b_tensor);
  const auto& xv = nodes_.at(x).val;
  if (w.cols() != xv.size() || w.rows() != b.size())
    throw ShapeMismatch("affine: " + w.id);
  TNode n;
  n.op = Op::Affine;
  n.in = {x};
  n.w = w_tensor;
  n.b = b_tensor;
  n.val.resize(w.rows());
  kern::matvec(w.value.data(), xv.data(), b.value.data(), n.val.data(), w.rows(),
               w.cols());
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  const auto& av = nodes_.at(a).val;
  const auto& bv = nodes_.at(b).val;
  if (av.size() != bv.size()) throw ShapeMismatch("add");
  TNode n;
  n.op = Op::Add;
  n.in = {a, b};
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] + bv[i];
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  const auto& av = nodes_.at(a).val;
  const auto& bv = nodes_.at(b).val;
  if (av.size() != bv.size()) throw ShapeMismatch("mul");
  TNode n;
  n.op = Op::Mul;
  n.in = {a, b};
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] * bv[i];
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::Relu;
  n.in = {a};
  n.val.resize(av.size());
  kern::relu(av.data(), n.val.data(), av.size());
  return push(std::move(n));
}

Tape::Id Tape::tanh_(Id a) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::Tanh;
  n.in = {a};
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = std::tanh(av[i]);
  return push(std::move(n));
}

Tape::Id Tape::sigmoid_(Id a) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::Sigmoid;
  n.in = {a};
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-av[i]));
  return push(std::move(n));
}

Tape::Id Tape::concat(const std::vector<Id>& parts) {
  TNode n;
  n.op = Op::Concat;
  n.in = parts;
  for (Id p : parts)
    n.val.insert(n.val.end(), nodes_.at(p).val.begin(), nodes_.at(p).val.end());
  return push(std::move(n));
}

Tape::Id Tape::slice(Id a, size_t offset, size_t len) {
  const auto& av = nodes_.at(a).val;
  if (offset + len > av.size()) throw ShapeMismatch("slice");
  TNode n;
  n.op = Op::Slice;
  n.in = {a};
  n.offset = offset;
  n.len = len;
  n.val.assign(av.begin() + offset, av.begin() + offset + len);
  return push(std::move(n));
}

Tape::Id Tape::sum_vecs(const std::vector<Id>& parts, size_t dim) {
  TNode n;
  n.op = Op::SumVecs;
  n.in = parts;
  n.val.assign(dim, 0.0);  // empty sums are zero vectors
  for (Id p : parts) {
    const auto& pv = nodes_.at(p).val;
    if (pv.size() != dim) throw ShapeMismatch("sum_vecs");
    for (size_t i = 0; i < dim; ++i) n.val[i] += pv[i];
  }
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double s) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::Scale;
  n.in = {a};
  n.scalar = s;
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = s * av[i];
  return push(std::move(n));
}

Tape::Id Tape::square(Id a) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::Square;
  n.in = {a};
  n.val.resize(av.size());
  for (size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] * av[i];
  return push(std::move(n));
}

Tape::Id Tape::reduce_sum(Id a) {
  const auto& av = nodes_.at(a).val;
  TNode n;
  n.op = Op::ReduceSum;
  n.in = {a};
  n.val = {kern::sum(av.data(), av.size())};
  return push(std::move(n));
}

Tape::Id Tape::pick(Id a, size_t index) {
  const auto& av = nodes_.at(a).val;
  if (index >= av.size()) throw ShapeMismatch("pick");
  TNode n;
  n.op = Op::Pick;
  n.in = {a};
  n.offset = index;
  n.val = {av[index]};
  return push(std::move(n));
}

Tape::Id Tape::masked_log_softmax_pick(Id logits, const std::vector<bool>& mask,
                                       size_t index) {
  const auto& lv = nodes_.at(logits).val;
  if (mask.size() != lv.size() || index >= lv.size() || !mask[index])
    throw ShapeMismatch("masked_log_softmax_pick");
  double mx = -1e300;
  for (size_t i = 0; i < lv.size(); ++i)
    if (mask[i]) mx = std::max(mx, lv[i]);
  double z = 0.0;
  for (size_t i = 0; i < lv.size(); ++i)
    if (mask[i]) z += std::exp(lv[i] - mx);
  TNode n;
  n.op = Op::MaskedLogSoftmaxPick;
  n.in = {logits};
  n.offset = index;
  n.mask = mask;
  n.val = {lv[index] - mx - std::log(z)};
  return push(std::move(n));
}

void Tape::backward(Id scalar, double seed) {
  if (nodes_.empty()) throw StaleTape("backward on an empty tape");
  if (!std::isfinite(seed) || !std::isfinite(nodes_.at(scalar).val.at(0)))
    throw NonFiniteLoss("non-finite loss");
  if (nodes_.at(scalar).val.size() != 1)
    throw ShapeMismatch("backward: seed node must be scalar");

  for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  nodes_[scalar].grad[0] = seed;

  for (Id id = scalar; id >= 0; --id) {
    TNode& n = nodes_[id];
    bool any = false;
    for (double g : n.grad)
      if (g != 0.0) {
        any = true;
        break;
      }
    if (!any) continue;

    switch (n.op) {
      case Op::Input:
      case Op::Zeros:
        break;
      case Op::MatVec:
      case Op::Affine: {
        ParamTensor& w = params_->at(n.w);
        TNode& x = nodes_[n.in[0]];
        // gx += W^T gy ; gW += gy x^T ; gb += gy
        for (size_t r = 0; r < w.rows(); ++r) {
          const double gy = n.grad[r];
          if (gy == 0.0) continue;
          kern::axpy(gy, w.value.data() + r * w.cols(), x.grad.data(), w.cols());
          kern::axpy(gy, x.val.data(), w.grad.data() + r * w.cols(), w.cols());
        }
        if (n.op == Op::Affine) {
          ParamTensor& b = params_->at(n.b);
          kern::axpy(1.0, n.grad.data(), b.grad.data(), b.size());
        }
        break;
      }
      case Op::Add: {
        kern::axpy(1.0, n.grad.data(), nodes_[n.in[0]].grad.data(), n.grad.size());
        kern::axpy(1.0, n.grad.data(), nodes_[n.in[1]].grad.data(), n.grad.size());
        break;
      }
      case Op::Mul: {
        TNode& a = nodes_[n.in[0]];
        TNode& b = nodes_[n.in[1]];
        for (size_t i = 0; i < n.grad.size(); ++i) {
          a.grad[i] += n.grad[i] * b.val[i];
          b.grad[i] += n.grad[i] * a.val[i];
        }
        break;
      }
      case Op::Relu: {
        TNode& a = nodes_[n.in[0]];
        kern::relu_backward(a.val.data(), n.grad.data(), a.grad.data(), n.grad.size());
        break;
      }
      case Op::Tanh: {
        TNode& a = nodes_[n.in[0]];
        for (size_t i = 0; i < n.grad.size(); ++i)
          a.grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      }
      case Op::Sigmoid: {
        TNode& a = nodes_[n.in[0]];
        for (size_t i = 0; i < n.grad.size(); ++i)
          a.grad[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
        break;
      }
      case Op::Concat: {
        size_t off = 0;
        for (Id p : n.in) {
          TNode& a = nodes_[p];
          kern::axpy(1.0, n.grad.data() + off, a.grad.data(), a.val.size());
          off += a.val.size();
        }
        break;
      }
      case Op::Slice: {
        TNode& a = nodes_[n.in[0]];
        kern::axpy(1.0, n.grad.data(), a.grad.data() + n.offset, n.len);
        break;
      }
      case Op::SumVecs: {
        for (Id p : n.in)
          kern::axpy(1.0, n.grad.data(), nodes_[p].grad.data(), n.grad.size());
        break;
      }
      case Op::Scale: {
        kern::axpy(n.scalar, n.grad.data(), nodes_[n.in[0]].grad.data(), n.grad.size());
        break;
      }
      case Op::Square: {
        TNode& a = nodes_[n.in[0]];
        for (size_t i = 0; i < n.grad.size(); ++i)
          a.grad[i] += 2.0 * n.grad[i] * a.val[i];
        break;
      }
      case Op::ReduceSum: {
        TNode& a = nodes_[n.in[0]];
        for (size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += n.grad[0];
        break;
      }
      case Op::Pick: {
        nodes_[n.in[0]].grad[n.offset] += n.grad[0];
        break;
      }
      case Op::MaskedLogSoftmaxPick: {
        TNode& a = nodes_[n.in[0]];
        // d logpi / dl_j = delta(j == idx) - p_j on valid entries
        double mx = -1e300;
        for (size_t i = 0; i < a.val.size(); ++i)
          if (n.mask[i]) mx = std::max(mx, a.val[i]);
        double z = 0.0;
        for (size_t i = 0; i < a.val.size(); ++i)
          if (n.mask[i]) z += std::exp(a.val[i] - mx);
        for (size_t i = 0; i < a.val.size(); ++i) {
          if (!n.mask[i]) continue;
          const double p = std::exp(a.val[i] - mx) / z;
          a.grad[i] += n.grad[0] * ((i == n.offset ? 1.0 : 0.0) - p);
        }
        break;
      }
    }
  }
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& mask) {
  if (logits.size() != mask.size()) throw ShapeMismatch("masked_softmax");
  std::vector<double> p(logits.size(), 0.0);
  double mx = -1e300;
  bool any = false;
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) {
      mx = std::max(mx, logits[i]);
      any = true;
    }
  if (!any) return p;
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) z += std::exp(logits[i] - mx);
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) p[i] = std::exp(logits[i] - mx) / z;
  return p;
}

// ---- FCNN ----

Fcnn Fcnn::create(ParameterSet& params, const std::string& prefix, FcnnSpec spec,
                  Rng& rng) {
  Fcnn f;
  f.spec = spec;
  f.w1 = params.add(prefix + ".w1", {spec.hidden_a, spec.in}, rng);
  f.b1 = params.add(prefix + ".b1", {spec.hidden_a});
  f.w2 = params.add(prefix + ".w2", {spec.hidden_b, spec.hidden_a}, rng);
  f.b2 = params.add(prefix + ".b2", {spec.hidden_b});
  f.w3 = params.add(prefix + ".w3", {spec.out, spec.hidden_b}, rng);
  f.b3 = params.add(prefix + ".b3", {spec.out});
  return f;
}

Fcnn Fcnn::locate(const ParameterSet& params, const std::string& prefix, FcnnSpec spec) {
  Fcnn f;
  f.spec = spec;
  f.w1 = params.find(prefix + ".w1");
  f.b1 = params.find(prefix + ".b1");
  f.w2 = params.find(prefix + ".w2");
  f.b2 = params.find(prefix + ".b2");
  f.w3 = params.find(prefix + ".w3");
  f.b3 = params.find(prefix + ".b3");
  if (f.w1 < 0 || f.b1 < 0 || f.w2 < 0 || f.b2 < 0 || f.w3 < 0 || f.b3 < 0)
    throw std::invalid_argument("missing FCNN parameters for " + prefix);
  return f;
}

Tape::Id Fcnn::forward(Tape& tape, Tape::Id x) const {
  Tape::Id h1 = tape.relu(tape.affine(w1, b1, x));
  Tape::Id h2 = tape.relu(tape.affine(w2, b2, h1));
  return tape.affine(w3, b3, h2);
}

// ---- LSTM ----

LstmCell LstmCell::create(ParameterSet& params, const std::string& prefix,
                          size_t input_dim, size_t hidden_dim, Rng& rng) {
  LstmCell c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim;
  c.w_ih = params.add(prefix + ".w_ih", {4 * hidden_dim, input_dim}, rng);
  c.w_hh = params.add(prefix + ".w_hh", {4 * hidden_dim, hidden_dim}, rng);
  c.b = params.add(prefix + ".b", {4 * hidden_dim});
  return c;
}

LstmCell LstmCell::locate(const ParameterSet& params, const std::string& prefix,
                          size_t input_dim, size_t hidden_dim) {
  LstmCell c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim;
  c.w_ih = params.find(prefix + ".w_ih");
  c.w_hh = params.find(prefix + ".w_hh");
  c.b = params.find(prefix + ".b");
  if (c.w_ih < 0 || c.w_hh < 0 || c.b < 0)
    throw std::invalid_argument("missing LSTM parameters for " + prefix);
  return c;
}

std::pair<Tape::Id, Tape::Id> LstmCell::step(Tape& tape, Tape::Id x, Tape::Id h,
                                             Tape::Id c) const {
  const size_t H = hidden_dim;
  Tape::Id z = tape.add(tape.affine(w_ih, b, x), tape.matvec(w_hh, h));
  Tape::Id i = tape.sigmoid_(tape.slice(z, 0, H));
  Tape::Id f = tape.sigmoid_(tape.slice(z, H, H));
  Tape::Id o = tape.sigmoid_(tape.slice(z, 2 * H, H));
  Tape::Id g = tape.tanh_(tape.slice(z, 3 * H, H));
  Tape::Id c_new = tape.add(tape.mul(f, c), tape.mul(i, g));
  Tape::Id h_new = tape.mul(o, tape.tanh_(c_new));
  return {h_new, c_new};
}

// ---- GN block ----

GnBlock GnBlock::create(ParameterSet& params, const std::string& prefix,
                        GnBlockKind kind, GnBlockConfig cfg, Rng& rng) {
  GnBlock b;
  b.kind = kind;
  b.cfg = cfg;
  b.p_node = params.add(prefix + ".proj_node", {cfg.proj, cfg.node_raw}, rng);
  b.p_edge = params.add(prefix + ".proj_edge", {cfg.proj, cfg.edge_raw}, rng);
  const size_t e_in = cfg.proj * 3 + cfg.global;
  b.phi_e = Fcnn::create(params, prefix + ".phi_e", {e_in, 64, 32, cfg.out}, rng);
  if (kind == GnBlockKind::Topology) {
    const size_t v_in = cfg.out + cfg.proj + cfg.global;
    b.phi_v = Fcnn::create(params, prefix + ".phi_v", {v_in, 32, 16, cfg.out}, rng);
    const size_t u_in = cfg.out + cfg.global;
    b.phi_u = Fcnn::create(params, prefix + ".phi_u", {u_in, 16, 16, cfg.out}, rng);
  } else {
    const size_t u_in = cfg.out + cfg.global;
    b.phi_u = Fcnn::create(params, prefix + ".phi_u", {u_in, 32, 16, cfg.out}, rng);
  }
  return b;
}

GnBlock GnBlock::locate(const ParameterSet& params, const std::string& prefix,
                        GnBlockKind kind, GnBlockConfig cfg) {
  GnBlock b;
  b.kind = kind;
  b.cfg = cfg;
  b.p_node = params.find(prefix + ".proj_node");
  b.p_edge = params.find(prefix + ".proj_edge");
  if (b.p_node < 0 || b.p_edge < 0)
    throw std::invalid_argument("missing GN projections for " + prefix);
  const size_t e_in = cfg.proj * 3 + cfg.global;
  b.phi_e = Fcnn::locate(params, prefix + ".phi_e", {e_in, 64, 32, cfg.out});
  if (kind == GnBlockKind::Topology) {
    b.phi_v = Fcnn::locate(params, prefix + ".phi_v",
                           {cfg.out + cfg.proj + cfg.global, 32, 16, cfg.out});
    b.phi_u = Fcnn::locate(params, prefix + ".phi_u", {cfg.out + cfg.global, 16, 16, cfg.out});
  } else {
    b.phi_u = Fcnn::locate(params, prefix + ".phi_u", {cfg.out + cfg.global, 32, 16, cfg.out});
  }
  return b;
}

GnBlock::Out GnBlock::forward(Tape& tape, const GnGraph& graph) const {
  if (graph.global_feat.size() != cfg.global) throw ShapeMismatch("gn: global width");
  Tape::Id u = tape.input(graph.global_feat);

  Out out;
  std::vector<Tape::Id> proj_nodes;
  for (const auto& f : graph.node_feats) {
    if (f.size() != cfg.node_raw) throw ShapeMismatch("gn: node width");
    Tape::Id raw = tape.input(f, /*needs_grad=*/true);
    out.node_inputs.push_back(raw);
    proj_nodes.push_back(tape.matvec(p_node, raw));
  }

  std::vector<Tape::Id> edge_out(graph.edges.size(), -1);
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    if (graph.edge_feats[e].size() != cfg.edge_raw) throw ShapeMismatch("gn: edge width");
    Tape::Id pe = tape.matvec(p_edge, tape.input(graph.edge_feats[e]));
    const auto [src, dst] = graph.edges[e];
    Tape::Id in = tape.concat({pe, proj_nodes[src], proj_nodes[dst], u});
    edge_out[e] = phi_e.forward(tape, in);
  }

  if (kind == GnBlockKind::Topology) {
    // rho e->v: sum of updated edges at the receiver, then phi_v per node
    for (size_t v = 0; v < graph.node_feats.size(); ++v) {
      std::vector<Tape::Id> incoming;
      for (size_t e = 0; e < graph.edges.size(); ++e)
        if (graph.edges[e].second == static_cast<int>(v)) incoming.push_back(edge_out[e]);
      Tape::Id agg = tape.sum_vecs(incoming, cfg.out);
      Tape::Id vin = tape.concat({agg, proj_nodes[v], u});
      out.nodes.push_back(phi_v.forward(tape, vin));
    }
    // rho v->u: sum of updated nodes
    Tape::Id vagg = tape.sum_vecs(out.nodes, cfg.out);
    out.global = phi_u.forward(tape, tape.concat({vagg, u}));
  } else {
    // no phi_v: node features pass through unchanged
    out.nodes = proj_nodes;
    // rho e->u: sum of rectified updated edges
    std::vector<Tape::Id> rect;
    rect.reserve(edge_out.size());
    for (Tape::Id e : edge_out) rect.push_back(tape.relu(e));
    Tape::Id eagg = tape.sum_vecs(rect, cfg.out);
    out.global = phi_u.forward(tape, tape.concat({eagg, u}));
  }
  return out;
}

// ---- heads ----

PolicyValueHeads PolicyValueHeads::create(ParameterSet& params, const std::string& prefix,
                                          size_t feature_dim, size_t action_count,
                                          Rng& rng) {
  PolicyValueHeads h;
  h.feature_dim = feature_dim;
  h.action_count = action_count;
  h.w_pi = params.add(prefix + ".w_pi", {action_count, feature_dim}, rng);
  h.b_pi = params.add(prefix + ".b_pi", {action_count});
  h.w_v = params.add(prefix + ".w_v", {1, feature_dim}, rng);
  h.b_v = params.add(prefix + ".b_v", {1});
  return h;
}

PolicyValueHeads PolicyValueHeads::locate(const ParameterSet& params,
                                          const std::string& prefix, size_t feature_dim,
                                          size_t action_count) {
  PolicyValueHeads h;
  h.feature_dim = feature_dim;
  h.action_count = action_count;
  h.w_pi = params.find(prefix + ".w_pi");
  h.b_pi = params.find(prefix + ".b_pi");
  h.w_v = params.find(prefix + ".w_v");
  h.b_v = params.find(prefix + ".b_v");
  if (h.w_pi < 0 || h.b_pi < 0 || h.w_v < 0 || h.b_v < 0)
    throw std::invalid_argument("missing head parameters for " + prefix);
  return h;
}

std::pair<Tape::Id, Tape::Id> PolicyValueHeads::forward(Tape& tape,
                                                        Tape::Id features) const {
  Tape::Id logits = tape.affine(w_pi, b_pi, features);
  Tape::Id value = tape.pick(tape.affine(w_v, b_v, features), 0);
  return {logits, value};
}

// ---- finite differences ----

double finite_difference_check(ParameterSet& params,
                               const std::function<double(bool)>& run,
                               size_t max_coords, Rng& rng, double step,
                               double abs_floor) {
  params.zero_grad();
  run(true);

  std::vector<std::pair<int, size_t>> coords;
  for (size_t t = 0; t < params.count(); ++t)
    for (size_t i = 0; i < params.at(static_cast<int>(t)).size(); ++i)
      coords.push_back({static_cast<int>(t), i});
  // sample without replacement
  for (size_t i = coords.size(); i > 1; --i)
    std::swap(coords[i - 1], coords[rng.uniform_int(static_cast<uint32_t>(i))]);
  if (coords.size() > max_coords) coords.resize(max_coords);

  double worst = 0.0;
  for (auto [t, i] : coords) {
    ParamTensor& tensor = params.at(t);
    const double analytic = tensor.grad[i];
    const double orig = tensor.value[i];
    tensor.value[i] = orig + step;
    const double up = run(false);
    tensor.value[i] = orig - step;
    const double dn = run(false);
    tensor.value[i] = orig;
    const double numeric = (up - dn) / (2.0 * step);
    const double denom = std::max(std::abs(numeric), abs_floor);
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace symphony
