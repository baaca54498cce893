#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "symphony/bayesnet_io.hpp"

namespace symphony {

using nlohmann::json;

BayesNet load_network_json(const std::string& json_text) {
  const json spec = json::parse(json_text);
  if (!spec.contains("nodes") || !spec["nodes"].is_array())
    throw std::invalid_argument("network spec: missing 'nodes' array");

  std::map<std::string, NodeId> ids;
  NodeId next = 0;
  for (const auto& n : spec["nodes"]) {
    const std::string name = n.at("name").get<std::string>();
    if (ids.count(name)) throw std::invalid_argument("duplicate node '" + name + "'");
    ids[name] = next++;
  }

  auto lookup = [&](const std::string& name) -> NodeId {
    auto it = ids.find(name);
    if (it == ids.end()) throw UnknownParent("unknown parent '" + name + "'");
    return it->second;
  };

  std::vector<Node> nodes;
  NodeId id = 0;
  for (const auto& n : spec["nodes"]) {
    if (n.contains("map")) {
      DeterministicNode d;
      d.id = id++;
      d.name = n.at("name").get<std::string>();
      d.parent = lookup(n.at("parent").get<std::string>());
      if (n.at("map").get<std::string>() != "affine")
        throw std::invalid_argument("only 'affine' deterministic maps are supported");
      d.a = n.at("a").get<double>();
      d.b = n.at("b").get<double>();
      nodes.push_back(std::move(d));
    } else {
      ConditionalNode c;
      c.id = id++;
      c.name = n.at("name").get<std::string>();
      if (n.contains("parents"))
        for (const auto& p : n["parents"]) c.parents.push_back(lookup(p.get<std::string>()));
      if (!n.contains("domain") || n["domain"].empty())
        throw EmptyDomain("node '" + c.name + "' has no domain");
      for (const auto& v : n["domain"]) c.domain.push_back(v.get<double>());
      if (n.contains("logits"))
        for (const auto& l : n["logits"]) c.logits.push_back(l.get<double>());
      nodes.push_back(std::move(c));
    }
  }

  // size the default logits once parent domains are known; deterministic
  // domains mirror their parent's, possibly through a chain
  std::function<size_t(NodeId, size_t)> dom_size = [&](NodeId v, size_t depth) -> size_t {
    if (depth > nodes.size()) throw CycleDetected("graph has a directed cycle");
    if (const auto* c = std::get_if<ConditionalNode>(&nodes[v])) return c->domain.size();
    return dom_size(std::get<DeterministicNode>(nodes[v]).parent, depth + 1);
  };
  for (auto& node : nodes) {
    if (auto* c = std::get_if<ConditionalNode>(&node)) {
      size_t rows = 1;
      for (NodeId p : c->parents) rows *= dom_size(p, 0);
      if (c->logits.empty()) c->logits.assign(rows * c->domain.size(), 0.0);
    }
  }
  return build_network(std::move(nodes));
}

BayesNet load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_network_json(ss.str());
}

std::string network_to_json(const BayesNet& net) {
  json out;
  out["nodes"] = json::array();
  for (NodeId v = 0; v < static_cast<NodeId>(net.size()); ++v) {
    json n;
    if (net.is_conditional(v)) {
      const auto& c = net.conditional(v);
      n["name"] = c.name;
      n["parents"] = json::array();
      for (NodeId p : c.parents) n["parents"].push_back(std::string(net.name(p)));
      n["domain"] = c.domain;
      n["logits"] = c.logits;
    } else {
      const auto& d = net.deterministic(v);
      n["name"] = d.name;
      n["parent"] = std::string(net.name(d.parent));
      n["map"] = "affine";
      n["a"] = d.a;
      n["b"] = d.b;
    }
    out["nodes"].push_back(std::move(n));
  }
  return out.dump(2);
}

}  // namespace symphony
