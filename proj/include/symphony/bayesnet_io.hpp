#pragma once

#include <string>

#include "symphony/bayesnet.hpp"

namespace symphony {

// Network spec format (JSON):
//   {"nodes": [
//     {"name": "A", "parents": ["..."], "domain": [0, 1], "logits": [..]},
//     {"name": "Y", "parent": "A", "map": "affine", "a": 2.0, "b": 0.0}
//   ]}
// Logits are row-major over parent assignments (first parent most
// significant) then values; omitted logits default to all-zero (uniform).
BayesNet load_network_json(const std::string& json_text);
BayesNet load_network_file(const std::string& path);
std::string network_to_json(const BayesNet& net);

}  // namespace symphony
