#include "apcd/graph.hpp"

#include <set>
#include <string>

#include "apcd/errors.hpp"

namespace apcd {

GraphTopology::GraphTopology(int n, std::vector<std::pair<int, int>> edge_list)
    : num_nodes(n), edges(std::move(edge_list)) {
  if (num_nodes <= 0) throw invalid_input_error("topology needs at least one node");
  std::set<std::pair<int, int>> seen;
  adjacency.assign(num_nodes, {});
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    auto [i, j] = edges[e];
    if (i < 0 || j < 0 || i >= num_nodes || j >= num_nodes)
      throw invalid_input_error("edge index out of range: (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
    if (i == j) throw invalid_input_error("self-loop on node " + std::to_string(i));
    if (i > j) throw invalid_input_error("edges must be stored with i < j");
    if (!seen.insert({i, j}).second)
      throw invalid_input_error("duplicate edge (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
    adjacency[i].push_back({j, e});
    adjacency[j].push_back({i, e});
  }
}

}  // namespace apcd
