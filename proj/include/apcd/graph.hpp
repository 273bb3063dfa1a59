#pragma once

#include <utility>
#include <vector>

namespace apcd {

/// Undirected graph over binary variables. Edges are stored as (i, j) with
/// i < j, in a fixed order that also fixes the layout of edge statistics.
struct GraphTopology {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  // adjacency[i] lists (neighbor, edge index) pairs for node i.
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  GraphTopology() = default;
  GraphTopology(int num_nodes, std::vector<std::pair<int, int>> edge_list);

  int num_edges() const { return static_cast<int>(edges.size()); }
  int stats_dim() const { return num_nodes + num_edges(); }
};

}  // namespace apcd
