#include "apcd/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "apcd/errors.hpp"

namespace apcd {

VariablePartition::VariablePartition(std::vector<int> vis, std::vector<int> hid, int num_nodes)
    : visible(std::move(vis)), hidden(std::move(hid)) {
  std::sort(visible.begin(), visible.end());
  std::sort(hidden.begin(), hidden.end());
  std::vector<uint8_t> mark(num_nodes, 0);
  for (int i : visible) {
    if (i < 0 || i >= num_nodes || mark[i]++) throw invalid_input_error("bad visible index");
  }
  for (int i : hidden) {
    if (i < 0 || i >= num_nodes || mark[i]++) throw invalid_input_error("bad hidden index");
  }
  if (static_cast<int>(visible.size() + hidden.size()) != num_nodes)
    throw invalid_input_error("partition must cover all nodes exactly once");
}

VariablePartition VariablePartition::all_visible(int num_nodes) {
  std::vector<int> vis(num_nodes);
  for (int i = 0; i < num_nodes; ++i) vis[i] = i;
  return VariablePartition(std::move(vis), {}, num_nodes);
}

bool VariablePartition::is_hidden(int node) const {
  return std::binary_search(hidden.begin(), hidden.end(), node);
}

void StatsVector::add_scaled(const StatsVector& other, double s) {
  for (size_t k = 0; k < data_.size(); ++k) data_[k] += s * other.data_[k];
}

void StatsVector::scale(double s) {
  for (double& v : data_) v *= s;
}

double StatsVector::l2_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

double StatsVector::max_abs() const {
  double acc = 0.0;
  for (double v : data_) acc = std::max(acc, std::abs(v));
  return acc;
}

bool StatsVector::satisfies_mean_invariants(const GraphTopology& topo, double eps) const {
  for (double v : data_) {
    if (!(v >= -eps && v <= 1.0 + eps)) return false;
  }
  for (int e = 0; e < topo.num_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    if (edge(e) > std::min(node(i), node(j)) + eps) return false;
  }
  return true;
}

bool PairwiseModel::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(node_bias.begin(), node_bias.end(), finite) &&
         std::all_of(edge_weight.begin(), edge_weight.end(), finite);
}

StatsVector PairwiseModel::as_stats() const {
  StatsVector v(topology);
  for (int i = 0; i < topology.num_nodes; ++i) v.node(i) = node_bias[i];
  for (int e = 0; e < topology.num_edges(); ++e) v.edge(e) = edge_weight[e];
  return v;
}

void PairwiseModel::set_from_stats(const StatsVector& v) {
  for (int i = 0; i < topology.num_nodes; ++i) node_bias[i] = v.node(i);
  for (int e = 0; e < topology.num_edges(); ++e) edge_weight[e] = v.edge(e);
}

void check_configuration(const GraphTopology& topo, const Configuration& x) {
  if (x.size() != topo.num_nodes)
    throw invalid_input_error("configuration length " + std::to_string(x.size()) +
                              " does not match " + std::to_string(topo.num_nodes) + " nodes");
  for (uint8_t v : x.values) {
    if (v > 1) throw invalid_input_error("configuration entries must be 0 or 1");
  }
}

StatsVector suff_stats(const GraphTopology& topo, const Configuration& x) {
  check_configuration(topo, x);
  StatsVector out(topo);
  add_suff_stats(topo, x, out);
  return out;
}

void add_suff_stats(const GraphTopology& topo, const Configuration& x, StatsVector& acc) {
  for (int i = 0; i < topo.num_nodes; ++i) acc.node(i) += x.values[i];
  for (int e = 0; e < topo.num_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    acc.edge(e) += static_cast<double>(x.values[i] & x.values[j]);
  }
}

double log_unnormalized(const PairwiseModel& model, const Configuration& x) {
  check_configuration(model.topology, x);
  double s = 0.0;
  for (int i = 0; i < model.topology.num_nodes; ++i) {
    if (x.values[i]) s += model.node_bias[i];
  }
  for (int e = 0; e < model.topology.num_edges(); ++e) {
    auto [i, j] = model.topology.edges[e];
    if (x.values[i] & x.values[j]) s += model.edge_weight[e];
  }
  return s;
}

StatsVector average_stats(std::span<const StatsVector> stats) {
  if (stats.empty()) throw invalid_input_error("average_stats: empty list");
  StatsVector out = stats[0];
  for (size_t k = 1; k < stats.size(); ++k) {
    if (stats[k].dim() != out.dim() || stats[k].num_nodes() != out.num_nodes())
      throw invalid_input_error("average_stats: inconsistent dimensions");
    out.add_scaled(stats[k], 1.0);
  }
  out.scale(1.0 / static_cast<double>(stats.size()));
  return out;
}

}  // namespace apcd
