#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apcd/graph.hpp"

namespace apcd {

/// Full assignment of all variables, entries in {0, 1}.
struct Configuration {
  std::vector<uint8_t> values;

  Configuration() = default;
  explicit Configuration(int num_nodes) : values(num_nodes, 0) {}

  int size() const { return static_cast<int>(values.size()); }
  bool operator==(const Configuration&) const = default;
};

/// Disjoint visible/hidden split covering all nodes; both lists sorted.
struct VariablePartition {
  std::vector<int> visible;
  std::vector<int> hidden;

  VariablePartition() = default;
  VariablePartition(std::vector<int> visible, std::vector<int> hidden, int num_nodes);

  static VariablePartition all_visible(int num_nodes);

  bool is_hidden(int node) const;
  bool operator==(const VariablePartition&) const = default;
};

/// A point in R^{|V|+|E|}, laid out as all node entries (by node index)
/// followed by all edge entries (by edge-list order). Serves as phi(x),
/// mean parameters mu, and empirical means mu-hat alike.
class StatsVector {
 public:
  StatsVector() = default;
  explicit StatsVector(const GraphTopology& topo)
      : nodes_(topo.num_nodes), data_(topo.stats_dim(), 0.0) {}
  StatsVector(int num_nodes, int num_edges)
      : nodes_(num_nodes), data_(num_nodes + num_edges, 0.0) {}

  int num_nodes() const { return nodes_; }
  int num_edges() const { return static_cast<int>(data_.size()) - nodes_; }
  int dim() const { return static_cast<int>(data_.size()); }

  double& node(int i) { return data_[i]; }
  double node(int i) const { return data_[i]; }
  double& edge(int e) { return data_[nodes_ + e]; }
  double edge(int e) const { return data_[nodes_ + e]; }
  double& operator[](int k) { return data_[k]; }
  double operator[](int k) const { return data_[k]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void add_scaled(const StatsVector& other, double s);
  void scale(double s);

  double l2_norm() const;
  double max_abs() const;

  /// True when entries lie in [0,1] and every edge entry respects
  /// edge(i,j) <= min(node(i), node(j)) up to eps.
  bool satisfies_mean_invariants(const GraphTopology& topo, double eps = 1e-12) const;

  bool operator==(const StatsVector&) const = default;

 private:
  int nodes_ = 0;
  std::vector<double> data_;
};

/// Pairwise binary exponential-family model: theta = (node biases, edge weights).
struct PairwiseModel {
  GraphTopology topology;
  std::vector<double> node_bias;
  std::vector<double> edge_weight;

  PairwiseModel() = default;
  explicit PairwiseModel(GraphTopology topo)
      : topology(std::move(topo)),
        node_bias(topology.num_nodes, 0.0),
        edge_weight(topology.edges.size(), 0.0) {}

  int dim() const { return topology.stats_dim(); }
  bool all_finite() const;

  /// theta viewed as a StatsVector-shaped flat vector (same layout).
  StatsVector as_stats() const;
  void set_from_stats(const StatsVector& v);
};

/// phi(x): node entries x_i, edge entries x_i * x_j.
StatsVector suff_stats(const GraphTopology& topo, const Configuration& x);

/// Accumulates phi(x) into acc (hot path for sample averaging).
void add_suff_stats(const GraphTopology& topo, const Configuration& x, StatsVector& acc);

/// <theta, phi(x)>.
double log_unnormalized(const PairwiseModel& model, const Configuration& x);

/// Coordinatewise arithmetic mean; rejects empty input.
StatsVector average_stats(std::span<const StatsVector> stats);

void check_configuration(const GraphTopology& topo, const Configuration& x);

}  // namespace apcd
