#include "apcd/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "apcd/errors.hpp"

namespace apcd {

namespace {

void check_limit(int free_vars, int limit, const char* op) {
  if (free_vars > limit)
    throw capacity_error(std::string(op) + ": " + std::to_string(free_vars) +
                         " free variables exceed enumeration limit " + std::to_string(limit));
}

// Enumerates all assignments of `free_nodes` on top of `base`, invoking
// fn(config, score) with score = <theta, phi(config)>. The base entries of
// non-free nodes are left untouched.
template <typename Fn>
void enumerate_assignments(const PairwiseModel& model, const std::vector<int>& free_nodes,
                           Configuration base, Fn&& fn) {
  const uint64_t count = uint64_t{1} << free_nodes.size();
  for (uint64_t mask = 0; mask < count; ++mask) {
    for (size_t b = 0; b < free_nodes.size(); ++b)
      base.values[free_nodes[b]] = static_cast<uint8_t>((mask >> b) & 1u);
    fn(base, log_unnormalized(model, base));
  }
}

std::vector<int> all_nodes(const GraphTopology& topo) {
  std::vector<int> nodes(topo.num_nodes);
  for (int i = 0; i < topo.num_nodes; ++i) nodes[i] = i;
  return nodes;
}

// log sum_assignments exp(score) with max shift.
double log_sum_exp_over(const PairwiseModel& model, const std::vector<int>& free_nodes,
                        const Configuration& base) {
  double max_score = -std::numeric_limits<double>::infinity();
  enumerate_assignments(model, free_nodes, base,
                        [&](const Configuration&, double s) { max_score = std::max(max_score, s); });
  double acc = 0.0;
  enumerate_assignments(model, free_nodes, base,
                        [&](const Configuration&, double s) { acc += std::exp(s - max_score); });
  return max_score + std::log(acc);
}

// Normalized expectation of phi over assignments of free_nodes.
StatsVector expected_stats_over(const PairwiseModel& model, const std::vector<int>& free_nodes,
                                const Configuration& base) {
  double max_score = -std::numeric_limits<double>::infinity();
  enumerate_assignments(model, free_nodes, base,
                        [&](const Configuration&, double s) { max_score = std::max(max_score, s); });
  StatsVector acc(model.topology);
  StatsVector phi(model.topology);
  double total = 0.0;
  enumerate_assignments(model, free_nodes, base, [&](const Configuration& x, double s) {
    const double w = std::exp(s - max_score);
    total += w;
    phi.fill(0.0);
    add_suff_stats(model.topology, x, phi);
    acc.add_scaled(phi, w);
  });
  acc.scale(1.0 / total);
  return acc;
}

}  // namespace

double exact_log_partition(const PairwiseModel& model, int limit) {
  check_limit(model.topology.num_nodes, limit, "exact_log_partition");
  return log_sum_exp_over(model, all_nodes(model.topology), Configuration(model.topology.num_nodes));
}

StatsVector exact_mean_params(const PairwiseModel& model, int limit) {
  check_limit(model.topology.num_nodes, limit, "exact_mean_params");
  return expected_stats_over(model, all_nodes(model.topology),
                             Configuration(model.topology.num_nodes));
}

StatsVector exact_posterior_mean(const PairwiseModel& model, const VariablePartition& part,
                                 const Configuration& v, int limit) {
  check_limit(static_cast<int>(part.hidden.size()), limit, "exact_posterior_mean");
  check_configuration(model.topology, v);
  return expected_stats_over(model, part.hidden, v);
}

double exact_marginal_loglik(const PairwiseModel& model, const VariablePartition& part,
                             std::span<const Configuration> data, int limit) {
  if (data.empty()) throw invalid_input_error("exact_marginal_loglik: empty dataset");
  check_limit(model.topology.num_nodes, limit, "exact_marginal_loglik");
  const double log_z = exact_log_partition(model, limit);
  double acc = 0.0;
  for (const Configuration& v : data) {
    check_configuration(model.topology, v);
    acc += log_sum_exp_over(model, part.hidden, v) - log_z;
  }
  return acc / static_cast<double>(data.size());
}

StatsVector exact_gradient_mmle(const PairwiseModel& model, const VariablePartition& part,
                                std::span<const Configuration> data, int limit) {
  if (data.empty()) throw invalid_input_error("exact_gradient_mmle: empty dataset");
  check_limit(model.topology.num_nodes, limit, "exact_gradient_mmle");
  StatsVector grad(model.topology);
  for (const Configuration& v : data) grad.add_scaled(exact_posterior_mean(model, part, v, limit), 1.0);
  grad.scale(1.0 / static_cast<double>(data.size()));
  grad.add_scaled(exact_mean_params(model, limit), -1.0);
  return grad;
}

}  // namespace apcd
