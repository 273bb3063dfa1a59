#include "apcd/eval.hpp"

#include <algorithm>
#include <cmath>

#include "apcd/errors.hpp"
#include "apcd/rng.hpp"
#include "apcd/synth.hpp"

namespace apcd {

StationarityReport stationarity_report(const PairwiseModel& model, const VariablePartition& part,
                                       std::span<const Configuration> data, int limit) {
  const StatsVector grad = exact_gradient_mmle(model, part, data, limit);
  StationarityReport report;
  report.grad_norm = grad.l2_norm();
  double node_sq = 0.0, edge_sq = 0.0;
  for (int i = 0; i < model.topology.num_nodes; ++i) node_sq += grad.node(i) * grad.node(i);
  for (int e = 0; e < model.topology.num_edges(); ++e) edge_sq += grad.edge(e) * grad.edge(e);
  report.node_block_norm = std::sqrt(node_sq);
  report.edge_block_norm = std::sqrt(edge_sq);
  return report;
}

namespace {

// Validation split: last 20% of the training set (at least one point).
size_t validation_start(size_t train_size) {
  if (train_size < 2) throw invalid_input_error("evaluation needs at least 2 training points");
  return train_size - std::max<size_t>(1, train_size / 5);
}

EvalReport parzen_part(const std::vector<std::vector<uint8_t>>& reference,
                       std::span<const Configuration> train, std::span<const Configuration> test,
                       const VariablePartition& part, const EvalPlan& plan) {
  const auto train_rows = visible_rows(train, part);
  const auto test_rows = visible_rows(test, part);
  const size_t val_begin = validation_start(train_rows.size());
  const std::vector<std::vector<uint8_t>> validation(train_rows.begin() + val_begin,
                                                     train_rows.end());
  EvalReport report;
  report.sigma = parzen_select_sigma(reference, validation, plan.sigma_grid);
  const ParzenEstimator est(reference, report.sigma);
  const MeanSem score = parzen_avg_loglik(est, test_rows);
  report.parzen_mean = score.mean;
  report.parzen_sem = score.sem;
  return report;
}

}  // namespace

EvalReport evaluate_model(const PairwiseModel& model, const VariablePartition& part,
                          std::span<const Configuration> train,
                          std::span<const Configuration> test, const EvalPlan& plan,
                          uint64_t seed) {
  const auto samples =
      generate_samples(model, plan.model_samples, plan.sample_sweeps,
                       derive_stream_seed(seed, StreamRole::data_gen, 0xE7A1));
  EvalReport report = parzen_part(visible_rows(samples, part), train, test, part, plan);
  const AisResult ais = ais_log_partition(model, plan.ais, seed);
  report.ais_log_z = ais.log_z;
  report.ais_weight_var = ais.weight_variance;
  if (plan.run_ais_test_loglik) {
    const auto estimates = ais_test_loglik(model, part, test, plan.ais, seed);
    double mean = 0.0;
    for (double v : estimates) mean += v;
    report.ais_test_loglik_mean = mean / static_cast<double>(estimates.size());
  }
  if (model.topology.num_nodes <= plan.enumeration_limit) {
    report.exact_loglik = exact_marginal_loglik(model, part, test, plan.enumeration_limit);
    report.grad_norm = stationarity_report(model, part, test, plan.enumeration_limit).grad_norm;
  }
  return report;
}

EvalReport evaluate_true_reference(const VariablePartition& part,
                                   std::span<const Configuration> train,
                                   std::span<const Configuration> test, const EvalPlan& plan) {
  const auto train_rows = visible_rows(train, part);
  const size_t val_begin = validation_start(train_rows.size());
  const std::vector<std::vector<uint8_t>> reference(train_rows.begin(),
                                                    train_rows.begin() + val_begin);
  return parzen_part(reference, train, test, part, plan);
}

}  // namespace apcd
