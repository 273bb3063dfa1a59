#pragma once

#include <optional>
#include <span>

#include "apcd/ais.hpp"
#include "apcd/exact.hpp"
#include "apcd/model.hpp"
#include "apcd/parzen.hpp"

namespace apcd {

struct StationarityReport {
  double grad_norm = 0.0;
  double node_block_norm = 0.0;
  double edge_block_norm = 0.0;
};

/// Norm of the exact marginal log-likelihood gradient, with per-block
/// subnorms over the node and edge coordinates.
StationarityReport stationarity_report(const PairwiseModel& model, const VariablePartition& part,
                                       std::span<const Configuration> data,
                                       int limit = kDefaultEnumerationLimit);

struct EvalPlan {
  int model_samples = 2000;       // samples drawn from the model for Parzen
  int sample_sweeps = 2000;       // Gibbs sweeps per generated sample
  std::vector<double> sigma_grid = default_sigma_grid();
  AisPlan ais = AisPlan::uniform(1000, 100);
  bool run_ais_test_loglik = false;
  int enumeration_limit = kDefaultEnumerationLimit;
};

struct EvalReport {
  double parzen_mean = 0.0;
  double parzen_sem = 0.0;
  double sigma = 0.0;
  double ais_log_z = 0.0;
  double ais_weight_var = 0.0;
  std::optional<double> ais_test_loglik_mean;
  std::optional<double> exact_loglik;
  std::optional<double> grad_norm;
};

/// Full evaluation protocol: draw model samples, cross-validate the Parzen
/// bandwidth on the last 20% of the training set, score the test set, run
/// AIS for log Z, and add exact quantities at oracle scale.
EvalReport evaluate_model(const PairwiseModel& model, const VariablePartition& part,
                          std::span<const Configuration> train,
                          std::span<const Configuration> test, const EvalPlan& plan,
                          uint64_t seed);

/// The paper-style "True" reference row: a Parzen estimator built from the
/// training set itself (first 80%), bandwidth cross-validated on the rest.
EvalReport evaluate_true_reference(const VariablePartition& part,
                                   std::span<const Configuration> train,
                                   std::span<const Configuration> test, const EvalPlan& plan);

}  // namespace apcd
