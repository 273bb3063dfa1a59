#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apcd/model.hpp"

namespace apcd {

/// Annealing plan: inverse temperatures 0 = beta_0 < ... < beta_K = 1,
/// `num_chains` independent runs, one Gibbs sweep per temperature step.
struct AisPlan {
  std::vector<double> ladder;
  int num_chains = 100;

  static AisPlan uniform(int num_steps, int num_chains);
  static AisPlan geometric(int num_steps, int num_chains, double smallest = 1e-4);

  void validate() const;
};

struct AisResult {
  double log_z = 0.0;
  double weight_variance = 0.0;  // population variance of per-chain log weights
  bool high_variance = false;    // weight_variance > 1 flags a degenerate ladder
};

/// Estimates A(theta) by annealing from the zero-parameter base
/// (log Z_0 = |V| log 2) along p_k proportional to exp(beta_k <theta, phi>),
/// combining per-chain log weights with log-mean-exp. OpenMP across chains.
AisResult ais_log_partition(const PairwiseModel& model, const AisPlan& plan, uint64_t seed);

namespace serial {
AisResult ais_log_partition(const PairwiseModel& model, const AisPlan& plan, uint64_t seed);
}

/// Per-datum estimates of log p_theta(v): a clamped AIS run targets
/// log sum_h exp<theta, phi(v, h)> (base 2^{|hidden|}), minus an AIS estimate
/// of the global log partition. Chain streams derive from the visible
/// content, so identical test points get identical estimates.
std::vector<double> ais_test_loglik(const PairwiseModel& model, const VariablePartition& part,
                                    std::span<const Configuration> testset, const AisPlan& plan,
                                    uint64_t seed);

/// The clamped half of ais_test_loglik, exposed for testing.
AisResult ais_clamped_log_sum(const PairwiseModel& model, const VariablePartition& part,
                              const Configuration& v, const AisPlan& plan, uint64_t seed);

}  // namespace apcd
