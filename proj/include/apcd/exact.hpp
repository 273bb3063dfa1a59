#pragma once

#include <span>

#include "apcd/model.hpp"

namespace apcd {

/// Brute-force enumeration refuses above this many free variables unless the
/// caller raises the limit explicitly.
inline constexpr int kDefaultEnumerationLimit = 20;

/// A(theta) = log sum_x exp<theta, phi(x)>, max-shifted.
double exact_log_partition(const PairwiseModel& model, int limit = kDefaultEnumerationLimit);

/// mu = E_theta[phi(X)] by enumeration; equals the gradient of A at theta.
StatsVector exact_mean_params(const PairwiseModel& model, int limit = kDefaultEnumerationLimit);

/// E[phi(v, H) | v] under p_theta(h | v). `v` is a full Configuration whose
/// hidden entries are ignored. Visible entries of the result equal v exactly.
StatsVector exact_posterior_mean(const PairwiseModel& model, const VariablePartition& part,
                                 const Configuration& v, int limit = kDefaultEnumerationLimit);

/// (1/N) sum_n [ log sum_h exp<theta, phi(v^n, h)> - A(theta) ].
double exact_marginal_loglik(const PairwiseModel& model, const VariablePartition& part,
                             std::span<const Configuration> data,
                             int limit = kDefaultEnumerationLimit);

/// d/dtheta of the marginal log-likelihood:
/// (1/N) sum_n exact_posterior_mean(theta; v^n) - exact_mean_params(theta).
StatsVector exact_gradient_mmle(const PairwiseModel& model, const VariablePartition& part,
                                std::span<const Configuration> data,
                                int limit = kDefaultEnumerationLimit);

}  // namespace apcd
