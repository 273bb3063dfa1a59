#pragma once

#include <functional>
#include <span>
#include <vector>

#include "apcd/trainer.hpp"

namespace apcd {

/// Fully factorized per-data hidden marginals q^n, one entry per hidden node
/// (indexed by position in part.hidden).
struct MeanFieldState {
  std::vector<double> q;
};

/// Fusion weight for H-APCD: lambda = 0 before the switch point, then ramps
/// to 1 by the final iteration (or holds a fixed value, for diagnostics).
struct HybridRamp {
  double switch_fraction = 0.5;
  bool constant_after_switch = false;
  double constant_value = 1.0;

  static HybridRamp linear(double switch_fraction = 0.5);
  static HybridRamp constant(double switch_fraction, double value);

  double lambda(long t, long total_iterations) const;
  void validate() const;
};

/// Fixed-point iteration q_i <- logistic(theta_i + sum_j theta_ij m_j) with
/// m_j the clamped visible value or the current q_j; `iters` sequential
/// sweeps over hidden nodes in ascending order, starting from all 0.5.
MeanFieldState mean_field_posterior(const PairwiseModel& model, const VariablePartition& part,
                                    const Configuration& v, int iters);

/// Expected phi under the factorized q: node entries are v_i or q_i; edge
/// entries multiply the endpoint factors.
StatsVector mf_stats(const GraphTopology& topo, const VariablePartition& part,
                     const Configuration& v, const MeanFieldState& q);

/// Mean-field E step + persistent-chain M step. Differs from APCD only in
/// the E step; per-data means are assigned directly (no moving average).
TrainResult train_mfpcd(const PairwiseModel& model0, const VariablePartition& part,
                        std::span<const Configuration> data, const TrainConfig& config,
                        const TrainHooks& hooks = {});

/// Fresh MFPCD state: chain pool plus an initial mean-field pass at theta_0.
TrainerState init_mfpcd_state(const PairwiseModel& model0, const VariablePartition& part,
                              std::span<const Configuration> data, const TrainConfig& config);

TrainResult train_mfpcd_resume(TrainerState& state, const VariablePartition& part,
                               std::span<const Configuration> data, const TrainConfig& config,
                               const TrainHooks& hooks = {});

/// Observation hook for the H-APCD fusion (testing aid): called once per
/// iteration with the stored estimates of the first batch datum.
using HapcdObserver =
    std::function<void(long t, double lambda, const StatsVector& mf, const StatsVector& sampled,
                       const StatsVector& fused)>;

/// Hybrid: mean-field trace up to the switch point, then a ramped fusion of
/// mean-field and sampled per-data means. Both estimators are maintained
/// from the start.
TrainResult train_hapcd(const PairwiseModel& model0, const VariablePartition& part,
                        std::span<const Configuration> data, const TrainConfig& config,
                        const HybridRamp& ramp, const TrainHooks& hooks = {},
                        const HapcdObserver& observer = {});

TrainerState init_hapcd_state(const PairwiseModel& model0, const VariablePartition& part,
                              std::span<const Configuration> data, const TrainConfig& config,
                              const HybridRamp& ramp);

TrainResult train_hapcd_resume(TrainerState& state, const VariablePartition& part,
                               std::span<const Configuration> data, const TrainConfig& config,
                               const HybridRamp& ramp, const TrainHooks& hooks = {},
                               const HapcdObserver& observer = {});

/// Exact EM on enumeration-sized models: E step by exact posterior means,
/// M step by gradient ascent on l(theta; mu-hat) until the inner tolerance,
/// outer loop until the marginal log-likelihood improvement drops below
/// 1e-9 or max_outer iterations.
TrainResult train_exact_em(const PairwiseModel& model0, const VariablePartition& part,
                           std::span<const Configuration> data, long max_outer,
                           double inner_tol, int enumeration_limit = kDefaultEnumerationLimit,
                           const TrainHooks& hooks = {});

/// Inner solver of the M step: gradient ascent with halving on
/// non-improvement toward theta*(mu_hat); also the slow-M fixed-point oracle.
PairwiseModel fit_to_mean(const PairwiseModel& start, const StatsVector& target_mean,
                          double grad_tol, long max_iters = 200000,
                          int enumeration_limit = kDefaultEnumerationLimit);

}  // namespace apcd
