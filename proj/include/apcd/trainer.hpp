#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apcd/exact.hpp"
#include "apcd/model.hpp"
#include "apcd/sampler.hpp"
#include "apcd/schedule.hpp"

namespace apcd {

enum class Variant { apcd, mfpcd, hapcd, exact_em };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct TrainConfig {
  Variant variant = Variant::apcd;
  KernelParams e_kernel{100, 1};
  KernelParams m_kernel{10, 100};
  ScheduleSpec a = ScheduleSpec::power(1.0, 2.0 / 3.0);
  ScheduleSpec b = ScheduleSpec::power(1.0, 1.0);
  long total_iterations = 0;
  int minibatch = 0;  // 0 = full batch
  long log_interval = 10;
  long checkpoint_interval = 0;  // 0 = never
  uint64_t master_seed = 0;
  int mean_field_iters = 30;
  double divergence_bound = 1e6;
  int enumeration_limit = kDefaultEnumerationLimit;
  // Exact marginal log-likelihood / gradient norm are logged whenever the
  // model fits the enumeration limit and this stays on.
  bool log_exact = true;
  // Exact-EM controls (used when variant == exact_em).
  long em_max_outer = 200;
  double em_inner_tol = 1e-8;

  void validate(int num_data) const;
};

/// One line of the metrics trace. `timestamp` is wall-clock and is excluded
/// from determinism comparisons; everything else is a pure function of
/// (config, data, master seed).
struct MetricsRecord {
  long iteration = 0;
  std::string timestamp;
  std::string variant;
  double a = 0.0;
  double b = 0.0;
  std::optional<double> grad_norm_estimate;
  std::optional<double> exact_loglik;
  std::optional<double> exact_grad_norm;
};

struct TrainerState {
  long t = 0;
  Variant variant = Variant::apcd;
  PairwiseModel theta;
  // The per-data empirical means that E.3 averages. For APCD these are the
  // moving averages; for MFPCD the current mean-field statistics; for H-APCD
  // the fused values.
  std::vector<StatsVector> per_data_means;
  StatsVector empirical_mean;
  ChainPool pool;
  // H-APCD keeps both underlying estimators alive.
  std::vector<StatsVector> hapcd_sample_means;
  std::vector<StatsVector> hapcd_mf_means;

  void refresh_empirical_mean();
};

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  std::function<void(const TrainerState&)> on_checkpoint;
};

struct TrainResult {
  PairwiseModel model;
  std::vector<MetricsRecord> trace;
};

/// E.1 + eq:E + E.3 with an explicit step size a_t: advances the batch's
/// E-chains ell sweeps, moves each batch mu-hat^n toward the fresh sample
/// average, then re-averages over all data.
void e_step(TrainerState& state, const VariablePartition& part,
            std::span<const Configuration> data, const KernelParams& e_kernel, double a_t,
            long batch_begin, int batch_count);

/// M.1 + eq:M with an explicit step size b_t. Returns the norm of the
/// stochastic gradient estimate; throws divergence_error when theta leaves
/// the bounded region.
double m_step(TrainerState& state, const KernelParams& m_kernel, double b_t,
              double divergence_bound, long iteration);

/// Fresh state for the given variant: persistent chains seeded from the
/// master seed, per-data means from the initial chains (APCD), an initial
/// mean-field pass (MFPCD), or both (H-APCD, fused at lambda(0)).
TrainerState init_trainer_state(const PairwiseModel& model0, const VariablePartition& part,
                                std::span<const Configuration> data, const TrainConfig& config);

/// Algorithm main loop for the APCD variant. Validates the (a, b) schedule
/// pair and refuses to run on an invalid verdict.
TrainResult train(const PairwiseModel& model0, const VariablePartition& part,
                  std::span<const Configuration> data, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Continues a (possibly restored) state up to config.total_iterations.
TrainResult train_resume(TrainerState& state, const VariablePartition& part,
                         std::span<const Configuration> data, const TrainConfig& config,
                         const TrainHooks& hooks = {});

namespace detail {

/// Per-variant E-step plug-in for the shared loop.
using EStepFn = std::function<void(TrainerState&, const VariablePartition&,
                                   std::span<const Configuration>, double a_t, long batch_begin,
                                   int batch_count, long t)>;

TrainResult run_loop(TrainerState& state, const VariablePartition& part,
                     std::span<const Configuration> data, const TrainConfig& config,
                     const EStepFn& e_step_fn, const TrainHooks& hooks);

MetricsRecord make_record(const TrainerState& state, const TrainConfig& config, long iteration,
                          std::optional<double> grad_norm, const VariablePartition& part,
                          std::span<const Configuration> data);

}  // namespace detail

}  // namespace apcd
