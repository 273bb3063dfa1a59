#include "apcd/trainer.hpp"

#include <cmath>
#include <ctime>
#include <string>

#include "apcd/errors.hpp"

namespace apcd {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::apcd: return "apcd";
    case Variant::mfpcd: return "mfpcd";
    case Variant::hapcd: return "hapcd";
    case Variant::exact_em: return "exact-em";
  }
  return "apcd";
}

Variant parse_variant(const std::string& name) {
  if (name == "apcd") return Variant::apcd;
  if (name == "mfpcd") return Variant::mfpcd;
  if (name == "hapcd") return Variant::hapcd;
  if (name == "exact-em") return Variant::exact_em;
  throw invalid_input_error("unknown variant: " + name);
}

void TrainConfig::validate(int num_data) const {
  if (total_iterations < 0) throw invalid_input_error("total_iterations must be >= 0");
  if (minibatch < 0 || minibatch > num_data)
    throw invalid_input_error("minibatch must lie in [0, N]");
  if (log_interval < 1) throw invalid_input_error("log_interval must be >= 1");
  if (checkpoint_interval < 0) throw invalid_input_error("checkpoint_interval must be >= 0");
  if (mean_field_iters < 0) throw invalid_input_error("mean_field_iters must be >= 0");
  if (variant != Variant::exact_em) {
    m_kernel.validate();
    if (variant != Variant::mfpcd) e_kernel.validate();
  }
  if (variant == Variant::apcd) {
    const ScheduleVerdict verdict = validate_schedule_pair(a, b);
    if (!verdict.valid())
      throw schedule_validation_error("apcd schedule pair rejected: " + verdict.reason);
  }
}

void TrainerState::refresh_empirical_mean() {
  empirical_mean = average_stats(per_data_means);
}

namespace {

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

StatsVector chain_sample_average(const GraphTopology& topo,
                                 std::span<const Configuration> chains) {
  StatsVector avg(topo);
  for (const Configuration& x : chains) add_suff_stats(topo, x, avg);
  avg.scale(1.0 / static_cast<double>(chains.size()));
  return avg;
}

}  // namespace

void e_step(TrainerState& state, const VariablePartition& part,
            std::span<const Configuration> data, const KernelParams& e_kernel, double a_t,
            long batch_begin, int batch_count) {
  advance_e(state.pool, state.theta, part, data, e_kernel, static_cast<int>(batch_begin),
            batch_count);
  const GraphTopology& topo = state.theta.topology;
  const int n_data = state.pool.num_data;
  const int per = state.pool.e_chains_per_datum;
  if (batch_count < 0 || batch_count > n_data) batch_count = n_data;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < batch_count; ++k) {
    const int n = static_cast<int>((batch_begin + k) % n_data);
    StatsVector avg = chain_sample_average(
        topo, std::span<const Configuration>(&state.pool.e_chains[n * per], per));
    StatsVector& mean = state.per_data_means[n];
    for (int d = 0; d < mean.dim(); ++d) mean[d] += a_t * (avg[d] - mean[d]);
  }
  state.refresh_empirical_mean();
}

double m_step(TrainerState& state, const KernelParams& m_kernel, double b_t,
              double divergence_bound, long iteration) {
  advance_m(state.pool, state.theta, m_kernel);
  const StatsVector sample_avg =
      chain_sample_average(state.theta.topology, state.pool.m_chains);
  StatsVector direction = state.empirical_mean;
  direction.add_scaled(sample_avg, -1.0);
  for (int i = 0; i < state.theta.topology.num_nodes; ++i)
    state.theta.node_bias[i] += b_t * direction.node(i);
  for (int e = 0; e < state.theta.topology.num_edges(); ++e)
    state.theta.edge_weight[e] += b_t * direction.edge(e);
  for (double v : state.theta.node_bias) {
    if (!std::isfinite(v) || std::abs(v) > divergence_bound)
      throw divergence_error("node bias left the bounded region", iteration);
  }
  for (double v : state.theta.edge_weight) {
    if (!std::isfinite(v) || std::abs(v) > divergence_bound)
      throw divergence_error("edge weight left the bounded region", iteration);
  }
  return direction.l2_norm();
}

TrainerState init_trainer_state(const PairwiseModel& model0, const VariablePartition& part,
                                std::span<const Configuration> data, const TrainConfig& config) {
  if (data.empty()) throw invalid_input_error("training needs a non-empty dataset");
  if (!model0.all_finite()) throw invalid_input_error("initial model has non-finite parameters");
  TrainerState state;
  state.variant = config.variant;
  state.theta = model0;
  const GraphTopology& topo = model0.topology;
  const int n_data = static_cast<int>(data.size());
  const int e_chains = config.variant == Variant::mfpcd ? 0 : config.e_kernel.num_chains;
  state.pool = ChainPool::init(topo, part, data, e_chains,
                               config.variant == Variant::exact_em ? 0 : config.m_kernel.num_chains,
                               config.master_seed);
  state.per_data_means.assign(n_data, StatsVector(topo));
  if (config.variant == Variant::apcd || config.variant == Variant::hapcd) {
    for (int n = 0; n < n_data; ++n) {
      state.per_data_means[n] = chain_sample_average(
          topo, std::span<const Configuration>(&state.pool.e_chains[n * e_chains], e_chains));
    }
  }
  if (config.variant == Variant::hapcd) {
    state.hapcd_sample_means = state.per_data_means;
    state.hapcd_mf_means.assign(n_data, StatsVector(topo));
  }
  state.refresh_empirical_mean();
  return state;
}

namespace detail {

MetricsRecord make_record(const TrainerState& state, const TrainConfig& config, long iteration,
                          std::optional<double> grad_norm, const VariablePartition& part,
                          std::span<const Configuration> data) {
  MetricsRecord rec;
  rec.iteration = iteration;
  rec.timestamp = utc_timestamp();
  rec.variant = variant_name(state.variant);
  const long t_eval = iteration > 0 ? iteration - 1 : 0;
  rec.a = schedule_value(config.a, t_eval);
  rec.b = schedule_value(config.b, t_eval);
  rec.grad_norm_estimate = grad_norm;
  if (config.log_exact && state.theta.topology.num_nodes <= config.enumeration_limit) {
    rec.exact_loglik = exact_marginal_loglik(state.theta, part, data, config.enumeration_limit);
    rec.exact_grad_norm =
        exact_gradient_mmle(state.theta, part, data, config.enumeration_limit).l2_norm();
  }
  return rec;
}

TrainResult run_loop(TrainerState& state, const VariablePartition& part,
                     std::span<const Configuration> data, const TrainConfig& config,
                     const EStepFn& e_step_fn, const TrainHooks& hooks) {
  const int n_data = static_cast<int>(data.size());
  TrainResult result;
  auto emit = [&](const MetricsRecord& rec) {
    result.trace.push_back(rec);
    if (hooks.on_metrics) hooks.on_metrics(rec);
  };
  if (state.t == 0) emit(make_record(state, config, 0, std::nullopt, part, data));
  for (long t = state.t; t < config.total_iterations; ++t) {
    const double a_t = schedule_value(config.a, t);
    const double b_t = schedule_value(config.b, t);
    if (!(a_t > 0.0) || !(b_t > 0.0))
      throw std::logic_error("schedule produced a non-positive step size at t=" +
                             std::to_string(t));
    const long batch_begin = config.minibatch > 0 ? (t * config.minibatch) % n_data : 0;
    const int batch_count = config.minibatch > 0 ? config.minibatch : n_data;
    e_step_fn(state, part, data, a_t, batch_begin, batch_count, t);
    const double grad_norm =
        m_step(state, config.m_kernel, b_t, config.divergence_bound, t);
    state.t = t + 1;
    if ((t + 1) % config.log_interval == 0 || t + 1 == config.total_iterations)
      emit(make_record(state, config, t + 1, grad_norm, part, data));
    if (config.checkpoint_interval > 0 && (t + 1) % config.checkpoint_interval == 0 &&
        hooks.on_checkpoint)
      hooks.on_checkpoint(state);
  }
  result.model = state.theta;
  return result;
}

}  // namespace detail

TrainResult train(const PairwiseModel& model0, const VariablePartition& part,
                  std::span<const Configuration> data, const TrainConfig& config,
                  const TrainHooks& hooks) {
  TrainerState state = init_trainer_state(model0, part, data, config);
  return train_resume(state, part, data, config, hooks);
}

TrainResult train_resume(TrainerState& state, const VariablePartition& part,
                         std::span<const Configuration> data, const TrainConfig& config,
                         const TrainHooks& hooks) {
  config.validate(static_cast<int>(data.size()));
  if (config.variant != Variant::apcd)
    throw invalid_input_error("trainer::train drives the apcd variant; use the baselines module");
  auto apcd_e = [&config](TrainerState& s, const VariablePartition& p,
                          std::span<const Configuration> d, double a_t, long begin, int count,
                          long) { e_step(s, p, d, config.e_kernel, a_t, begin, count); };
  return detail::run_loop(state, part, data, config, apcd_e, hooks);
}

}  // namespace apcd
