#include "apcd/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "apcd/errors.hpp"

namespace apcd {

HybridRamp HybridRamp::linear(double switch_fraction) {
  HybridRamp r;
  r.switch_fraction = switch_fraction;
  return r;
}

HybridRamp HybridRamp::constant(double switch_fraction, double value) {
  HybridRamp r;
  r.switch_fraction = switch_fraction;
  r.constant_after_switch = true;
  r.constant_value = value;
  return r;
}

void HybridRamp::validate() const {
  if (switch_fraction < 0.0 || switch_fraction > 1.0)
    throw invalid_input_error("ramp switch fraction must lie in [0, 1]");
  if (constant_after_switch && (constant_value < 0.0 || constant_value > 1.0))
    throw invalid_input_error("ramp weight must lie in [0, 1]");
}

double HybridRamp::lambda(long t, long total_iterations) const {
  const long t_switch = static_cast<long>(switch_fraction * static_cast<double>(total_iterations));
  if (t < t_switch) return 0.0;
  if (constant_after_switch) return constant_value;
  const long span = total_iterations - 1 - t_switch;
  if (span <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(t - t_switch) / static_cast<double>(span));
}

MeanFieldState mean_field_posterior(const PairwiseModel& model, const VariablePartition& part,
                                    const Configuration& v, int iters) {
  if (iters < 0) throw invalid_input_error("mean-field iteration count must be >= 0");
  check_configuration(model.topology, v);
  const int n_hidden = static_cast<int>(part.hidden.size());
  std::vector<int> hidden_pos(model.topology.num_nodes, -1);
  for (int k = 0; k < n_hidden; ++k) hidden_pos[part.hidden[k]] = k;
  MeanFieldState state;
  state.q.assign(n_hidden, 0.5);
  for (int sweep = 0; sweep < iters; ++sweep) {
    for (int k = 0; k < n_hidden; ++k) {
      const int i = part.hidden[k];
      double field = model.node_bias[i];
      for (auto [j, e] : model.topology.adjacency[i]) {
        const double m_j = hidden_pos[j] >= 0 ? state.q[hidden_pos[j]]
                                              : static_cast<double>(v.values[j]);
        field += model.edge_weight[e] * m_j;
      }
      state.q[k] = logistic(field);
    }
  }
  return state;
}

StatsVector mf_stats(const GraphTopology& topo, const VariablePartition& part,
                     const Configuration& v, const MeanFieldState& q) {
  if (q.q.size() != part.hidden.size())
    throw invalid_input_error("mean-field state does not match the hidden set");
  std::vector<int> hidden_pos(topo.num_nodes, -1);
  for (size_t k = 0; k < part.hidden.size(); ++k) hidden_pos[part.hidden[k]] = static_cast<int>(k);
  auto moment = [&](int i) {
    return hidden_pos[i] >= 0 ? q.q[hidden_pos[i]] : static_cast<double>(v.values[i]);
  };
  StatsVector out(topo);
  for (int i = 0; i < topo.num_nodes; ++i) out.node(i) = moment(i);
  for (int e = 0; e < topo.num_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    out.edge(e) = moment(i) * moment(j);
  }
  return out;
}

namespace {

void mean_field_assign_all(TrainerState& state, const VariablePartition& part,
                           std::span<const Configuration> data, int mf_iters,
                           std::vector<StatsVector>& target) {
  const int n_data = static_cast<int>(data.size());
#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_data; ++n) {
    const MeanFieldState q = mean_field_posterior(state.theta, part, data[n], mf_iters);
    target[n] = mf_stats(state.theta.topology, part, data[n], q);
  }
}

}  // namespace

TrainerState init_mfpcd_state(const PairwiseModel& model0, const VariablePartition& part,
                              std::span<const Configuration> data, const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.variant = Variant::mfpcd;
  TrainerState state = init_trainer_state(model0, part, data, cfg);
  mean_field_assign_all(state, part, data, cfg.mean_field_iters, state.per_data_means);
  state.refresh_empirical_mean();
  return state;
}

TrainResult train_mfpcd_resume(TrainerState& state, const VariablePartition& part,
                               std::span<const Configuration> data, const TrainConfig& config,
                               const TrainHooks& hooks) {
  TrainConfig cfg = config;
  cfg.variant = Variant::mfpcd;
  cfg.validate(static_cast<int>(data.size()));
  auto mf_e = [&cfg](TrainerState& s, const VariablePartition& p,
                     std::span<const Configuration> d, double, long begin, int count, long) {
    const int n_data = static_cast<int>(d.size());
#pragma omp parallel for schedule(static)
    for (int k = 0; k < count; ++k) {
      const int n = static_cast<int>((begin + k) % n_data);
      const MeanFieldState q = mean_field_posterior(s.theta, p, d[n], cfg.mean_field_iters);
      s.per_data_means[n] = mf_stats(s.theta.topology, p, d[n], q);
    }
    s.refresh_empirical_mean();
  };
  return detail::run_loop(state, part, data, cfg, mf_e, hooks);
}

TrainResult train_mfpcd(const PairwiseModel& model0, const VariablePartition& part,
                        std::span<const Configuration> data, const TrainConfig& config,
                        const TrainHooks& hooks) {
  TrainerState state = init_mfpcd_state(model0, part, data, config);
  return train_mfpcd_resume(state, part, data, config, hooks);
}

TrainerState init_hapcd_state(const PairwiseModel& model0, const VariablePartition& part,
                              std::span<const Configuration> data, const TrainConfig& config,
                              const HybridRamp& ramp) {
  ramp.validate();
  TrainConfig cfg = config;
  cfg.variant = Variant::hapcd;
  TrainerState state = init_trainer_state(model0, part, data, cfg);
  mean_field_assign_all(state, part, data, cfg.mean_field_iters, state.hapcd_mf_means);
  const double lambda0 = ramp.lambda(0, cfg.total_iterations);
  for (size_t n = 0; n < data.size(); ++n) {
    StatsVector fused = state.hapcd_mf_means[n];
    fused.scale(1.0 - lambda0);
    fused.add_scaled(state.hapcd_sample_means[n], lambda0);
    state.per_data_means[n] = fused;
  }
  state.refresh_empirical_mean();
  return state;
}

TrainResult train_hapcd_resume(TrainerState& state, const VariablePartition& part,
                               std::span<const Configuration> data, const TrainConfig& config,
                               const HybridRamp& ramp, const TrainHooks& hooks,
                               const HapcdObserver& observer) {
  ramp.validate();
  TrainConfig cfg = config;
  cfg.variant = Variant::hapcd;
  cfg.validate(static_cast<int>(data.size()));
  auto hybrid_e = [&cfg, &ramp, &observer](TrainerState& s, const VariablePartition& p,
                                           std::span<const Configuration> d, double a_t,
                                           long begin, int count, long t) {
    const int n_data = static_cast<int>(d.size());
    const GraphTopology& topo = s.theta.topology;
    const int per = s.pool.e_chains_per_datum;
    advance_e(s.pool, s.theta, p, d, cfg.e_kernel, static_cast<int>(begin), count);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < count; ++k) {
      const int n = static_cast<int>((begin + k) % n_data);
      StatsVector avg(topo);
      for (int m = 0; m < per; ++m) add_suff_stats(topo, s.pool.e_chain(n, m), avg);
      avg.scale(1.0 / per);
      StatsVector& sampled = s.hapcd_sample_means[n];
      for (int dd = 0; dd < sampled.dim(); ++dd) sampled[dd] += a_t * (avg[dd] - sampled[dd]);
      const MeanFieldState q = mean_field_posterior(s.theta, p, d[n], cfg.mean_field_iters);
      s.hapcd_mf_means[n] = mf_stats(topo, p, d[n], q);
    }
    const double lambda = ramp.lambda(t, cfg.total_iterations);
    for (int n = 0; n < n_data; ++n) {
      StatsVector fused = s.hapcd_mf_means[n];
      fused.scale(1.0 - lambda);
      fused.add_scaled(s.hapcd_sample_means[n], lambda);
      s.per_data_means[n] = fused;
    }
    s.refresh_empirical_mean();
    if (observer) {
      const int n0 = static_cast<int>(begin % n_data);
      observer(t, lambda, s.hapcd_mf_means[n0], s.hapcd_sample_means[n0], s.per_data_means[n0]);
    }
  };
  return detail::run_loop(state, part, data, cfg, hybrid_e, hooks);
}

TrainResult train_hapcd(const PairwiseModel& model0, const VariablePartition& part,
                        std::span<const Configuration> data, const TrainConfig& config,
                        const HybridRamp& ramp, const TrainHooks& hooks,
                        const HapcdObserver& observer) {
  TrainerState state = init_hapcd_state(model0, part, data, config, ramp);
  return train_hapcd_resume(state, part, data, config, ramp, hooks, observer);
}

PairwiseModel fit_to_mean(const PairwiseModel& start, const StatsVector& target_mean,
                          double grad_tol, long max_iters, int enumeration_limit) {
  PairwiseModel theta = start;
  auto objective = [&](const PairwiseModel& m) {
    double dot = 0.0;
    for (int i = 0; i < m.topology.num_nodes; ++i) dot += m.node_bias[i] * target_mean.node(i);
    for (int e = 0; e < m.topology.num_edges(); ++e) dot += m.edge_weight[e] * target_mean.edge(e);
    return dot - exact_log_partition(m, enumeration_limit);
  };
  double step = 1.0;
  double f = objective(theta);
  for (long it = 0; it < max_iters; ++it) {
    StatsVector grad = target_mean;
    grad.add_scaled(exact_mean_params(theta, enumeration_limit), -1.0);
    if (grad.l2_norm() < grad_tol) break;
    PairwiseModel candidate = theta;
    for (int i = 0; i < theta.topology.num_nodes; ++i) candidate.node_bias[i] += step * grad.node(i);
    for (int e = 0; e < theta.topology.num_edges(); ++e)
      candidate.edge_weight[e] += step * grad.edge(e);
    const double fc = objective(candidate);
    if (fc > f) {
      theta = std::move(candidate);
      f = fc;
      step *= 1.5;
    } else {
      step *= 0.5;
      if (step < 1e-18) break;
    }
  }
  return theta;
}

TrainResult train_exact_em(const PairwiseModel& model0, const VariablePartition& part,
                           std::span<const Configuration> data, long max_outer, double inner_tol,
                           int enumeration_limit, const TrainHooks& hooks) {
  if (data.empty()) throw invalid_input_error("exact EM needs a non-empty dataset");
  TrainResult result;
  PairwiseModel model = model0;
  auto emit = [&](long outer) {
    MetricsRecord rec;
    rec.iteration = outer;
    rec.timestamp = "";
    rec.variant = variant_name(Variant::exact_em);
    rec.exact_loglik = exact_marginal_loglik(model, part, data, enumeration_limit);
    rec.exact_grad_norm =
        exact_gradient_mmle(model, part, data, enumeration_limit).l2_norm();
    result.trace.push_back(rec);
    if (hooks.on_metrics) hooks.on_metrics(rec);
    return *rec.exact_loglik;
  };
  double prev_ll = emit(0);
  for (long outer = 1; outer <= max_outer; ++outer) {
    StatsVector mu(model.topology);
    for (const Configuration& v : data)
      mu.add_scaled(exact_posterior_mean(model, part, v, enumeration_limit), 1.0);
    mu.scale(1.0 / static_cast<double>(data.size()));
    model = fit_to_mean(model, mu, inner_tol, 50000, enumeration_limit);
    const double ll = emit(outer);
    if (ll - prev_ll < 1e-9) break;
    prev_ll = ll;
  }
  result.model = model;
  return result;
}

}  // namespace apcd
