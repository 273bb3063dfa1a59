#include "apcd/ais.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apcd/errors.hpp"
#include "apcd/rng.hpp"
#include "apcd/sampler.hpp"

namespace apcd {

AisPlan AisPlan::uniform(int num_steps, int num_chains) {
  AisPlan plan;
  plan.num_chains = num_chains;
  plan.ladder.resize(num_steps + 1);
  for (int k = 0; k <= num_steps; ++k)
    plan.ladder[k] = static_cast<double>(k) / static_cast<double>(num_steps);
  plan.validate();
  return plan;
}

AisPlan AisPlan::geometric(int num_steps, int num_chains, double smallest) {
  if (num_steps < 2) throw invalid_input_error("geometric ladder needs at least 2 steps");
  if (!(smallest > 0.0 && smallest < 1.0))
    throw invalid_input_error("geometric ladder needs smallest in (0, 1)");
  AisPlan plan;
  plan.num_chains = num_chains;
  plan.ladder.resize(num_steps + 1);
  plan.ladder[0] = 0.0;
  // beta_1 = smallest, ..., beta_K = 1 in geometric progression.
  const double ratio = std::pow(1.0 / smallest, 1.0 / static_cast<double>(num_steps - 1));
  double beta = smallest;
  for (int k = 1; k <= num_steps; ++k) {
    plan.ladder[k] = std::min(beta, 1.0);
    beta *= ratio;
  }
  plan.ladder[num_steps] = 1.0;
  plan.validate();
  return plan;
}

void AisPlan::validate() const {
  if (num_chains < 1) throw invalid_input_error("AIS needs at least one chain");
  if (ladder.size() < 2 || ladder.front() != 0.0 || ladder.back() != 1.0)
    throw invalid_input_error("AIS ladder must start at 0 and end at 1");
  for (size_t k = 1; k < ladder.size(); ++k) {
    if (!(ladder[k] > ladder[k - 1]))
      throw invalid_input_error("AIS ladder must be strictly increasing");
  }
}

namespace {

struct LogWeightSummary {
  double log_mean = 0.0;
  double variance = 0.0;
};

LogWeightSummary combine_log_weights(const std::vector<double>& logw) {
  double max_w = -std::numeric_limits<double>::infinity();
  for (double w : logw) max_w = std::max(max_w, w);
  double acc = 0.0;
  for (double w : logw) acc += std::exp(w - max_w);
  LogWeightSummary out;
  out.log_mean = max_w + std::log(acc / static_cast<double>(logw.size()));
  double mean = 0.0;
  for (double w : logw) mean += w;
  mean /= static_cast<double>(logw.size());
  for (double w : logw) out.variance += (w - mean) * (w - mean);
  out.variance /= static_cast<double>(logw.size());
  return out;
}

// One annealing run over the free (or clamped) model. The chain starts from
// an exact sample of the beta = 0 level (fair coins on the free nodes) and
// accumulates (beta_k - beta_{k-1}) <theta, phi(x)> before each transition
// at beta_k.
double anneal_one_chain(const PairwiseModel& model, const VariablePartition* clamp_part,
                        const Configuration* clamp_v, const AisPlan& plan, RandomStream stream) {
  Configuration x(model.topology.num_nodes);
  if (clamp_part) {
    x = *clamp_v;
    for (int i : clamp_part->hidden) x.values[i] = stream.next_bernoulli(0.5) ? 1 : 0;
  } else {
    for (auto& v : x.values) v = stream.next_bernoulli(0.5) ? 1 : 0;
  }
  double log_weight = 0.0;
  for (size_t k = 1; k < plan.ladder.size(); ++k) {
    const double beta = plan.ladder[k];
    log_weight += (beta - plan.ladder[k - 1]) * log_unnormalized(model, x);
    if (clamp_part) {
      gibbs_sweep_clamped(model, *clamp_part, x, stream, beta);
    } else {
      gibbs_sweep_free(model, x, stream, beta);
    }
  }
  return log_weight;
}

AisResult run_ais(const PairwiseModel& model, const VariablePartition* clamp_part,
                  const Configuration* clamp_v, const AisPlan& plan, uint64_t seed,
                  StreamRole role, uint64_t datum_key, bool parallel) {
  plan.validate();
  std::vector<double> logw(plan.num_chains);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long m = 0; m < plan.num_chains; ++m) {
      logw[m] = anneal_one_chain(model, clamp_part, clamp_v, plan,
                                 RandomStream(derive_stream_seed(seed, role, datum_key, m)));
    }
  } else {
    for (long m = 0; m < plan.num_chains; ++m) {
      logw[m] = anneal_one_chain(model, clamp_part, clamp_v, plan,
                                 RandomStream(derive_stream_seed(seed, role, datum_key, m)));
    }
  }
  const LogWeightSummary summary = combine_log_weights(logw);
  const int free_vars = clamp_part ? static_cast<int>(clamp_part->hidden.size())
                                   : model.topology.num_nodes;
  AisResult result;
  result.log_z = free_vars * std::log(2.0) + summary.log_mean;
  result.weight_variance = summary.variance;
  result.high_variance = summary.variance > 1.0;
  return result;
}

// Content hash of the visible assignment, so identical test points share
// identical chain streams.
uint64_t visible_content_key(const VariablePartition& part, const Configuration& v) {
  uint64_t h = 0x243F6A8885A308D3ull;
  for (int i : part.visible) h = detail::mix64(h ^ (static_cast<uint64_t>(v.values[i]) + 0x9E37ull * i));
  return h;
}

}  // namespace

AisResult ais_log_partition(const PairwiseModel& model, const AisPlan& plan, uint64_t seed) {
  return run_ais(model, nullptr, nullptr, plan, seed, StreamRole::ais_free, 0, true);
}

namespace serial {
AisResult ais_log_partition(const PairwiseModel& model, const AisPlan& plan, uint64_t seed) {
  return run_ais(model, nullptr, nullptr, plan, seed, StreamRole::ais_free, 0, false);
}
}  // namespace serial

AisResult ais_clamped_log_sum(const PairwiseModel& model, const VariablePartition& part,
                              const Configuration& v, const AisPlan& plan, uint64_t seed) {
  check_configuration(model.topology, v);
  return run_ais(model, &part, &v, plan, seed, StreamRole::ais_clamped,
                 visible_content_key(part, v), true);
}

std::vector<double> ais_test_loglik(const PairwiseModel& model, const VariablePartition& part,
                                    std::span<const Configuration> testset, const AisPlan& plan,
                                    uint64_t seed) {
  const AisResult global = ais_log_partition(model, plan, seed);
  std::vector<double> out;
  out.reserve(testset.size());
  for (const Configuration& v : testset)
    out.push_back(ais_clamped_log_sum(model, part, v, plan, seed).log_z - global.log_z);
  return out;
}

}  // namespace apcd
