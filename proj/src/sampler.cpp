#include "apcd/sampler.hpp"

#include <string>

#include "apcd/errors.hpp"

namespace apcd {

double conditional_on(const PairwiseModel& model, const Configuration& x, int i) {
  return logistic(local_field(model, x, i));
}

void gibbs_sweep_free(const PairwiseModel& model, Configuration& x, RandomStream& stream,
                      double scale) {
  const int n = model.topology.num_nodes;
  for (int i = 0; i < n; ++i) {
    const double p = logistic(scale * local_field(model, x, i));
    x.values[i] = stream.next_double() < p ? 1 : 0;
  }
}

void gibbs_sweep_clamped(const PairwiseModel& model, const VariablePartition& part,
                         Configuration& x, RandomStream& stream, double scale) {
  for (int i : part.hidden) {
    const double p = logistic(scale * local_field(model, x, i));
    x.values[i] = stream.next_double() < p ? 1 : 0;
  }
}

Configuration gibbs_sweep_clamped_checked(const PairwiseModel& model,
                                          const VariablePartition& part, const Configuration& v,
                                          Configuration h, RandomStream& stream) {
  check_configuration(model.topology, h);
  check_configuration(model.topology, v);
  for (int i : part.visible) {
    if (h.values[i] != v.values[i])
      throw invalid_input_error("clamp violation: chain disagrees with v at visible node " +
                                std::to_string(i));
  }
  gibbs_sweep_clamped(model, part, h, stream);
  return h;
}

void KernelParams::validate() const {
  if (ell < 1) throw invalid_input_error("kernel params: ell must be >= 1");
  if (num_chains < 1) throw invalid_input_error("kernel params: num_chains must be >= 1");
}

ChainPool ChainPool::init(const GraphTopology& topo, const VariablePartition& part,
                          std::span<const Configuration> data, int e_chains_per_datum,
                          int m_chain_count, uint64_t master_seed) {
  ChainPool pool;
  pool.num_data = static_cast<int>(data.size());
  pool.e_chains_per_datum = e_chains_per_datum;
  pool.e_chains.reserve(pool.num_data * e_chains_per_datum);
  pool.e_streams.reserve(pool.num_data * e_chains_per_datum);
  for (int n = 0; n < pool.num_data; ++n) {
    check_configuration(topo, data[n]);
    for (int m = 0; m < e_chains_per_datum; ++m) {
      RandomStream stream(derive_stream_seed(master_seed, StreamRole::e_chain, n, m));
      Configuration x = data[n];
      for (int i : part.hidden) x.values[i] = stream.next_bernoulli(0.5) ? 1 : 0;
      pool.e_chains.push_back(std::move(x));
      pool.e_streams.push_back(stream);
    }
  }
  pool.m_chains.reserve(m_chain_count);
  pool.m_streams.reserve(m_chain_count);
  for (int m = 0; m < m_chain_count; ++m) {
    RandomStream stream(derive_stream_seed(master_seed, StreamRole::m_chain, 0, m));
    Configuration x(topo.num_nodes);
    for (int i = 0; i < topo.num_nodes; ++i) x.values[i] = stream.next_bernoulli(0.5) ? 1 : 0;
    pool.m_chains.push_back(std::move(x));
    pool.m_streams.push_back(stream);
  }
  return pool;
}

namespace {

void check_e_sizes(const ChainPool& pool, std::span<const Configuration> data) {
  if (pool.num_data != static_cast<int>(data.size()))
    throw invalid_input_error("chain pool sized for " + std::to_string(pool.num_data) +
                              " data items, got " + std::to_string(data.size()));
}

// Flattened list of chain indices for the requested batch; wraps modulo N.
std::vector<int> batch_chain_indices(const ChainPool& pool, int batch_begin, int batch_count) {
  const int n_data = pool.num_data;
  if (batch_count < 0 || batch_count > n_data) batch_count = n_data;
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(batch_count) * pool.e_chains_per_datum);
  for (int k = 0; k < batch_count; ++k) {
    const int n = (batch_begin + k) % n_data;
    for (int m = 0; m < pool.e_chains_per_datum; ++m)
      idx.push_back(n * pool.e_chains_per_datum + m);
  }
  return idx;
}

}  // namespace

void advance_e(ChainPool& pool, const PairwiseModel& model, const VariablePartition& part,
               std::span<const Configuration> data, const KernelParams& kp, int batch_begin,
               int batch_count) {
  check_e_sizes(pool, data);
  const std::vector<int> idx = batch_chain_indices(pool, batch_begin, batch_count);
  const long count = static_cast<long>(idx.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) {
    const int c = idx[k];
    for (int s = 0; s < kp.ell; ++s)
      gibbs_sweep_clamped(model, part, pool.e_chains[c], pool.e_streams[c]);
  }
}

void advance_m(ChainPool& pool, const PairwiseModel& model, const KernelParams& kp) {
  const long count = pool.m_chain_count();
#pragma omp parallel for schedule(static)
  for (long m = 0; m < count; ++m) {
    for (int s = 0; s < kp.ell; ++s)
      gibbs_sweep_free(model, pool.m_chains[m], pool.m_streams[m]);
  }
}

namespace serial {

void advance_e(ChainPool& pool, const PairwiseModel& model, const VariablePartition& part,
               std::span<const Configuration> data, const KernelParams& kp, int batch_begin,
               int batch_count) {
  check_e_sizes(pool, data);
  for (int c : batch_chain_indices(pool, batch_begin, batch_count)) {
    for (int s = 0; s < kp.ell; ++s)
      gibbs_sweep_clamped(model, part, pool.e_chains[c], pool.e_streams[c]);
  }
}

void advance_m(ChainPool& pool, const PairwiseModel& model, const KernelParams& kp) {
  for (int m = 0; m < pool.m_chain_count(); ++m) {
    for (int s = 0; s < kp.ell; ++s)
      gibbs_sweep_free(model, pool.m_chains[m], pool.m_streams[m]);
  }
}

}  // namespace serial

}  // namespace apcd
