#pragma once

#include <span>
#include <vector>

#include "apcd/model.hpp"
#include "apcd/rng.hpp"

namespace apcd {

/// Numerically stable logistic function.
inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// theta_i + sum_{j in N(i)} theta_ij x_j.
inline double local_field(const PairwiseModel& model, const Configuration& x, int i) {
  double field = model.node_bias[i];
  for (auto [j, e] : model.topology.adjacency[i]) {
    if (x.values[j]) field += model.edge_weight[e];
  }
  return field;
}

/// p(x_i = 1 | x_{-i}) for the pairwise binary model.
double conditional_on(const PairwiseModel& model, const Configuration& x, int i);

/// One transition of K^M: a full systematic sweep, nodes resampled in
/// ascending index order. `scale` multiplies every parameter (used by AIS to
/// target beta * theta); the invariant distribution is p_{scale*theta}.
void gibbs_sweep_free(const PairwiseModel& model, Configuration& x, RandomStream& stream,
                      double scale = 1.0);

/// One transition of K^E_{theta, v}: hidden nodes only, ascending order.
/// The visible entries of x are never touched.
void gibbs_sweep_clamped(const PairwiseModel& model, const VariablePartition& part,
                         Configuration& x, RandomStream& stream, double scale = 1.0);

/// Checked variant matching the op contract: verifies that the visible
/// entries of h agree with v before sweeping.
Configuration gibbs_sweep_clamped_checked(const PairwiseModel& model,
                                          const VariablePartition& part, const Configuration& v,
                                          Configuration h, RandomStream& stream);

/// ell transitions per advance, num_chains Markov chains.
struct KernelParams {
  int ell = 1;
  int num_chains = 1;

  void validate() const;
};

/// Persistent chains: N x M_e clamped hidden configurations plus M_m free
/// configurations, each with its own stream derived from the master seed.
struct ChainPool {
  int num_data = 0;
  int e_chains_per_datum = 0;
  std::vector<Configuration> e_chains;  // [n * e_chains_per_datum + m]
  std::vector<RandomStream> e_streams;
  std::vector<Configuration> m_chains;  // [m]
  std::vector<RandomStream> m_streams;

  Configuration& e_chain(int n, int m) { return e_chains[n * e_chains_per_datum + m]; }
  const Configuration& e_chain(int n, int m) const { return e_chains[n * e_chains_per_datum + m]; }

  int m_chain_count() const { return static_cast<int>(m_chains.size()); }

  /// E-chain hidden bits start as fair coins from the chain's own stream;
  /// visible bits are clamped to the datum. M-chains start as all-coin flips.
  static ChainPool init(const GraphTopology& topo, const VariablePartition& part,
                        std::span<const Configuration> data, int e_chains_per_datum,
                        int m_chain_count, uint64_t master_seed);
};

/// Advances every E-chain of data items [batch_begin, batch_begin+batch_count)
/// (indices taken modulo N) by kp.ell clamped sweeps. batch_count < 0 means
/// the whole pool. OpenMP-parallel across chains; bit-identical to
/// serial::advance_e for any worker count.
void advance_e(ChainPool& pool, const PairwiseModel& model, const VariablePartition& part,
               std::span<const Configuration> data, const KernelParams& kp, int batch_begin = 0,
               int batch_count = -1);

/// Advances all M free chains by kp.ell sweeps (OpenMP-parallel).
void advance_m(ChainPool& pool, const PairwiseModel& model, const KernelParams& kp);

/// Plain-loop reference implementations; kept for testing and benchmarks.
namespace serial {
void advance_e(ChainPool& pool, const PairwiseModel& model, const VariablePartition& part,
               std::span<const Configuration> data, const KernelParams& kp, int batch_begin = 0,
               int batch_count = -1);
void advance_m(ChainPool& pool, const PairwiseModel& model, const KernelParams& kp);
}  // namespace serial

}  // namespace apcd
