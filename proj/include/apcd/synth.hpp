#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "apcd/model.hpp"

namespace apcd {

/// Synthetic grid experiment description. Weight dispersion is stored as a
/// standard deviation; the default sqrt(0.5) corresponds to variance 0.5.
struct GridSpec {
  int rows = 1;
  int cols = 1;
  double bias_min = -3.0;
  double bias_max = 3.0;
  double weight_std = std::sqrt(0.5);
  double hidden_fraction = 0.0;

  void validate() const;
};

/// 4-neighbor lattice; |E| = rows*(cols-1) + cols*(rows-1). Node (r, c) has
/// index r*cols + c.
GraphTopology grid_topology(int rows, int cols);

/// Biases uniform on [bias_min, bias_max]; weights Gaussian(0, weight_std^2).
PairwiseModel random_grid_model(const GridSpec& spec, uint64_t seed);

/// Each sample comes from its own fresh chain: fair-coin start, then
/// `sweeps_per_sample` full Gibbs sweeps. OpenMP-parallel across samples.
std::vector<Configuration> generate_samples(const PairwiseModel& model, int count,
                                            int sweeps_per_sample, uint64_t seed);

namespace serial {
std::vector<Configuration> generate_samples(const PairwiseModel& model, int count,
                                            int sweeps_per_sample, uint64_t seed);
}

/// floor(fraction * |V|) hidden nodes chosen uniformly without replacement.
VariablePartition select_hidden(const GraphTopology& topo, double fraction, uint64_t seed);

}  // namespace apcd
