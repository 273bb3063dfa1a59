#include "apcd/synth.hpp"

#include <algorithm>
#include <numeric>

#include "apcd/errors.hpp"
#include "apcd/rng.hpp"
#include "apcd/sampler.hpp"

namespace apcd {

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw invalid_input_error("grid dimensions must be positive");
  if (bias_min > bias_max) throw invalid_input_error("bias range is inverted");
  if (!(weight_std > 0.0)) throw invalid_input_error("weight std must be positive");
  if (hidden_fraction < 0.0 || hidden_fraction >= 1.0)
    throw invalid_input_error("hidden fraction must lie in [0, 1)");
}

GraphTopology grid_topology(int rows, int cols) {
  if (rows < 1 || cols < 1) throw invalid_input_error("grid dimensions must be positive");
  std::vector<std::pair<int, int>> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  }
  return GraphTopology(rows * cols, std::move(edges));
}

PairwiseModel random_grid_model(const GridSpec& spec, uint64_t seed) {
  spec.validate();
  PairwiseModel model(grid_topology(spec.rows, spec.cols));
  RandomStream stream(derive_stream_seed(seed, StreamRole::model_gen));
  for (double& b : model.node_bias)
    b = spec.bias_min + stream.next_double() * (spec.bias_max - spec.bias_min);
  for (double& w : model.edge_weight) w = spec.weight_std * stream.next_normal();
  return model;
}

namespace {

Configuration sample_one(const PairwiseModel& model, int sweeps, RandomStream& stream) {
  Configuration x(model.topology.num_nodes);
  for (auto& v : x.values) v = stream.next_bernoulli(0.5) ? 1 : 0;
  for (int s = 0; s < sweeps; ++s) gibbs_sweep_free(model, x, stream);
  return x;
}

}  // namespace

std::vector<Configuration> generate_samples(const PairwiseModel& model, int count,
                                            int sweeps_per_sample, uint64_t seed) {
  if (count < 0) throw invalid_input_error("sample count must be non-negative");
  std::vector<Configuration> out(count);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) {
    RandomStream stream(derive_stream_seed(seed, StreamRole::data_gen, k));
    out[k] = sample_one(model, sweeps_per_sample, stream);
  }
  return out;
}

namespace serial {

std::vector<Configuration> generate_samples(const PairwiseModel& model, int count,
                                            int sweeps_per_sample, uint64_t seed) {
  if (count < 0) throw invalid_input_error("sample count must be non-negative");
  std::vector<Configuration> out(count);
  for (long k = 0; k < count; ++k) {
    RandomStream stream(derive_stream_seed(seed, StreamRole::data_gen, k));
    out[k] = sample_one(model, sweeps_per_sample, stream);
  }
  return out;
}

}  // namespace serial

VariablePartition select_hidden(const GraphTopology& topo, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw invalid_input_error("hidden fraction must lie in [0, 1)");
  const int n = topo.num_nodes;
  const int k = static_cast<int>(fraction * n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomStream stream(derive_stream_seed(seed, StreamRole::hidden_select));
  // Partial Fisher-Yates: the first k slots become the hidden set.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(stream.next_below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<int> hidden(order.begin(), order.begin() + k);
  std::vector<int> visible(order.begin() + k, order.end());
  return VariablePartition(std::move(visible), std::move(hidden), n);
}

}  // namespace apcd
