#include <doctest.h>

#include <cmath>
#include <map>

#include "apcd/errors.hpp"
#include "apcd/sampler.hpp"
#include "test_util.hpp"

using namespace apcd;
using namespace apcd::testutil;

TEST_CASE("conditional_on") {
  SUBCASE("zero field gives a fair coin") {
    PairwiseModel model{chain_topology(3)};
    CHECK(conditional_on(model, config_of({0, 0, 0}), 1) == 0.5);
  }
  SUBCASE("bias cancelled by an active negative weight") {
    PairwiseModel model = two_node_model(0.0, 1.0, -1.0);
    CHECK(conditional_on(model, config_of({1, 0}), 1) == 0.5);
  }
  SUBCASE("logistic of the bias when neighbors are off") {
    PairwiseModel model = two_node_model(2.0, 0.0, 5.0);
    CHECK(conditional_on(model, config_of({0, 0}), 0) ==
          doctest::Approx(0.8807970779778823).epsilon(1e-12));
  }
  SUBCASE("matches the enumerated conditional on a random model") {
    RandomStream stream(5);
    const GraphTopology topo = random_topology(5, 0.6, stream);
    const PairwiseModel model = random_model(topo, stream, 1.5, 1.5);
    const auto dist = brute_force_distribution(model);
    for (uint64_t mask = 0; mask < dist.size(); ++mask) {
      for (int i = 0; i < 5; ++i) {
        const uint64_t on = mask | (uint64_t{1} << i);
        const uint64_t off = mask & ~(uint64_t{1} << i);
        const double expected = dist[on] / (dist[on] + dist[off]);
        CHECK(conditional_on(model, config_from_mask(5, mask), i) ==
              doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("free sweep invariance: explicit 4x4 kernel on two nodes") {
  const PairwiseModel model = two_node_model(0.4, -0.7, 1.3);
  const auto pi = brute_force_distribution(model);
  // Explicit one-sweep kernel: K = K_site0 * K_site1 on the 4 states.
  double kernel[4][4] = {};
  for (uint64_t s = 0; s < 4; ++s) {
    // site 0 first
    const double p0 = conditional_on(model, config_from_mask(2, s), 0);
    for (int b0 = 0; b0 < 2; ++b0) {
      const uint64_t mid = (s & 2u) | static_cast<uint64_t>(b0);
      const double w0 = b0 ? p0 : 1.0 - p0;
      const double p1 = conditional_on(model, config_from_mask(2, mid), 1);
      for (int b1 = 0; b1 < 2; ++b1) {
        const uint64_t to = (mid & 1u) | (static_cast<uint64_t>(b1) << 1);
        kernel[s][to] += w0 * (b1 ? p1 : 1.0 - p1);
      }
    }
  }
  for (uint64_t to = 0; to < 4; ++to) {
    double acc = 0.0;
    for (uint64_t s = 0; s < 4; ++s) acc += pi[s] * kernel[s][to];
    CHECK(std::abs(acc - pi[to]) < 1e-12);
  }
}

TEST_CASE("sweep kernels leave their targets invariant (random models)") {
  RandomStream stream(101);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 3 + static_cast<int>(stream.next_below(4));
    const GraphTopology topo = random_topology(n, 0.5, stream);
    const PairwiseModel model = random_model(topo, stream, 1.5, 1.5);
    {
      std::vector<int> all_nodes(n);
      for (int i = 0; i < n; ++i) all_nodes[i] = i;
      const auto pi = brute_force_distribution(model);
      const auto evolved = evolve_sweep(model, all_nodes, Configuration(n), pi);
      for (size_t s = 0; s < pi.size(); ++s) CHECK(std::abs(evolved[s] - pi[s]) < 1e-12);
    }
    {
      // Clamped kernel against the conditional distribution.
      const VariablePartition part = random_partition(n, 0.5, stream);
      const Configuration v = config_from_mask(n, stream.next_u64() & ((1u << n) - 1));
      const auto joint = brute_force_distribution(model);
      const int h = static_cast<int>(part.hidden.size());
      std::vector<double> cond(size_t{1} << h, 0.0);
      double total = 0.0;
      for (uint64_t hm = 0; hm < cond.size(); ++hm) {
        Configuration x = v;
        for (int b = 0; b < h; ++b) x.values[part.hidden[b]] = static_cast<uint8_t>((hm >> b) & 1u);
        uint64_t mask = 0;
        for (int i = 0; i < n; ++i) mask |= static_cast<uint64_t>(x.values[i]) << i;
        cond[hm] = joint[mask];
        total += joint[mask];
      }
      for (double& c : cond) c /= total;
      const auto evolved = evolve_sweep(model, part.hidden, v, cond);
      for (size_t s = 0; s < cond.size(); ++s) CHECK(std::abs(evolved[s] - cond[s]) < 1e-12);
    }
  }
}

TEST_CASE("gibbs_sweep_free statistical behavior") {
  SUBCASE("uniform target produces fair independent coins") {
    PairwiseModel model{chain_topology(4)};
    RandomStream stream(202);
    Configuration x(4);
    int counts[4] = {};
    const int sweeps = 20000;
    for (int s = 0; s < sweeps; ++s) {
      gibbs_sweep_free(model, x, stream);
      for (int i = 0; i < 4; ++i) counts[i] += x.values[i];
    }
    for (int i = 0; i < 4; ++i) {
      const double freq = static_cast<double>(counts[i]) / sweeps;
      CHECK(std::abs(freq - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(sweeps)));
    }
  }
  SUBCASE("saturated biases pin the configuration") {
    PairwiseModel model{chain_topology(4)};
    for (double& b : model.node_bias) b = 50.0;
    RandomStream stream(203);
    Configuration x(4);
    gibbs_sweep_free(model, x, stream);
    for (int i = 0; i < 4; ++i) CHECK(x.values[i] == 1);
  }
}

TEST_CASE("gibbs_sweep_clamped") {
  SUBCASE("empty hidden set returns the input unchanged") {
    const PairwiseModel model = two_node_model(0.5, 0.5, 0.5);
    const VariablePartition part = VariablePartition::all_visible(2);
    RandomStream stream(1);
    const Configuration v = config_of({1, 0});
    CHECK(gibbs_sweep_clamped_checked(model, part, v, v, stream) == v);
  }
  SUBCASE("clamp violation is rejected") {
    const PairwiseModel model = two_node_model(0.0, 0.0, 0.0);
    const VariablePartition part({0}, {1}, 2);
    RandomStream stream(2);
    CHECK_THROWS_AS(
        gibbs_sweep_clamped_checked(model, part, config_of({1, 0}), config_of({0, 0}), stream),
        invalid_input_error);
  }
  SUBCASE("disconnected zero-bias hidden node is a fair coin") {
    PairwiseModel model{GraphTopology(2, {})};
    const VariablePartition part({0}, {1}, 2);
    RandomStream stream(3);
    Configuration x = config_of({1, 0});
    int ones = 0;
    const int sweeps = 20000;
    for (int s = 0; s < sweeps; ++s) {
      gibbs_sweep_clamped(model, part, x, stream);
      ones += x.values[1];
    }
    CHECK(std::abs(ones / static_cast<double>(sweeps) - 0.5) < 0.015);
  }
  SUBCASE("long-run frequency matches the exact posterior mean") {
    const PairwiseModel model = two_node_model(0.0, 0.4, 1.1);
    const VariablePartition part({0}, {1}, 2);
    const double target = exact_posterior_mean(model, part, config_of({1, 0})).node(1);
    RandomStream stream(4);
    Configuration x = config_of({1, 0});
    long ones = 0;
    const int sweeps = 200000;
    for (int s = 0; s < sweeps; ++s) {
      gibbs_sweep_clamped(model, part, x, stream);
      ones += x.values[1];
    }
    CHECK(std::abs(ones / static_cast<double>(sweeps) - target) < 0.01);
  }
  SUBCASE("visible coordinates never change across sweeps") {
    RandomStream stream(5);
    const GraphTopology topo = random_topology(6, 0.5, stream);
    const PairwiseModel model = random_model(topo, stream, 2.0, 2.0);
    const VariablePartition part = random_partition(6, 0.5, stream);
    Configuration x = config_from_mask(6, 0b110010);
    const Configuration original = x;
    for (int s = 0; s < 500; ++s) gibbs_sweep_clamped(model, part, x, stream);
    for (int i : part.visible) CHECK(x.values[i] == original.values[i]);
  }
}

TEST_CASE("advance_e / advance_m") {
  RandomStream stream(606);
  const GraphTopology topo = random_topology(5, 0.5, stream);
  const PairwiseModel model = random_model(topo, stream);
  const VariablePartition part = random_partition(5, 0.5, stream);
  const std::vector<Configuration> data = {config_from_mask(5, 6), config_from_mask(5, 25)};

  SUBCASE("ell = 0 leaves the pool unchanged") {
    ChainPool pool = ChainPool::init(topo, part, data, 3, 4, 9);
    ChainPool copy = pool;
    advance_e(pool, model, part, data, KernelParams{0, 3});
    advance_m(pool, model, KernelParams{0, 4});
    CHECK(pool.e_chains == copy.e_chains);
    CHECK(pool.m_chains == copy.m_chains);
  }
  SUBCASE("identical seeds give identical pools") {
    ChainPool a = ChainPool::init(topo, part, data, 3, 4, 9);
    ChainPool b = ChainPool::init(topo, part, data, 3, 4, 9);
    const KernelParams kp{5, 3};
    advance_e(a, model, part, data, kp);
    advance_e(b, model, part, data, kp);
    advance_m(a, model, KernelParams{5, 4});
    advance_m(b, model, KernelParams{5, 4});
    CHECK(a.e_chains == b.e_chains);
    CHECK(a.m_chains == b.m_chains);
    for (size_t c = 0; c < a.e_streams.size(); ++c)
      CHECK(a.e_streams[c].state() == b.e_streams[c].state());
  }
  SUBCASE("serial and OpenMP paths are bit-identical") {
    ChainPool a = ChainPool::init(topo, part, data, 4, 6, 10);
    ChainPool b = a;
    const KernelParams kp{7, 4};
    serial::advance_e(a, model, part, data, kp);
    advance_e(b, model, part, data, kp);
    serial::advance_m(a, model, KernelParams{7, 6});
    advance_m(b, model, KernelParams{7, 6});
    CHECK(a.e_chains == b.e_chains);
    CHECK(a.m_chains == b.m_chains);
  }
  SUBCASE("zero-parameter chains approach fair hidden bits as M grows") {
    PairwiseModel uniform(topo);
    const int big_m = 4000;
    ChainPool pool = ChainPool::init(topo, part, data, big_m, 1, 12);
    advance_e(pool, model, part, data, KernelParams{0, big_m});  // keep init coins
    for (size_t n = 0; n < data.size(); ++n) {
      for (int i : part.hidden) {
        double avg = 0.0;
        for (int m = 0; m < big_m; ++m) avg += pool.e_chain(static_cast<int>(n), m).values[i];
        avg /= big_m;
        CHECK(std::abs(avg - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(big_m)));
      }
    }
    (void)uniform;
  }
  SUBCASE("pool/data size mismatch is rejected") {
    ChainPool pool = ChainPool::init(topo, part, data, 2, 2, 9);
    const std::vector<Configuration> other = {config_from_mask(5, 1)};
    CHECK_THROWS_AS(advance_e(pool, model, part, other, KernelParams{1, 2}),
                    invalid_input_error);
  }
}

TEST_CASE("ergodic frequencies match the exact distribution on a 2x2 grid") {
  RandomStream param_stream(777);
  PairwiseModel model{GraphTopology(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}})};
  for (double& b : model.node_bias) b = 2.0 * param_stream.next_double() - 1.0;
  for (double& w : model.edge_weight) w = 2.0 * param_stream.next_double() - 1.0;
  const auto pi = brute_force_distribution(model);
  RandomStream stream(778);
  Configuration x(4);
  std::vector<long> counts(16, 0);
  const int burn_in = 2000;
  const int sweeps = 200000;
  for (int s = 0; s < burn_in; ++s) gibbs_sweep_free(model, x, stream);
  for (int s = 0; s < sweeps; ++s) {
    gibbs_sweep_free(model, x, stream);
    uint64_t mask = 0;
    for (int i = 0; i < 4; ++i) mask |= static_cast<uint64_t>(x.values[i]) << i;
    counts[mask]++;
  }
  double tv = 0.0;
  for (int m = 0; m < 16; ++m)
    tv += std::abs(counts[m] / static_cast<double>(sweeps) - pi[m]);
  CHECK(tv / 2.0 < 0.01);
}

TEST_CASE("stream derivation is a pure function with disjoint roles") {
  const uint64_t a = derive_stream_seed(42, StreamRole::e_chain, 3, 5);
  CHECK(a == derive_stream_seed(42, StreamRole::e_chain, 3, 5));
  CHECK(a != derive_stream_seed(42, StreamRole::m_chain, 3, 5));
  CHECK(a != derive_stream_seed(42, StreamRole::e_chain, 5, 3));
  CHECK(a != derive_stream_seed(43, StreamRole::e_chain, 3, 5));
}

TEST_CASE("rng state round-trips through hex") {
  RandomStream stream(909);
  stream.next_u64();
  const RandomStream restored = RandomStream::from_hex(stream.state_hex());
  CHECK(restored.state() == stream.state());
  CHECK_THROWS_AS(RandomStream::from_hex("xyz"), invalid_input_error);
}
