#include <doctest.h>

#include <cmath>
#include <numbers>

#include "apcd/ais.hpp"
#include "apcd/errors.hpp"
#include "apcd/eval.hpp"
#include "apcd/parzen.hpp"
#include "apcd/synth.hpp"
#include "test_util.hpp"

using namespace apcd;
using namespace apcd::testutil;

namespace {

std::vector<uint8_t> bits(std::initializer_list<int> vals) {
  std::vector<uint8_t> out;
  for (int v : vals) out.push_back(static_cast<uint8_t>(v));
  return out;
}

}  // namespace

TEST_CASE("parzen_log_density") {
  SUBCASE("single reference equal to the query") {
    const ParzenEstimator est({bits({1, 0, 1})}, 0.5);
    const double expected = -1.5 * std::log(2.0 * std::numbers::pi * 0.25);
    CHECK(parzen_log_density(est, bits({1, 0, 1})) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("equidistant pair behaves like a single sample at that distance") {
    const ParzenEstimator pair({bits({0, 0}), bits({1, 1})}, 0.7);
    const ParzenEstimator single({bits({0, 0})}, 0.7);
    // The query (1,0) is at squared distance 1 from both pair references and
    // from the lone reference: averaging equal kernel terms changes nothing.
    CHECK(parzen_log_density(pair, bits({1, 0})) ==
          doctest::Approx(parzen_log_density(single, bits({1, 0}))).epsilon(1e-14));
  }
  SUBCASE("scalar Gaussian value") {
    const ParzenEstimator est({bits({0})}, 1.0);
    CHECK(parzen_log_density(est, bits({1})) ==
          doctest::Approx(-0.5 - 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(parzen_log_density(est, bits({1})) == doctest::Approx(-1.41894).epsilon(1e-5));
  }
  SUBCASE("permutation of the reference samples is irrelevant") {
    const std::vector<std::vector<uint8_t>> a = {bits({0, 0}), bits({1, 0}), bits({1, 1})};
    const std::vector<std::vector<uint8_t>> b = {bits({1, 1}), bits({0, 0}), bits({1, 0})};
    CHECK(parzen_log_density(ParzenEstimator(a, 0.4), bits({0, 1})) ==
          doctest::Approx(parzen_log_density(ParzenEstimator(b, 0.4), bits({0, 1})))
              .epsilon(1e-15));
  }
  SUBCASE("monotone in sigma for far-away queries") {
    // Query far outside the sample diameter: widening the kernel can only help.
    const std::vector<std::vector<uint8_t>> refs = {bits({0, 0, 0, 0, 0, 0, 0, 0})};
    const auto query = bits({1, 1, 1, 1, 1, 1, 1, 1});
    double prev = parzen_log_density(ParzenEstimator(refs, 0.1), query);
    for (double sigma : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      const double cur = parzen_log_density(ParzenEstimator(refs, sigma), query);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    const ParzenEstimator est({bits({1, 0})}, 0.5);
    CHECK_THROWS_AS(parzen_log_density(est, bits({1, 0, 1})), invalid_input_error);
  }
}

TEST_CASE("parzen_avg_loglik") {
  const ParzenEstimator est({bits({0, 0}), bits({1, 1})}, 0.6);
  SUBCASE("single test point has zero SEM") {
    const std::vector<std::vector<uint8_t>> testset = {bits({1, 0})};
    const MeanSem r = parzen_avg_loglik(est, testset);
    CHECK(r.sem == 0.0);
  }
  SUBCASE("duplicating the test set scales the SEM by 1/sqrt(2)") {
    const std::vector<std::vector<uint8_t>> testset = {bits({1, 0}), bits({0, 0}), bits({1, 1})};
    std::vector<std::vector<uint8_t>> doubled = testset;
    doubled.insert(doubled.end(), testset.begin(), testset.end());
    const MeanSem one = parzen_avg_loglik(est, testset);
    const MeanSem two = parzen_avg_loglik(est, doubled);
    CHECK(two.mean == doctest::Approx(one.mean).epsilon(1e-14));
    CHECK(two.sem == doctest::Approx(one.sem / std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("test-set order is irrelevant") {
    const std::vector<std::vector<uint8_t>> fwd = {bits({1, 0}), bits({0, 0}), bits({1, 1})};
    const std::vector<std::vector<uint8_t>> rev = {bits({1, 1}), bits({0, 0}), bits({1, 0})};
    CHECK(parzen_avg_loglik(est, fwd).mean == doctest::Approx(parzen_avg_loglik(est, rev).mean));
    CHECK(parzen_avg_loglik(est, fwd).sem == doctest::Approx(parzen_avg_loglik(est, rev).sem));
  }
  SUBCASE("serial path matches the OpenMP path") {
    const std::vector<std::vector<uint8_t>> testset = {bits({1, 0}), bits({0, 1}), bits({0, 0})};
    const MeanSem a = serial::parzen_avg_loglik(est, testset);
    const MeanSem b = parzen_avg_loglik(est, testset);
    CHECK(a.mean == b.mean);
    CHECK(a.sem == b.sem);
  }
  SUBCASE("empty test set is rejected") {
    const std::vector<std::vector<uint8_t>> empty;
    CHECK_THROWS_AS(parzen_avg_loglik(est, empty), invalid_input_error);
  }
}

TEST_CASE("parzen_select_sigma") {
  SUBCASE("singleton grid") {
    const std::vector<std::vector<uint8_t>> samples = {bits({0, 0})};
    const std::vector<double> grid = {0.37};
    CHECK(parzen_select_sigma(samples, samples, grid) == 0.37);
  }
  SUBCASE("validation on the samples themselves prefers the peaked kernel") {
    const std::vector<std::vector<uint8_t>> samples = {bits({0, 0}), bits({1, 1})};
    const std::vector<double> grid = {0.1, 10.0};
    CHECK(parzen_select_sigma(samples, samples, grid) == 0.1);
  }
  SUBCASE("grid order does not change the selection") {
    const std::vector<std::vector<uint8_t>> samples = {bits({0, 0}), bits({1, 0}), bits({1, 1})};
    const std::vector<std::vector<uint8_t>> validation = {bits({0, 1}), bits({1, 1})};
    const std::vector<double> fwd = {0.1, 0.3, 0.5, 0.8};
    const std::vector<double> rev = {0.8, 0.5, 0.3, 0.1};
    CHECK(parzen_select_sigma(samples, validation, fwd) ==
          parzen_select_sigma(samples, validation, rev));
  }
  SUBCASE("empty grid is rejected") {
    const std::vector<std::vector<uint8_t>> samples = {bits({0})};
    std::vector<double> grid;
    CHECK_THROWS_AS(parzen_select_sigma(samples, samples, grid), invalid_input_error);
  }
}

TEST_CASE("ais_log_partition") {
  SUBCASE("zero-parameter target is exact for any ladder and chain count") {
    PairwiseModel model{grid_topology(2, 3)};
    for (int steps : {1, 3, 50}) {
      for (int chains : {1, 7}) {
        const AisResult r = ais_log_partition(model, AisPlan::uniform(steps, chains), 5);
        CHECK(r.log_z == 6.0 * std::log(2.0));
        CHECK(r.weight_variance == 0.0);
        CHECK(!r.high_variance);
      }
    }
  }
  SUBCASE("close to the enumerated value on a 3x3 grid") {
    GridSpec spec;
    spec.rows = 3;
    spec.cols = 3;
    const PairwiseModel model = random_grid_model(spec, 404);
    const double exact = exact_log_partition(model);
    const AisResult r = ais_log_partition(model, AisPlan::uniform(1000, 100), 405);
    CHECK(std::abs(r.log_z - exact) < 0.1);
  }
  SUBCASE("a single-step ladder on a strongly coupled model flags high variance") {
    PairwiseModel model{grid_topology(2, 2)};
    for (double& w : model.edge_weight) w = 4.0;
    for (double& b : model.node_bias) b = -2.0;
    const AisResult r = ais_log_partition(model, AisPlan::uniform(1, 64), 7);
    CHECK(r.high_variance);
    const AisResult fine = ais_log_partition(model, AisPlan::uniform(2000, 64), 7);
    CHECK(!fine.high_variance);
  }
  SUBCASE("serial and OpenMP paths agree bit-for-bit") {
    GridSpec spec;
    spec.rows = 2;
    spec.cols = 3;
    const PairwiseModel model = random_grid_model(spec, 11);
    const AisResult a = serial::ais_log_partition(model, AisPlan::uniform(40, 16), 12);
    const AisResult b = ais_log_partition(model, AisPlan::uniform(40, 16), 12);
    CHECK(a.log_z == b.log_z);
    CHECK(a.weight_variance == b.weight_variance);
  }
  SUBCASE("ladder validation") {
    AisPlan bad;
    bad.ladder = {0.0, 0.5, 0.4, 1.0};
    CHECK_THROWS_AS(bad.validate(), invalid_input_error);
    AisPlan no_endpoint;
    no_endpoint.ladder = {0.0, 0.5};
    CHECK_THROWS_AS(no_endpoint.validate(), invalid_input_error);
    const AisPlan geo = AisPlan::geometric(100, 10);
    CHECK(geo.ladder.front() == 0.0);
    CHECK(geo.ladder.back() == 1.0);
  }
}

TEST_CASE("ais_test_loglik") {
  GridSpec spec;
  spec.rows = 2;
  spec.cols = 3;
  spec.bias_min = -1.5;
  spec.bias_max = 1.5;
  const PairwiseModel model = random_grid_model(spec, 21);
  SUBCASE("no hidden nodes: the clamped sum is the raw score") {
    const VariablePartition part = VariablePartition::all_visible(6);
    const Configuration v = config_from_mask(6, 0b10110);
    const AisResult clamped = ais_clamped_log_sum(model, part, v, AisPlan::uniform(25, 4), 3);
    CHECK(clamped.log_z == doctest::Approx(log_unnormalized(model, v)).epsilon(1e-12));
  }
  SUBCASE("matches the exact marginal log-likelihood per datum") {
    const VariablePartition part = select_hidden(model.topology, 0.4, 22);
    const auto dist = brute_force_distribution(model);
    RandomStream stream(23);
    std::vector<Configuration> testset;
    for (int k = 0; k < 4; ++k) testset.push_back(exact_sample(model, dist, stream));
    const auto estimates = ais_test_loglik(model, part, testset, AisPlan::uniform(600, 120), 24);
    for (size_t k = 0; k < testset.size(); ++k) {
      const std::vector<Configuration> single = {testset[k]};
      const double exact = exact_marginal_loglik(model, part, single);
      CHECK(std::abs(estimates[k] - exact) < 0.1);
    }
  }
  SUBCASE("identical test points receive identical estimates") {
    const VariablePartition part = select_hidden(model.topology, 0.4, 25);
    const Configuration v = config_from_mask(6, 0b1001);
    const std::vector<Configuration> testset = {v, config_from_mask(6, 0b111), v};
    const auto estimates = ais_test_loglik(model, part, testset, AisPlan::uniform(50, 8), 26);
    CHECK(estimates[0] == estimates[2]);
  }
}

TEST_CASE("stationarity_report") {
  RandomStream stream(33);
  const GraphTopology topo = random_topology(5, 0.5, stream);
  const PairwiseModel model = random_model(topo, stream);
  const VariablePartition part = random_partition(5, 0.4, stream);
  std::vector<Configuration> data;
  const auto dist = brute_force_distribution(model);
  for (int k = 0; k < 6; ++k) data.push_back(exact_sample(model, dist, stream));
  const StationarityReport report = stationarity_report(model, part, data);
  const StatsVector grad = exact_gradient_mmle(model, part, data);
  CHECK(report.grad_norm == doctest::Approx(grad.l2_norm()).epsilon(1e-14));
  CHECK(report.grad_norm ==
        doctest::Approx(std::sqrt(report.node_block_norm * report.node_block_norm +
                                  report.edge_block_norm * report.edge_block_norm))
            .epsilon(1e-12));
}

TEST_CASE("evaluate_model produces a coherent report at oracle scale") {
  GridSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.bias_min = -1.0;
  spec.bias_max = 1.0;
  const PairwiseModel model = random_grid_model(spec, 55);
  const VariablePartition part = select_hidden(model.topology, 0.25, 56);
  const auto train = generate_samples(model, 60, 30, 57);
  const auto test = generate_samples(model, 40, 30, 58);
  EvalPlan plan;
  plan.model_samples = 100;
  plan.sample_sweeps = 30;
  plan.ais = AisPlan::uniform(200, 40);
  const EvalReport report = evaluate_model(model, part, train, test, plan, 59);
  CHECK(report.sigma > 0.0);
  CHECK(std::isfinite(report.parzen_mean));
  CHECK(report.parzen_sem > 0.0);
  REQUIRE(report.exact_loglik.has_value());
  CHECK(std::abs(report.ais_log_z - exact_log_partition(model)) < 0.5);
  const EvalReport truth = evaluate_true_reference(part, train, test, plan);
  CHECK(std::isfinite(truth.parzen_mean));
}
