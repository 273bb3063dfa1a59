#include "apcd/parzen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "apcd/errors.hpp"

namespace apcd {

ParzenEstimator::ParzenEstimator(std::vector<std::vector<uint8_t>> s, double sig)
    : samples(std::move(s)), sigma(sig) {
  if (samples.empty()) throw invalid_input_error("Parzen estimator needs reference samples");
  if (!(sigma > 0.0)) throw invalid_input_error("Parzen bandwidth must be positive");
  for (const auto& row : samples) {
    if (row.size() != samples[0].size())
      throw invalid_input_error("Parzen reference samples have inconsistent dimension");
  }
}

std::vector<std::vector<uint8_t>> visible_rows(std::span<const Configuration> data,
                                               const VariablePartition& part) {
  std::vector<std::vector<uint8_t>> rows;
  rows.reserve(data.size());
  for (const Configuration& x : data) {
    std::vector<uint8_t> row(part.visible.size());
    for (size_t k = 0; k < part.visible.size(); ++k) row[k] = x.values[part.visible[k]];
    rows.push_back(std::move(row));
  }
  return rows;
}

double parzen_log_density(const ParzenEstimator& est, std::span<const uint8_t> x) {
  const int dim = est.dim();
  if (static_cast<int>(x.size()) != dim)
    throw invalid_input_error("Parzen query dimension mismatch");
  const double inv_two_sigma_sq = 1.0 / (2.0 * est.sigma * est.sigma);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(est.samples.size());
  for (size_t s = 0; s < est.samples.size(); ++s) {
    int dist = 0;  // squared distance == Hamming distance on binary vectors
    const auto& row = est.samples[s];
    for (int d = 0; d < dim; ++d) dist += (x[d] != row[d]);
    terms[s] = -static_cast<double>(dist) * inv_two_sigma_sq;
    max_term = std::max(max_term, terms[s]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  const double log_kernel_sum =
      max_term + std::log(acc) - std::log(static_cast<double>(est.samples.size()));
  return log_kernel_sum -
         0.5 * dim * std::log(2.0 * std::numbers::pi * est.sigma * est.sigma);
}

namespace {

MeanSem summarize(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;  // population variance: duplicating the test set scales SEM by 1/sqrt(2)
  MeanSem out;
  out.mean = mean;
  out.sem = values.size() > 1 ? std::sqrt(var / n) : 0.0;
  return out;
}

}  // namespace

MeanSem parzen_avg_loglik(const ParzenEstimator& est,
                          std::span<const std::vector<uint8_t>> testset) {
  if (testset.empty()) throw invalid_input_error("Parzen evaluation needs a non-empty test set");
  std::vector<double> values(testset.size());
  const long count = static_cast<long>(testset.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) values[k] = parzen_log_density(est, testset[k]);
  return summarize(values);
}

namespace serial {

MeanSem parzen_avg_loglik(const ParzenEstimator& est,
                          std::span<const std::vector<uint8_t>> testset) {
  if (testset.empty()) throw invalid_input_error("Parzen evaluation needs a non-empty test set");
  std::vector<double> values(testset.size());
  for (size_t k = 0; k < testset.size(); ++k) values[k] = parzen_log_density(est, testset[k]);
  return summarize(values);
}

}  // namespace serial

double parzen_select_sigma(std::span<const std::vector<uint8_t>> samples,
                           std::span<const std::vector<uint8_t>> validation,
                           std::span<const double> sigma_grid) {
  if (sigma_grid.empty()) throw invalid_input_error("sigma grid must be non-empty");
  double best_sigma = 0.0;
  double best_value = -std::numeric_limits<double>::infinity();
  bool have = false;
  std::vector<std::vector<uint8_t>> ref(samples.begin(), samples.end());
  for (double sigma : sigma_grid) {
    const ParzenEstimator est(ref, sigma);
    const double value = parzen_avg_loglik(est, validation).mean;
    if (!have || value > best_value || (value == best_value && sigma < best_sigma)) {
      have = true;
      best_value = value;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

std::vector<double> default_sigma_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.1 * k);
  return grid;
}

}  // namespace apcd
