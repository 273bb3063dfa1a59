#pragma once

#include <span>
#include <vector>

#include "apcd/model.hpp"

namespace apcd {

/// Isotropic-Gaussian Parzen window over visible vectors (applied directly
/// to {0,1}-valued coordinates).
struct ParzenEstimator {
  std::vector<std::vector<uint8_t>> samples;  // reference points, visible coords only
  double sigma = 1.0;

  ParzenEstimator(std::vector<std::vector<uint8_t>> samples, double sigma);
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].size()); }
};

/// Extracts the visible coordinates of each configuration, in part.visible order.
std::vector<std::vector<uint8_t>> visible_rows(std::span<const Configuration> data,
                                               const VariablePartition& part);

/// log[(1/S) sum_s exp(-|x-s|^2 / (2 sigma^2))] - (D/2) log(2 pi sigma^2).
double parzen_log_density(const ParzenEstimator& est, std::span<const uint8_t> x);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;  // population std / sqrt(T); 0 for a single point
};

/// Mean and standard error of parzen_log_density over the test set
/// (OpenMP-parallel across points).
MeanSem parzen_avg_loglik(const ParzenEstimator& est,
                          std::span<const std::vector<uint8_t>> testset);

namespace serial {
MeanSem parzen_avg_loglik(const ParzenEstimator& est,
                          std::span<const std::vector<uint8_t>> testset);
}

/// Grid value maximizing the validation average log-likelihood; ties go to
/// the smaller sigma.
double parzen_select_sigma(std::span<const std::vector<uint8_t>> samples,
                           std::span<const std::vector<uint8_t>> validation,
                           std::span<const double> sigma_grid);

/// Default cross-validation grid {0.1, 0.2, ..., 1.0}.
std::vector<double> default_sigma_grid();

}  // namespace apcd
