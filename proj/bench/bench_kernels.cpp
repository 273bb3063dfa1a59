// Times the OpenMP kernels against their serial reference implementations
// and checks that both produce identical output.
#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "apcd/ais.hpp"
#include "apcd/parzen.hpp"
#include "apcd/sampler.hpp"
#include "apcd/synth.hpp"

using namespace apcd;

namespace {

double time_s(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count();
}

void row(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-22s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
              serial_s / parallel_s, equal ? "outputs equal" : "OUTPUTS DIFFER");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

  GridSpec spec;
  spec.rows = 10;
  spec.cols = 10;
  spec.hidden_fraction = 0.5;
  const PairwiseModel model = random_grid_model(spec, 7);
  const VariablePartition part = select_hidden(model.topology, 0.5, 7);
  const auto data = generate_samples(model, 64, 50, 7);

  {
    KernelParams kp{20, 4};
    ChainPool a = ChainPool::init(model.topology, part, data, 4, 256, 11);
    ChainPool b = a;
    const double ts = time_s([&] {
      for (int r = 0; r < 40; ++r) serial::advance_e(a, model, part, data, kp);
    });
    const double tp = time_s([&] {
      for (int r = 0; r < 40; ++r) advance_e(b, model, part, data, kp);
    });
    row("advance_e", ts, tp, a.e_chains == b.e_chains);
  }
  {
    KernelParams kp{20, 4};
    ChainPool a = ChainPool::init(model.topology, part, data, 4, 256, 11);
    ChainPool b = a;
    const double ts = time_s([&] {
      for (int r = 0; r < 40; ++r) serial::advance_m(a, model, kp);
    });
    const double tp = time_s([&] {
      for (int r = 0; r < 40; ++r) advance_m(b, model, kp);
    });
    row("advance_m", ts, tp, a.m_chains == b.m_chains);
  }
  {
    std::vector<Configuration> sa, sb;
    const double ts = time_s([&] { sa = serial::generate_samples(model, 512, 200, 23); });
    const double tp = time_s([&] { sb = generate_samples(model, 512, 200, 23); });
    row("generate_samples", ts, tp, sa == sb);
  }
  {
    const AisPlan plan = AisPlan::uniform(500, 200);
    AisResult ra, rb;
    const double ts = time_s([&] { ra = serial::ais_log_partition(model, plan, 31); });
    const double tp = time_s([&] { rb = ais_log_partition(model, plan, 31); });
    row("ais_log_partition", ts, tp, ra.log_z == rb.log_z);
  }
  {
    const auto ref = visible_rows(generate_samples(model, 2000, 20, 41), part);
    const auto queries = visible_rows(generate_samples(model, 1000, 20, 43), part);
    const ParzenEstimator est(ref, 0.4);
    MeanSem ma, mb;
    const double ts = time_s([&] {
      for (int r = 0; r < 10; ++r) ma = serial::parzen_avg_loglik(est, queries);
    });
    const double tp = time_s([&] {
      for (int r = 0; r < 10; ++r) mb = parzen_avg_loglik(est, queries);
    });
    row("parzen_avg_loglik", ts, tp, ma.mean == mb.mean && ma.sem == mb.sem);
  }
  return 0;
}
