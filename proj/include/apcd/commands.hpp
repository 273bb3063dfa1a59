#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "apcd/io.hpp"

namespace apcd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitScheduleInvalid = 2;
inline constexpr int kExitCapacity = 3;
inline constexpr int kExitDivergence = 4;

/// Runs fn and maps the library's exception taxonomy onto exit codes.
int run_guarded(std::ostream& err, const std::function<int()>& fn);

/// generate: ground-truth grid model + train/test datasets + metadata.
int cmd_generate(const KeyValueConfig& config, std::ostream& out);

/// train: dispatches on `variant`, writes metrics/checkpoints/final model.
int cmd_train(const KeyValueConfig& config, std::ostream& out);

/// eval: Parzen (cross-validated sigma), AIS, exact quantities at oracle
/// scale; writes a JSON report.
int cmd_eval(const KeyValueConfig& config, std::ostream& out);

/// validate-schedule: prints the verdict; nonzero exit when invalid.
int cmd_validate_schedule(const std::string& a_spec, const std::string& b_spec,
                          std::ostream& out);

/// report: aligned comparison table over run directories plus a plot-ready
/// columnar file. Refuses to mix runs with different dataset digests.
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& columnar_out,
               std::ostream& out);

}  // namespace apcd
