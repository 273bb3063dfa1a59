#pragma once

#include <string>

namespace apcd {

enum class ScheduleFamily { power_law, log_damped, linear_decay };

/// Parametric step-size family. All families produce strictly positive,
/// non-increasing values.
///   power_law:    c / (1 + t)^p          with c > 0, p in (0, 1]
///   log_damped:   c / (1 + t * log(t+2)) with c > 0
///   linear_decay: start -> end over `horizon` iterations, then constant end
struct ScheduleSpec {
  ScheduleFamily family = ScheduleFamily::power_law;
  double c = 1.0;
  double p = 1.0;
  double start = 0.0;
  double end = 0.0;
  long horizon = 0;

  static ScheduleSpec power(double c, double p);
  static ScheduleSpec log_damped(double c);
  static ScheduleSpec linear(double start, double end, long horizon);

  bool operator==(const ScheduleSpec&) const = default;
};

double schedule_value(const ScheduleSpec& s, long t);

/// Outcome of checking a (a, b) pair against the two-time-scale step-size
/// conditions: both sums divergent, both square-summable, ratio tending to
/// 0 or infinity. `valid_e_fast` means the E step (driven by a) runs on the
/// faster time-scale.
struct ScheduleVerdict {
  enum class Kind { valid_e_fast, valid_e_slow, invalid };
  Kind kind = Kind::invalid;
  std::string reason;  // set when invalid
  // Linear-decay pairs are invalid for APCD but usable by baseline variants;
  // this flags that downgrade path.
  bool baseline_usable = false;

  bool valid() const { return kind != Kind::invalid; }
};

ScheduleVerdict validate_schedule_pair(const ScheduleSpec& a, const ScheduleSpec& b);

/// Compact text form used by config files and the CLI:
///   power(c,p)   logdamped(c)   linear(start,end,horizon)
ScheduleSpec parse_schedule(const std::string& text);
std::string format_schedule(const ScheduleSpec& s);

const char* schedule_verdict_name(ScheduleVerdict::Kind kind);

}  // namespace apcd
