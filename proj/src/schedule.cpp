#include "apcd/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "apcd/errors.hpp"

namespace apcd {

ScheduleSpec ScheduleSpec::power(double c, double p) {
  if (!(c > 0.0)) throw invalid_input_error("power-law schedule needs c > 0");
  if (!(p > 0.0 && p <= 1.0)) throw invalid_input_error("power-law schedule needs p in (0, 1]");
  ScheduleSpec s;
  s.family = ScheduleFamily::power_law;
  s.c = c;
  s.p = p;
  return s;
}

ScheduleSpec ScheduleSpec::log_damped(double c) {
  if (!(c > 0.0)) throw invalid_input_error("log-damped schedule needs c > 0");
  ScheduleSpec s;
  s.family = ScheduleFamily::log_damped;
  s.c = c;
  return s;
}

ScheduleSpec ScheduleSpec::linear(double start, double end, long horizon) {
  if (!(start > 0.0) || !(end > 0.0)) throw invalid_input_error("linear schedule needs positive endpoints");
  if (end > start) throw invalid_input_error("linear schedule must be non-increasing (end <= start)");
  if (horizon < 1) throw invalid_input_error("linear schedule needs horizon >= 1");
  ScheduleSpec s;
  s.family = ScheduleFamily::linear_decay;
  s.start = start;
  s.end = end;
  s.horizon = horizon;
  return s;
}

double schedule_value(const ScheduleSpec& s, long t) {
  if (t < 0) throw invalid_input_error("schedule evaluated at negative t");
  const double td = static_cast<double>(t);
  switch (s.family) {
    case ScheduleFamily::power_law:
      return s.c / std::pow(1.0 + td, s.p);
    case ScheduleFamily::log_damped:
      return s.c / (1.0 + td * std::log(td + 2.0));
    case ScheduleFamily::linear_decay: {
      const double frac = std::min(td, static_cast<double>(s.horizon)) / static_cast<double>(s.horizon);
      return s.start + (s.end - s.start) * frac;
    }
  }
  return 0.0;  // unreachable
}

namespace {

// Decay rank used for the ratio condition. Lower rank = slower-decaying
// schedule = faster time-scale for the step it drives. The log-damped family
// is treated as exponent 1 with the log factor breaking the tie against a
// plain 1/t power law.
std::pair<double, int> decay_rank(const ScheduleSpec& s) {
  if (s.family == ScheduleFamily::log_damped) return {1.0, -1};
  return {s.p, 0};
}

// Eq.-style conditions for one schedule: divergent sum and square-summable.
bool eq7_valid(const ScheduleSpec& s, std::string& why) {
  switch (s.family) {
    case ScheduleFamily::power_law:
      // Divergent sum holds for every constructible p (p <= 1); square
      // summability needs p > 1/2.
      if (!(s.p > 0.5)) {
        why = "power-law exponent p <= 1/2 is not square-summable";
        return false;
      }
      return true;
    case ScheduleFamily::log_damped:
      return true;  // sum ~ log log t diverges; squares are summable
    case ScheduleFamily::linear_decay:
      why = "linear decay tends to a positive floor and is not square-summable";
      return false;
  }
  return false;
}

}  // namespace

ScheduleVerdict validate_schedule_pair(const ScheduleSpec& a, const ScheduleSpec& b) {
  ScheduleVerdict v;
  if (a.family == ScheduleFamily::linear_decay || b.family == ScheduleFamily::linear_decay) {
    std::string why;
    eq7_valid(a.family == ScheduleFamily::linear_decay ? a : b, why);
    v.kind = ScheduleVerdict::Kind::invalid;
    v.reason = why;
    v.baseline_usable = true;
    return v;
  }
  std::string why;
  if (!eq7_valid(a, why)) {
    v.reason = "a: " + why;
    return v;
  }
  if (!eq7_valid(b, why)) {
    v.reason = "b: " + why;
    return v;
  }
  const auto ra = decay_rank(a);
  const auto rb = decay_rank(b);
  if (ra == rb) {
    v.reason = "a/b ratio tends to a positive constant (neither 0 nor infinity)";
    return v;
  }
  v.kind = ra < rb ? ScheduleVerdict::Kind::valid_e_fast : ScheduleVerdict::Kind::valid_e_slow;
  return v;
}

ScheduleSpec parse_schedule(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw invalid_input_error("schedule spec must look like family(args): " + text);
  const std::string family = text.substr(0, open);
  const std::string args = text.substr(open + 1, close - open - 1);
  double vals[3] = {0, 0, 0};
  int count = 0;
  size_t pos = 0;
  while (pos < args.size() && count < 3) {
    size_t comma = args.find(',', pos);
    if (comma == std::string::npos) comma = args.size();
    try {
      vals[count++] = std::stod(args.substr(pos, comma - pos));
    } catch (const std::exception&) {
      throw invalid_input_error("bad number in schedule spec: " + text);
    }
    pos = comma + 1;
  }
  if (family == "power") {
    if (count != 2) throw invalid_input_error("power schedule needs power(c,p)");
    return ScheduleSpec::power(vals[0], vals[1]);
  }
  if (family == "logdamped") {
    if (count != 1) throw invalid_input_error("log-damped schedule needs logdamped(c)");
    return ScheduleSpec::log_damped(vals[0]);
  }
  if (family == "linear") {
    if (count != 3) throw invalid_input_error("linear schedule needs linear(start,end,horizon)");
    return ScheduleSpec::linear(vals[0], vals[1], static_cast<long>(vals[2]));
  }
  throw invalid_input_error("unknown schedule family: " + family);
}

std::string format_schedule(const ScheduleSpec& s) {
  char buf[128];
  switch (s.family) {
    case ScheduleFamily::power_law:
      std::snprintf(buf, sizeof buf, "power(%.17g,%.17g)", s.c, s.p);
      break;
    case ScheduleFamily::log_damped:
      std::snprintf(buf, sizeof buf, "logdamped(%.17g)", s.c);
      break;
    case ScheduleFamily::linear_decay:
      std::snprintf(buf, sizeof buf, "linear(%.17g,%.17g,%ld)", s.start, s.end, s.horizon);
      break;
  }
  return buf;
}

const char* schedule_verdict_name(ScheduleVerdict::Kind kind) {
  switch (kind) {
    case ScheduleVerdict::Kind::valid_e_fast: return "valid-E-fast";
    case ScheduleVerdict::Kind::valid_e_slow: return "valid-E-slow";
    case ScheduleVerdict::Kind::invalid: return "invalid";
  }
  return "invalid";
}

}  // namespace apcd
