#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "waltz/casestudies.hpp"

namespace waltz {

struct Metrics {
  double exec_time_ms = 0.0;
  double latency_ms = 0.0;  // mean per request
  double throughput_msgs_per_s = 0.0;
};

// One baseline/instrumented pair for one scenario configuration. Means
// are plain arithmetic means of the per-rep values.
struct PairedMetrics {
  std::string system;
  std::string config;
  std::size_t messages = 0;  // client calls per execution, identical in both modes
  std::vector<Metrics> base_reps;
  std::vector<Metrics> instr_reps;

  Metrics base_mean() const;
  Metrics instr_mean() const;
  double overhead_pct() const;
  double latency_overhead_pct() const;
  double throughput_delta_pct() const;
};

std::string config_label(const ScenarioConfig& cfg);

// One discarded warmup execution per mode, then `reps` timed executions
// per mode in seed-shuffled interleaved order. Only fault-free runs
// measure anything meaningful, so a Violated verdict or a server crash
// raises ScenarioFailure.
PairedMetrics run_benchmark(const std::string& scenario, const ScenarioConfig& cfg,
                            std::size_t reps, std::size_t warmup,
                            const RuntimeConfig& rc = {});

enum class ReportFormat { Csv, Markdown };

void emit_report(std::ostream& os, const std::vector<PairedMetrics>& rows, ReportFormat format);

// Kernel, architecture and hardware thread count of the machine the
// numbers came from.
std::string host_summary();

}  // namespace waltz
