#include "waltz/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "waltz/errors.hpp"

namespace waltz {

namespace {

double mean(const std::vector<Metrics>& reps, double Metrics::*field) {
  if (reps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : reps) sum += m.*field;
  return sum / double(reps.size());
}

double pct_over(double base, double instr) {
  if (base == 0.0) return 0.0;
  return (instr - base) / base * 100.0;
}

Metrics measure(const RunReport& r) {
  Metrics m;
  m.exec_time_ms = r.active_ms;
  m.latency_ms = r.mean_call_us / 1000.0;
  if (r.active_ms > 0.0)
    m.throughput_msgs_per_s = double(r.calls) / (r.active_ms / 1000.0);
  return m;
}

}  // namespace

Metrics PairedMetrics::base_mean() const {
  return Metrics{mean(base_reps, &Metrics::exec_time_ms), mean(base_reps, &Metrics::latency_ms),
                 mean(base_reps, &Metrics::throughput_msgs_per_s)};
}

Metrics PairedMetrics::instr_mean() const {
  return Metrics{mean(instr_reps, &Metrics::exec_time_ms),
                 mean(instr_reps, &Metrics::latency_ms),
                 mean(instr_reps, &Metrics::throughput_msgs_per_s)};
}

double PairedMetrics::overhead_pct() const {
  return pct_over(base_mean().exec_time_ms, instr_mean().exec_time_ms);
}

double PairedMetrics::latency_overhead_pct() const {
  return pct_over(base_mean().latency_ms, instr_mean().latency_ms);
}

double PairedMetrics::throughput_delta_pct() const {
  return pct_over(base_mean().throughput_msgs_per_s, instr_mean().throughput_msgs_per_s);
}

std::string config_label(const ScenarioConfig& cfg) {
  return std::to_string(cfg.clients) + "Cx" + std::to_string(cfg.requests_per_client) + "M";
}

PairedMetrics run_benchmark(const std::string& scenario, const ScenarioConfig& cfg,
                            std::size_t reps, std::size_t warmup, const RuntimeConfig& rc) {
  if (reps < 1) throw Error("benchmark needs at least one repetition");
  if (cfg.bug)
    throw ScenarioFailure("benchmarks measure fault-free runs, refusing bug " + *cfg.bug);

  RunOptions base_opt;
  base_opt.instrument = false;
  base_opt.monitor = false;
  base_opt.collect_trace = false;
  base_opt.runtime = rc;

  RunOptions instr_opt;
  instr_opt.instrument = true;
  instr_opt.monitor = true;
  instr_opt.collect_trace = false;
  instr_opt.runtime = rc;

  auto run_once = [&](bool instrumented) {
    RunReport r = run_scenario(scenario, cfg, instrumented ? instr_opt : base_opt);
    if (!r.crashes.empty())
      throw ScenarioFailure("server crashed while benchmarking " + scenario + ": " +
                            r.crashes.front().reason);
    if (r.verdict && r.verdict->kind == VerdictKind::Violated)
      throw ScenarioFailure("monitor flagged a violation while benchmarking " + scenario);
    return r;
  };

  for (std::size_t w = 0; w < warmup; ++w) {
    run_once(false);
    run_once(true);
  }

  std::vector<int> order;
  order.reserve(reps * 2);
  order.insert(order.end(), reps, 0);
  order.insert(order.end(), reps, 1);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xB5297A4D3F84D5A9ULL);
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  PairedMetrics row;
  row.system = scenario;
  row.config = config_label(cfg);
  for (int mode : order) {
    RunReport r = run_once(mode == 1);
    row.messages = r.calls;
    (mode == 1 ? row.instr_reps : row.base_reps).push_back(measure(r));
  }
  return row;
}

namespace {

std::string format_row(const PairedMetrics& row, const char* pattern) {
  Metrics b = row.base_mean();
  Metrics i = row.instr_mean();
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, row.system.c_str(), row.config.c_str(),
                b.exec_time_ms, i.exec_time_ms, row.overhead_pct(), b.latency_ms, i.latency_ms,
                row.latency_overhead_pct(), b.throughput_msgs_per_s, i.throughput_msgs_per_s,
                row.throughput_delta_pct());
  return buf;
}

}  // namespace

void emit_report(std::ostream& os, const std::vector<PairedMetrics>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    os << "system,config,base_ms,instr_ms,oh_pct,base_lat_ms,instr_lat_ms,lat_oh_pct,"
          "base_thr,instr_thr,thr_delta_pct\n";
    for (const auto& row : rows)
      os << format_row(row, "%s,%s,%.3f,%.3f,%.2f,%.4f,%.4f,%.2f,%.1f,%.1f,%.2f\n");
    return;
  }
  os << "| system | config | base_ms | instr_ms | oh_pct | base_lat_ms | instr_lat_ms |"
        " lat_oh_pct | base_thr | instr_thr | thr_delta_pct |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows)
    os << format_row(row,
                     "| %s | %s | %.3f | %.3f | %.2f | %.4f | %.4f | %.2f | %.1f | %.1f |"
                     " %.2f |\n");
  os << "\n_" << host_summary() << "_\n";
}

std::string host_summary() {
  struct utsname u {};
  std::string os_part = "unknown host";
  if (uname(&u) == 0)
    os_part = std::string(u.sysname) + " " + u.release + " " + u.machine;
  unsigned hw = std::thread::hardware_concurrency();
  return os_part + ", " + std::to_string(hw) + " hardware thread" + (hw == 1 ? "" : "s");
}

}  // namespace waltz
