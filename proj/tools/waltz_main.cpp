// Command line front end: property checking, scenario runs with a live
// monitor, offline trace evaluation, and the benchmark harness.
//
// Exit codes are the machine contract: 0 success (verdict Satisfied or
// Inconclusive), 2 input or property errors, 3 verdict Violated, 64 usage
// errors, 74 file IO errors. Human-readable output goes to stderr; reports
// and logs go to the requested files.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "waltz/bench.hpp"
#include "waltz/casestudies.hpp"
#include "waltz/errors.hpp"
#include "waltz/lang.hpp"
#include "waltz/monitor.hpp"
#include "waltz/semantics.hpp"
#include "waltz/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 2;
constexpr int kExitViolated = 3;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw waltz::IoFailure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

waltz::FormulaPtr load_property(const std::string& path) {
  waltz::FormulaPtr f = waltz::parse_formula(read_file(path));
  if (auto err = waltz::check_well_formed(*f))
    throw waltz::NotWellFormed(err->message);
  return f;
}

waltz::RuntimeConfig runtime_from_env() {
  waltz::RuntimeConfig rc;
  if (const char* ms = std::getenv("WALTZ_TIMEOUT_MS")) {
    char* end = nullptr;
    long v = std::strtol(ms, &end, 10);
    if (end == ms || *end != '\0' || v <= 0)
      throw CLI::ValidationError("WALTZ_TIMEOUT_MS must be a positive integer, got \"" +
                                 std::string(ms) + "\"");
    rc.call_timeout = std::chrono::milliseconds(v);
  }
  return rc;
}

int do_check(const std::string& spec_path) {
  waltz::FormulaPtr f = load_property(spec_path);
  std::cerr << "ok: " << waltz::print_formula(f) << "\n";
  return kExitOk;
}

int do_run(const std::string& scenario, const waltz::ScenarioConfig& cfg,
           const std::string& spec_path, const std::string& trace_out,
           const std::string& verdict_log_out, const std::string& report_out) {
  waltz::RunOptions opt;
  opt.runtime = runtime_from_env();
  opt.collect_trace = !trace_out.empty();
  if (!spec_path.empty()) opt.property_source = read_file(spec_path);

  waltz::RunReport report = waltz::run_scenario(scenario, cfg, opt);

  if (!trace_out.empty()) {
    std::ofstream os(trace_out);
    if (!os) throw waltz::IoFailure("cannot write " + trace_out);
    waltz::write_trace(os, *report.tree, report.trace_events, *report.labels);
  }
  if (!verdict_log_out.empty()) {
    std::ofstream os(verdict_log_out);
    if (!os) throw waltz::IoFailure("cannot write " + verdict_log_out);
    waltz::write_verdict_log(os, report.verdict_log, *report.labels);
  }
  if (!report_out.empty()) {
    nlohmann::json j{{"scenario", scenario},
                     {"clients", cfg.clients},
                     {"requests_per_client", cfg.requests_per_client},
                     {"seed", cfg.seed},
                     {"verdict", to_string(report.verdict->kind)},
                     {"events", report.events},
                     {"calls", report.calls},
                     {"active_ms", report.active_ms},
                     {"mean_call_us", report.mean_call_us},
                     {"crashes", report.crashes.size()}};
    if (cfg.bug) j["bug"] = *cfg.bug;
    j["trace_path"] = trace_out.empty() ? nlohmann::json() : nlohmann::json(trace_out);
    std::ofstream os(report_out);
    if (!os) throw waltz::IoFailure("cannot write " + report_out);
    os << j.dump(2) << "\n";
  }

  std::cerr << scenario << ": verdict " << to_string(report.verdict->kind) << ", "
            << report.events << " events, " << report.calls << " calls, " << report.active_ms
            << " ms\n";
  if (!report.crashes.empty())
    std::cerr << "warning: " << report.crashes.size() << " server crash(es), first: "
              << report.crashes.front().server << ": " << report.crashes.front().reason << "\n";
  if (report.verdict->kind == waltz::VerdictKind::Violated) {
    if (report.verdict->violation)
      std::cerr << "violation at step " << report.verdict->violation->step_index << " by "
                << waltz::to_string(report.verdict->violation->event.payload) << "\n";
    return kExitViolated;
  }
  return kExitOk;
}

int do_oracle(const std::string& trace_path, const std::string& spec_path,
              const std::string& mode_name, std::size_t from, std::size_t to) {
  waltz::LoadedTrace loaded = waltz::read_trace_file(trace_path);
  waltz::FormulaPtr f = load_property(spec_path);
  waltz::EvalMode mode = mode_name == "existential" ? waltz::EvalMode::Existential
                                                    : waltz::EvalMode::FirstMatch;
  std::size_t j = to == 0 ? loaded.trace.length() + 1 : to;
  bool sat =
      waltz::satisfies(loaded.trace, loaded.tree, waltz::Context::root(), from, j, *f, mode);
  std::cout << (sat ? "true" : "false") << "\n";
  return kExitOk;
}

waltz::ScenarioConfig parse_config_label(const std::string& label) {
  unsigned long clients = 0;
  unsigned long requests = 0;
  char trailing = 0;
  if (std::sscanf(label.c_str(), "%luCx%luM%c", &clients, &requests, &trailing) != 2 ||
      clients == 0 || requests == 0)
    throw CLI::ValidationError("config must look like 5Cx30M, got \"" + label + "\"");
  waltz::ScenarioConfig cfg;
  cfg.clients = clients;
  cfg.requests_per_client = requests;
  return cfg;
}

int do_bench(const std::string& scenario, const std::vector<std::string>& labels,
             std::size_t reps, std::size_t warmup, std::uint64_t seed, std::size_t busy_work,
             std::string out, const std::string& format) {
  waltz::RuntimeConfig rc = runtime_from_env();
  if (out.empty()) out = format == "markdown" ? "bench_report.md" : "bench_report.csv";

  std::vector<waltz::PairedMetrics> rows;
  for (const auto& label : labels) {
    waltz::ScenarioConfig cfg = parse_config_label(label);
    cfg.seed = seed;
    cfg.busy_work = busy_work;
    std::cerr << "bench " << scenario << " " << waltz::config_label(cfg) << " (" << reps
              << " reps + " << warmup << " warmup per mode)...\n";
    rows.push_back(waltz::run_benchmark(scenario, cfg, reps, warmup, rc));
    const auto& row = rows.back();
    std::cerr << "  base " << row.base_mean().exec_time_ms << " ms, instrumented "
              << row.instr_mean().exec_time_ms << " ms, overhead " << row.overhead_pct()
              << "%\n";
  }

  std::ofstream os(out);
  if (!os) throw waltz::IoFailure("cannot write " + out);
  waltz::emit_report(os, rows,
                     format == "markdown" ? waltz::ReportFormat::Markdown
                                          : waltz::ReportFormat::Csv);
  std::cerr << "report written to " << out << " (" << waltz::host_summary() << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime verification toolkit for actor-style client-server systems"};
  app.require_subcommand(1);

  std::string spec_path;
  auto* check = app.add_subcommand("check", "Parse and well-formedness-check a .waltz property");
  check->add_option("spec", spec_path, "Property file")->required();

  std::string scenario;
  waltz::ScenarioConfig run_cfg;
  std::string run_spec, trace_out, verdict_log_out, report_out, bug;
  auto* run = app.add_subcommand("run", "Execute a case study with a live monitor");
  run->add_option("scenario", scenario, "arithmetic, chat or gcounter")->required();
  run->add_option("--clients", run_cfg.clients, "Concurrent clients");
  run->add_option("--requests", run_cfg.requests_per_client, "Requests per client");
  run->add_option("--spec", run_spec, "Property file overriding the shipped one");
  run->add_option("--bug", bug, "Enable a named fault");
  run->add_option("--seed", run_cfg.seed, "Workload seed");
  run->add_option("--busy-work", run_cfg.busy_work, "Spin iterations per chat post");
  run->add_option("--trace-out", trace_out, "Write the event trace here (JSON lines)");
  run->add_option("--verdict-log", verdict_log_out, "Write the verdict log here (JSON lines)");
  run->add_option("--report-out", report_out, "Write the run report here (JSON)");

  std::string trace_path, mode_name = "first-match";
  std::size_t oracle_from = 1, oracle_to = 0;
  auto* oracle = app.add_subcommand("oracle", "Evaluate a property against a recorded trace");
  oracle->add_option("trace", trace_path, "Trace file from run --trace-out")->required();
  oracle->add_option("spec", spec_path, "Property file")->required();
  oracle->add_option("--mode", mode_name, "first-match or existential")
      ->check(CLI::IsMember({"first-match", "existential"}));
  oracle->add_option("--from", oracle_from, "Interval start position, 1-based");
  oracle->add_option("--to", oracle_to, "Interval end position; 0 means length+1");

  std::vector<std::string> bench_configs;
  std::size_t reps = 10, warmup = 1, busy_work = 0;
  std::uint64_t bench_seed = 1;
  std::string bench_out, bench_format = "csv";
  auto* bench = app.add_subcommand("bench", "Measure baseline vs instrumented runs");
  bench->add_option("scenario", scenario, "arithmetic, chat or gcounter")->required();
  bench->add_option("--config", bench_configs, "Configuration like 5Cx30M (repeatable)")
      ->required();
  bench->add_option("--reps", reps, "Timed repetitions per mode");
  bench->add_option("--warmup", warmup, "Discarded executions per mode");
  bench->add_option("--seed", bench_seed, "Workload seed");
  bench->add_option("--busy-work", busy_work, "Spin iterations per chat post");
  bench->add_option("--out", bench_out, "Report path (default bench_report.csv|md)");
  bench->add_option("--format", bench_format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, std::cerr, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (check->parsed()) return do_check(spec_path);
    if (run->parsed()) {
      if (!bug.empty()) run_cfg.bug = bug;
      return do_run(scenario, run_cfg, run_spec, trace_out, verdict_log_out, report_out);
    }
    if (oracle->parsed())
      return do_oracle(trace_path, spec_path, mode_name, oracle_from, oracle_to);
    if (bench->parsed())
      return do_bench(scenario, bench_configs, reps, warmup, bench_seed, busy_work, bench_out,
                      bench_format);
  } catch (const waltz::IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const waltz::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
