// bds: command-line front end over the C API.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 run failure.

#include "bds/bds.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRun = 2;

int exit_code(bds_status status) {
  switch (status) {
    case BDS_OK: return kExitOk;
    case BDS_ERR_CONFIG:
    case BDS_ERR_INVALID_ARGUMENT: return kExitUsage;
    default: return kExitRun;
  }
}

int report_error(bds_status status) {
  std::cerr << "bds: " << bds_status_name(status) << ": " << bds_last_error() << '\n';
  return exit_code(status);
}

/// Owns a string handed out by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { bds_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::string out;
  std::optional<std::string> oracle;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "Run seed (compare: first of consecutive seeds)");
  cmd->add_option("--budget", c.budget, "Loop samples after initialization");
  cmd->add_option("--out", c.out, out_help);
  cmd->add_option("--oracle", c.oracle, "takeoff-highjump, takeoff-obstacle or synthetic:FILE");
}

/// Reads --config; returns false (after printing) when the file is missing.
bool load_config(const Common& c, std::string& text) {
  if (c.config.empty()) return true;
  const auto contents = read_file(c.config);
  if (!contents) {
    std::cerr << "bds: cannot read config file '" << c.config << "'\n";
    return false;
  }
  text = *contents;
  return true;
}

/// Applies command-line overrides through the library so the result is
/// validated like any config file.
bds_status resolve(const std::string& text, const json& overrides, json& resolved) {
  Owned out;
  const std::string patch = overrides.dump();
  const bds_status st = bds_config_resolve(text.c_str(), patch.c_str(), &out.p);
  if (st == BDS_OK) resolved = json::parse(out.str());
  return st;
}

void print_run_summary(const json& s) {
  std::cout << "status: " << s.value("status", "") << '\n';
  if (s.contains("trace")) std::cout << "trace: " << s["trace"].get<std::string>() << '\n';
  std::cout << "samples: " << s.value("samples", 0) << " (" << s.value("failed", 0) << " failed)\n";
  std::cout << "distinct strategies: " << s.value("distinct_strategies", 0) << '\n';
  if (s.contains("modes_found")) {
    std::cout << "modes found:";
    for (const auto& m : s["modes_found"]) std::cout << ' ' << '"' << m.get<std::string>() << '"';
    std::cout << '\n';
  }
  if (s.contains("reason")) std::cout << "reason: " << s["reason"].get<std::string>() << '\n';
}

int cmd_run(const Common& c) {
  std::string text;
  if (!load_config(c, text)) return kExitUsage;
  json overrides = json::object();
  if (c.seed) overrides["seed"] = *c.seed;
  if (c.budget) overrides["budget"] = *c.budget;
  if (c.oracle) overrides["oracle"] = *c.oracle;
  json resolved;
  if (const bds_status st = resolve(text, overrides, resolved); st != BDS_OK) return report_error(st);

  const std::string out = c.out.empty() ? "bds_trace.jsonl" : c.out;
  Owned summary;
  const bds_status st = bds_run(resolved.dump().c_str(), out.c_str(), &summary.p);
  if (summary.p) print_run_summary(json::parse(summary.str()));
  return st == BDS_OK ? kExitOk : report_error(st);
}

int cmd_compare(const Common& c, std::optional<std::size_t> n_seeds, const std::vector<std::size_t>& budgets,
                const std::optional<std::string>& trace_dir, std::optional<std::size_t> threads) {
  std::string text;
  if (!load_config(c, text)) return kExitUsage;
  json overrides = json::object();
  if (c.oracle) overrides["oracle"] = *c.oracle;
  json compare = json::object();
  if (!budgets.empty()) compare["budgets"] = budgets;
  else if (c.budget) compare["budgets"] = {*c.budget};
  if (trace_dir) compare["trace_dir"] = *trace_dir;
  if (threads) compare["threads"] = *threads;
  if (c.seed || n_seeds) {
    const std::uint64_t first = c.seed.value_or(0);
    json seeds = json::array();
    for (std::size_t i = 0; i < n_seeds.value_or(20); ++i) seeds.push_back(first + i);
    compare["seeds"] = seeds;
  }
  if (!compare.empty()) overrides["compare"] = compare;
  json resolved;
  if (const bds_status st = resolve(text, overrides, resolved); st != BDS_OK) return report_error(st);

  const std::string out = c.out.empty() ? "bds_report.json" : c.out;
  Owned summary;
  const bds_status st = bds_compare(resolved.dump().c_str(), out.c_str(), &summary.p);
  if (summary.p) {
    const json s = json::parse(summary.str());
    std::cout << "report: " << out << '\n';
    std::cout << "method\tbudget\tmean\tstd\tcompleted\n";
    for (const auto& row : s["aggregate"]) {
      std::printf("%s\t%zu\t%.3f\t%.3f\t%zu\n", row["method"].get<std::string>().c_str(),
                  row["budget"].get<std::size_t>(), row["mean"].get<double>(), row["std"].get<double>(),
                  row["completed"].get<std::size_t>());
    }
    std::printf("failed cells: %.1f%%\n", 100.0 * s.value("failed_fraction", 0.0));
    std::fflush(stdout);
  }
  return st == BDS_OK ? kExitOk : report_error(st);
}

int cmd_report(const std::string& trace) {
  Owned text;
  const bds_status st = bds_report(trace.c_str(), &text.p);
  if (st != BDS_OK) return report_error(st);
  std::cout << text.str();
  return kExitOk;
}

int cmd_resume(const Common& c, const std::string& trace) {
  std::string text;
  if (!load_config(c, text)) return kExitUsage;
  json patch = json::object();
  if (!text.empty()) {
    try {
      patch = json::parse(text);
    } catch (const json::parse_error& e) {
      std::cerr << "bds: config error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  if (c.seed) patch["seed"] = *c.seed;
  if (c.budget) patch["budget"] = *c.budget;
  if (c.oracle) patch["oracle"] = *c.oracle;
  const std::string doc = patch.empty() ? "" : patch.dump();
  Owned summary;
  const bds_status st = bds_resume(doc.empty() ? nullptr : doc.c_str(), trace.c_str(),
                                   c.out.empty() ? nullptr : c.out.c_str(), &summary.p);
  if (summary.p) print_run_summary(json::parse(summary.str()));
  return st == BDS_OK ? kExitOk : report_error(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Diversity Search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bds_version());

  Common run_opts;
  auto* run = app.add_subcommand("run", "Single BDS run; writes a trace and prints a summary");
  add_common(run, run_opts, "Trace file (default bds_trace.jsonl)");

  Common cmp_opts;
  std::optional<std::size_t> n_seeds;
  std::vector<std::size_t> budgets;
  std::optional<std::string> trace_dir;
  std::optional<std::size_t> threads;
  auto* compare = app.add_subcommand("compare", "BDS vs. random search over several seeds");
  add_common(compare, cmp_opts, "Report file (default bds_report.json; CSV written alongside)");
  compare->add_option("--seeds", n_seeds, "Number of consecutive seeds");
  compare->add_option("--budgets", budgets, "Budgets to report (comma separated)")->delimiter(',');
  compare->add_option("--trace-dir", trace_dir, "Write one trace per BDS run here");
  compare->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string report_trace;
  auto* report = app.add_subcommand("report", "Per-step table of a trace");
  report->add_option("trace,--trace", report_trace, "Trace file")->required();

  Common resume_opts;
  std::string resume_trace;
  auto* resume = app.add_subcommand("resume", "Continue an interrupted run from its trace");
  add_common(resume, resume_opts, "Rewritten trace (default: in place)");
  resume->add_option("trace,--trace", resume_trace, "Trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*run) return cmd_run(run_opts);
  if (*compare) return cmd_compare(cmp_opts, n_seeds, budgets, trace_dir, threads);
  if (*report) return cmd_report(report_trace);
  if (*resume) return cmd_resume(resume_opts, resume_trace);
  return kExitUsage;
}
