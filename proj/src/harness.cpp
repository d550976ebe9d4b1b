#include "bds/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace bds {
namespace {

using nlohmann::json;

json write_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector read_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::size_t> prefix_counts(const RunCell& cell, std::size_t n_init,
                                       const std::vector<std::size_t>& budgets,
                                       const FeatureMetric& metric, double threshold) {
  std::vector<std::size_t> counts;
  for (std::size_t b : budgets) {
    std::vector<Vector> seen;
    const std::size_t n = std::min(cell.features.size(), n_init + b);
    for (std::size_t i = 0; i < n; ++i)
      if (cell.features[i]) seen.push_back(*cell.features[i]);
    counts.push_back(distinct_strategies(seen, metric, threshold).count);
  }
  return counts;
}

RunCell run_bds_cell(Oracle& oracle, const std::string& oracle_name, BdsConfig config,
                     std::uint64_t seed, std::size_t max_budget,
                     const std::optional<std::filesystem::path>& trace_dir) {
  RunCell cell;
  cell.method = "bds";
  cell.seed = seed;
  config.seed = seed;
  config.total_samples = max_budget;
  std::optional<std::filesystem::path> path;
  if (trace_dir) path = *trace_dir / ("bds_seed_" + std::to_string(seed) + ".jsonl");
  const BdsResult result = run_bds(oracle, config, path, json{{"oracle", oracle_name}});
  for (const auto& rec : result.trace.records) {
    cell.points.push_back(rec.x);
    cell.features.push_back(rec.f);
  }
  if (result.trace.aborted) {
    cell.failed = true;
    cell.error = result.trace.abort_reason;
  }
  return cell;
}

RunCell run_random_cell(Oracle& oracle, const BoxBounds& bounds, std::uint64_t seed, std::size_t total) {
  RunCell cell;
  cell.method = "random";
  cell.seed = seed;
  for (std::size_t i = 0; i < total; ++i) {
    auto gen = rng::stream(seed, rng::Tag::kRandomSearch, i);
    const Vector x = rng::uniform_in(bounds, gen);
    const std::uint64_t call_seed = gen();
    std::optional<Vector> f;
    try {
      Vector v = oracle.evaluate(x, call_seed);
      if (static_cast<std::size_t>(v.size()) == oracle.feature_dim() && v.allFinite()) f = std::move(v);
    } catch (const std::exception&) {
    }
    cell.points.push_back(x);
    cell.features.push_back(std::move(f));
  }
  return cell;
}

std::string format_vector(const Vector& v) {
  std::string out = "[";
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.4f", i ? ", " : "", v[i]);
    out += buf;
  }
  return out + "]";
}

}  // namespace

bool operator==(const RunCell& a, const RunCell& b) {
  if (a.method != b.method || a.seed != b.seed || a.failed != b.failed || a.error != b.error ||
      a.counts != b.counts || a.points.size() != b.points.size() || a.features.size() != b.features.size())
    return false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (!same(a.points[i], b.points[i])) return false;
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    if (a.features[i].has_value() != b.features[i].has_value()) return false;
    if (a.features[i] && !same(*a.features[i], *b.features[i])) return false;
  }
  return true;
}

double ComparisonReport::failed_fraction() const {
  if (runs.empty() || budgets.empty()) return 0.0;
  const auto failed = std::count_if(runs.begin(), runs.end(), [](const RunCell& c) { return c.failed; });
  // A failed run invalidates every budget it covers.
  return static_cast<double>(failed) / static_cast<double>(runs.size());
}

const AggregateRow* ComparisonReport::find(const std::string& method, std::size_t budget) const {
  for (const auto& row : aggregate)
    if (row.method == method && row.budget == budget) return &row;
  return nullptr;
}

ComparisonReport run_comparison(const OracleFactory& make_oracle, const std::string& oracle_name,
                                const BdsConfig& base, const ComparisonOptions& options) {
  require(!options.budgets.empty(), "run_comparison: budgets must be non-empty");
  require(!options.seeds.empty(), "run_comparison: seeds must be non-empty");
  require(options.cluster_threshold > 0.0, "run_comparison: cluster threshold must be > 0");
  base.validate();
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  const std::size_t max_budget = *std::max_element(options.budgets.begin(), options.budgets.end());
  const std::size_t cells = 2 * options.seeds.size();
  std::vector<RunCell> runs(cells);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      const std::uint64_t seed = options.seeds[i / 2];
      const bool bds = i % 2 == 0;
      RunCell& cell = runs[i];
      try {
        const std::unique_ptr<Oracle> oracle = make_oracle();
        cell = bds ? run_bds_cell(*oracle, oracle_name, base, seed, max_budget, options.trace_dir)
                   : run_random_cell(*oracle, base.bounds, seed, base.n_init + max_budget);
      } catch (const std::exception& e) {
        cell = RunCell{};
        cell.method = bds ? "bds" : "random";
        cell.seed = seed;
        cell.failed = true;
        cell.error = e.what();
      }
    }
  };
  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cells);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ComparisonReport report;
  report.oracle = oracle_name;
  report.n_init = base.n_init;
  report.cluster_threshold = options.cluster_threshold;
  report.budgets = options.budgets;
  report.seeds = options.seeds;
  for (auto& cell : runs) {
    if (!cell.failed)
      cell.counts = prefix_counts(cell, base.n_init, options.budgets, base.metric, options.cluster_threshold);
  }
  report.runs = std::move(runs);

  for (const std::string method : {"bds", "random"}) {
    for (std::size_t bi = 0; bi < report.budgets.size(); ++bi) {
      AggregateRow row;
      row.method = method;
      row.budget = report.budgets[bi];
      std::vector<double> xs;
      for (const auto& cell : report.runs)
        if (cell.method == method && !cell.failed) xs.push_back(static_cast<double>(cell.counts[bi]));
      row.completed = xs.size();
      if (!xs.empty()) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        row.mean = sum / static_cast<double>(xs.size());
        if (xs.size() > 1) {
          double ss = 0.0;
          for (double x : xs) ss += (x - row.mean) * (x - row.mean);
          row.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
      }
      report.aggregate.push_back(row);
    }
  }
  return report;
}

json to_json(const ComparisonReport& report) {
  json runs = json::array();
  for (const auto& c : report.runs) {
    json points = json::array();
    json features = json::array();
    for (const auto& p : c.points) points.push_back(write_vector(p));
    for (const auto& f : c.features) features.push_back(f ? write_vector(*f) : json(nullptr));
    runs.push_back({{"method", c.method},
                    {"seed", c.seed},
                    {"status", c.failed ? "failed" : "ok"},
                    {"error", c.error},
                    {"points", points},
                    {"features", features},
                    {"counts", c.counts}});
  }
  json aggregate = json::array();
  for (const auto& a : report.aggregate)
    aggregate.push_back({{"method", a.method},
                         {"budget", a.budget},
                         {"mean", a.mean},
                         {"std", a.stddev},
                         {"completed", a.completed}});
  return {{"schema_version", kReportSchemaVersion},
          {"oracle", report.oracle},
          {"n_init", report.n_init},
          {"cluster_threshold", report.cluster_threshold},
          {"budgets", report.budgets},
          {"seeds", report.seeds},
          {"runs", runs},
          {"aggregate", aggregate}};
}

ComparisonReport report_from_json(const json& doc) {
  if (doc.at("schema_version").get<int>() != kReportSchemaVersion)
    throw std::runtime_error("unsupported report schema_version");
  ComparisonReport r;
  r.oracle = doc.at("oracle").get<std::string>();
  r.n_init = doc.at("n_init").get<std::size_t>();
  r.cluster_threshold = doc.at("cluster_threshold").get<double>();
  r.budgets = doc.at("budgets").get<std::vector<std::size_t>>();
  r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& j : doc.at("runs")) {
    RunCell c;
    c.method = j.at("method").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.failed = j.at("status").get<std::string>() == "failed";
    c.error = j.at("error").get<std::string>();
    for (const auto& p : j.at("points")) c.points.push_back(read_vector(p));
    for (const auto& f : j.at("features"))
      c.features.push_back(f.is_null() ? std::nullopt : std::optional<Vector>(read_vector(f)));
    c.counts = j.at("counts").get<std::vector<std::size_t>>();
    r.runs.push_back(std::move(c));
  }
  for (const auto& j : doc.at("aggregate")) {
    AggregateRow a;
    a.method = j.at("method").get<std::string>();
    a.budget = j.at("budget").get<std::size_t>();
    a.mean = j.at("mean").get<double>();
    a.stddev = j.at("std").get<double>();
    a.completed = j.at("completed").get<std::size_t>();
    r.aggregate.push_back(a);
  }
  return r;
}

std::string report_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << "# schema_version=" << kReportSchemaVersion << '\n';
  out << "method,seed,budget,distinct_count\n";
  for (const auto& c : report.runs) {
    for (std::size_t bi = 0; bi < report.budgets.size(); ++bi) {
      out << c.method << ',' << c.seed << ',' << report.budgets[bi] << ',';
      if (c.failed)
        out << "NA";
      else
        out << c.counts[bi];
      out << '\n';
    }
  }
  return out.str();
}

void write_report(const ComparisonReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    out << to_json(report).dump(2) << '\n';
  }
  std::filesystem::path csv = path;
  csv.replace_extension(".csv");
  std::ofstream out(csv, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + csv.string());
  out << report_csv(report);
}

ComparisonReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report: " + path.string());
  return report_from_json(json::parse(in));
}

std::string format_trace_table(const BdsTrace& trace) {
  std::ostringstream out;
  out << "seed " << trace.seed << ", " << trace.records.size() << " samples, "
      << (trace.complete ? "complete" : trace.aborted ? "aborted: " + trace.abort_reason : "incomplete")
      << '\n';
  out << "index\tstep\tphase\tx\tf\tacquisition\n";
  char buf[32];
  for (const auto& r : trace.records) {
    out << r.index << '\t' << (r.step ? std::to_string(*r.step) : "-") << '\t' << to_string(r.phase) << '\t'
        << format_vector(r.x) << '\t' << (r.f ? format_vector(*r.f) : "failed: " + r.error) << '\t';
    if (r.acquisition) {
      std::snprintf(buf, sizeof buf, "%.6g", *r.acquisition);
      out << buf;
    } else {
      out << '-';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace bds
