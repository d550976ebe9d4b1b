#include "bds/config.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace bds {
namespace {

using nlohmann::json;

json write_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

/// Typed access to one JSON object; remembers which keys were consumed so
/// misspelled fields are reported instead of silently ignored.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  void size(const std::string& key, std::size_t& out, std::size_t min = 0) {
    if (!take(key)) return;
    const json& v = obj_[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "expected a non-negative integer");
    const auto n = v.get<std::uint64_t>();
    if (n < min) fail(key, "must be >= " + std::to_string(min));
    out = static_cast<std::size_t>(n);
  }

  void u64(const std::string& key, std::uint64_t& out) {
    std::size_t v = 0;
    if (!has(key)) return;
    size(key, v);
    out = obj_[key].get<std::uint64_t>();
  }

  void number(const std::string& key, double& out, double lo = -std::numeric_limits<double>::infinity(),
              bool lo_open = false) {
    if (!take(key)) return;
    const json& v = obj_[key];
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    if (lo_open ? !(x > lo) : !(x >= lo))
      fail(key, std::string("must be ") + (lo_open ? "> " : ">= ") + json(lo).dump());
    out = x;
  }

  void boolean(const std::string& key, bool& out) {
    if (!take(key)) return;
    if (!obj_[key].is_boolean()) fail(key, "expected true or false");
    out = obj_[key].get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!take(key)) return;
    if (!obj_[key].is_string()) fail(key, "expected a string");
    out = obj_[key].get<std::string>();
  }

  Vector vector(const std::string& key) {
    take(key);
    const json& v = obj_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key, "expected a non-empty array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  /// [lo, hi] with 0 < lo <= hi.
  void range(const std::string& key, double& lo, double& hi) {
    if (!has(key)) return;
    const Vector v = vector(key);
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[0] <= v[1]) || !std::isfinite(v[1]))
      fail(key, "expected [lo, hi] with 0 < lo <= hi");
    lo = v[0];
    hi = v[1];
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::size_t min_size) {
    take(key);
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() < min_size)
      fail(key, "expected an array of at least " + std::to_string(min_size) + " non-negative integers");
    std::vector<T> out;
    for (const auto& e : v) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
        fail(key, "expected non-negative integers");
      out.push_back(static_cast<T>(e.get<std::uint64_t>()));
    }
    return out;
  }

  Reader child(const std::string& key) {
    take(key);
    return Reader(obj_.at(key), field(key));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(field(key), message);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown field");
  }

 private:
  bool take(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

BoxBounds read_bounds(Reader& parent, const std::string& key) {
  Reader r = parent.child(key);
  const Vector lo = r.vector("lower");
  const Vector hi = r.vector("upper");
  r.finish();
  try {
    return BoxBounds(lo, hi);
  } catch (const ContractError& e) {
    throw ConfigError(parent.field(key), e.what());
  }
}

FeatureMetric read_metric(Reader& parent) {
  Reader r = parent.child("metric");
  std::string kind = "euclidean";
  double period = 2.0 * std::numbers::pi;
  r.string("kind", kind);
  r.number("period", period, 0.0, true);
  r.finish();
  if (kind == "euclidean") return FeatureMetric::euclidean();
  if (kind == "angular") return FeatureMetric::angular(period);
  r.fail("kind", "expected 'euclidean' or 'angular'");
}

/// Keys shared by the canonical BdsConfig document and the harness config.
void read_shared(Reader& r, BdsConfig& c) {
  r.size("n_init", c.n_init, 1);
  r.size("n_exp", c.n_exp);
  r.size("n_opt", c.n_opt);
  r.u64("seed", c.seed);
  r.boolean("record_timing", c.record_timing);
  if (r.has("acquisition")) {
    Reader a = r.child("acquisition");
    a.size("n_mc", c.acquisition.n_mc, 1);
    a.size("n_mc_rank", c.n_mc_rank, 1);
    a.size("rank_candidates", c.rank_candidates, 1);
    a.number("beta", c.acquisition.beta, 0.0);
    a.boolean("use_ucb", c.use_ucb);
    a.finish();
  }
  if (r.has("direct")) {
    Reader d = r.child("direct");
    d.size("max_evals", c.direct.budget.max_evals, 1);
    d.size("max_iters", c.direct.budget.max_iters, 1);
    d.number("tol", c.direct.budget.tol, 0.0);
    d.number("epsilon", c.direct.epsilon, 0.0);
    d.finish();
  }
  if (r.has("lbfgs")) {
    Reader l = r.child("lbfgs");
    l.size("restarts", c.lbfgs.restarts, 1);
    l.size("memory", c.lbfgs.memory, 1);
    l.size("max_evals", c.lbfgs.budget.max_evals, 1);
    l.size("max_iters", c.lbfgs.budget.max_iters, 1);
    l.number("tol", c.lbfgs.budget.tol, 0.0);
    l.finish();
  }
  if (r.has("refit")) {
    Reader f = r.child("refit");
    f.boolean("enabled", c.refit.enabled);
    f.size("every_until", c.refit.every_until);
    f.size("period", c.refit.period, 1);
    f.size("restarts", c.refit.restarts, 1);
    f.range("theta", c.refit.bounds.theta_lo, c.refit.bounds.theta_hi);
    f.range("lambda", c.refit.bounds.lambda_lo, c.refit.bounds.lambda_hi);
    f.range("eta", c.refit.bounds.eta_lo, c.refit.bounds.eta_hi);
    f.number("eta_floor_fraction", c.refit.bounds.eta_floor_fraction, 0.0);
    f.finish();
  }
  if (c.n_exp + c.n_opt == 0) throw ConfigError("n_exp", "n_exp + n_opt must be >= 1");
}

json shared_json(const BdsConfig& c) {
  const auto& hb = c.refit.bounds;
  return {{"n_init", c.n_init},
          {"n_exp", c.n_exp},
          {"n_opt", c.n_opt},
          {"seed", c.seed},
          {"record_timing", c.record_timing},
          {"acquisition",
           {{"n_mc", c.acquisition.n_mc},
            {"n_mc_rank", c.n_mc_rank},
            {"rank_candidates", c.rank_candidates},
            {"beta", c.acquisition.beta},
            {"use_ucb", c.use_ucb}}},
          {"direct",
           {{"max_evals", c.direct.budget.max_evals},
            {"max_iters", c.direct.budget.max_iters},
            {"tol", c.direct.budget.tol},
            {"epsilon", c.direct.epsilon}}},
          {"lbfgs",
           {{"restarts", c.lbfgs.restarts},
            {"memory", c.lbfgs.memory},
            {"max_evals", c.lbfgs.budget.max_evals},
            {"max_iters", c.lbfgs.budget.max_iters},
            {"tol", c.lbfgs.budget.tol}}},
          {"refit",
           {{"enabled", c.refit.enabled},
            {"every_until", c.refit.every_until},
            {"period", c.refit.period},
            {"restarts", c.refit.restarts},
            {"theta", {hb.theta_lo, hb.theta_hi}},
            {"lambda", {hb.lambda_lo, hb.lambda_hi}},
            {"eta", {hb.eta_lo, hb.eta_hi}},
            {"eta_floor_fraction", hb.eta_floor_fraction}}}};
}

json metric_json(const FeatureMetric& m) { return {{"kind", m.name()}, {"period", m.period}}; }

json bounds_json(const BoxBounds& b) {
  return {{"lower", write_vector(b.lower())}, {"upper", write_vector(b.upper())}};
}

/// Best-effort line of the first occurrence of the field's last key.
std::size_t locate(std::string_view text, const std::string& field) {
  if (field.empty()) return 0;
  std::string leaf = field.substr(field.find_last_of('.') + 1);
  leaf = leaf.substr(0, leaf.find('['));
  const auto pos = text.find("\"" + leaf + "\"");
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

json to_json(const BdsConfig& config) {
  json j = shared_json(config);
  j["total_samples"] = config.total_samples;
  j["bounds"] = bounds_json(config.bounds);
  j["metric"] = metric_json(config.metric);
  return j;
}

BdsConfig bds_config_from_json(const json& doc) {
  BdsConfig c;
  Reader r(doc, "");
  read_shared(r, c);
  r.size("total_samples", c.total_samples);
  if (!r.has("bounds")) r.fail("bounds", "missing");
  c.bounds = read_bounds(r, "bounds");
  if (r.has("metric")) c.metric = read_metric(r);
  r.finish();
  return c;
}

HarnessConfig::HarnessConfig() {
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
}

HarnessConfig harness_config_from_json(const json& doc) {
  HarnessConfig c;
  Reader r(doc, "");
  if (r.has("schema_version")) {
    std::size_t v = 0;
    r.size("schema_version", v);
    if (v != kConfigSchemaVersion) r.fail("schema_version", "unsupported version (expected 1)");
  }
  r.string("oracle", c.oracle);
  if (r.has("feature_noise")) {
    double noise = 0.0;
    r.number("feature_noise", noise, 0.0);
    c.feature_noise = noise;
  }
  read_shared(r, c.bds);
  r.size("budget", c.bds.total_samples);
  if (r.has("bounds")) c.bounds = read_bounds(r, "bounds");
  if (r.has("metric")) c.metric = read_metric(r);
  r.number("cluster_threshold", c.cluster_threshold, 0.0, true);
  if (r.has("compare")) {
    Reader k = r.child("compare");
    if (k.has("budgets")) c.budgets = k.list<std::size_t>("budgets", 1);
    if (k.has("seeds")) c.seeds = k.list<std::uint64_t>("seeds", 1);
    k.size("threads", c.threads);
    if (k.has("trace_dir")) {
      std::string dir;
      k.string("trace_dir", dir);
      c.trace_dir = dir;
    }
    k.finish();
  }
  r.finish();
  return c;
}

HarnessConfig parse_harness_config(std::string_view text, const json& overrides) {
  json doc = json::object();
  const bool blank = std::all_of(text.begin(), text.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
  if (!blank) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
      const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
      std::string what = e.what();
      throw ConfigError("", "syntax error: " + what.substr(what.find(']') + 2), line);
    }
  }
  if (!doc.is_object()) throw ConfigError("", "top level must be a JSON object", 1);
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw ConfigError("", "overrides must be a JSON object");
    doc.merge_patch(overrides);
  }
  try {
    return harness_config_from_json(doc);
  } catch (const ConfigError& e) {
    if (e.line() > 0) throw;
    const std::string what = e.what();
    throw ConfigError(e.field(), what.substr(what.find(": ") + 2), locate(text, e.field()));
  }
}

json to_json(const HarnessConfig& c) {
  json j = shared_json(c.bds);
  j["schema_version"] = kConfigSchemaVersion;
  j["oracle"] = c.oracle;
  j["feature_noise"] = c.feature_noise ? json(*c.feature_noise) : json(nullptr);
  j["budget"] = c.bds.total_samples;
  if (c.bounds) j["bounds"] = bounds_json(*c.bounds);
  if (c.metric) j["metric"] = metric_json(*c.metric);
  j["cluster_threshold"] = c.cluster_threshold;
  j["compare"] = {{"budgets", c.budgets}, {"seeds", c.seeds}, {"threads", c.threads}};
  if (c.trace_dir) j["compare"]["trace_dir"] = *c.trace_dir;
  if (!c.feature_noise) j.erase("feature_noise");
  return j;
}

SyntheticOracle make_oracle(const HarnessConfig& config) {
  const std::string& name = config.oracle;
  std::optional<SyntheticOracle> oracle;
  if (name == "takeoff-highjump") {
    oracle = make_takeoff_benchmark();
  } else if (name == "takeoff-obstacle") {
    oracle = make_obstacle_benchmark();
  } else if (name.starts_with("synthetic:") && name.size() > 10) {
    try {
      oracle = load_synthetic_oracle(name.substr(10));
    } catch (const ConfigError& e) {
      throw ConfigError("oracle", e.what());
    }
  } else {
    throw ConfigError("oracle", "expected takeoff-highjump, takeoff-obstacle or synthetic:FILE, got '" + name + "'");
  }
  if (config.feature_noise) oracle = oracle->with_noise(*config.feature_noise);
  return *oracle;
}

BdsConfig resolve_bds_config(const HarnessConfig& config, const SyntheticOracle& oracle) {
  BdsConfig c = config.bds;
  c.bounds = config.bounds.value_or(oracle.bounds());
  c.metric = config.metric.value_or(oracle.metric());
  if (c.bounds.dim() != oracle.input_dim())
    throw ConfigError("bounds", "dimension does not match the oracle input (" +
                                    std::to_string(oracle.input_dim()) + ")");
  return c;
}

}  // namespace bds
