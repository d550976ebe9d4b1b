#include "bds/harness.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace bds {
namespace {

using nlohmann::json;

constexpr double kSeparationSlack = 1e-12;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Table envelope expanded by a quarter of its width on each side.
BoxBounds envelope(const std::vector<ModeCenter>& modes) {
  Vector lo = modes.front().center, hi = modes.front().center;
  for (const auto& m : modes) {
    lo = lo.cwiseMin(m.center);
    hi = hi.cwiseMax(m.center);
  }
  Vector width = hi - lo;
  for (Eigen::Index i = 0; i < width.size(); ++i)
    if (width[i] <= 0.0) width[i] = 1.0;
  return BoxBounds(lo - 0.25 * width, hi + 0.25 * width);
}

/// Evenly spaced angles (i + 1/2) pi / 3 handed out along the shortest closed
/// tour through the normalized centers, so basins that touch get nearby
/// features. Equal-length tours resolve to the lexicographically first.
std::vector<ModeCenter> with_angular_features(std::vector<std::pair<std::string, Vector>> table) {
  std::vector<ModeCenter> modes;
  for (auto& [name, center] : table) modes.push_back({std::move(name), std::move(center), Vector()});
  const BoxBounds box = envelope(modes);
  const std::size_t n = modes.size();
  std::vector<Vector> unit;
  for (const auto& m : modes) unit.push_back(box.to_unit(m.center));

  std::vector<std::size_t> tour(n), best;
  std::iota(tour.begin(), tour.end(), 0);
  double best_len = std::numeric_limits<double>::infinity();
  do {
    double len = 0.0;
    for (std::size_t i = 0; i < n; ++i) len += (unit[tour[i]] - unit[tour[(i + 1) % n]]).norm();
    if (len < best_len - 1e-12) {
      best_len = len;
      best = tour;
    }
  } while (std::next_permutation(tour.begin() + 1, tour.end()));

  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) modes[best[i]].feature = vec({(static_cast<double>(i) + 0.5) * step});
  return modes;
}

SyntheticOracle angular_benchmark(std::string name, std::vector<std::pair<std::string, Vector>> table,
                                  double feature_noise) {
  auto modes = with_angular_features(std::move(table));
  BoxBounds bounds = envelope(modes);
  return SyntheticOracle(std::move(name), std::move(modes), std::move(bounds), FeatureMetric::angular(),
                         vec({0.0}), vec({2.0 * std::numbers::pi}), feature_noise);
}

Vector read_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(field, "expected a non-empty array of numbers");
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return out;
}

json write_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

SyntheticOracle::SyntheticOracle(std::string name, std::vector<ModeCenter> modes, BoxBounds bounds,
                                 FeatureMetric metric, Vector feature_lo, Vector feature_hi,
                                 double feature_noise, double plateau_radius)
    : name_(std::move(name)),
      modes_(std::move(modes)),
      bounds_(std::move(bounds)),
      metric_(metric),
      lo_(std::move(feature_lo)),
      hi_(std::move(feature_hi)),
      noise_(feature_noise),
      plateau_radius_(plateau_radius) {
  require(modes_.size() >= 2, "SyntheticOracle: at least two modes are required");
  require(lo_.size() >= 1 && lo_.size() == hi_.size(), "SyntheticOracle: feature range mismatch");
  for (Eigen::Index i = 0; i < lo_.size(); ++i)
    require(lo_[i] < hi_[i], "SyntheticOracle: feature range must satisfy lo < hi");
  for (const auto& m : modes_) {
    require(static_cast<std::size_t>(m.center.size()) == bounds_.dim(),
            "SyntheticOracle: mode '" + m.name + "' center has the wrong dimension");
    require(bounds_.contains(m.center), "SyntheticOracle: mode '" + m.name + "' center lies outside the bounds");
    require(m.feature.size() == lo_.size(),
            "SyntheticOracle: mode '" + m.name + "' feature has the wrong dimension");
    require(m.feature.allFinite(), "SyntheticOracle: mode features must be finite");
  }
  require(std::isfinite(noise_) && noise_ >= 0.0, "SyntheticOracle: feature_noise must be >= 0");
  require(plateau_radius_ > 0.0, "SyntheticOracle: plateau_radius must be > 0");
}

std::size_t SyntheticOracle::assign(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == bounds_.dim(), "SyntheticOracle: input dimension mismatch");
  const Vector u = bounds_.to_unit(x);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    const double d = (bounds_.to_unit(modes_[k].center) - u).squaredNorm();
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = k;
    }
  }
  return best;
}

Vector SyntheticOracle::evaluate(const Vector& x, std::uint64_t call_seed) {
  const std::size_t k = assign(x);
  if (std::isfinite(plateau_radius_)) {
    const double d = (bounds_.to_unit(modes_[k].center) - bounds_.to_unit(x)).norm();
    if (d > plateau_radius_) throw OracleError("query lies outside every strategy basin");
  }
  Vector f = modes_[k].feature;
  if (noise_ > 0.0) {
    auto gen = rng::stream(call_seed, rng::Tag::kOracle, 0);
    std::normal_distribution<double> n(0.0, noise_);
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] += n(gen);
    f = metric_.wrap(f);
  }
  return f;
}

void SyntheticOracle::validate(double cluster_threshold) const {
  require(cluster_threshold > 0.0, "SyntheticOracle: cluster threshold must be > 0");
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    for (std::size_t b = a + 1; b < modes_.size(); ++b) {
      if (modes_[a].feature == modes_[b].feature) continue;
      const double d = metric_.distance(modes_[a].feature, modes_[b].feature);
      require(d >= 2.0 * cluster_threshold * (1.0 - kSeparationSlack),
              "SyntheticOracle: features of modes '" + modes_[a].name + "' and '" + modes_[b].name +
                  "' are closer than twice the cluster threshold");
    }
  }
}

SyntheticOracle SyntheticOracle::with_noise(double feature_noise) const {
  return SyntheticOracle(name_, modes_, bounds_, metric_, lo_, hi_, feature_noise, plateau_radius_);
}

SyntheticOracle make_takeoff_benchmark(double feature_noise) {
  // (v_z, omega_x, omega_z, alpha)
  return angular_benchmark("takeoff-highjump",
                           {{"Fosbury Flop", vec({-2.40, -3.00, 1.00, -0.05})},
                            {"Western Roll (up)", vec({-0.50, 1.00, -1.00, 2.09})},
                            {"Straddle", vec({-2.21, 1.00, 0.88, 1.65})},
                            {"Front Kick", vec({-0.52, 1.00, -0.26, 0.45})},
                            {"Side Dive", vec({-1.83, -2.78, -0.32, 1.18})},
                            {"Side Jump", vec({-1.99, -1.44, 0.44, 0.70})}},
                           feature_noise);
}

SyntheticOracle make_obstacle_benchmark(double feature_noise) {
  // (omega_x, omega_y, omega_z)
  return angular_benchmark("takeoff-obstacle",
                           {{"Front Kick", vec({1.15, -1.11, 3.89})},
                            {"Side Kick", vec({3.00, 3.00, -2.00})},
                            {"Twist Jump (c)", vec({-1.50, 1.50, -2.00})},
                            {"Straddle", vec({0.00, 0.00, 1.00})},
                            {"Twist Jump (cc)", vec({-2.67, 0.00, -1.44})},
                            {"Dive Turn", vec({-0.74, -2.15, -0.41})}},
                           feature_noise);
}

json to_json(const SyntheticOracle& oracle) {
  json modes = json::array();
  for (const auto& m : oracle.modes())
    modes.push_back({{"name", m.name}, {"center", write_vector(m.center)}, {"feature", write_vector(m.feature)}});
  return {{"schema_version", 1},
          {"name", oracle.name()},
          {"bounds", {{"lower", write_vector(oracle.bounds().lower())}, {"upper", write_vector(oracle.bounds().upper())}}},
          {"metric", {{"kind", oracle.metric().name()}, {"period", oracle.metric().period}}},
          {"feature_range", {{"lo", write_vector(oracle.feature_lo())}, {"hi", write_vector(oracle.feature_hi())}}},
          {"feature_noise", oracle.feature_noise()},
          {"plateau_radius", std::isfinite(oracle.plateau_radius()) ? json(oracle.plateau_radius()) : json(nullptr)},
          {"modes", modes}};
}

SyntheticOracle synthetic_oracle_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "synthetic oracle must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> known{"schema_version", "name",          "bounds",
                                             "metric",         "feature_range", "feature_noise",
                                             "plateau_radius", "modes"};
    if (!known.contains(key)) throw ConfigError(key, "unknown field");
  }
  if (doc.contains("schema_version") && doc["schema_version"] != 1)
    throw ConfigError("schema_version", "unsupported version (expected 1)");

  if (!doc.contains("modes") || !doc["modes"].is_array() || doc["modes"].size() < 2)
    throw ConfigError("modes", "expected an array of at least two modes");
  std::vector<ModeCenter> modes;
  for (std::size_t k = 0; k < doc["modes"].size(); ++k) {
    const json& m = doc["modes"][k];
    const std::string prefix = "modes[" + std::to_string(k) + "]";
    if (!m.is_object()) throw ConfigError(prefix, "expected an object");
    ModeCenter mc;
    mc.name = m.value("name", "mode " + std::to_string(k));
    if (!m.contains("center")) throw ConfigError(prefix + ".center", "missing");
    if (!m.contains("feature")) throw ConfigError(prefix + ".feature", "missing");
    mc.center = read_vector(m["center"], prefix + ".center");
    mc.feature = read_vector(m["feature"], prefix + ".feature");
    modes.push_back(std::move(mc));
  }

  FeatureMetric metric = FeatureMetric::euclidean();
  if (doc.contains("metric")) {
    const json& j = doc["metric"];
    const std::string kind = j.value("kind", "euclidean");
    if (kind == "angular") {
      metric = FeatureMetric::angular(j.value("period", 2.0 * std::numbers::pi));
      if (!(metric.period > 0.0)) throw ConfigError("metric.period", "must be > 0");
    } else if (kind != "euclidean") {
      throw ConfigError("metric.kind", "expected 'euclidean' or 'angular'");
    }
  }

  try {
    BoxBounds bounds = doc.contains("bounds")
                           ? BoxBounds(read_vector(doc["bounds"].at("lower"), "bounds.lower"),
                                       read_vector(doc["bounds"].at("upper"), "bounds.upper"))
                           : envelope(modes);
    Vector lo, hi;
    if (doc.contains("feature_range")) {
      lo = read_vector(doc["feature_range"].at("lo"), "feature_range.lo");
      hi = read_vector(doc["feature_range"].at("hi"), "feature_range.hi");
    } else if (metric.kind == MetricKind::kAngular) {
      lo = Vector::Zero(modes.front().feature.size());
      hi = Vector::Constant(modes.front().feature.size(), metric.period);
    } else {
      lo = hi = modes.front().feature;
      for (const auto& m : modes) {
        if (m.feature.size() != lo.size()) throw ConfigError("modes", "features differ in dimension");
        lo = lo.cwiseMin(m.feature);
        hi = hi.cwiseMax(m.feature);
      }
      const Vector pad = ((hi - lo) * 0.25).cwiseMax(Vector::Constant(lo.size(), 0.5));
      lo -= pad;
      hi += pad;
    }
    double radius = std::numeric_limits<double>::infinity();
    if (doc.contains("plateau_radius") && !doc["plateau_radius"].is_null()) {
      if (!doc["plateau_radius"].is_number()) throw ConfigError("plateau_radius", "expected a number or null");
      radius = doc["plateau_radius"].get<double>();
    }
    const json noise = doc.value("feature_noise", json(0.0));
    if (!noise.is_number()) throw ConfigError("feature_noise", "expected a number");
    return SyntheticOracle(doc.value("name", "synthetic"), std::move(modes), std::move(bounds), metric,
                           std::move(lo), std::move(hi), noise.get<double>(), radius);
  } catch (const ContractError& e) {
    throw ConfigError("", e.what());
  } catch (const json::exception& e) {
    throw ConfigError("", e.what());
  }
}

SyntheticOracle load_synthetic_oracle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open synthetic oracle file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    const std::string text = buf.str();
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto > 0 ? upto - 1 : 0), '\n'));
    throw ConfigError("", "invalid JSON in " + path.string(), line);
  }
  return synthetic_oracle_from_json(doc);
}

Clustering distinct_strategies(std::span<const Vector> features, const FeatureMetric& metric,
                               double threshold) {
  require(threshold > 0.0, "distinct_strategies: cluster threshold must be > 0");
  Clustering out;
  std::vector<std::size_t> reps;
  out.labels.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::size_t nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < reps.size(); ++c) {
      const double d = metric.distance(features[i], features[reps[c]]);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = c;
      }
    }
    if (nearest_d > threshold) {
      out.labels.push_back(reps.size());
      reps.push_back(i);
    } else {
      out.labels.push_back(nearest);
    }
  }
  out.count = reps.size();
  return out;
}

}  // namespace bds
