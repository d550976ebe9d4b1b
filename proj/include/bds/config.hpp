#pragma once

#include "bds/harness.hpp"
#include "bds/search.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bds {

constexpr int kConfigSchemaVersion = 1;

/// Everything a `run` or `compare` invocation needs. Fields shared with
/// BdsConfig use the same keys; `budget` is the loop sample count.
struct HarnessConfig {
  /// "takeoff-highjump", "takeoff-obstacle" or "synthetic:<file>".
  std::string oracle = "takeoff-highjump";
  /// Overrides the oracle's own noise level when set.
  std::optional<double> feature_noise;
  /// Override the oracle's input box / feature metric.
  std::optional<BoxBounds> bounds;
  std::optional<FeatureMetric> metric;
  BdsConfig bds;
  double cluster_threshold = kDefaultClusterThreshold;
  std::vector<std::size_t> budgets{10};
  std::vector<std::uint64_t> seeds;
  std::size_t threads = 0;
  std::optional<std::string> trace_dir;

  HarnessConfig();
};

/// Parses a JSON config. `overrides` (a JSON object) is merge-patched over the
/// document first. Throws ConfigError with the offending field and, where it
/// can be located, the 1-based line.
HarnessConfig parse_harness_config(std::string_view text, const nlohmann::json& overrides = nullptr);
HarnessConfig harness_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const HarnessConfig& config);

/// Builds the oracle named by `config.oracle`; throws ConfigError("oracle").
SyntheticOracle make_oracle(const HarnessConfig& config);

/// BdsConfig with bounds and metric taken from the oracle unless overridden.
BdsConfig resolve_bds_config(const HarnessConfig& config, const SyntheticOracle& oracle);

}  // namespace bds
