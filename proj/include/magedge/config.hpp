#pragma once

// Run configuration: JSON parsing, validation, shipped scenario defaults.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magedge/regularization.hpp"
#include "magedge/scaling.hpp"

namespace magedge {

using Json = nlohmann::ordered_json;

struct FluxConfig {
  std::vector<Triangle> triangles;
  double eps = 1.0;  // field strength for the phases
};

struct ButterflyConfig {
  double gap_threshold = 1e-3;
};

struct FitConfig {
  std::string model = "both";  // power, power_log or both
  std::vector<double> data_eps, data_delta;  // synthetic fixture; empty means run a sweep
};

struct HarnessConfig {
  std::vector<double> deltas{0.5, 0.25, 0.125};
  std::vector<int> dimensions{1, 2};
  double alpha = 2.0;
  double step = 0.01;
  std::vector<std::pair<Point, Point>> linear_pairs;
};

struct RunConfig {
  std::string scenario;
  HoppingSymbol symbol = HoppingSymbol::identity(2);
  FieldSpec field = FieldSpec::unit(2);
  std::vector<double> eps_grid;
  int radius = 30;
  double tolerance = 1e-9;
  std::uint64_t seed = 42;
  int max_iter = 5000;
  int quadrature_order = 20;
  std::vector<EdgeKind> which{EdgeKind::sup};
  Regime regime = Regime::lipschitz;
  double alpha = 2.0;
  double noise_factor = 1e3;
  int workers = 0;  // 0 means available parallelism
  FluxConfig flux;
  ButterflyConfig butterfly;
  FitConfig fit;
  HarnessConfig harness;

  Json resolved;  // scenario defaults merged with the user's keys

  EdgeOptions edge_options() const;
  SweepOptions sweep_options() const;
};

std::vector<std::string> scenario_names();
/// Default config object of a shipped scenario.
Json scenario_defaults(const std::string& name);

/// Field from {"type": "unit" | "constant" | "sine-modulated" | "sine-potential", ...}.
FieldSpec field_from_json(const Json& j);
/// Symbol from a file path string or {"preset": ...} / inline coefficients.
HoppingSymbol symbol_from_json(const Json& j);

/// Validates and resolves; throws Error(config) on unknown keys or bad values.
RunConfig parse_config(const std::string& text);
RunConfig parse_config(const Json& j);

}  // namespace magedge
