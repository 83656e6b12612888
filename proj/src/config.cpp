#include "magedge/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "magedge/error.hpp"

namespace magedge {

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorKind::config, msg); }

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) bad("unknown key '" + key + "' in " + where);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) bad(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(what + " must be finite");
  return v;
}

int integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) bad(what + " must be an integer");
  return j.get<int>();
}

std::vector<double> number_list(const Json& j, const std::string& what) {
  if (!j.is_array()) bad(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

Point point(const Json& j, const std::string& what) {
  const auto v = number_list(j, what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> grid_from_json(const Json& j) {
  if (j.is_array()) return number_list(j, "eps_grid");
  if (j.is_object() && j.size() == 1 && j.contains("dyadic")) {
    const auto& d = j["dyadic"];
    if (!d.is_array() || d.size() != 2) bad("eps_grid.dyadic must be [kmin, kmax]");
    return dyadic_grid(integer(d[0], "eps_grid.dyadic"), integer(d[1], "eps_grid.dyadic"));
  }
  if (j.is_object() && j.size() == 1 && j.contains("linspace")) {
    const auto& l = j["linspace"];
    if (!l.is_array() || l.size() != 3) bad("eps_grid.linspace must be [start, stop, count]");
    const double a = number(l[0], "eps_grid.linspace"), b = number(l[1], "eps_grid.linspace");
    const int n = integer(l[2], "eps_grid.linspace");
    if (n < 1) bad("eps_grid.linspace count must be positive");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
  }
  bad("eps_grid must be an array, {\"dyadic\": [kmin, kmax]} or {\"linspace\": [start, stop, count]}");
}

Json make_defaults(const std::string& name) {
  const Json harper = {{"preset", "harper"}, {"dimension", 2}, {"hop", 1.0}};
  const Json unit = {{"type", "unit"}, {"dimension", 2}};
  Json j;
  j["scenario"] = name;
  if (name == "harper-constant") {
    j["symbol"] = harper;
    j["field"] = unit;
    j["regime"] = "lipschitz";
    j["alpha"] = 2.0;
  } else if (name == "harper-slowly-varying") {
    j["symbol"] = harper;
    j["field"] = {{"type", "sine-potential"}, {"amplitude", 0.5}};
    j["regime"] = "lipschitz";
    j["alpha"] = 2.0;
  } else if (name == "harper-general-field") {
    j["symbol"] = harper;
    j["field"] = {{"type", "sine-modulated"}, {"amplitude", 0.5}};
    j["regime"] = "log";
    j["alpha"] = 2.0;
    j["quadrature_order"] = 64;
  } else if (name == "longrange-alpha15") {
    j["symbol"] = {{"preset", "power_law"}, {"dimension", 2}, {"rate", 4.6}, {"radius", 12.0}};
    j["field"] = unit;
    j["regime"] = "holder";
    j["alpha"] = 1.5;
  } else if (name == "identity-null") {
    j["symbol"] = {{"preset", "identity"}, {"dimension", 2}};
    j["field"] = unit;
    j["regime"] = "lipschitz";
    j["alpha"] = 2.0;
    j["radius"] = 10;
  } else {
    bad("unknown scenario '" + name + "'");
  }
  if (!j.contains("radius")) j["radius"] = 30;
  if (!j.contains("quadrature_order")) j["quadrature_order"] = 20;
  j["eps_grid"] = {{"dyadic", {3, 9}}};
  j["tolerance"] = 1e-9;
  j["seed"] = 42;
  j["which"] = "sup";
  return j;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"harper-constant", "harper-slowly-varying", "harper-general-field", "longrange-alpha15",
          "identity-null"};
}

Json scenario_defaults(const std::string& name) { return make_defaults(name); }

FieldSpec field_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad("field needs a string 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "unit") {
    check_keys(j, "field", {"type", "dimension"});
    const int d = j.contains("dimension") ? integer(j["dimension"], "field.dimension") : 2;
    if (d < 1) bad("field.dimension must be positive");
    return FieldSpec::unit(d);
  }
  if (type == "constant") {
    check_keys(j, "field", {"type", "b"});
    if (!j.contains("b") || !j["b"].is_array() || j["b"].empty()) bad("constant field needs a matrix 'b'");
    const auto n = static_cast<Eigen::Index>(j["b"].size());
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto row = number_list(j["b"][r], "field.b row");
      if (static_cast<Eigen::Index>(row.size()) != n) bad("field.b must be square");
      for (Eigen::Index c = 0; c < n; ++c) b(r, c) = row[c];
    }
    return FieldSpec::constant(b);
  }
  if (type == "sine-modulated") {
    // B_12(x) = 1 + a sin(x_1) sin(x_2) in d = 2.
    check_keys(j, "field", {"type", "amplitude"});
    const double a = j.contains("amplitude") ? number(j["amplitude"], "field.amplitude") : 0.5;
    return FieldSpec::general(
        2,
        [a](std::span<const double> x, std::span<double> b) {
          const double v = 1.0 + a * std::sin(x[0]) * std::sin(x[1]);
          b[0] = 0.0;
          b[1] = v;
          b[2] = -v;
          b[3] = 0.0;
        },
        1.0 + std::abs(a), "sine-modulated");
  }
  if (type == "sine-potential") {
    // A(x) = a (-sin x_2, sin x_1), so dA_12 = a (cos x_1 + cos x_2).
    check_keys(j, "field", {"type", "amplitude"});
    const double a = j.contains("amplitude") ? number(j["amplitude"], "field.amplitude") : 0.5;
    return FieldSpec::slowly_varying(
        2,
        [a](std::span<const double> x, std::span<double> out) {
          out[0] = -a * std::sin(x[1]);
          out[1] = a * std::sin(x[0]);
        },
        [a](std::span<const double> x, std::span<double> jac) {
          jac[0] = 0.0;
          jac[1] = -a * std::cos(x[1]);
          jac[2] = a * std::cos(x[0]);
          jac[3] = 0.0;
        },
        "sine-potential");
  }
  bad("unknown field type '" + type + "' (expected unit, constant, sine-modulated or sine-potential)");
}

HoppingSymbol symbol_from_json(const Json& j) {
  if (j.is_string()) return load_symbol(j.get<std::string>());
  if (!j.is_object()) bad("symbol must be a file path or an object");
  if (!j.contains("preset")) return symbol_from_json_text(j.dump());
  if (!j["preset"].is_string()) bad("symbol.preset must be a string");
  const std::string preset = j["preset"].get<std::string>();
  const int d = j.contains("dimension") ? integer(j["dimension"], "symbol.dimension") : 2;
  if (d < 1) bad("symbol.dimension must be positive");
  if (preset == "harper") {
    check_keys(j, "symbol", {"preset", "dimension", "hop"});
    return HoppingSymbol::harper(d, j.contains("hop") ? number(j["hop"], "symbol.hop") : 1.0);
  }
  if (preset == "identity") {
    check_keys(j, "symbol", {"preset", "dimension"});
    return HoppingSymbol::identity(d);
  }
  if (preset == "power_law") {
    check_keys(j, "symbol", {"preset", "dimension", "rate", "radius"});
    if (!j.contains("rate") || !j.contains("radius")) bad("power_law symbol needs 'rate' and 'radius'");
    return HoppingSymbol::power_law(d, number(j["rate"], "symbol.rate"), number(j["radius"], "symbol.radius"));
  }
  bad("unknown symbol preset '" + preset + "' (expected harper, identity or power_law)");
}

EdgeOptions RunConfig::edge_options() const {
  EdgeOptions o;
  o.tol = tolerance;
  o.seed = seed;
  o.max_iter = max_iter;
  return o;
}

SweepOptions RunConfig::sweep_options() const {
  SweepOptions o;
  o.solver = edge_options();
  o.noise_factor = noise_factor;
  o.workers = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  o.rule = QuadratureRule(quadrature_order);
  return o;
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig parse_config(const Json& user) {
  check_keys(user, "config",
             {"scenario", "symbol", "field", "eps_grid", "radius", "tolerance", "seed", "max_iter",
              "quadrature_order", "which", "regime", "alpha", "noise_factor", "workers", "flux", "butterfly",
              "fit", "harness"});

  Json j = Json::object();
  if (user.contains("scenario")) {
    if (!user["scenario"].is_string()) bad("scenario must be a string");
    j = make_defaults(user["scenario"].get<std::string>());
  }
  for (const auto& [key, value] : user.items()) j[key] = value;

  RunConfig c;
  if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
  if (j.contains("symbol")) c.symbol = symbol_from_json(j["symbol"]);
  if (j.contains("field")) c.field = field_from_json(j["field"]);
  if (c.symbol.dim() != c.field.dim()) bad("symbol and field dimensions differ");
  c.eps_grid = j.contains("eps_grid") ? grid_from_json(j["eps_grid"]) : dyadic_grid(3, 10);
  if (j.contains("radius")) c.radius = integer(j["radius"], "radius");
  if (c.radius < 1) bad("radius must be a positive integer");
  if (j.contains("tolerance")) c.tolerance = number(j["tolerance"], "tolerance");
  if (!(c.tolerance > 0.0)) bad("tolerance must be positive");
  if (j.contains("seed")) {
    const Json& s = j["seed"];
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      bad("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("max_iter")) c.max_iter = integer(j["max_iter"], "max_iter");
  if (c.max_iter < 1) bad("max_iter must be positive");
  if (j.contains("quadrature_order")) c.quadrature_order = integer(j["quadrature_order"], "quadrature_order");
  if (c.quadrature_order < 1) bad("quadrature_order must be positive");
  if (j.contains("which")) {
    c.which.clear();
    const Json& w = j["which"];
    if (w.is_string()) {
      c.which.push_back(edge_kind_from_string(w.get<std::string>()));
    } else if (w.is_array() && !w.empty()) {
      for (const auto& k : w) {
        if (!k.is_string()) bad("which entries must be strings");
        c.which.push_back(edge_kind_from_string(k.get<std::string>()));
      }
    } else {
      bad("which must be a string or a non-empty array of strings");
    }
  }
  if (j.contains("regime")) {
    if (!j["regime"].is_string()) bad("regime must be a string");
    c.regime = regime_from_string(j["regime"].get<std::string>());
  }
  if (j.contains("alpha")) c.alpha = number(j["alpha"], "alpha");
  if (j.contains("noise_factor")) c.noise_factor = number(j["noise_factor"], "noise_factor");
  if (!(c.noise_factor > 0.0)) bad("noise_factor must be positive");
  if (j.contains("workers")) c.workers = integer(j["workers"], "workers");
  if (c.workers < 0) bad("workers must be non-negative");

  if (j.contains("flux")) {
    const Json& f = j["flux"];
    check_keys(f, "flux", {"triangles", "eps"});
    if (f.contains("eps")) c.flux.eps = number(f["eps"], "flux.eps");
    if (f.contains("triangles")) {
      if (!f["triangles"].is_array()) bad("flux.triangles must be an array");
      for (const auto& t : f["triangles"]) {
        if (!t.is_array() || t.size() != 3) bad("each triangle must list three points");
        Triangle tri{point(t[0], "triangle vertex"), point(t[1], "triangle vertex"), point(t[2], "triangle vertex")};
        for (const Point* p : {&tri.x, &tri.y, &tri.z})
          if (p->size() != c.field.dim()) bad("triangle vertex dimension does not match the field");
        c.flux.triangles.push_back(tri);
      }
    }
  }
  if (j.contains("butterfly")) {
    const Json& b = j["butterfly"];
    check_keys(b, "butterfly", {"gap_threshold"});
    if (b.contains("gap_threshold")) c.butterfly.gap_threshold = number(b["gap_threshold"], "butterfly.gap_threshold");
    if (!(c.butterfly.gap_threshold > 0.0)) bad("butterfly.gap_threshold must be positive");
  }
  if (j.contains("fit")) {
    const Json& f = j["fit"];
    check_keys(f, "fit", {"model", "data"});
    if (f.contains("model")) {
      if (!f["model"].is_string()) bad("fit.model must be a string");
      c.fit.model = f["model"].get<std::string>();
      if (c.fit.model != "power" && c.fit.model != "power_log" && c.fit.model != "both")
        bad("fit.model must be power, power_log or both");
    }
    if (f.contains("data")) {
      check_keys(f["data"], "fit.data", {"eps", "delta"});
      if (!f["data"].contains("eps") || !f["data"].contains("delta")) bad("fit.data needs 'eps' and 'delta'");
      c.fit.data_eps = number_list(f["data"]["eps"], "fit.data.eps");
      c.fit.data_delta = number_list(f["data"]["delta"], "fit.data.delta");
      if (c.fit.data_eps.size() != c.fit.data_delta.size()) bad("fit.data eps and delta lengths differ");
    }
  }
  if (j.contains("harness")) {
    const Json& h = j["harness"];
    check_keys(h, "harness", {"deltas", "dimensions", "alpha", "step", "linear_pairs"});
    if (h.contains("deltas")) c.harness.deltas = number_list(h["deltas"], "harness.deltas");
    if (c.harness.deltas.empty()) bad("harness.deltas must not be empty");
    if (h.contains("dimensions")) {
      c.harness.dimensions.clear();
      if (!h["dimensions"].is_array()) bad("harness.dimensions must be an array");
      for (const auto& d : h["dimensions"]) {
        const int v = integer(d, "harness.dimensions");
        if (v != 1 && v != 2) bad("harness dimensions must be 1 or 2");
        c.harness.dimensions.push_back(v);
      }
    }
    if (h.contains("alpha")) c.harness.alpha = number(h["alpha"], "harness.alpha");
    if (h.contains("step")) c.harness.step = number(h["step"], "harness.step");
    if (h.contains("linear_pairs")) {
      if (!h["linear_pairs"].is_array()) bad("harness.linear_pairs must be an array");
      for (const auto& p : h["linear_pairs"]) {
        if (!p.is_array() || p.size() != 2) bad("each linear pair must list two points");
        c.harness.linear_pairs.emplace_back(point(p[0], "linear pair point"), point(p[1], "linear pair point"));
      }
    }
  }

  c.resolved = j;
  c.resolved["eps_grid"] = c.eps_grid;
  c.resolved["radius"] = c.radius;
  c.resolved["tolerance"] = c.tolerance;
  c.resolved["seed"] = c.seed;
  c.resolved["max_iter"] = c.max_iter;
  c.resolved["quadrature_order"] = c.quadrature_order;
  Json which = Json::array();
  for (EdgeKind k : c.which) which.push_back(to_string(k));
  c.resolved["which"] = which;
  c.resolved["regime"] = to_string(c.regime);
  c.resolved["alpha"] = c.alpha;
  c.resolved["noise_factor"] = c.noise_factor;
  return c;
}

}  // namespace magedge
