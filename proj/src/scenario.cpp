#include "cavopt/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cavopt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) ==
        keys.end())
      fail(path, "unknown key '" + k + "'");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

template <typename Int>
Int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  if constexpr (std::is_unsigned_v<Int>) {
    if (j.is_number_unsigned()) return j.get<Int>();
    if (j.get<long long>() < 0) fail(path, "expected a non-negative integer");
  }
  return j.get<Int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

void read(const json& j, const char* key, const std::string& path, double& out) {
  if (j.contains(key)) out = number(j.at(key), path + "." + key);
}

Approach parse_approach(const json& j, const std::string& path) {
  const std::string s = text(j, path);
  const auto slash = s.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == s.size())
    fail(path, "approach must be written road/movement");
  return {s.substr(0, slash), s.substr(slash + 1)};
}

ConflictMatrix parse_conflict(const json& j, const std::string& path) {
  only_keys(j, path, {"approaches", "conflicting"});
  if (!j.contains("approaches")) fail(path, "missing 'approaches'");
  const auto& ap = j.at("approaches");
  if (!ap.is_array() || ap.empty()) fail(path + ".approaches", "expected a non-empty array");
  ConflictMatrix m;
  for (std::size_t i = 0; i < ap.size(); ++i)
    m.add_approach(parse_approach(ap[i], path + ".approaches[" + std::to_string(i) + "]"));
  if (j.contains("conflicting")) {
    const auto& cp = j.at("conflicting");
    if (!cp.is_array()) fail(path + ".conflicting", "expected an array of pairs");
    for (std::size_t i = 0; i < cp.size(); ++i) {
      const std::string p = path + ".conflicting[" + std::to_string(i) + "]";
      if (!cp[i].is_array() || cp[i].size() != 2) fail(p, "expected a pair of approaches");
      const Approach a = parse_approach(cp[i][0], p), b = parse_approach(cp[i][1], p);
      if (!m.knows(a) || !m.knows(b)) fail(p, "pair names an undeclared approach");
      m.set(a, b, true);
    }
  }
  return m;
}

ScenarioConfig parse_config(const json& j, const std::string& path) {
  only_keys(j, path,
            {"L", "S", "v_min", "v_max", "u_min", "u_max", "gamma", "phi", "delta0", "conflict",
             "rng_seed"});
  ScenarioConfig c;
  read(j, "L", path, c.L);
  read(j, "S", path, c.S);
  read(j, "v_min", path, c.v_min);
  read(j, "v_max", path, c.v_max);
  read(j, "u_min", path, c.u_min);
  read(j, "u_max", path, c.u_max);
  read(j, "gamma", path, c.gamma);
  read(j, "phi", path, c.phi);
  read(j, "delta0", path, c.delta0);
  if (j.contains("rng_seed")) c.rng_seed = integer<std::uint64_t>(j.at("rng_seed"), path + ".rng_seed");
  if (j.contains("conflict")) c.conflict = parse_conflict(j.at("conflict"), path + ".conflict");
  return c;
}

VehicleArrival parse_arrival(const json& j, const std::string& path) {
  only_keys(j, path,
            {"id", "t0", "v0", "road", "lane", "movement", "u_min", "u_max", "tf_fixed"});
  for (const char* k : {"id", "t0", "v0"})
    if (!j.contains(k)) fail(path, std::string("missing '") + k + "'");
  VehicleArrival a;
  a.id = integer<int>(j.at("id"), path + ".id");
  a.t0 = number(j.at("t0"), path + ".t0");
  a.v0 = number(j.at("v0"), path + ".v0");
  if (j.contains("road")) a.road = text(j.at("road"), path + ".road");
  if (j.contains("lane")) a.lane = integer<int>(j.at("lane"), path + ".lane");
  if (j.contains("movement")) a.movement = text(j.at("movement"), path + ".movement");
  if (j.contains("u_min")) a.u_min = number(j.at("u_min"), path + ".u_min");
  if (j.contains("u_max")) a.u_max = number(j.at("u_max"), path + ".u_max");
  if (j.contains("tf_fixed")) a.tf_fixed = number(j.at("tf_fixed"), path + ".tf_fixed");
  return a;
}

std::vector<VehicleArrival> parse_arrivals(const json& j, const std::string& path,
                                           const ScenarioConfig& cfg) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<VehicleArrival> out;
  std::set<int> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    auto a = parse_arrival(j[i], p);
    if (!ids.insert(a.id).second) fail(p, "duplicate id " + std::to_string(a.id));
    if (!cfg.conflict.knows(a.approach()))
      fail(p, "approach " + a.approach().label() + " is not in the conflict matrix");
    try {
      a.validate(effective_config(cfg, a));
    } catch (const ConfigError& e) {
      fail(p, e.what());
    }
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return x.t0 < y.t0; });
  return out;
}

json arrival_json(const VehicleArrival& a) {
  json j = {{"id", a.id},     {"t0", a.t0},     {"v0", a.v0},
            {"road", a.road}, {"lane", a.lane}, {"movement", a.movement}};
  if (a.u_min) j["u_min"] = *a.u_min;
  if (a.u_max) j["u_max"] = *a.u_max;
  if (a.tf_fixed) j["tf_fixed"] = *a.tf_fixed;
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  only_keys(j, "scenario", {"schema_version", "name", "config", "arrivals", "variants", "run"});
  if (!j.contains("schema_version")) fail("scenario", "missing 'schema_version'");
  Scenario s;
  s.schema_version = integer<int>(j.at("schema_version"), "schema_version");
  if (s.schema_version != kScenarioSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(s.schema_version));
  if (j.contains("name")) s.name = text(j.at("name"), "name");
  if (j.contains("config")) s.config = parse_config(j.at("config"), "config");
  s.config.validate();

  if (j.contains("arrivals") == j.contains("variants"))
    fail("scenario", "exactly one of 'arrivals' and 'variants' is required");
  if (j.contains("arrivals")) {
    s.variants.push_back({"main", parse_arrivals(j.at("arrivals"), "arrivals", s.config)});
  } else {
    const auto& vs = j.at("variants");
    if (!vs.is_array() || vs.empty()) fail("variants", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string p = "variants[" + std::to_string(i) + "]";
      only_keys(vs[i], p, {"name", "arrivals"});
      if (!vs[i].contains("name") || !vs[i].contains("arrivals"))
        fail(p, "needs 'name' and 'arrivals'");
      Variant v;
      v.name = text(vs[i].at("name"), p + ".name");
      if (v.name.empty() || v.name.find_first_of("/\\ ") != std::string::npos)
        fail(p + ".name", "must be non-empty without spaces or slashes");
      if (!names.insert(v.name).second) fail(p + ".name", "duplicate variant name");
      v.arrivals = parse_arrivals(vs[i].at("arrivals"), p + ".arrivals", s.config);
      s.variants.push_back(std::move(v));
    }
  }

  if (j.contains("run")) {
    const auto& r = j.at("run");
    only_keys(r, "run", {"sample_step", "oracle", "seed"});
    if (r.contains("sample_step")) s.run.sample_step = number(r.at("sample_step"), "run.sample_step");
    if (r.contains("oracle")) s.run.oracle = boolean(r.at("oracle"), "run.oracle");
    if (r.contains("seed")) s.run.seed = integer<std::uint64_t>(r.at("seed"), "run.seed");
  }
  if (!(s.run.sample_step > 0.0)) fail("run.sample_step", "must be positive");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scenario(os.str());
}

std::string to_json(const Scenario& s) {
  const auto& c = s.config;
  json conflict = {{"approaches", json::array()}, {"conflicting", json::array()}};
  const auto& keys = c.conflict.approaches();
  for (const auto& a : keys) conflict["approaches"].push_back(a.label());
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t k = i + 1; k < keys.size(); ++k)
      if (c.conflict.conflicts(keys[i], keys[k]))
        conflict["conflicting"].push_back({keys[i].label(), keys[k].label()});
  json j = {{"schema_version", s.schema_version},
            {"config",
             {{"L", c.L},
              {"S", c.S},
              {"v_min", c.v_min},
              {"v_max", c.v_max},
              {"u_min", c.u_min},
              {"u_max", c.u_max},
              {"gamma", c.gamma},
              {"phi", c.phi},
              {"delta0", c.delta0},
              {"rng_seed", c.rng_seed},
              {"conflict", conflict}}},
            {"run",
             {{"sample_step", s.run.sample_step}, {"oracle", s.run.oracle}, {"seed", s.run.seed}}}};
  if (!s.name.empty()) j["name"] = s.name;
  j["variants"] = json::array();
  for (const auto& v : s.variants) {
    json arr = json::array();
    for (const auto& a : v.arrivals) arr.push_back(arrival_json(a));
    j["variants"].push_back({{"name", v.name}, {"arrivals", arr}});
  }
  return j.dump(2) + "\n";
}

namespace {

VehicleArrival arrival(int id, double t0, double v0, const std::string& road = "NS",
                       std::optional<double> tf = std::nullopt) {
  VehicleArrival a;
  a.id = id;
  a.t0 = t0;
  a.v0 = v0;
  a.road = road;
  a.movement = road == "NS" ? "southbound" : "eastbound";
  a.tf_fixed = tf;
  return a;
}

}  // namespace

std::vector<std::string> fixture_names() {
  return {"fig2_unconstrained", "fig3_safety_no_exit", "fig4_safety_packed",
          "fig5_safety_exit",   "fig6_lateral",        "fig7_uvmax"};
}

Scenario fixture(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "fig2_unconstrained") {
    s.variants = {{"free", {arrival(1, 0.0, 10.0)}},
                  {"fixed", {arrival(1, 0.0, 10.0, "NS", 33.0)}}};
  } else if (name == "fig3_safety_no_exit") {
    s.variants = {{"main", {arrival(1, 0.0, 10.0, "NS", 39.0), arrival(2, 2.0, 12.0)}}};
  } else if (name == "fig4_safety_packed") {
    s.variants = {{"main", {arrival(1, 0.0, 10.0, "NS", 42.0), arrival(2, 2.0, 12.0)}}};
  } else if (name == "fig5_safety_exit") {
    s.variants = {
        {"main", {arrival(1, 0.0, 10.0, "NS", 41.0), arrival(2, 1.5, 12.0, "NS", 42.5)}}};
  } else if (name == "fig6_lateral") {
    s.variants = {{"main", {arrival(1, 0.0, 10.0, "EW"), arrival(2, 2.0, 12.0, "NS", 34.4)}}};
  } else if (name == "fig7_uvmax") {
    s.config.v_max = 13.5;
    s.config.u_max = 0.2;
    s.variants = {{"main", {arrival(1, 0.0, 10.0)}}};
  } else {
    throw ConfigError("unknown fixture '" + name + "'");
  }
  return s;
}

}  // namespace cavopt
