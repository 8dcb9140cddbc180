#include "cavopt/model.hpp"

#include <cmath>

namespace cavopt {

ConflictMatrix ConflictMatrix::four_way_through() {
  ConflictMatrix m;
  const std::vector<Approach> keys = {{"NS", "southbound"},
                                      {"NS", "northbound"},
                                      {"EW", "eastbound"},
                                      {"EW", "westbound"}};
  for (const auto& k : keys) m.add_approach(k);
  for (const auto& a : keys)
    for (const auto& b : keys) m.set(a, b, a.road != b.road);
  return m;
}

void ConflictMatrix::add_approach(const Approach& a) {
  if (knows(a)) return;
  index_[a] = keys_.size();
  keys_.push_back(a);
  for (auto& row : table_) row.push_back(false);
  table_.emplace_back(keys_.size(), false);
}

std::size_t ConflictMatrix::index_of(const Approach& a) const {
  auto it = index_.find(a);
  if (it == index_.end())
    throw ConfigError("approach '" + a.label() + "' missing from conflict matrix");
  return it->second;
}

void ConflictMatrix::set(const Approach& a, const Approach& b, bool conflicts) {
  const auto i = index_of(a);
  const auto j = index_of(b);
  table_[i][j] = conflicts;
  table_[j][i] = conflicts;
}

bool ConflictMatrix::conflicts(const Approach& a, const Approach& b) const {
  return table_[index_of(a)][index_of(b)];
}

void ScenarioConfig::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(L) || !finite(S) || !(S > 0.0) || !(L > S))
    throw ConfigError("geometry requires L > S > 0");
  if (!finite(v_min) || !finite(v_max) || !(v_min >= 0.0) || !(v_min < v_max))
    throw ConfigError("speed bounds require 0 <= v_min < v_max");
  if (!finite(u_min) || !finite(u_max) || !(u_min < 0.0) || !(u_max > 0.0))
    throw ConfigError("control bounds require u_min < 0 < u_max");
  if (!finite(gamma) || gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (!finite(phi) || phi < 0.0) throw ConfigError("phi must be >= 0");
  if (!finite(delta0) || delta0 < 0.0) throw ConfigError("delta0 must be >= 0");
}

void VehicleArrival::validate(const ScenarioConfig& cfg) const {
  if (!std::isfinite(t0)) throw ConfigError("vehicle " + std::to_string(id) + ": t0 not finite");
  if (!(v0 > cfg.v_min && v0 < cfg.v_max))
    throw ConfigError("vehicle " + std::to_string(id) +
                      ": entry speed must lie strictly inside (v_min, v_max)");
  if (u_min && !(*u_min < 0.0)) throw ConfigError("vehicle u_min override must be < 0");
  if (u_max && !(*u_max > 0.0)) throw ConfigError("vehicle u_max override must be > 0");
  if (tf_fixed && !(*tf_fixed > t0)) throw ConfigError("vehicle tf_fixed must exceed t0");
}

ScenarioConfig effective_config(const ScenarioConfig& cfg, const VehicleArrival& a) {
  ScenarioConfig out = cfg;
  if (a.u_min) out.u_min = *a.u_min;
  if (a.u_max) out.u_max = *a.u_max;
  return out;
}

}  // namespace cavopt
