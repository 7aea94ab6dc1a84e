#pragma once

// JSON mappings for the plain configuration and state types. Readers accept
// partial objects (missing keys keep their defaults) and reject unknown keys
// with ConfigError.

#include "dcbf/sim.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string_view>

namespace dcbf {

using Json = nlohmann::json;

namespace json_detail {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known, std::string_view what);

template <typename T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

}  // namespace json_detail

void to_json(Json& j, const Range& r);
void from_json(const Json& j, Range& r);
void to_json(Json& j, const WorldConfig& c);
void from_json(const Json& j, WorldConfig& c);

}  // namespace dcbf

namespace Eigen {

// [x, y] arrays for planar vectors.
inline void to_json(nlohmann::json& j, const Vector2d& v) { j = nlohmann::json::array({v.x(), v.y()}); }
inline void from_json(const nlohmann::json& j, Vector2d& v) {
  v = Vector2d(j.at(0).get<double>(), j.at(1).get<double>());
}

}  // namespace Eigen
