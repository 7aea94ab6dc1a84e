#include "dcbf/serialize.hpp"

#include <algorithm>

namespace dcbf {
namespace json_detail {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
  }
}

}  // namespace json_detail

using json_detail::get_opt;

void to_json(Json& j, const Range& r) { j = Json::array({r.min, r.max}); }

void from_json(const Json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("range must be a [min, max] pair");
  r.min = j[0].get<double>();
  r.max = j[1].get<double>();
}

void to_json(Json& j, const WorldConfig& c) {
  j = Json{{"table_side", c.table_side},
           {"dt", c.dt},
           {"max_step", c.max_step},
           {"ee_radius", c.ee_radius},
           {"n_objects", c.n_objects},
           {"mass_range", c.mass_range},
           {"static_friction_range", c.static_friction_range},
           {"dynamic_friction_range", c.dynamic_friction_range},
           {"obj_radius", c.obj_radius},
           {"obj_height", c.obj_height},
           {"tilt_gain", c.tilt_gain},
           {"tilt_restore_rate", c.tilt_restore_rate},
           {"contact_iters", c.contact_iters},
           {"ee_start", c.ee_start},
           {"seed", c.seed}};
}

void from_json(const Json& j, WorldConfig& c) {
  json_detail::reject_unknown(j,
                              {"table_side", "dt", "max_step", "ee_radius", "n_objects", "mass_range",
                               "static_friction_range", "dynamic_friction_range", "obj_radius",
                               "obj_height", "tilt_gain", "tilt_restore_rate", "contact_iters",
                               "ee_start", "seed"},
                              "world");
  get_opt(j, "table_side", c.table_side);
  get_opt(j, "dt", c.dt);
  get_opt(j, "max_step", c.max_step);
  get_opt(j, "ee_radius", c.ee_radius);
  get_opt(j, "n_objects", c.n_objects);
  get_opt(j, "mass_range", c.mass_range);
  get_opt(j, "static_friction_range", c.static_friction_range);
  get_opt(j, "dynamic_friction_range", c.dynamic_friction_range);
  get_opt(j, "obj_radius", c.obj_radius);
  get_opt(j, "obj_height", c.obj_height);
  get_opt(j, "tilt_gain", c.tilt_gain);
  get_opt(j, "tilt_restore_rate", c.tilt_restore_rate);
  get_opt(j, "contact_iters", c.contact_iters);
  get_opt(j, "ee_start", c.ee_start);
  get_opt(j, "seed", c.seed);
}

}  // namespace dcbf
