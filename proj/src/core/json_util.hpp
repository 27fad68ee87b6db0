#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "core/camera.hpp"
#include "core/errors.hpp"

namespace recap::jsonutil {

using nlohmann::json;

/// Throws ValidationError if `j` is not an object or has keys outside `allowed`.
inline void require_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object", std::string(where));
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ValidationError("unknown key '" + key + "' in " + std::string(where), key);
  }
}

inline Vec3 vec3(const json& j, std::string_view name) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(std::string(name) + " must be an array of 3 numbers", std::string(name));
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline camera::Box box(const json& j, std::string_view name) {
  require_keys(j, name, {"min", "max"});
  camera::Box b{vec3(j.at("min"), "min"), vec3(j.at("max"), "max")};
  if ((b.min.array() > b.max.array()).any())
    throw ValidationError(std::string(name) + ": min exceeds max", std::string(name));
  return b;
}

inline json to_json(const camera::Box& b) { return {{"min", to_json(b.min)}, {"max", to_json(b.max)}}; }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace recap::jsonutil
