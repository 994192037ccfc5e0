#pragma once

#include <json.hpp>

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

#include "shelfbrg/error.hpp"
#include "shelfbrg/geometry.hpp"

namespace shelfbrg {

// Insertion-ordered so emitted documents keep a stable, readable key order.
using Json = nlohmann::ordered_json;

namespace json_util {

inline Json parse_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string(what) + ": " + e.what());
  }
}

inline void require_object(const Json& j, std::string_view ctx) {
  if (!j.is_object())
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected an object");
}

/// Rejects keys outside `allowed`.
inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                       std::string_view ctx) {
  require_object(j, ctx);
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known)
      throw Error(ErrorCode::SchemaError,
                  std::string(ctx) + ": unknown key '" + key + "'");
  }
}

inline const Json& require(const Json& j, std::string_view key, std::string_view ctx) {
  auto it = j.find(std::string(key));
  if (it == j.end())
    throw Error(ErrorCode::SchemaError,
                std::string(ctx) + ": missing key '" + std::string(key) + "'");
  return *it;
}

inline double as_number(const Json& v, std::string_view ctx) {
  if (!v.is_number())
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d))
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": number is not finite");
  return d;
}

inline std::string as_string(const Json& v, std::string_view ctx) {
  if (!v.is_string())
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected a string");
  return v.get<std::string>();
}

inline bool as_bool(const Json& v, std::string_view ctx) {
  if (!v.is_boolean())
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected a boolean");
  return v.get<bool>();
}

inline long long as_integer(const Json& v, std::string_view ctx) {
  if (!v.is_number_integer())
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected an integer");
  return v.get<long long>();
}

inline Vec3 as_vec3(const Json& v, std::string_view ctx) {
  if (!v.is_array() || v.size() != 3)
    throw Error(ErrorCode::SchemaError, std::string(ctx) + ": expected [x, y, z]");
  return {as_number(v[0], ctx), as_number(v[1], ctx), as_number(v[2], ctx)};
}

inline Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

}  // namespace json_util
}  // namespace shelfbrg
