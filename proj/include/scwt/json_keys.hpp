#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "scwt/error.hpp"

namespace scwt {

/// Throws SchemaError if `j` is not an object or holds a key outside `allowed`.
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                               std::string_view context) {
  if (!j.is_object()) throw SchemaError(std::string(context) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw SchemaError("unknown key '" + item.key() + "' in " + std::string(context));
    }
  }
}

}  // namespace scwt
