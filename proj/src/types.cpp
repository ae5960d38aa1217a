#include "scwt/types.hpp"

#include "scwt/error.hpp"

namespace scwt {

std::string_view class_name(ClassLabel label) noexcept {
  return kClassNames[static_cast<std::size_t>(class_index(label))];
}

std::optional<ClassLabel> parse_class_label(std::string_view name) noexcept {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[static_cast<std::size_t>(i)] == name) return static_cast<ClassLabel>(i);
  }
  return std::nullopt;
}

ClassLabel class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw ValidationError("class index out of range: " + std::to_string(index));
  }
  return static_cast<ClassLabel>(index);
}

}  // namespace scwt
