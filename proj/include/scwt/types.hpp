#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace scwt {

/// Diagnostic class of a recording or epoch. The middle class is FTD in the
/// three-way AD/FTD/HC task and MCI in the AD/MCI/HC task.
enum class ClassLabel : int { AD = 0, FtdOrMci = 1, HC = 2 };

inline constexpr int kNumClasses = 3;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "AD", "FTD_or_MCI", "HC"};

inline constexpr int class_index(ClassLabel label) noexcept {
  return static_cast<int>(label);
}

std::string_view class_name(ClassLabel label) noexcept;

/// Parses one of "AD", "FTD_or_MCI", "HC".
std::optional<ClassLabel> parse_class_label(std::string_view name) noexcept;

ClassLabel class_from_index(int index);

}  // namespace scwt
