#pragma once

namespace dynperc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dynperc
