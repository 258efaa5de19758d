#pragma once

namespace ncdel {

inline constexpr const char* version = "0.1.0";

}  // namespace ncdel
