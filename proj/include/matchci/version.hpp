#pragma once

namespace matchci {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace matchci
