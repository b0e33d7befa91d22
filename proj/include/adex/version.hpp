#pragma once

namespace adex {
inline constexpr const char* version = "0.1.0";
}
