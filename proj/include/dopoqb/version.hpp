#pragma once

namespace dopoqb {
inline constexpr const char* kVersion = "0.1.0";
}
