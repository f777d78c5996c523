#pragma once

namespace bq2d {

inline constexpr const char* version_string = "0.1.0";

}  // namespace bq2d
