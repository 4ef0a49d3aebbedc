#pragma once

#define ENTROMAP_VERSION_MAJOR 0
#define ENTROMAP_VERSION_MINOR 3
#define ENTROMAP_VERSION_PATCH 0

namespace entromap {
inline constexpr const char* kVersion = "0.3.0";
}
