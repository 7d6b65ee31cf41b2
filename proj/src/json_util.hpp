#pragma once

// Internal serialization helpers shared by the .cpp files; not installed.

#include <cstdint>
#include <string>

#include "json.hpp"
#include "torsopose/geometry.hpp"

namespace torsopose {

Rig rig_from_json(const nlohmann::json& j);
nlohmann::ordered_json rig_to_ordered_json(const Rig& rig);

// FNV-1a, stable across platforms; used for config/dataset fingerprints.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return std::string(buf);
}

}  // namespace torsopose
