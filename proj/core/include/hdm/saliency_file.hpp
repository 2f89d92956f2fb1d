#pragma once

#include <filesystem>

#include "hdm/metrics.hpp"

namespace hdm {

// Binary saliency map container.
//
//   magic   6 bytes  "HDMSAL"
//   version u16 LE   currently 1
//   height  u32 LE
//   width   u32 LE
//   class   u32 LE
//   method  u16 LE length + bytes
//   source  u16 LE length + bytes
//   payload height*width float32 LE, row-major
//
// No trailing bytes are allowed.

inline constexpr int kSaliencyFileVersion = 1;

void save_saliency(const SaliencyRecord& record, const std::filesystem::path& path);
SaliencyRecord load_saliency(const std::filesystem::path& path);

}  // namespace hdm
