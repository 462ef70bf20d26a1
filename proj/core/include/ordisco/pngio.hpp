#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ordisco {

/// Minimal grayscale/RGB PNG writer (zlib-backed). `pixels` is row-major
/// H x W x C with C in {1, 3}.
void write_png(const std::string& path, const std::vector<std::uint8_t>& pixels,
               int width, int height, int channels);

}  // namespace ordisco
