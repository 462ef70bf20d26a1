#include "ordisco/pngio.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "ordisco/errors.hpp"

namespace ordisco {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type,
               const std::vector<std::uint8_t>& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + crc_start,
                         static_cast<uInt>(out.size() - crc_start));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png(const std::string& path, const std::vector<std::uint8_t>& pixels,
               int width, int height, int channels) {
  if (channels != 1 && channels != 3) {
    throw DataError("write_png: channels must be 1 or 3");
  }
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DataError("write_png: pixel buffer size mismatch");
  }

  // Raw scanlines with filter byte 0.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + static_cast<std::size_t>(width) * channels));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = pixels.data() + static_cast<std::size_t>(y) * width * channels;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * channels);
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK) {
    throw DataError("write_png: deflate failed");
  }
  comp.resize(comp_len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);               // gray / truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("write_png: cannot open " + tmp);
    os.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ordisco
