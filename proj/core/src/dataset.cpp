#include "ordisco/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ordisco/errors.hpp"

namespace ordisco {

std::string to_string(Scenario s) {
  return s == Scenario::kNewInstance ? "new_instance" : "new_class";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "new_instance") return Scenario::kNewInstance;
  if (s == "new_class") return Scenario::kNewClass;
  throw ConfigError("unknown scenario: " + s);
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const char* field, std::size_t offset) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError(std::string("packed dataset truncated reading ") + field +
                    " at byte offset " + std::to_string(offset));
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_packed(const PackedDataset& ds, const std::string& path) {
  const std::size_t expected = static_cast<std::size_t>(ds.n) * ds.h * ds.w * ds.c;
  if (ds.pixels.size() != expected) {
    throw DataError("packed dataset payload size " + std::to_string(ds.pixels.size()) +
                    " does not match header N*H*W*C = " + std::to_string(expected));
  }
  if (ds.labels.size() != ds.n) {
    throw DataError("packed dataset label count mismatch");
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os.write(kPackedMagic, 4);
    put_u32(os, kPackedVersion);
    put_u32(os, ds.n);
    put_u32(os, ds.h);
    put_u32(os, ds.w);
    put_u32(os, ds.c);
    put_u32(os, ds.k);
    for (std::int32_t l : ds.labels) put_u32(os, static_cast<std::uint32_t>(l));
    os.write(reinterpret_cast<const char*>(ds.pixels.data()),
             static_cast<std::streamsize>(ds.pixels.size()));
    if (!os) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

PackedDataset read_packed(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kPackedMagic, 4) != 0) {
    throw DataError("bad magic in " + path + " (expected SSCD) at byte offset 0");
  }
  std::size_t off = 4;
  const std::uint32_t version = get_u32(is, "version", off);
  off += 4;
  if (version != kPackedVersion) {
    throw DataError("unsupported packed dataset version " + std::to_string(version));
  }
  PackedDataset ds;
  ds.n = get_u32(is, "N", off);
  off += 4;
  ds.h = get_u32(is, "H", off);
  off += 4;
  ds.w = get_u32(is, "W", off);
  off += 4;
  ds.c = get_u32(is, "C", off);
  off += 4;
  ds.k = get_u32(is, "K", off);
  off += 4;

  ds.labels.resize(ds.n);
  for (std::uint32_t i = 0; i < ds.n; ++i) {
    ds.labels[i] = static_cast<std::int32_t>(get_u32(is, "labels", off));
    off += 4;
    if (ds.labels[i] < -1 || ds.labels[i] >= static_cast<std::int32_t>(ds.k)) {
      throw DataError("label " + std::to_string(ds.labels[i]) + " out of range for K=" +
                      std::to_string(ds.k) + " at byte offset " + std::to_string(off - 4));
    }
  }
  const std::size_t expected = static_cast<std::size_t>(ds.n) * ds.h * ds.w * ds.c;
  ds.pixels.resize(expected);
  is.read(reinterpret_cast<char*>(ds.pixels.data()),
          static_cast<std::streamsize>(expected));
  const std::size_t got = static_cast<std::size_t>(is.gcount());
  if (got != expected) {
    throw DataError("packed dataset pixel payload truncated: expected " +
                    std::to_string(expected) + " bytes, got " + std::to_string(got) +
                    " at byte offset " + std::to_string(off));
  }
  return ds;
}

Dataset unpack(const PackedDataset& packed, const std::string& id) {
  Dataset ds;
  ds.id = id;
  ds.shape = packed.shape();
  ds.num_classes = static_cast<int>(packed.k);
  ds.samples.resize(packed.n);
  const std::size_t px = static_cast<std::size_t>(ds.shape.size());
  for (std::uint32_t i = 0; i < packed.n; ++i) {
    Sample& s = ds.samples[i];
    s.source_index = static_cast<int>(i);
    s.label = packed.labels[i];
    s.image.resize(px);
    const std::uint8_t* src = packed.pixels.data() + static_cast<std::size_t>(i) * px;
    for (std::size_t j = 0; j < px; ++j) s.image[j] = static_cast<float>(src[j]) / 255.0f;
  }
  return ds;
}

PackedDataset pack(const Dataset& ds) {
  PackedDataset p;
  p.n = static_cast<std::uint32_t>(ds.size());
  p.h = static_cast<std::uint32_t>(ds.shape.h);
  p.w = static_cast<std::uint32_t>(ds.shape.w);
  p.c = static_cast<std::uint32_t>(ds.shape.c);
  p.k = static_cast<std::uint32_t>(ds.num_classes);
  p.labels.reserve(p.n);
  const std::size_t px = static_cast<std::size_t>(ds.shape.size());
  p.pixels.resize(static_cast<std::size_t>(p.n) * px);
  for (std::uint32_t i = 0; i < p.n; ++i) {
    const Sample& s = ds.samples[i];
    p.labels.push_back(s.label);
    for (std::size_t j = 0; j < px; ++j) {
      float v = std::clamp(s.image[j], 0.0f, 1.0f);
      p.pixels[static_cast<std::size_t>(i) * px + j] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return p;
}

Dataset gen_synthetic(int num_classes, int per_class, int image_side,
                      std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("gen_synthetic: K must be >= 2");
  if (per_class < 1 || image_side < 4) {
    throw ConfigError("gen_synthetic: per_class >= 1 and image_side >= 4 required");
  }

  // Class prototypes on a fixed grid, a function of (K, side) only.
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_classes))));
  const double cell = static_cast<double>(image_side) / grid;
  const double sigma = 0.16 * cell + 0.45;

  Dataset ds;
  ds.id = "synthetic-K" + std::to_string(num_classes) + "-s" + std::to_string(image_side);
  ds.shape = {image_side, image_side, 1};
  ds.num_classes = num_classes;
  ds.samples.reserve(static_cast<std::size_t>(num_classes) * per_class);

  Rng rng = Rng::substream(seed, "synthetic");
  int idx = 0;
  for (int k = 0; k < num_classes; ++k) {
    const double cy = (k / grid + 0.5) * cell;
    const double cx = (k % grid + 0.5) * cell;
    const double base = 0.55 + 0.45 * ((k % 3) / 2.0);
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = k;
      s.source_index = idx++;
      s.image.resize(static_cast<std::size_t>(image_side) * image_side);
      const double jy = cy + rng.uniform(-0.35, 0.35) * cell;
      const double jx = cx + rng.uniform(-0.35, 0.35) * cell;
      const double amp = base * rng.uniform(0.75, 1.0);
      for (int y = 0; y < image_side; ++y) {
        for (int x = 0; x < image_side; ++x) {
          const double dy = y + 0.5 - jy;
          const double dx = x + 0.5 - jx;
          double v = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          v += 0.04 * rng.normal();
          v = std::clamp(v, 0.0, 1.0);
          // Quantize so write_packed/read_packed round-trips losslessly.
          s.image[static_cast<std::size_t>(y) * image_side + x] =
              static_cast<float>(std::lround(v * 255.0) / 255.0);
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace ordisco
