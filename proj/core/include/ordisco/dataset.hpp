#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordisco/rng.hpp"
#include "ordisco/types.hpp"

namespace ordisco {

/// On-disk dataset container: little-endian, magic "SSCD", version 1, then
/// six u32 fields (version, N, H, W, C, K), N int32 labels, N*H*W*C pixel bytes.
struct PackedDataset {
  std::uint32_t n = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t c = 0;
  std::uint32_t k = 0;
  std::vector<std::int32_t> labels;  // -1 or 0..K-1
  std::vector<std::uint8_t> pixels;  // row-major N x H x W x C

  ImageShape shape() const {
    return {static_cast<int>(h), static_cast<int>(w), static_cast<int>(c)};
  }
};

constexpr char kPackedMagic[4] = {'S', 'S', 'C', 'D'};
constexpr std::uint32_t kPackedVersion = 1;

void write_packed(const PackedDataset& ds, const std::string& path);
PackedDataset read_packed(const std::string& path);

/// In-memory dataset with normalized images.
struct Dataset {
  std::string id;
  ImageShape shape;
  int num_classes = 0;
  std::vector<Sample> samples;  // source_index == position

  std::size_t size() const { return samples.size(); }
};

Dataset unpack(const PackedDataset& packed, const std::string& id);
PackedDataset pack(const Dataset& ds);

/// Desk-scale stand-in for SVHN/CIFAR: K well-separated Gaussian-blob classes
/// on an image_side^2 single-channel canvas. Blob geometry depends only on
/// (K, image_side); per-sample jitter and noise flow from `seed`, so datasets
/// generated with different seeds share the same class structure.
Dataset gen_synthetic(int num_classes, int per_class, int image_side, std::uint64_t seed);

}  // namespace ordisco
