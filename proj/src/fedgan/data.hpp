/*
 * Copyright 2026 The FedGAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGAN_DATA_HPP_
#define FEDGAN_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include "fedgan/nn.hpp"

namespace fedgan::data {

using nn::Matrix;

// Feature rows in [-1,1] with integer class labels in [0, n_classes).
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t n_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool empty() const { return labels.empty(); }

  // Rows at `indices`, in that order.
  LabeledDataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_histogram() const;
  // Throws ConfigError on label/feature count mismatch, out-of-range labels
  // or features outside [-1,1].
  void validate() const;
};

struct MixtureSpec {
  std::size_t n_classes = 8;
  std::size_t per_class = 500;
  std::size_t dim = 2;
  double radius = 0.8;
  double sigma = 0.05;
};

// Class c is centred at radius * (cos 2πc/C, sin 2πc/C, 0, ...), spread
// N(0, sigma²) per coordinate and clamped to [-1,1]. Samples are grouped by
// class.
LabeledDataset gen_gaussian_mixture(const MixtureSpec& spec,
                                    std::uint64_t seed);

// Class mean used by gen_gaussian_mixture.
std::vector<double> mixture_mean(const MixtureSpec& spec, std::size_t cls);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// MNIST-style IDX pair. Pixels map linearly from [0,255] to [-1,1]. Throws
// FormatError (with byte offset) on bad magic, truncation or count mismatch.
LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels);

// Maps one raw pixel byte onto [-1,1].
inline double pixel_to_feature(std::uint8_t byte) {
  return static_cast<double>(byte) / 255.0 * 2.0 - 1.0;
}

// Each shard draws round(fraction * n) rows uniformly with replacement.
std::vector<LabeledDataset> partition_iid(const LabeledDataset& dataset,
                                          std::size_t k, double fraction,
                                          std::uint64_t seed);

enum class LeftoverSplit { kRandom, kEven };

// Per class, one uniformly chosen primary client receives floor(p * n_c)
// rows; the rest go to the other k-1 clients (independently uniform, or
// round-robin over a shuffled order with kEven). A true partition: no row is
// duplicated or dropped.
std::vector<LabeledDataset> partition_noniid(
    const LabeledDataset& dataset, std::size_t k, double skewness,
    std::uint64_t seed, LeftoverSplit split = LeftoverSplit::kRandom);

// counts[client][class].
using CountMatrix = std::vector<std::vector<std::size_t>>;
CountMatrix skewness_report(std::span<const LabeledDataset> shards);

// Header feature_0..feature_{d-1},label then one row per sample.
void write_csv(std::ostream& out, const LabeledDataset& dataset);

}  // namespace fedgan::data

#endif  // FEDGAN_DATA_HPP_
