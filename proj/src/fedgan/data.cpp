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

#include "fedgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>

#include "fedgan/error.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/text.hpp"

namespace fedgan::data {
namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes,
                        std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(path.string() + ": truncated header at byte offset " +
                      std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

void expect_magic(const std::vector<std::uint8_t>& bytes, std::uint32_t magic,
                  const std::filesystem::path& path) {
  const std::uint32_t got = read_be32(bytes, 0, path);
  if (got != magic) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  ": bad magic 0x%08x at byte offset 0 (expected 0x%08x)", got,
                  magic);
    throw FormatError(path.string() + buf);
  }
}

std::vector<std::vector<std::size_t>> indices_by_class(
    const LabeledDataset& dataset) {
  std::vector<std::vector<std::size_t>> out(dataset.n_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  }
  return out;
}

}  // namespace

LabeledDataset LabeledDataset::subset(
    std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.n_classes = n_classes;
  out.features.resize(static_cast<Eigen::Index>(indices.size()),
                      features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::class_histogram() const {
  std::vector<std::size_t> counts(n_classes, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ConfigError("dataset has " + std::to_string(features.rows()) +
                      " feature rows but " + std::to_string(labels.size()) +
                      " labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw ConfigError("dataset label " + std::to_string(y) +
                        " outside [0," + std::to_string(n_classes) + ")");
    }
  }
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    const double v = features.data()[i];
    if (!std::isfinite(v) || std::abs(v) > 1.0 + 1e-9) {
      throw ConfigError("dataset feature outside [-1,1]");
    }
  }
}

std::vector<double> mixture_mean(const MixtureSpec& spec, std::size_t cls) {
  std::vector<double> mean(spec.dim, 0.0);
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(cls) /
                       static_cast<double>(spec.n_classes);
  mean[0] = spec.radius * std::cos(angle);
  mean[1] = spec.radius * std::sin(angle);
  return mean;
}

LabeledDataset gen_gaussian_mixture(const MixtureSpec& spec,
                                    std::uint64_t seed) {
  if (spec.n_classes < 2) throw ConfigError("mixture: classes must be >= 2");
  if (spec.per_class < 1) throw ConfigError("mixture: per_class must be >= 1");
  if (spec.dim < 2) throw ConfigError("mixture: dim must be >= 2");
  if (!(spec.radius > 0.0 && spec.radius <= 0.9)) {
    throw ConfigError("mixture: radius must lie in (0, 0.9]");
  }
  if (!(spec.sigma > 0.0)) throw ConfigError("mixture: sigma must be > 0");

  Rng rng = make_stream(seed, Stream::kData);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  LabeledDataset out;
  out.n_classes = spec.n_classes;
  const std::size_t n = spec.n_classes * spec.per_class;
  out.features.resize(static_cast<Eigen::Index>(n),
                      static_cast<Eigen::Index>(spec.dim));
  out.labels.reserve(n);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    const auto mean = mixture_mean(spec, c);
    for (std::size_t s = 0; s < spec.per_class; ++s, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        out.features(row, static_cast<Eigen::Index>(j)) =
            std::clamp(mean[j] + noise(rng), -1.0, 1.0);
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);
  expect_magic(img, kIdxImagesMagic, images);
  expect_magic(lab, kIdxLabelsMagic, labels);

  const std::size_t n_img = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_lab = read_be32(lab, 4, labels);
  if (n_img != n_lab) {
    throw FormatError(images.string() + ": image count " +
                      std::to_string(n_img) + " (byte offset 4) != label count " +
                      std::to_string(n_lab) + " in " + labels.string());
  }
  constexpr std::size_t kImgHeader = 16;
  constexpr std::size_t kLabHeader = 8;
  const std::size_t dim = rows * cols;
  if (img.size() < kImgHeader + n_img * dim) {
    throw FormatError(images.string() + ": truncated payload at byte offset " +
                      std::to_string(img.size()) + " (expected " +
                      std::to_string(kImgHeader + n_img * dim) + " bytes)");
  }
  if (lab.size() < kLabHeader + n_lab) {
    throw FormatError(labels.string() + ": truncated payload at byte offset " +
                      std::to_string(lab.size()) + " (expected " +
                      std::to_string(kLabHeader + n_lab) + " bytes)");
  }

  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(n_img),
                      static_cast<Eigen::Index>(dim));
  const std::uint8_t* px = img.data() + kImgHeader;
  for (Eigen::Index i = 0; i < out.features.size(); ++i) {
    out.features.data()[i] = pixel_to_feature(px[i]);
  }
  out.labels.resize(n_lab);
  int max_label = -1;
  for (std::size_t i = 0; i < n_lab; ++i) {
    out.labels[i] = lab[kLabHeader + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.n_classes = static_cast<std::size_t>(max_label + 1);
  return out;
}

std::vector<LabeledDataset> partition_iid(const LabeledDataset& dataset,
                                          std::size_t k, double fraction,
                                          std::uint64_t seed) {
  if (dataset.empty()) throw ConfigError("partition_iid: empty dataset");
  if (k < 1) throw ConfigError("partition_iid: k must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("partition_iid: fraction must lie in (0,1]");
  }
  const auto shard_size = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(dataset.size())));
  if (shard_size == 0) {
    throw ConfigError("partition_iid: fraction leaves shards empty");
  }
  Rng rng = make_stream(seed, Stream::kPartition, {0});
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<LabeledDataset> shards;
  shards.reserve(k);
  std::vector<std::size_t> idx(shard_size);
  for (std::size_t s = 0; s < k; ++s) {
    for (auto& i : idx) i = pick(rng);
    shards.push_back(dataset.subset(idx));
  }
  return shards;
}

std::vector<LabeledDataset> partition_noniid(const LabeledDataset& dataset,
                                             std::size_t k, double skewness,
                                             std::uint64_t seed,
                                             LeftoverSplit split) {
  if (k < 2) throw ConfigError("partition_noniid: k must be >= 2");
  if (!(skewness > 0.5 && skewness <= 1.0)) {
    throw ConfigError("partition_noniid: p must lie in (0.5,1]");
  }
  if (dataset.empty()) throw ConfigError("partition_noniid: empty dataset");

  Rng rng = make_stream(seed, Stream::kPartition, {1});
  std::uniform_int_distribution<std::size_t> pick_client(0, k - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, k - 2);
  std::vector<std::vector<std::size_t>> assigned(k);

  for (auto& members : indices_by_class(dataset)) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t primary = pick_client(rng);
    // The epsilon keeps products such as 0.7 * 100 from flooring to 69.
    const auto primary_count = static_cast<std::size_t>(
        std::floor(skewness * static_cast<double>(members.size()) + 1e-9));
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < k; ++c) {
      if (c != primary) others.push_back(c);
    }
    if (split == LeftoverSplit::kEven) {
      std::shuffle(others.begin(), others.end(), rng);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::size_t client = primary;
      if (i >= primary_count) {
        client = split == LeftoverSplit::kEven
                     ? others[(i - primary_count) % others.size()]
                     : others[pick_other(rng)];
      }
      assigned[client].push_back(members[i]);
    }
  }

  std::vector<LabeledDataset> shards;
  shards.reserve(k);
  for (auto& idx : assigned) {
    std::sort(idx.begin(), idx.end());
    shards.push_back(dataset.subset(idx));
  }
  return shards;
}

CountMatrix skewness_report(std::span<const LabeledDataset> shards) {
  CountMatrix counts;
  if (shards.empty()) return counts;
  const std::size_t n_classes = shards.front().n_classes;
  for (const auto& shard : shards) {
    if (shard.n_classes != n_classes) {
      throw ConfigError("skewness_report: shards disagree on class count");
    }
    counts.push_back(shard.class_histogram());
  }
  return counts;
}

void write_csv(std::ostream& out, const LabeledDataset& dataset) {
  for (std::size_t j = 0; j < dataset.dim(); ++j) {
    out << "feature_" << j << ',';
  }
  out << "label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < dataset.dim(); ++j) {
      out << format_double(dataset.features(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)))
          << ',';
    }
    out << dataset.labels[i] << '\n';
  }
}

}  // namespace fedgan::data
