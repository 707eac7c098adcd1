#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dprsa/mlp.hpp"

namespace dprsa {

/// Immutable labeled dataset; features are row-major n x d.
struct Dataset {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t num_samples = 0;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  Sample sample(std::size_t i) const { return {row(i), labels[i]}; }
};

/// Gaussian class blobs with means on scaled coordinate axes, so every pair
/// of class means is at least `class_mean_separation` apart.
struct SyntheticSpec {
  std::size_t num_classes;
  std::size_t dim;
  std::size_t samples_per_class;
  double class_mean_separation;  // > 0
  double noise_std;              // > 0
  std::uint64_t seed;
};

/// Parses the big-endian IDX pair (images magic 0x00000803, labels magic
/// 0x00000801); pixels are scaled to [0,1] by 1/255. Throws IdxError with a
/// distinct kind for bad magic, truncation, and image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes the dataset back out as an IDX pair, quantizing each feature to
/// round(x * 255). Reloading a loaded dataset is lossless.
void write_idx(const std::string& images_path, const std::string& labels_path,
               const Dataset& ds);

/// Deterministic in spec.seed; samples are grouped by class, class c drawn
/// from N(mu_c, noise_std^2 I).
Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace dprsa
