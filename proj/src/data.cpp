#include "dprsa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dprsa/errors.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off,
                   const std::string& path) {
  if (off + 4 > buf.size()) {
    throw IdxError(IdxError::Kind::Truncated, path + ": truncated header");
  }
  return (static_cast<std::uint32_t>(buf[off]) << 24) |
         (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[off + 2]) << 8) |
         static_cast<std::uint32_t>(buf[off + 3]);
}

void put_be32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::vector<unsigned char> img = read_all(images_path);
  if (be32(img, 0, images_path) != kImagesMagic) {
    throw IdxError(IdxError::Kind::BadMagic, images_path + ": expected image magic 0x803");
  }
  std::size_t n = be32(img, 4, images_path);
  std::size_t rows = be32(img, 8, images_path);
  std::size_t cols = be32(img, 12, images_path);
  std::size_t pixels = n * rows * cols;
  if (img.size() < 16 + pixels) {
    throw IdxError(IdxError::Kind::Truncated, images_path + ": truncated pixel data");
  }

  std::vector<unsigned char> lab = read_all(labels_path);
  if (be32(lab, 0, labels_path) != kLabelsMagic) {
    throw IdxError(IdxError::Kind::BadMagic, labels_path + ": expected label magic 0x801");
  }
  std::size_t n_labels = be32(lab, 4, labels_path);
  if (n_labels != n) {
    throw IdxError(IdxError::Kind::CountMismatch,
                   labels_path + ": label count does not match image count");
  }
  if (lab.size() < 8 + n) {
    throw IdxError(IdxError::Kind::Truncated, labels_path + ": truncated label data");
  }

  Dataset ds;
  ds.num_samples = n;
  ds.feature_dim = rows * cols;
  ds.features.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    ds.features[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<int>(lab[8 + i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const Dataset& ds) {
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open " + images_path + " for writing");
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(ds.num_samples));
  put_be32(img, static_cast<std::uint32_t>(ds.feature_dim));
  put_be32(img, 1);  // written as n x d x 1; the loader flattens anyway
  for (double v : ds.features) {
    double q = std::clamp(std::round(v * 255.0), 0.0, 255.0);
    img.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
  if (!img) throw DataError("write failed for " + images_path);

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot open " + labels_path + " for writing");
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(ds.num_samples));
  for (int l : ds.labels) lab.put(static_cast<char>(static_cast<unsigned char>(l)));
  if (!lab) throw DataError("write failed for " + labels_path);
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.samples_per_class < 1) {
    throw std::invalid_argument("gen_synthetic: empty spec");
  }
  if (!(spec.class_mean_separation > 0.0) || !(spec.noise_std > 0.0)) {
    throw std::invalid_argument("gen_synthetic: separation and noise_std must be > 0");
  }
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.feature_dim = spec.dim;
  ds.num_samples = spec.num_classes * spec.samples_per_class;
  ds.features.resize(ds.num_samples * spec.dim);
  ds.labels.resize(ds.num_samples);

  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    // Mean on axis (c mod dim), pushed out one separation unit further for
    // each wrap so all pairwise mean distances stay >= separation.
    std::size_t axis = c % spec.dim;
    double radius =
        spec.class_mean_separation * (1.0 + static_cast<double>(c / spec.dim));
    RngStream rng(derive_key(spec.seed, {stream_purpose::kSynthetic, c}));
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      std::size_t row = c * spec.samples_per_class + s;
      std::span<double> x{ds.features.data() + row * spec.dim, spec.dim};
      rng.fill_normal(x, spec.noise_std);
      x[axis] += radius;
      ds.labels[row] = static_cast<int>(c);
    }
  }
  return ds;
}

}  // namespace dprsa
