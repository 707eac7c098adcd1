#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "dprsa/data.hpp"
#include "dprsa/fedsim.hpp"

namespace dprsa {

/// Where the training and test sets come from: generated blobs (test set
/// drawn from the same spec at seed + 1) or an MNIST-style IDX file pair.
struct DatasetConfig {
  enum class Kind { Synthetic, Mnist };
  Kind kind = Kind::Synthetic;

  SyntheticSpec synthetic{0, 0, 0, 0.0, 0.0, 0};
  std::size_t test_samples_per_class = 0;  // synthetic test-set size per class

  std::string train_images, train_labels, test_images, test_labels;
};

/// A full experiment read from a JSON config file. Model input/output widths
/// are not configured: they follow the dataset once it is loaded.
struct RunConfig {
  SimConfig sim;                 // sim.model is completed by load_datasets
  std::size_t hidden_dim = 50;
  DatasetConfig dataset;
  std::string output = "run.csv";
};

/// Parses and schema-validates a config document. Unknown keys anywhere in
/// the document are an error, as are wrong value types, so a typo cannot
/// silently fall back to a default. Throws ConfigError.
RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config(const std::string& path);

/// Materializes (train, test) and fills cfg.sim.model from the data shape.
/// Throws DataError for unreadable or inconsistent datasets.
std::pair<Dataset, Dataset> load_datasets(RunConfig& cfg);

}  // namespace dprsa
