#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "dprsa/param_vector.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

/// One labeled sample viewed from a dataset (no ownership).
struct Sample {
  std::span<const double> x;
  int label;
};

/// Two-hidden-layer tanh MLP. Parameters live in one flat ParamVector with a
/// fixed layer-major packing: W1 (hidden x input, row-major), b1, W2
/// (hidden x hidden), b2, W3 (output x hidden), b3. Both hidden layers share
/// their width.
struct MlpModel {
  std::size_t input_dim;
  std::size_t hidden_dim;
  std::size_t output_dim;

  std::size_t param_count() const {
    return hidden_dim * input_dim + hidden_dim + hidden_dim * hidden_dim + hidden_dim +
           output_dim * hidden_dim + output_dim;
  }
};

/// Glorot-uniform weights (U[-sqrt(6/(fan_in+fan_out)), +..] per layer),
/// zero biases.
ParamVector init_params(const MlpModel& m, RngStream& rng);

/// logits = W3 tanh(W2 tanh(W1 x + b1) + b2) + b3.
ParamVector mlp_forward(const MlpModel& m, const ParamVector& params,
                        std::span<const double> x);

/// Mean cross-entropy over the batch and its analytic gradient.
std::pair<double, ParamVector> loss_and_grad(const MlpModel& m, const ParamVector& params,
                                             std::span<const Sample> batch);

/// Mean cross-entropy only (no gradient).
double batch_loss(const MlpModel& m, const ParamVector& params, std::span<const Sample> batch);

/// Binary checkpoint: 8-byte magic "DPRSA001", then input/hidden/output dims
/// as u32 little-endian, then the packed parameters as f64 little-endian.
void save_checkpoint(const std::string& path, const MlpModel& m, const ParamVector& params);
std::pair<MlpModel, ParamVector> load_checkpoint(const std::string& path);

}  // namespace dprsa
