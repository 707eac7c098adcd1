#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dprsa/aggregation.hpp"
#include "dprsa/data.hpp"
#include "dprsa/mlp.hpp"
#include "dprsa/param_vector.hpp"

namespace dprsa {

/// Fraction of argmax-correct predictions; ties break toward the lowest
/// class index.
double eval_accuracy(const MlpModel& m, const ParamVector& params, const Dataset& test);

/// Linear softmax classifier (convex in its parameters); weights packed as
/// [W (classes x input, row-major), bias]. The convex stand-in used by the
/// envelope diagnostics, whose theory needs a known weak-convexity modulus.
struct SoftmaxModel {
  std::size_t input_dim;
  std::size_t num_classes;
  std::size_t param_count() const { return num_classes * (input_dim + 1); }
};

std::pair<double, ParamVector> softmax_loss_and_grad(const SoftmaxModel& m,
                                                     const ParamVector& params,
                                                     std::span<const Sample> batch);
double softmax_loss(const SoftmaxModel& m, const ParamVector& params,
                    std::span<const Sample> batch);
double softmax_accuracy(const SoftmaxModel& m, const ParamVector& params,
                        const Dataset& test);

/// Envelope parameter and inner-solver knobs. rho_bar must exceed the
/// objective's weak-convexity modulus (0 for the convex surrogates used
/// here). gamma_weight is the penalty discount in h.
struct MoreauConfig {
  double rho_bar = 1.0;
  double inner_tol = 1e-8;
  std::size_t inner_max_iter = 20000;
  double gamma_weight = 1.0;
};

/// Block variable [x_1; ...; x_r; x_0] of the penalized consensus objective.
struct StackedPoint {
  std::vector<ParamVector> workers;
  ParamVector master;

  std::size_t dim() const {
    std::size_t d = master.size();
    for (const ParamVector& w : workers) d += w.size();
    return d;
  }
  ParamVector flatten() const;
  static StackedPoint unflatten(const ParamVector& flat, std::size_t num_workers,
                                std::size_t block_dim);
};

enum class L1Kind { None, Plain, Consensus };

/// Composite objective for the prox solver: a smooth part (value plus
/// optional gradient) and an l1 part handled exactly. Consensus couples
/// each worker block to the master block: weight * sum_k ||y_k - y_0||_1
/// over a flat vector of (num_workers + 1) blocks of block_dim.
struct ProxObjective {
  std::function<double(const ParamVector&, ParamVector*)> smooth;
  L1Kind l1_kind = L1Kind::None;
  double l1_weight = 0.0;
  std::size_t num_workers = 0;
  std::size_t block_dim = 0;
};

/// h(x) = sum_k f_k(x_k) + f0(x_0) + sum_k gamma*lambda*||x_k - x_0||_1 with
/// f_k the full local empirical risk of shard k and f0 the quadratic
/// regularizer reg_coeff*||x_0||^2.
double full_objective_h(const StackedPoint& pt, const SoftmaxModel& model,
                        const std::vector<std::vector<Sample>>& shards, double reg_coeff,
                        const MoreauConfig& cfg, const RsaConfig& rsa);

/// ProxObjective for the same h, for use with prox_point.
ProxObjective make_consensus_objective(const SoftmaxModel& model,
                                       const std::vector<std::vector<Sample>>& shards,
                                       double reg_coeff, double l1_weight);

/// argmin_y  obj(y) + (rho_bar/2) * ||y - x||^2 by proximal gradient with a
/// power-iteration curvature estimate; the l1 part is handled exactly by a
/// per-coordinate prox (soft threshold for Plain; a piecewise-linear root
/// solve for Consensus). Terminates when the iterate moves less than
/// inner_tol; throws ConvergenceError past inner_max_iter.
ParamVector prox_point(const ParamVector& x, const MoreauConfig& cfg,
                       const ProxObjective& obj);

/// rho_bar^2 * ||x - prox_point(x)||^2, the squared envelope gradient norm.
double moreau_grad_norm_sq(const ParamVector& x, const MoreauConfig& cfg,
                           const ProxObjective& obj);

}  // namespace dprsa
