#pragma once

#include <cstddef>
#include <vector>

#include "dprsa/param_vector.hpp"

namespace dprsa {

/// Consensus-penalty weight and step size for the sign-aggregation updates.
struct RsaConfig {
  double lambda;  // > 0
  double alpha;   // > 0
};

/// Worker-side step: xk' = xk - alpha * (gk + lambda * sign(xk - x0)).
/// gk is the already-clipped stochastic gradient. The worker's own update
/// always uses the true (unperturbed) sign; only the transmitted message is
/// perturbed.
ParamVector rsa_worker_update(const ParamVector& xk, const ParamVector& gk,
                              const ParamVector& x0, const RsaConfig& cfg);

/// Master-side step: x0' = x0 - alpha * (grad_f0 + lambda * sum(messages)).
/// Messages carry master-side orientation sign(x0 - xk). Each message moves
/// any coordinate of the step by exactly alpha*lambda in magnitude.
ParamVector rsa_master_update(const ParamVector& x0, const ParamVector& grad_f0,
                              const std::vector<SignVector>& messages,
                              const RsaConfig& cfg);

/// Coordinate-wise arithmetic mean.
ParamVector mean_aggregate(const std::vector<ParamVector>& vectors);

/// Coordinate-wise majority vote: sign of the per-coordinate sum, ties
/// resolving to +1 by the sign(0) rule.
SignVector sign_majority_aggregate(const std::vector<SignVector>& messages);

/// Geometric median (minimizer of the summed Euclidean distances) via the
/// Weiszfeld fixed-point iteration. Data points whose subgradient condition
/// certifies them optimal are returned exactly before iterating, so
/// duplicated inputs resolve without the near-anchor crawl. When an iterate
/// lands within 1e-12 of a data point, the same anchor test applies; a
/// failing anchor triggers a half-damped step away. Two points tie-break to
/// their midpoint. Throws ConvergenceError (carrying the last iterate) when
/// max_iter is exhausted.
ParamVector geometric_median(const std::vector<ParamVector>& points, double tol = 1e-8,
                             std::size_t max_iter = 10000);

}  // namespace dprsa
