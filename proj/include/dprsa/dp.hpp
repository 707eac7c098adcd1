#pragma once

#include <cstddef>

#include "dprsa/param_vector.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

/// Randomized response on sign bits: each transmitted sign is kept with
/// probability gamma, negated otherwise. Valid as a DP mechanism for
/// gamma in (0.5, 1); boundary values are accepted by the operations
/// (gamma = 0.5 is the zero-budget coin, the limit gamma -> 1 is noiseless).
struct FlipMechanism {
  double gamma;
};

/// Additive Gaussian noise on the model difference before the sign is taken.
struct SignGaussMechanism {
  double sigma;  // > 0
};

/// Per-message budget; delta is always 0 here.
struct PrivacyBudget {
  double epsilon;
  double delta = 0.0;
};

/// l2 sensitivity bound on the pre-sign message u = x0 - xk between adjacent
/// datasets. Under gradient clipping at M with step alpha this is 2*alpha*M.
struct Sensitivity {
  double delta_u;  // > 0
};

/// Standard normal CDF.
double norm_cdf(double x);

/// log of the standard normal CDF, stable for large negative arguments where
/// the naive form underflows (near x = -37). Uses erfc directly for moderate
/// arguments and an asymptotic tail expansion below that.
double log_norm_cdf(double x);

/// Keeps each sign with probability gamma, negates it otherwise.
SignVector flip_perturb(const SignVector& s, const FlipMechanism& mech, RngStream& rng);

/// Returns sign_vec(u + e), e ~ N(0, sigma^2 I). Marginal law:
/// Pr(out_i = y) = Phi(y * u_i / sigma).
SignVector gauss_perturb(const ParamVector& u, const SignGaussMechanism& mech,
                         RngStream& rng);

/// Inverts epsilon = ln(gamma / (1 - gamma)): gamma = e^eps / (1 + e^eps).
FlipMechanism calibrate_gamma(const PrivacyBudget& budget);

/// Worst-case per-message privacy loss of the flip mechanism,
/// ln(gamma / (1 - gamma)). The worst case is attained coordinate-wise.
double exact_flip_pl(const FlipMechanism& mech);

/// sigma = (1 + margin) * max{(2/3) * u_entry_bound, 4 * delta_u / epsilon}.
/// Requires epsilon in (0, 8); throws std::out_of_range otherwise.
SignGaussMechanism calibrate_sigma(const PrivacyBudget& budget, const Sensitivity& sens,
                                   double u_entry_bound, double margin);

/// Exact log-probability ratio of outcome y between adjacent pre-sign inputs
/// u and u + v: sum_i [log Phi(y_i u_i / sigma) - log Phi(y_i (u_i+v_i) / sigma)].
double exact_gauss_pl(const ParamVector& u, const ParamVector& v, const SignVector& y,
                      double sigma);

/// Max of exact_gauss_pl over all outputs y and over perturbations v with
/// ||v|| = delta_u, v sampled on a dense hyperspherical grid plus the
/// coordinate-axis extremes. The max over y is taken coordinate-wise (the
/// loss is additive across coordinates). Exhaustive regime: len(u) <= 4,
/// resolution >= 32.
double worst_case_gauss_pl(const ParamVector& u, const Sensitivity& sens, double sigma,
                           std::size_t resolution);

}  // namespace dprsa
