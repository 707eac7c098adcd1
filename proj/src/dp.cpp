#include "dprsa/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dprsa {

namespace {

void check_mech(const FlipMechanism& mech) {
  if (!(mech.gamma > 0.0) || !(mech.gamma <= 1.0)) {
    throw std::invalid_argument("flip mechanism: gamma must lie in (0, 1]");
  }
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sign-gauss mechanism: sigma must be > 0");
}

}  // namespace

double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

double log_norm_cdf(double x) {
  if (x >= -20.0) {
    return std::log(norm_cdf(x));
  }
  // Tail expansion from the Mills ratio: Phi(x) = phi(x)/|x| * S(x) with
  // S(x) = 1 - 1/x^2 + 3/x^4 - 15/x^6 + ... ; truncation error below 1e-13
  // relative for x <= -20.
  const double inv2 = 1.0 / (x * x);
  double series = 1.0, term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * inv2;
    series += term;
  }
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -0.5 * x * x - log_sqrt_2pi - std::log(-x) + std::log(series);
}

SignVector flip_perturb(const SignVector& s, const FlipMechanism& mech, RngStream& rng) {
  check_mech(mech);
  SignVector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool keep = rng.next_unit() < mech.gamma;
    out[i] = keep ? s[i] : static_cast<std::int8_t>(-s[i]);
  }
  return out;
}

SignVector gauss_perturb(const ParamVector& u, const SignGaussMechanism& mech,
                         RngStream& rng) {
  check_sigma(mech.sigma);
  require_finite(u, "gauss_perturb input");
  SignVector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double noisy = u[i] + mech.sigma * rng.next_normal();
    out[i] = (noisy >= 0.0) ? std::int8_t{+1} : std::int8_t{-1};
  }
  return out;
}

FlipMechanism calibrate_gamma(const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0.0)) {
    throw std::invalid_argument("calibrate_gamma: epsilon must be > 0");
  }
  // 1/(1 + e^-eps) is the overflow-safe form of e^eps/(1 + e^eps).
  return FlipMechanism{1.0 / (1.0 + std::exp(-budget.epsilon))};
}

double exact_flip_pl(const FlipMechanism& mech) {
  if (!(mech.gamma >= 0.5) || !(mech.gamma < 1.0)) {
    throw std::invalid_argument("exact_flip_pl: gamma must lie in [0.5, 1)");
  }
  return std::log(mech.gamma / (1.0 - mech.gamma));
}

SignGaussMechanism calibrate_sigma(const PrivacyBudget& budget, const Sensitivity& sens,
                                   double u_entry_bound, double margin) {
  if (!(budget.epsilon > 0.0) || !(budget.epsilon < 8.0)) {
    throw std::out_of_range("calibrate_sigma: epsilon must lie in (0, 8)");
  }
  if (!(sens.delta_u > 0.0)) throw std::invalid_argument("calibrate_sigma: delta_u must be > 0");
  if (!(u_entry_bound >= 0.0)) {
    throw std::invalid_argument("calibrate_sigma: u_entry_bound must be >= 0");
  }
  if (!(margin > 0.0)) throw std::invalid_argument("calibrate_sigma: margin must be > 0");
  double floor = std::max((2.0 / 3.0) * u_entry_bound, 4.0 * sens.delta_u / budget.epsilon);
  return SignGaussMechanism{(1.0 + margin) * floor};
}

double exact_gauss_pl(const ParamVector& u, const ParamVector& v, const SignVector& y,
                      double sigma) {
  check_sigma(sigma);
  if (u.size() != v.size() || u.size() != y.size()) {
    throw std::invalid_argument("exact_gauss_pl: length mismatch");
  }
  require_finite(u, "exact_gauss_pl u");
  require_finite(v, "exact_gauss_pl v");
  double pl = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double yi = static_cast<double>(y[i]);
    pl += log_norm_cdf(yi * u[i] / sigma) - log_norm_cdf(yi * (u[i] + v[i]) / sigma);
  }
  return pl;
}

namespace {

// Privacy loss of perturbation v maximized coordinate-wise over the output y
// (the loss is a sum of per-coordinate terms, each depending on one y_i).
double pl_max_over_y(const ParamVector& u, const ParamVector& v, double sigma) {
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double plus = log_norm_cdf(u[i] / sigma) - log_norm_cdf((u[i] + v[i]) / sigma);
    double minus = log_norm_cdf(-u[i] / sigma) - log_norm_cdf(-(u[i] + v[i]) / sigma);
    total += std::max(plus, minus);
  }
  return total;
}

// Unit directions on the (d-1)-sphere: a regular angular grid with
// `res` samples per angle, d <= 4.
std::vector<ParamVector> sphere_directions(std::size_t d, std::size_t res) {
  std::vector<ParamVector> dirs;
  const double two_pi = 2.0 * std::numbers::pi;
  if (d == 1) {
    dirs.push_back({1.0});
    dirs.push_back({-1.0});
  } else if (d == 2) {
    for (std::size_t a = 0; a < res; ++a) {
      double t = two_pi * static_cast<double>(a) / static_cast<double>(res);
      dirs.push_back({std::cos(t), std::sin(t)});
    }
  } else if (d == 3) {
    for (std::size_t a = 0; a <= res; ++a) {
      double th = std::numbers::pi * static_cast<double>(a) / static_cast<double>(res);
      for (std::size_t b = 0; b < res; ++b) {
        double ph = two_pi * static_cast<double>(b) / static_cast<double>(res);
        dirs.push_back({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                        std::cos(th)});
      }
    }
  } else {
    for (std::size_t a = 0; a <= res; ++a) {
      double t1 = std::numbers::pi * static_cast<double>(a) / static_cast<double>(res);
      for (std::size_t b = 0; b <= res; ++b) {
        double t2 = std::numbers::pi * static_cast<double>(b) / static_cast<double>(res);
        for (std::size_t c = 0; c < res; ++c) {
          double t3 = two_pi * static_cast<double>(c) / static_cast<double>(res);
          dirs.push_back({std::cos(t1), std::sin(t1) * std::cos(t2),
                          std::sin(t1) * std::sin(t2) * std::cos(t3),
                          std::sin(t1) * std::sin(t2) * std::sin(t3)});
        }
      }
    }
  }
  return dirs;
}

}  // namespace

double worst_case_gauss_pl(const ParamVector& u, const Sensitivity& sens, double sigma,
                           std::size_t resolution) {
  check_sigma(sigma);
  if (!(sens.delta_u > 0.0)) {
    throw std::invalid_argument("worst_case_gauss_pl: delta_u must be > 0");
  }
  const std::size_t d = u.size();
  if (d == 0 || d > 4) {
    throw std::invalid_argument("worst_case_gauss_pl: exhaustive search handles 1 <= d <= 4");
  }
  if (resolution < 32) {
    throw std::invalid_argument("worst_case_gauss_pl: resolution must be >= 32");
  }
  require_finite(u, "worst_case_gauss_pl u");

  double worst = 0.0;
  ParamVector v(d, 0.0);
  auto consider = [&](const ParamVector& dir) {
    for (std::size_t i = 0; i < d; ++i) v[i] = sens.delta_u * dir[i];
    worst = std::max(worst, pl_max_over_y(u, v, sigma));
  };
  for (const ParamVector& dir : sphere_directions(d, resolution)) consider(dir);
  for (std::size_t i = 0; i < d; ++i) {
    ParamVector axis(d, 0.0);
    axis[i] = 1.0;
    consider(axis);
    axis[i] = -1.0;
    consider(axis);
  }
  return worst;
}

}  // namespace dprsa
