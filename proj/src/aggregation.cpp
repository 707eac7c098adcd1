#include "dprsa/aggregation.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dprsa/errors.hpp"

namespace dprsa {

namespace {

void check_rsa(const RsaConfig& cfg) {
  // lambda = 0 is the degenerate plain-SGD step; run configs require > 0.
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("rsa: lambda must be >= 0");
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("rsa: alpha must be > 0");
}

}  // namespace

ParamVector rsa_worker_update(const ParamVector& xk, const ParamVector& gk,
                              const ParamVector& x0, const RsaConfig& cfg) {
  check_rsa(cfg);
  if (xk.size() != gk.size() || xk.size() != x0.size()) {
    throw std::invalid_argument("rsa_worker_update: dimension mismatch");
  }
  ParamVector out(xk.size());
  for (std::size_t i = 0; i < xk.size(); ++i) {
    double diff = xk[i] - x0[i];
    double s = (diff >= 0.0) ? 1.0 : -1.0;
    out[i] = xk[i] - cfg.alpha * (gk[i] + cfg.lambda * s);
  }
  require_finite(out, "rsa_worker_update output");
  return out;
}

ParamVector rsa_master_update(const ParamVector& x0, const ParamVector& grad_f0,
                              const std::vector<SignVector>& messages,
                              const RsaConfig& cfg) {
  check_rsa(cfg);
  if (x0.size() != grad_f0.size()) {
    throw std::invalid_argument("rsa_master_update: gradient dimension mismatch");
  }
  if (messages.empty()) throw std::invalid_argument("rsa_master_update: no messages");
  for (const SignVector& m : messages) {
    if (m.size() != x0.size()) {
      throw std::invalid_argument("rsa_master_update: message dimension mismatch");
    }
  }
  ParamVector out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    // Integer message sum keeps the per-message step contribution exact.
    std::int64_t s = 0;
    for (const SignVector& m : messages) s += m[i];
    out[i] = x0[i] - cfg.alpha * (grad_f0[i] + cfg.lambda * static_cast<double>(s));
  }
  require_finite(out, "rsa_master_update output");
  return out;
}

ParamVector mean_aggregate(const std::vector<ParamVector>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("mean_aggregate: empty input");
  const std::size_t d = vectors[0].size();
  ParamVector out(d, 0.0);
  for (const ParamVector& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("mean_aggregate: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) out[i] += v[i];
  }
  double inv = 1.0 / static_cast<double>(vectors.size());
  for (double& e : out) e *= inv;
  return out;
}

SignVector sign_majority_aggregate(const std::vector<SignVector>& messages) {
  if (messages.empty()) throw std::invalid_argument("sign_majority_aggregate: empty input");
  const std::size_t d = messages[0].size();
  SignVector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::int64_t s = 0;
    for (const SignVector& m : messages) {
      if (m.size() != d) {
        throw std::invalid_argument("sign_majority_aggregate: dimension mismatch");
      }
      s += m[i];
    }
    out[i] = (s >= 0) ? std::int8_t{+1} : std::int8_t{-1};
  }
  return out;
}

namespace {

double dist(const ParamVector& a, const ParamVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

ParamVector geometric_median(const std::vector<ParamVector>& points, double tol,
                             std::size_t max_iter) {
  if (points.empty()) throw std::invalid_argument("geometric_median: empty input");
  if (!(tol > 0.0)) throw std::invalid_argument("geometric_median: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("geometric_median: max_iter must be >= 1");
  const std::size_t d = points[0].size();
  for (const ParamVector& p : points) {
    if (p.size() != d) throw std::invalid_argument("geometric_median: dimension mismatch");
  }
  if (points.size() == 1) return points[0];

  constexpr double kAnchorEps = 1e-12;

  // A data point is the minimizer iff the summed unit pull of the other
  // points does not exceed its multiplicity. Settling that up front matters:
  // when the optimum sits on a point (duplicated inputs make this the common
  // case), Weiszfeld's contraction factor toward it is pull/multiplicity and
  // the iteration crawls as that ratio nears 1. The margin keeps boundary
  // ties (e.g. two distinct points, where rounding puts the pull at 1 - ulp)
  // on the iteration path below.
  for (std::size_t a = 0; a < points.size(); ++a) {
    bool repeat = false;
    for (std::size_t j = 0; j < a; ++j) {
      if (dist(points[j], points[a]) <= kAnchorEps) {
        repeat = true;
        break;
      }
    }
    if (repeat) continue;
    std::size_t multiplicity = 0;
    ParamVector pull(d, 0.0);
    for (const ParamVector& p : points) {
      double r = dist(p, points[a]);
      if (r <= kAnchorEps) {
        ++multiplicity;
        continue;
      }
      for (std::size_t i = 0; i < d; ++i) pull[i] += (p[i] - points[a][i]) / r;
    }
    if (l2_norm(pull) < static_cast<double>(multiplicity) * (1.0 - 1e-9)) return points[a];
  }

  ParamVector y = mean_aggregate(points);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // Split the points into anchors (coincident with y) and the rest.
    std::size_t multiplicity = 0;
    ParamVector weighted(d, 0.0);
    ParamVector pull(d, 0.0);  // sum of unit directions toward far points
    double weight_sum = 0.0;
    for (const ParamVector& p : points) {
      double r = dist(p, y);
      if (r <= kAnchorEps) {
        ++multiplicity;
        continue;
      }
      double w = 1.0 / r;
      weight_sum += w;
      for (std::size_t i = 0; i < d; ++i) {
        weighted[i] += w * p[i];
        pull[i] += (p[i] - y[i]) * w;
      }
    }

    if (weight_sum == 0.0) return y;  // all points coincide with y

    ParamVector target(d);
    for (std::size_t i = 0; i < d; ++i) target[i] = weighted[i] / weight_sum;

    ParamVector next;
    if (multiplicity > 0) {
      // y sits on an anchor. The anchor is optimal iff the pull of the other
      // points has norm <= the anchor's multiplicity (subgradient condition).
      if (l2_norm(pull) <= static_cast<double>(multiplicity)) return y;
      next.resize(d);
      for (std::size_t i = 0; i < d; ++i) next[i] = 0.5 * y[i] + 0.5 * target[i];
    } else {
      next = std::move(target);
    }

    double moved = dist(next, y);
    y = std::move(next);
    if (moved < tol) return y;
  }
  throw ConvergenceError("geometric_median: max_iter exceeded", y);
}

}  // namespace dprsa
