#include "dprsa/param_vector.hpp"

#include <cmath>
#include <stdexcept>

namespace dprsa {

bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_finite(const ParamVector& v, const char* what) {
  if (!all_finite(v)) {
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

double l2_norm(const ParamVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double linf_norm(const ParamVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

SignVector sign_vec(const ParamVector& v) {
  require_finite(v, "sign_vec");
  SignVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // -0.0 >= 0.0 is true under IEEE-754, so negative zero maps to +1.
    out[i] = (v[i] >= 0.0) ? std::int8_t{1} : std::int8_t{-1};
  }
  return out;
}

ParamVector clip_grad(const ParamVector& g, const ClipConfig& c) {
  if (!(c.max_norm > 0.0)) throw std::invalid_argument("clip_grad: max_norm must be > 0");
  require_finite(g, "clip_grad");
  double norm = l2_norm(g);
  if (norm <= c.max_norm) return g;
  double scale = c.max_norm / norm;
  ParamVector out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
  // The recomputed norm may round a hair above M; rescale until it does not.
  // Keeps ||out|| <= M and makes the operation exactly idempotent.
  for (int guard = 0; guard < 4; ++guard) {
    double n2 = l2_norm(out);
    if (n2 <= c.max_norm) break;
    double s2 = c.max_norm / n2;
    for (double& x : out) x *= s2;
  }
  return out;
}

ParamVector reg_grad(const ParamVector& x0, double coeff) {
  if (coeff < 0.0) throw std::invalid_argument("reg_grad: coeff must be >= 0");
  ParamVector out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = 2.0 * coeff * x0[i];
  return out;
}

}  // namespace dprsa
