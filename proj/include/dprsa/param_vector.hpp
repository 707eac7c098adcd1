#pragma once

#include <cstdint>
#include <vector>

namespace dprsa {

/// Flat model/message carrier. Every public operation keeps entries finite.
using ParamVector = std::vector<double>;

/// Element-wise sign message; every entry is exactly +1 or -1.
using SignVector = std::vector<std::int8_t>;

/// Gradient clipping bound (l2 norm).
struct ClipConfig {
  double max_norm;  // M > 0
};

/// True iff every entry is finite (no NaN/Inf).
bool all_finite(const ParamVector& v);

/// Throws std::invalid_argument if any entry is non-finite.
void require_finite(const ParamVector& v, const char* what);

double l2_norm(const ParamVector& v);
double linf_norm(const ParamVector& v);

/// Element-wise sign with sign(0) = sign(-0.0) = +1 ("nonnegative maps to +1").
SignVector sign_vec(const ParamVector& v);

/// Scales g down to l2 norm M when it exceeds M; returns g unchanged otherwise.
/// Idempotent: clip(clip(g)) == clip(g) bit for bit.
ParamVector clip_grad(const ParamVector& g, const ClipConfig& c);

/// Gradient of coeff * ||x||^2, i.e. 2 * coeff * x.
ParamVector reg_grad(const ParamVector& x0, double coeff);

}  // namespace dprsa
