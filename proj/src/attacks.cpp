#include "dprsa/attacks.hpp"

#include <stdexcept>

namespace dprsa {

ParamVector gaussian_attack(std::size_t dim, double sigma_b, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("gaussian_attack: dim must be >= 1");
  if (!(sigma_b > 0.0)) throw std::invalid_argument("gaussian_attack: sigma_b must be > 0");
  ParamVector z(dim);
  rng.fill_normal(z, sigma_b);
  return z;
}

ParamVector sign_flip_attack(const ParamVector& truth, double scale) {
  if (!(scale < 0.0)) throw std::invalid_argument("sign_flip_attack: scale must be < 0");
  require_finite(truth, "sign_flip_attack truth");
  ParamVector out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) out[i] = scale * truth[i];
  return out;
}

SignVector sample_duplicate_attack(const std::vector<SignVector>& regular_messages,
                                   std::size_t victim) {
  if (victim >= regular_messages.size()) {
    throw std::out_of_range("sample_duplicate_attack: victim out of range");
  }
  return regular_messages[victim];
}

ParamVector sample_duplicate_attack(const std::vector<ParamVector>& regular_messages,
                                    std::size_t victim) {
  if (victim >= regular_messages.size()) {
    throw std::out_of_range("sample_duplicate_attack: victim out of range");
  }
  return regular_messages[victim];
}

}  // namespace dprsa
