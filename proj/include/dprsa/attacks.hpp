#pragma once

#include <cstddef>
#include <vector>

#include "dprsa/param_vector.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

enum class AttackKind { None, Gaussian, SignFlip, SampleDuplicate };

/// Which honest quantity an attack manipulates: local models (sign-message
/// algorithms) or stochastic gradients (gradient-message algorithms). The
/// engine picks the target from the algorithm family.
enum class AttackTarget { ModelMessage, GradientMessage };

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double sigma_b = 1e4;          // Gaussian: noise stddev, > 0
  double scale = -5.0;           // SignFlip: negative multiplier
  std::size_t victim_index = 0;  // SampleDuplicate: a regular worker index
};

/// Read-only snapshot of one round as seen by the (omniscient, colluding)
/// Byzantine side. Exactly one of the message lists is populated, matching
/// the algorithm's wire type; `regular_values` holds the honest models or
/// gradients the round was computed from (pre-update).
struct ByzantineContext {
  const ParamVector& x0;
  const std::vector<SignVector>& regular_sign_messages;
  const std::vector<ParamVector>& regular_raw_messages;
  const std::vector<ParamVector>& regular_values;
};

/// I.i.d. N(0, sigma_b^2) vector. Under sign-message algorithms the engine
/// wires it as sign(x0 - z); under gradient algorithms it is the fake
/// gradient itself.
ParamVector gaussian_attack(std::size_t dim, double sigma_b, RngStream& rng);

/// scale * truth, where truth is the mean of the honest values this round.
ParamVector sign_flip_attack(const ParamVector& truth, double scale);

/// Byte-identical copy of the victim's wire message. All Byzantine workers
/// copy the same victim.
SignVector sample_duplicate_attack(const std::vector<SignVector>& regular_messages,
                                   std::size_t victim);
ParamVector sample_duplicate_attack(const std::vector<ParamVector>& regular_messages,
                                    std::size_t victim);

}  // namespace dprsa
