#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dprsa/aggregation.hpp"
#include "dprsa/attacks.hpp"
#include "dprsa/data.hpp"
#include "dprsa/dp.hpp"
#include "dprsa/mlp.hpp"
#include "dprsa/param_vector.hpp"
#include "dprsa/partition.hpp"

namespace dprsa {

enum class Algorithm { Sgd, SignSgd, SgdGm, Rsa, DpRsaFlip, DpRsaGauss };

enum class PartitionKind { Iid, NonIid };

/// True for the algorithms whose wire message is a model-difference sign and
/// whose workers keep persistent local models (Rsa, DpRsaFlip, DpRsaGauss).
/// The others transmit (signs of) gradients evaluated at the broadcast model
/// and keep no worker state.
bool is_rsa_family(Algorithm a);

const char* algorithm_name(Algorithm a);
const char* attack_name(AttackKind k);

struct SimConfig {
  std::size_t num_workers = 0;   // K; the last num_byzantine are Byzantine
  std::size_t num_byzantine = 0; // b < K
  Algorithm algorithm = Algorithm::Rsa;
  RsaConfig rsa{0.01, 0.01};     // lambda, alpha; alpha is every method's step
  double epsilon = 0.0;          // DP budget; > 0 for the private algorithms
  double sigma_margin = 0.05;    // calibration headroom for the Gaussian mechanism
  AttackSpec attack;
  PartitionKind partition = PartitionKind::Iid;
  std::size_t group_size = 1;    // non-iid worker group width
  std::size_t batch_size = 1;
  std::size_t rounds = 1;        // T
  std::uint64_t seed = 0;
  ClipConfig clip{1.0};
  std::size_t eval_every = 50;
  double reg_coeff = 0.002;      // f0(x) = reg_coeff * ||x||^2 at the master
  MlpModel model{0, 0, 0};
};

/// Throws ConfigError naming the violated invariant.
void validate_sim_config(const SimConfig& cfg);

struct RoundLog {
  std::size_t round = 0;
  double train_loss = 0.0;      // mean regular-worker minibatch loss
  double test_accuracy = 0.0;   // NaN when the round was not evaluated
  double epsilon_round = 0.0;   // +inf for the non-private algorithms
  double wall_ms = 0.0;         // measured, excluded from determinism claims
};

struct RunMetrics {
  std::vector<RoundLog> rounds;
  ParamVector final_model;
  double final_train_loss = 0.0;     // full-train-set loss at the final master model
  double final_test_accuracy = 0.0;
  std::uint64_t mechanism_invocations = 0;
};

/// Mutable simulation state between rounds. Regular workers occupy indices
/// [0, K - b); Byzantine workers hold shards but never train.
struct SimState {
  ParamVector x0;
  std::vector<ParamVector> worker_models;  // regular workers; empty for the
                                           // stateless gradient-message family
  IndexShards shards;
  std::size_t round = 0;
  std::uint64_t mechanism_invocations = 0;
};

/// Partitions the data and initializes the master (and worker) models.
SimState init_state(const SimConfig& cfg, const Dataset& train);

/// One synchronous round: broadcast, honest wire messages from the current
/// models, honest local updates, Byzantine injection from the round
/// snapshot, master aggregation. Test accuracy is filled only when
/// `evaluate` is set.
RoundLog run_round(SimState& state, const SimConfig& cfg, const Dataset& train,
                   const Dataset& test, bool evaluate);

/// T rounds with evaluation every eval_every rounds (and at the last round).
RunMetrics run_training(const SimConfig& cfg, const Dataset& train, const Dataset& test);

}  // namespace dprsa
