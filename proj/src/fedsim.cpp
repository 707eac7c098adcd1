#include "dprsa/fedsim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dprsa/errors.hpp"
#include "dprsa/metrics.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

bool is_rsa_family(Algorithm a) {
  return a == Algorithm::Rsa || a == Algorithm::DpRsaFlip || a == Algorithm::DpRsaGauss;
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sgd: return "sgd";
    case Algorithm::SignSgd: return "signsgd";
    case Algorithm::SgdGm: return "sgd_gm";
    case Algorithm::Rsa: return "rsa";
    case Algorithm::DpRsaFlip: return "dp_rsa_flip";
    case Algorithm::DpRsaGauss: return "dp_rsa_gauss";
  }
  return "unknown";
}

const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::Gaussian: return "gaussian";
    case AttackKind::SignFlip: return "sign_flip";
    case AttackKind::SampleDuplicate: return "sample_duplicate";
  }
  return "unknown";
}

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.model.input_dim < 1 || cfg.model.hidden_dim < 1 || cfg.model.output_dim < 1) {
    throw ConfigError("model dimensions must all be >= 1");
  }
  if (cfg.num_workers < 1) throw ConfigError("num_workers must be >= 1");
  if (cfg.num_byzantine >= cfg.num_workers) {
    throw ConfigError("num_byzantine must be < num_workers");
  }
  if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(cfg.rsa.alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (is_rsa_family(cfg.algorithm) && !(cfg.rsa.lambda > 0.0)) {
    throw ConfigError("lambda must be > 0 for the sign-aggregation algorithms");
  }
  if (!(cfg.clip.max_norm > 0.0)) throw ConfigError("clip bound must be > 0");
  if (!(cfg.reg_coeff >= 0.0)) throw ConfigError("reg_coeff must be >= 0");
  if (cfg.algorithm == Algorithm::DpRsaFlip && !(cfg.epsilon > 0.0)) {
    throw ConfigError("epsilon must be > 0 for the flip mechanism");
  }
  if (cfg.algorithm == Algorithm::DpRsaGauss) {
    if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 8.0)) {
      throw ConfigError("epsilon must lie in (0, 8) for the sign-gauss mechanism");
    }
    if (!(cfg.sigma_margin > 0.0)) throw ConfigError("sigma_margin must be > 0");
  }
  // An attack spec with num_byzantine = 0 is allowed (nobody mounts it), so
  // byzantine-count sweeps can include the clean b = 0 member.
  if (cfg.num_byzantine > 0 && cfg.attack.kind == AttackKind::None) {
    throw ConfigError("byzantine workers configured but no attack kind");
  }
  switch (cfg.attack.kind) {
    case AttackKind::Gaussian:
      if (!(cfg.attack.sigma_b > 0.0)) throw ConfigError("attack sigma_b must be > 0");
      break;
    case AttackKind::SignFlip:
      if (!(cfg.attack.scale < 0.0)) throw ConfigError("attack scale must be < 0");
      break;
    case AttackKind::SampleDuplicate:
      if (cfg.attack.victim_index >= cfg.num_workers - cfg.num_byzantine) {
        throw ConfigError("attack victim_index must reference a regular worker");
      }
      break;
    case AttackKind::None:
      break;
  }
  if (cfg.partition == PartitionKind::NonIid) {
    if (cfg.group_size < 1) throw ConfigError("group_size must be >= 1");
    if (cfg.num_workers % cfg.group_size != 0) {
      throw ConfigError("group_size must divide num_workers");
    }
  }
}

SimState init_state(const SimConfig& cfg, const Dataset& train) {
  validate_sim_config(cfg);
  if (train.feature_dim != cfg.model.input_dim) {
    throw ConfigError("dataset feature_dim does not match the model input_dim");
  }

  SimState state;
  RngStream part_rng(derive_key(cfg.seed, {stream_purpose::kPartition}));
  if (cfg.partition == PartitionKind::Iid) {
    state.shards = partition_iid(train.num_samples, cfg.num_workers, part_rng);
  } else {
    state.shards = partition_noniid(train.labels, cfg.num_workers, cfg.group_size,
                                    part_rng);
  }
  for (const auto& shard : state.shards) {
    if (shard.empty()) throw ConfigError("a worker received an empty shard");
  }

  RngStream init_rng(derive_key(cfg.seed, {stream_purpose::kModelInit}));
  state.x0 = init_params(cfg.model, init_rng);
  if (is_rsa_family(cfg.algorithm)) {
    state.worker_models.assign(cfg.num_workers - cfg.num_byzantine, state.x0);
  }
  return state;
}

namespace {

std::vector<Sample> draw_minibatch(const Dataset& train,
                                   const std::vector<std::size_t>& shard,
                                   std::size_t batch_size, RngStream& rng) {
  std::vector<Sample> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::size_t idx = shard[rng.next_below(shard.size())];
    batch.push_back(train.sample(idx));
  }
  return batch;
}

}  // namespace

RoundLog run_round(SimState& state, const SimConfig& cfg, const Dataset& train,
                   const Dataset& test, bool evaluate) {
  auto t_start = std::chrono::steady_clock::now();
  const std::size_t K = cfg.num_workers;
  const std::size_t b = cfg.num_byzantine;
  const std::size_t r = K - b;
  const std::size_t t = state.round;
  const std::size_t d = cfg.model.param_count();
  const bool rsa = is_rsa_family(cfg.algorithm);

  // Honest gradients and minibatch losses at the round's evaluation points
  // (the local model for the sign family, the broadcast model otherwise).
  std::vector<ParamVector> grads(r);
  double loss_sum = 0.0;
  for (std::size_t k = 0; k < r; ++k) {
    RngStream mb_rng(derive_key(cfg.seed, {stream_purpose::kMinibatch, t, k}));
    std::vector<Sample> batch = draw_minibatch(train, state.shards[k], cfg.batch_size,
                                               mb_rng);
    const ParamVector& at = rsa ? state.worker_models[k] : state.x0;
    auto [loss, g] = loss_and_grad(cfg.model, at, batch);
    grads[k] = clip_grad(g, cfg.clip);
    loss_sum += loss;
  }

  // Honest wire messages from the pre-update snapshot.
  std::vector<SignVector> sign_msgs;
  std::vector<ParamVector> raw_msgs;
  std::vector<ParamVector> honest_values;  // models (sign family) or gradients
  honest_values.reserve(r);
  if (rsa) {
    for (std::size_t k = 0; k < r; ++k) {
      ParamVector u(d);
      for (std::size_t i = 0; i < d; ++i) u[i] = state.x0[i] - state.worker_models[k][i];
      switch (cfg.algorithm) {
        case Algorithm::Rsa:
          sign_msgs.push_back(sign_vec(u));
          break;
        case Algorithm::DpRsaFlip: {
          RngStream rng(derive_key(cfg.seed, {stream_purpose::kDpNoise, t, k}));
          sign_msgs.push_back(
              flip_perturb(sign_vec(u), calibrate_gamma({cfg.epsilon}), rng));
          ++state.mechanism_invocations;
          break;
        }
        case Algorithm::DpRsaGauss: {
          RngStream rng(derive_key(cfg.seed, {stream_purpose::kDpNoise, t, k}));
          // Per-round noise floor from the current difference; shrinks as the
          // models approach consensus.
          Sensitivity sens{2.0 * cfg.rsa.alpha * cfg.clip.max_norm};
          SignGaussMechanism mech =
              calibrate_sigma({cfg.epsilon}, sens, linf_norm(u), cfg.sigma_margin);
          sign_msgs.push_back(gauss_perturb(u, mech, rng));
          ++state.mechanism_invocations;
          break;
        }
        default:
          break;
      }
      honest_values.push_back(state.worker_models[k]);
    }
  } else {
    honest_values = grads;
    if (cfg.algorithm == Algorithm::SignSgd) {
      for (std::size_t k = 0; k < r; ++k) sign_msgs.push_back(sign_vec(grads[k]));
    } else {
      raw_msgs = grads;
    }
  }

  // Honest local updates (message already formed from the old model).
  if (rsa) {
    for (std::size_t k = 0; k < r; ++k) {
      state.worker_models[k] =
          rsa_worker_update(state.worker_models[k], grads[k], state.x0, cfg.rsa);
    }
  }

  // Byzantine messages from the round snapshot (honest lists frozen first so
  // every attacker sees the same regular messages).
  const std::vector<SignVector> honest_signs = b > 0 ? sign_msgs : std::vector<SignVector>{};
  const std::vector<ParamVector> honest_raws = b > 0 ? raw_msgs : std::vector<ParamVector>{};
  for (std::size_t j = 0; j < b; ++j) {
    std::size_t worker_id = r + j;
    RngStream rng(derive_key(cfg.seed, {stream_purpose::kAttack, t, worker_id}));
    if (cfg.attack.kind == AttackKind::SampleDuplicate) {
      if (rsa || cfg.algorithm == Algorithm::SignSgd) {
        sign_msgs.push_back(sample_duplicate_attack(honest_signs, cfg.attack.victim_index));
      } else {
        raw_msgs.push_back(sample_duplicate_attack(honest_raws, cfg.attack.victim_index));
      }
      continue;
    }
    ParamVector z;
    switch (cfg.attack.kind) {
      case AttackKind::Gaussian:
        z = gaussian_attack(d, cfg.attack.sigma_b, rng);
        break;
      case AttackKind::SignFlip:
        z = sign_flip_attack(mean_aggregate(honest_values), cfg.attack.scale);
        break;
      default:
        throw ConfigError("byzantine worker without an attack kind");
    }
    // Adapt the raw attack vector to the algorithm's wire type.
    if (rsa) {
      ParamVector diff(d);
      for (std::size_t i = 0; i < d; ++i) diff[i] = state.x0[i] - z[i];
      sign_msgs.push_back(sign_vec(diff));
    } else if (cfg.algorithm == Algorithm::SignSgd) {
      sign_msgs.push_back(sign_vec(z));
    } else {
      raw_msgs.push_back(z);
    }
  }

  // Master update.
  ParamVector grad_f0 = reg_grad(state.x0, cfg.reg_coeff);
  switch (cfg.algorithm) {
    case Algorithm::Rsa:
    case Algorithm::DpRsaFlip:
    case Algorithm::DpRsaGauss:
      state.x0 = rsa_master_update(state.x0, grad_f0, sign_msgs, cfg.rsa);
      break;
    case Algorithm::Sgd:
    case Algorithm::SgdGm: {
      ParamVector agg = (cfg.algorithm == Algorithm::Sgd)
                            ? mean_aggregate(raw_msgs)
                            : geometric_median(raw_msgs);
      for (std::size_t i = 0; i < d; ++i) {
        state.x0[i] -= cfg.rsa.alpha * (grad_f0[i] + agg[i]);
      }
      break;
    }
    case Algorithm::SignSgd: {
      SignVector vote = sign_majority_aggregate(sign_msgs);
      for (std::size_t i = 0; i < d; ++i) {
        state.x0[i] -= cfg.rsa.alpha * (grad_f0[i] + static_cast<double>(vote[i]));
      }
      break;
    }
  }
  require_finite(state.x0, "master model after round");

  RoundLog log;
  log.round = t;
  log.train_loss = loss_sum / static_cast<double>(r);
  log.test_accuracy = evaluate ? eval_accuracy(cfg.model, state.x0, test)
                               : std::numeric_limits<double>::quiet_NaN();
  log.epsilon_round = (cfg.algorithm == Algorithm::DpRsaFlip ||
                       cfg.algorithm == Algorithm::DpRsaGauss)
                          ? cfg.epsilon
                          : std::numeric_limits<double>::infinity();
  log.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();
  state.round = t + 1;
  return log;
}

RunMetrics run_training(const SimConfig& cfg, const Dataset& train, const Dataset& test) {
  SimState state = init_state(cfg, train);
  RunMetrics metrics;
  metrics.rounds.reserve(cfg.rounds);
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    bool evaluate = ((t + 1) % cfg.eval_every == 0) || (t + 1 == cfg.rounds);
    metrics.rounds.push_back(run_round(state, cfg, train, test, evaluate));
  }
  std::vector<Sample> full;
  full.reserve(train.num_samples);
  for (std::size_t i = 0; i < train.num_samples; ++i) full.push_back(train.sample(i));
  metrics.final_model = state.x0;
  metrics.final_train_loss = batch_loss(cfg.model, state.x0, full);
  metrics.final_test_accuracy = eval_accuracy(cfg.model, state.x0, test);
  metrics.mechanism_invocations = state.mechanism_invocations;
  return metrics;
}

}  // namespace dprsa
