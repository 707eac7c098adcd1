#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <doctest.h>
#include "dprsa/aggregation.hpp"
#include "dprsa/attacks.hpp"
#include "dprsa/data.hpp"
#include "dprsa/dp.hpp"
#include "dprsa/errors.hpp"
#include "dprsa/fedsim.hpp"
#include "dprsa/metrics.hpp"
#include "dprsa/mlp.hpp"
#include "dprsa/param_vector.hpp"
#include "dprsa/rng.hpp"

using namespace dprsa;

namespace {

Dataset tiny_blobs(std::uint64_t seed = 3, std::size_t per_class = 6) {
  return gen_synthetic({2, 2, per_class, 4.0, 0.4, seed});
}

SimConfig base_config(Algorithm algo) {
  SimConfig cfg;
  cfg.num_workers = 3;
  cfg.num_byzantine = 0;
  cfg.algorithm = algo;
  cfg.rsa = {0.01, 0.05};
  cfg.batch_size = 2;
  cfg.rounds = 3;
  cfg.seed = 7;
  cfg.clip = {1.0};
  cfg.eval_every = 2;
  cfg.reg_coeff = 0.002;
  cfg.model = {2, 3, 2};
  return cfg;
}

// Re-derives worker k's minibatch of round t from the shared stream contract.
std::vector<Sample> expected_batch(const SimConfig& cfg, const Dataset& train,
                                   const std::vector<std::size_t>& shard, std::size_t t,
                                   std::size_t k) {
  RngStream rng(derive_key(cfg.seed, {stream_purpose::kMinibatch, t, k}));
  std::vector<Sample> batch;
  for (std::size_t i = 0; i < cfg.batch_size; ++i) {
    batch.push_back(train.sample(shard[rng.next_below(shard.size())]));
  }
  return batch;
}

}  // namespace

TEST_CASE("config validation rejects each broken invariant") {
  SimConfig ok = base_config(Algorithm::Rsa);
  CHECK_NOTHROW(validate_sim_config(ok));

  SimConfig c = ok;
  c.num_byzantine = c.num_workers;
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.num_byzantine = 1;  // byzantine without an attack
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.attack.kind = AttackKind::Gaussian;  // unused attack spec is fine (b sweeps hit 0)
  CHECK_NOTHROW(validate_sim_config(c));

  c = ok;
  c.rsa.lambda = 0.0;
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.algorithm = Algorithm::Sgd;
  c.rsa.lambda = 0.0;  // lambda unused outside the sign family
  CHECK_NOTHROW(validate_sim_config(c));

  c = ok;
  c.rsa.alpha = 0.0;
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.algorithm = Algorithm::DpRsaFlip;  // epsilon still 0
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.algorithm = Algorithm::DpRsaGauss;
  c.epsilon = 8.0;  // out of the calibrated range
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);
  c.epsilon = 0.4;
  CHECK_NOTHROW(validate_sim_config(c));
  c.sigma_margin = 0.0;
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.num_byzantine = 1;
  c.attack.kind = AttackKind::SampleDuplicate;
  c.attack.victim_index = 2;  // workers 0..1 are regular when b = 1, K = 3
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);
  c.attack.victim_index = 1;
  CHECK_NOTHROW(validate_sim_config(c));

  c = ok;
  c.partition = PartitionKind::NonIid;
  c.group_size = 2;  // does not divide 3
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);

  c = ok;
  c.model.hidden_dim = 0;
  CHECK_THROWS_AS(validate_sim_config(c), ConfigError);
}

TEST_CASE("state initialization follows the algorithm family") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::Rsa);

  SimState s = init_state(cfg, ds);
  CHECK(s.worker_models.size() == 3);
  for (const auto& w : s.worker_models) CHECK(w == s.x0);
  CHECK(s.shards.size() == 3);
  CHECK(s.round == 0);

  cfg.algorithm = Algorithm::Sgd;
  SimState s2 = init_state(cfg, ds);
  CHECK(s2.worker_models.empty());
  CHECK(s2.x0 == s.x0);  // same seed, same init stream

  cfg.model.input_dim = 5;
  CHECK_THROWS_AS(init_state(cfg, ds), ConfigError);
}

TEST_CASE("sign-message rounds replay the primitive operations exactly") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::Rsa);

  SimState engine = init_state(cfg, ds);
  ParamVector x0 = engine.x0;
  std::vector<ParamVector> models = engine.worker_models;

  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    run_round(engine, cfg, ds, ds, false);

    // Reference round from the same streams and primitives.
    std::vector<SignVector> msgs;
    std::vector<ParamVector> grads;
    for (std::size_t k = 0; k < 3; ++k) {
      auto batch = expected_batch(cfg, ds, engine.shards[k], t, k);
      auto [loss, g] = loss_and_grad(cfg.model, models[k], batch);
      grads.push_back(clip_grad(g, cfg.clip));
      ParamVector diff(x0.size());
      for (std::size_t i = 0; i < x0.size(); ++i) diff[i] = x0[i] - models[k][i];
      msgs.push_back(sign_vec(diff));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      models[k] = rsa_worker_update(models[k], grads[k], x0, cfg.rsa);
    }
    x0 = rsa_master_update(x0, reg_grad(x0, cfg.reg_coeff), msgs, cfg.rsa);

    CHECK(engine.x0 == x0);
    CHECK(engine.worker_models == models);
  }
}

TEST_CASE("flip-mechanism rounds replay exactly and count invocations") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::DpRsaFlip);
  cfg.epsilon = std::log(4.0);
  cfg.rounds = 2;

  SimState engine = init_state(cfg, ds);
  ParamVector x0 = engine.x0;
  std::vector<ParamVector> models = engine.worker_models;
  FlipMechanism mech = calibrate_gamma({cfg.epsilon});

  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    RoundLog log = run_round(engine, cfg, ds, ds, false);
    CHECK(log.epsilon_round == cfg.epsilon);

    std::vector<SignVector> msgs;
    std::vector<ParamVector> grads;
    for (std::size_t k = 0; k < 3; ++k) {
      auto batch = expected_batch(cfg, ds, engine.shards[k], t, k);
      auto [loss, g] = loss_and_grad(cfg.model, models[k], batch);
      grads.push_back(clip_grad(g, cfg.clip));
      ParamVector diff(x0.size());
      for (std::size_t i = 0; i < x0.size(); ++i) diff[i] = x0[i] - models[k][i];
      RngStream noise(derive_key(cfg.seed, {stream_purpose::kDpNoise, t, k}));
      msgs.push_back(flip_perturb(sign_vec(diff), mech, noise));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      models[k] = rsa_worker_update(models[k], grads[k], x0, cfg.rsa);
    }
    x0 = rsa_master_update(x0, reg_grad(x0, cfg.reg_coeff), msgs, cfg.rsa);

    CHECK(engine.x0 == x0);
    CHECK(engine.worker_models == models);
  }
  CHECK(engine.mechanism_invocations == 2 * 3);
}

TEST_CASE("gauss-mechanism rounds replay exactly with per-message calibration") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::DpRsaGauss);
  cfg.epsilon = 0.4;
  cfg.rounds = 2;

  SimState engine = init_state(cfg, ds);
  ParamVector x0 = engine.x0;
  std::vector<ParamVector> models = engine.worker_models;
  Sensitivity sens{2.0 * cfg.rsa.alpha * cfg.clip.max_norm};

  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    run_round(engine, cfg, ds, ds, false);

    std::vector<SignVector> msgs;
    std::vector<ParamVector> grads;
    for (std::size_t k = 0; k < 3; ++k) {
      auto batch = expected_batch(cfg, ds, engine.shards[k], t, k);
      auto [loss, g] = loss_and_grad(cfg.model, models[k], batch);
      grads.push_back(clip_grad(g, cfg.clip));
      ParamVector u(x0.size());
      for (std::size_t i = 0; i < x0.size(); ++i) u[i] = x0[i] - models[k][i];
      SignGaussMechanism mech =
          calibrate_sigma({cfg.epsilon}, sens, linf_norm(u), cfg.sigma_margin);
      RngStream noise(derive_key(cfg.seed, {stream_purpose::kDpNoise, t, k}));
      msgs.push_back(gauss_perturb(u, mech, noise));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      models[k] = rsa_worker_update(models[k], grads[k], x0, cfg.rsa);
    }
    x0 = rsa_master_update(x0, reg_grad(x0, cfg.reg_coeff), msgs, cfg.rsa);

    CHECK(engine.x0 == x0);
    CHECK(engine.worker_models == models);
  }
  CHECK(engine.mechanism_invocations == 2 * 3);
}

TEST_CASE("gradient-message rounds replay exactly for mean, median and majority") {
  Dataset ds = tiny_blobs();
  for (Algorithm algo : {Algorithm::Sgd, Algorithm::SgdGm, Algorithm::SignSgd}) {
    CAPTURE(algorithm_name(algo));
    SimConfig cfg = base_config(algo);
    cfg.rounds = 2;

    SimState engine = init_state(cfg, ds);
    ParamVector x0 = engine.x0;

    for (std::size_t t = 0; t < cfg.rounds; ++t) {
      run_round(engine, cfg, ds, ds, false);

      std::vector<ParamVector> grads;
      for (std::size_t k = 0; k < 3; ++k) {
        auto batch = expected_batch(cfg, ds, engine.shards[k], t, k);
        auto [loss, g] = loss_and_grad(cfg.model, x0, batch);
        grads.push_back(clip_grad(g, cfg.clip));
      }
      ParamVector grad_f0 = reg_grad(x0, cfg.reg_coeff);
      if (algo == Algorithm::SignSgd) {
        std::vector<SignVector> msgs;
        for (const auto& g : grads) msgs.push_back(sign_vec(g));
        SignVector vote = sign_majority_aggregate(msgs);
        for (std::size_t i = 0; i < x0.size(); ++i) {
          x0[i] -= cfg.rsa.alpha * (grad_f0[i] + vote[i]);
        }
      } else {
        ParamVector agg = (algo == Algorithm::Sgd) ? mean_aggregate(grads)
                                                   : geometric_median(grads);
        for (std::size_t i = 0; i < x0.size(); ++i) {
          x0[i] -= cfg.rsa.alpha * (grad_f0[i] + agg[i]);
        }
      }
      CHECK(engine.x0 == x0);
    }
    CHECK(engine.mechanism_invocations == 0);
  }
}

TEST_CASE("attacks touch only the master, never the regular workers") {
  Dataset ds = tiny_blobs(5, 8);
  SimConfig clean = base_config(Algorithm::Rsa);
  clean.num_workers = 4;

  SimConfig attacked = clean;
  attacked.num_byzantine = 1;
  attacked.attack.kind = AttackKind::Gaussian;

  SimConfig flipped = attacked;
  flipped.attack.kind = AttackKind::SignFlip;

  SimState s_clean = init_state(clean, ds);
  SimState s_attacked = init_state(attacked, ds);
  SimState s_flipped = init_state(flipped, ds);
  // One fewer regular worker under attack; compare the shared prefix.
  run_round(s_clean, clean, ds, ds, false);
  run_round(s_attacked, attacked, ds, ds, false);
  run_round(s_flipped, flipped, ds, ds, false);

  REQUIRE(s_attacked.worker_models.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(s_attacked.worker_models[k] == s_clean.worker_models[k]);
    CHECK(s_flipped.worker_models[k] == s_clean.worker_models[k]);
  }
  CHECK(s_attacked.x0 != s_clean.x0);  // the attacker did reach the master
}

TEST_CASE("sample-duplicating attackers replay the victim message byte for byte") {
  Dataset ds = tiny_blobs(5, 8);
  SimConfig cfg = base_config(Algorithm::Rsa);
  cfg.num_workers = 4;
  cfg.num_byzantine = 2;
  cfg.attack.kind = AttackKind::SampleDuplicate;
  cfg.attack.victim_index = 1;

  // With b duplicates of one honest message, the master step equals a clean
  // round where the victim's message is counted 1 + b times. Verified on the
  // second round, after the worker models have diverged from the master.
  SimState s = init_state(cfg, ds);
  run_round(s, cfg, ds, ds, false);
  ParamVector x0 = s.x0;
  std::vector<ParamVector> models = s.worker_models;
  run_round(s, cfg, ds, ds, false);

  std::vector<SignVector> msgs;
  for (std::size_t k = 0; k < 2; ++k) {
    ParamVector diff(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) diff[i] = x0[i] - models[k][i];
    msgs.push_back(sign_vec(diff));
  }
  CHECK(msgs[0] != msgs[1]);  // the victim identity has to matter
  msgs.push_back(msgs[1]);
  msgs.push_back(msgs[1]);
  ParamVector want = rsa_master_update(x0, reg_grad(x0, cfg.reg_coeff), msgs, cfg.rsa);
  CHECK(s.x0 == want);
}

TEST_CASE("master movement per round is capped by the step and penalty") {
  Dataset ds = tiny_blobs(5, 8);
  SimConfig cfg = base_config(Algorithm::DpRsaFlip);
  cfg.epsilon = 0.4;
  cfg.num_workers = 4;
  cfg.num_byzantine = 1;
  cfg.attack.kind = AttackKind::Gaussian;

  SimState s = init_state(cfg, ds);
  for (std::size_t t = 0; t < 5; ++t) {
    ParamVector before = s.x0;
    ParamVector grad_f0 = reg_grad(before, cfg.reg_coeff);
    run_round(s, cfg, ds, ds, false);
    double lam_k = cfg.rsa.lambda * static_cast<double>(cfg.num_workers);
    for (std::size_t i = 0; i < before.size(); ++i) {
      CHECK(std::abs(s.x0[i] - before[i]) <=
            cfg.rsa.alpha * (std::abs(grad_f0[i]) + lam_k) + 1e-15);
    }
  }
}

TEST_CASE("training runs are deterministic and seeds matter") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::DpRsaGauss);
  cfg.epsilon = 1.0;
  cfg.rounds = 4;

  RunMetrics a = run_training(cfg, ds, ds);
  RunMetrics b = run_training(cfg, ds, ds);
  CHECK(a.final_model == b.final_model);
  CHECK(a.final_train_loss == b.final_train_loss);
  CHECK(a.final_test_accuracy == b.final_test_accuracy);
  REQUIRE(a.rounds.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(a.rounds[t].round == t);
    CHECK(a.rounds[t].train_loss == b.rounds[t].train_loss);
    // wall_ms deliberately not compared
    if (std::isnan(a.rounds[t].test_accuracy)) {
      CHECK(std::isnan(b.rounds[t].test_accuracy));
    } else {
      CHECK(a.rounds[t].test_accuracy == b.rounds[t].test_accuracy);
    }
  }

  cfg.seed = 8;
  RunMetrics c = run_training(cfg, ds, ds);
  CHECK(a.final_model != c.final_model);
}

TEST_CASE("evaluation cadence fills accuracy only on schedule") {
  Dataset ds = tiny_blobs();
  SimConfig cfg = base_config(Algorithm::Sgd);
  cfg.rounds = 5;
  cfg.eval_every = 2;

  RunMetrics m = run_training(cfg, ds, ds);
  REQUIRE(m.rounds.size() == 5);
  CHECK(std::isnan(m.rounds[0].test_accuracy));
  CHECK(!std::isnan(m.rounds[1].test_accuracy));
  CHECK(std::isnan(m.rounds[2].test_accuracy));
  CHECK(!std::isnan(m.rounds[3].test_accuracy));
  CHECK(!std::isnan(m.rounds[4].test_accuracy));  // final round always evaluates
  for (const RoundLog& log : m.rounds) {
    CHECK(log.epsilon_round == std::numeric_limits<double>::infinity());
    CHECK(log.wall_ms >= 0.0);
  }
  CHECK(m.mechanism_invocations == 0);
}

TEST_CASE("plain training separates easy synthetic blobs") {
  Dataset train = gen_synthetic({2, 4, 60, 4.0, 0.3, 21});
  Dataset test = gen_synthetic({2, 4, 40, 4.0, 0.3, 22});

  SimConfig cfg;
  cfg.num_workers = 3;
  cfg.algorithm = Algorithm::Sgd;
  cfg.rsa = {0.01, 0.1};
  cfg.batch_size = 4;
  cfg.rounds = 300;
  cfg.seed = 1;
  cfg.clip = {5.0};
  cfg.eval_every = 300;
  cfg.model = {4, 8, 2};

  RunMetrics sgd = run_training(cfg, train, test);
  CHECK(sgd.final_test_accuracy > 0.95);

  cfg.algorithm = Algorithm::Rsa;
  cfg.rsa = {0.05, 0.1};
  RunMetrics rsa = run_training(cfg, train, test);
  CHECK(rsa.final_test_accuracy > 0.95);
  CHECK(rsa.final_train_loss < std::log(2.0));  // better than the chance loss
}

TEST_CASE("algorithm and attack names are stable identifiers") {
  CHECK(std::string(algorithm_name(Algorithm::Sgd)) == "sgd");
  CHECK(std::string(algorithm_name(Algorithm::SignSgd)) == "signsgd");
  CHECK(std::string(algorithm_name(Algorithm::SgdGm)) == "sgd_gm");
  CHECK(std::string(algorithm_name(Algorithm::Rsa)) == "rsa");
  CHECK(std::string(algorithm_name(Algorithm::DpRsaFlip)) == "dp_rsa_flip");
  CHECK(std::string(algorithm_name(Algorithm::DpRsaGauss)) == "dp_rsa_gauss");
  CHECK(std::string(attack_name(AttackKind::None)) == "none");
  CHECK(std::string(attack_name(AttackKind::Gaussian)) == "gaussian");
  CHECK(std::string(attack_name(AttackKind::SignFlip)) == "sign_flip");
  CHECK(std::string(attack_name(AttackKind::SampleDuplicate)) == "sample_duplicate");
  CHECK(is_rsa_family(Algorithm::Rsa));
  CHECK(is_rsa_family(Algorithm::DpRsaFlip));
  CHECK(is_rsa_family(Algorithm::DpRsaGauss));
  CHECK(!is_rsa_family(Algorithm::Sgd));
  CHECK(!is_rsa_family(Algorithm::SignSgd));
  CHECK(!is_rsa_family(Algorithm::SgdGm));
}
