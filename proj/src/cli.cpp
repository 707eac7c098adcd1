#include "dprsa/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dprsa/config.hpp"
#include "dprsa/csv.hpp"
#include "dprsa/dp.hpp"
#include "dprsa/errors.hpp"
#include "dprsa/fedsim.hpp"
#include "dprsa/rng.hpp"

namespace dprsa {

namespace {

std::string resolve_output(const std::string& configured, const CliEnv& env) {
  if (!env.out_dir) return configured;
  std::filesystem::path p(configured);
  return (std::filesystem::path(*env.out_dir) / p.filename()).string();
}

bool is_private(Algorithm a) {
  return a == Algorithm::DpRsaFlip || a == Algorithm::DpRsaGauss;
}

int classify(const std::exception& e, std::ostream& diag) {
  if (dynamic_cast<const ConfigError*>(&e)) {
    diag << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (dynamic_cast<const DataError*>(&e)) {
    diag << "data error: " << e.what() << '\n';
    return kExitData;
  }
  diag << "runtime error: " << e.what() << '\n';
  return kExitRuntime;
}

}  // namespace

CliEnv read_cli_env() {
  CliEnv env;
  if (const char* s = std::getenv("DP_RSA_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') {
      throw ConfigError(std::string("DP_RSA_SEED is not an integer: \"") + s + "\"");
    }
    env.seed = v;
  }
  if (const char* s = std::getenv("DP_RSA_OUT")) env.out_dir = std::string(s);
  return env;
}

int cmd_run(const std::string& config_path, const CliEnv& env, std::ostream& diag) {
  try {
    RunConfig cfg = parse_run_config(config_path);
    if (env.seed) {
      cfg.sim.seed = *env.seed;
      diag << "seed overridden by DP_RSA_SEED: " << *env.seed << '\n';
    }
    auto [train, test] = load_datasets(cfg);
    validate_sim_config(cfg.sim);

    RunMetrics metrics = run_training(cfg.sim, train, test);
    std::string out_path = resolve_output(cfg.output, env);
    write_text_file(out_path, run_csv_text(cfg.sim, metrics));

    if (is_private(cfg.sim.algorithm)) {
      diag << "per-message budget epsilon = " << csv_double(cfg.sim.epsilon)
           << "; naive " << cfg.sim.rounds
           << "-round composition (loose upper bound, no advanced accounting): "
           << csv_double(cfg.sim.epsilon * static_cast<double>(cfg.sim.rounds)) << '\n';
      diag << "mechanism invocations: " << metrics.mechanism_invocations << '\n';
    } else {
      diag << "non-private run (epsilon_round = inf)\n";
    }
    diag << "final loss " << csv_double(metrics.final_train_loss) << ", accuracy "
         << csv_double(metrics.final_test_accuracy) << "; wrote " << out_path << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, diag);
  }
}

int cmd_sweep(const std::string& config_path, const SweepSpec& spec, const CliEnv& env,
              std::ostream& diag) {
  try {
    if (spec.values.empty()) throw ConfigError("sweep values list is empty");
    if (spec.seeds.empty()) throw ConfigError("sweep seeds list is empty");
    if (spec.param != "epsilon" && spec.param != "num_byzantine" &&
        spec.param != "lambda") {
      throw ConfigError("sweep param must be epsilon, num_byzantine or lambda");
    }

    RunConfig base = parse_run_config(config_path);
    if (env.seed) {
      diag << "DP_RSA_SEED ignored by sweep; seeds come from --seeds\n";
    }
    auto [train, test] = load_datasets(base);

    // All run configs validated up front, before any work is scheduled.
    struct Job {
      SimConfig cfg;
      double value;
    };
    std::vector<Job> jobs;
    for (double v : spec.values) {
      SimConfig cfg = base.sim;
      if (spec.param == "epsilon") {
        cfg.epsilon = v;
      } else if (spec.param == "lambda") {
        cfg.rsa.lambda = v;
      } else {
        if (v < 0.0 || v != std::floor(v)) {
          throw ConfigError("num_byzantine sweep values must be non-negative integers");
        }
        cfg.num_byzantine = static_cast<std::size_t>(v);
      }
      for (std::uint64_t seed : spec.seeds) {
        cfg.seed = seed;
        validate_sim_config(cfg);
        jobs.push_back({cfg, v});
      }
    }

    // Runs are independent and deterministic, so scheduling cannot change
    // the assembled bytes: each job writes its own slot, concatenated in
    // (value, seed) order afterwards.
    std::vector<std::string> rows(jobs.size());
    std::vector<std::exception_ptr> failures(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
        try {
          RunMetrics m = run_training(jobs[i].cfg, train, test);
          rows[i] = sweep_csv_rows(spec.param, jobs[i].value, jobs[i].cfg, m);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    std::size_t hw = std::thread::hardware_concurrency();
    std::size_t num_threads = std::min(jobs.size(), hw > 0 ? hw : 1);
    if (num_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < num_threads; ++i) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& p : failures) {
      if (p) std::rethrow_exception(p);
    }

    std::string text(kSweepCsvHeader);
    text += '\n';
    for (const std::string& r : rows) text += r;
    std::string out_path = resolve_output(base.output, env);
    write_text_file(out_path, text);
    diag << jobs.size() << " runs (" << spec.values.size() << " values x "
         << spec.seeds.size() << " seeds); wrote " << out_path << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, diag);
  }
}

int cmd_verify_dp(const VerifyDpSpec& spec, std::ostream& csv_out, std::ostream& diag) {
  try {
    csv_out << kVerifyCsvHeader << '\n';
    bool all_pass = true;
    double worst = 0.0;

    if (spec.mechanism == "flip") {
      FlipMechanism mech = calibrate_gamma({spec.epsilon});
      double pl = exact_flip_pl(mech);
      // The flip mechanism meets its budget with equality; only fp rounding
      // separates the round trip from epsilon.
      bool pass = pl <= spec.epsilon + 1e-12;
      csv_out << "flip," << csv_double(spec.epsilon) << ',' << csv_double(mech.gamma)
              << ',' << csv_double(pl) << ',' << (pass ? 1 : 0) << '\n';
      all_pass = pass;
      worst = pl;
    } else if (spec.mechanism == "gauss") {
      if (spec.trials == 0) throw ConfigError("verify-dp trials must be >= 1");
      // The calibration scenario under gradient clipping at M = 1 with step
      // alpha = 0.01: sensitivity 2*alpha*M and matching entry bound.
      const Sensitivity sens{0.02};
      const double u_bound = 0.01;
      const double margin = 0.05;
      double sigma =
          calibrate_sigma({spec.epsilon}, sens, u_bound, margin).sigma * spec.sigma_scale;
      for (std::size_t trial = 0; trial < spec.trials; ++trial) {
        RngStream rng(derive_key(spec.seed, {stream_purpose::kDpNoise, trial}));
        ParamVector u(spec.dims);
        for (double& e : u) e = rng.next_in(-u_bound, u_bound);
        double pl = worst_case_gauss_pl(u, sens, sigma, 32);
        bool pass = pl < spec.epsilon;
        csv_out << "gauss," << csv_double(spec.epsilon) << ',' << csv_double(sigma)
                << ',' << csv_double(pl) << ',' << (pass ? 1 : 0) << '\n';
        all_pass = all_pass && pass;
        worst = std::max(worst, pl);
      }
    } else {
      throw ConfigError("verify-dp mechanism must be flip or gauss");
    }

    diag << "worst observed privacy loss " << csv_double(worst) << " against budget "
         << csv_double(spec.epsilon) << (all_pass ? ": pass" : ": VIOLATION") << '\n';
    return all_pass ? kExitOk : kExitDpViolation;
  } catch (const std::out_of_range& e) {
    diag << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    diag << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    return classify(e, diag);
  }
}

}  // namespace dprsa
