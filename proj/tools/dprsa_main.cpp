#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dprsa/cli.hpp"
#include "dprsa/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust federated training with sign-message differential privacy"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "execute one training run from a config file");
  run->add_option("config", run_config, "path to the JSON run config")->required();

  std::string sweep_config;
  dprsa::SweepSpec sweep_spec;
  CLI::App* sweep =
      app.add_subcommand("sweep", "run a parameter sweep (cross product of values and seeds)");
  sweep->add_option("config", sweep_config, "path to the JSON run config")->required();
  sweep->add_option("--param", sweep_spec.param, "epsilon | num_byzantine | lambda")
      ->required();
  sweep->add_option("--values", sweep_spec.values, "comma-separated parameter values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_spec.seeds, "comma-separated seeds, one run each")
      ->required()
      ->delimiter(',');

  dprsa::VerifyDpSpec verify_spec;
  CLI::App* verify =
      app.add_subcommand("verify-dp", "check a mechanism's worst-case privacy loss");
  verify->add_option("--mechanism", verify_spec.mechanism, "flip | gauss")->required();
  verify->add_option("--epsilon", verify_spec.epsilon, "privacy budget")->required();
  verify->add_option("--dims", verify_spec.dims, "message dimension (gauss, <= 4)");
  verify->add_option("--trials", verify_spec.trials, "random messages to test (gauss)");
  verify->add_option("--sigma-scale", verify_spec.sigma_scale,
                     "scale the calibrated sigma (under 1 should fail, for testing)");
  verify->add_option("--seed", verify_spec.seed, "seed for the random messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? dprsa::kExitOk : dprsa::kExitConfig;
  }

  dprsa::CliEnv env;
  try {
    env = dprsa::read_cli_env();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return dprsa::kExitConfig;
  }

  if (run->parsed()) return dprsa::cmd_run(run_config, env, std::cerr);
  if (sweep->parsed()) return dprsa::cmd_sweep(sweep_config, sweep_spec, env, std::cerr);
  if (verify->parsed()) {
    if (env.seed) {
      verify_spec.seed = *env.seed;
      std::cerr << "seed overridden by DP_RSA_SEED: " << *env.seed << '\n';
    }
    return dprsa::cmd_verify_dp(verify_spec, std::cout, std::cerr);
  }
  return dprsa::kExitConfig;
}
