#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dprsa {

/// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDpViolation = 4;

/// The only two environment overrides: DP_RSA_SEED replaces the config seed
/// (run only; sweeps take seeds explicitly) and DP_RSA_OUT redirects output
/// files into a directory. Every applied or ignored override is announced on
/// the diagnostic stream.
struct CliEnv {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Reads DP_RSA_SEED / DP_RSA_OUT; throws ConfigError on a malformed seed.
CliEnv read_cli_env();

/// Cross-product parameter sweep: every value x every seed is one full run.
struct SweepSpec {
  std::string param;  // epsilon | num_byzantine | lambda
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
};

struct VerifyDpSpec {
  std::string mechanism;  // flip | gauss
  double epsilon = 0.0;
  std::size_t dims = 2;
  std::size_t trials = 100;
  double sigma_scale = 1.0;  // < 1 deliberately miscalibrates, for negative tests
  std::uint64_t seed = 0;
};

/// Executes the config's training run and writes its CSV. Returns an exit
/// code; never throws.
int cmd_run(const std::string& config_path, const CliEnv& env, std::ostream& diag);

/// Runs the sweep (possibly with several runs in flight at once) and writes
/// one long-format CSV with rows ordered by (value, seed, round).
int cmd_sweep(const std::string& config_path, const SweepSpec& spec, const CliEnv& env,
              std::ostream& diag);

/// Checks the mechanism's privacy-loss bound and writes the report CSV to
/// csv_out. Exit 0 when every observed worst case respects the budget,
/// kExitDpViolation otherwise.
int cmd_verify_dp(const VerifyDpSpec& spec, std::ostream& csv_out, std::ostream& diag);

}  // namespace dprsa
