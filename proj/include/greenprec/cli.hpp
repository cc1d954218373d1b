#pragma once

#include "greenprec/run_config.hpp"

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace greenprec::cli {

enum ExitCode : int {
    kSuccess = 0,
    kValidationError = 1,
    kRuntimeError = 2,
};

/// Overrides given on the command line; they win over file and environment.
struct RunOverrides {
    std::optional<std::vector<double>> lambdas;
    std::optional<std::int64_t> bits_per_ue;
    std::optional<int> setups;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<std::string>> precoders;
    std::optional<int> threads;
    bool trace = false;
};

/// defaults < config file < GREENPREC_* environment < flags.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path, const RunOverrides& overrides,
                         const EnvLookup& env);

int cmd_run(const std::optional<std::filesystem::path>& config_path, const std::filesystem::path& out_dir,
            const RunOverrides& overrides, std::ostream& out, std::ostream& err, const EnvLookup& env = process_env());

int cmd_validate(const std::optional<std::filesystem::path>& config_path, std::ostream& out, std::ostream& err,
                 const EnvLookup& env = process_env());

int cmd_prox_check(int n_cases, std::uint64_t seed, std::ostream& out, std::ostream& err);

int cmd_dump_channel(const std::optional<std::filesystem::path>& config_path, int setup, std::ostream& out,
                     std::ostream& err, const EnvLookup& env = process_env());

/// Full command-line entry point.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace greenprec::cli
