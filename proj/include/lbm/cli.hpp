#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "lbm/io.hpp"

namespace lbm::cli {

using io::Json;

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitIo = 3,
    kExitDegenerateFit = 4,
    kExitCriterionFailed = 5,
};

struct RunOptions {
    std::filesystem::path config_path;
    std::optional<std::uint64_t> seed;  // overrides the config's "seed"
    int threads = 1;
    std::filesystem::path out_dir = ".";
};

/// Runs one verification check described by `config` and returns the report
/// document. The report never depends on `threads`. Throws Error(Config) on
/// schema errors.
Json verify_report(const Json& config, std::uint64_t seed, int threads);

int cmd_simulate(const RunOptions& opts);
int cmd_fit(const RunOptions& opts);
int cmd_verify(const RunOptions& opts);

/// Entry point of the `lbm` binary.
int run(int argc, char** argv);

}  // namespace lbm::cli
