#pragma once

#include "config.hpp"

#include <filesystem>

namespace branchlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs every stage of the experiment and writes the artifact directory.
/// Returns kExitOk, or kExitNumerical when any stage threw.
int run_experiment(const ExperimentConfig& cfg);

/// Prints the pass/fail table for a run directory (or a directory of run
/// directories) after checking every manifest hash.
int report_directory(const std::filesystem::path& dir, std::ostream& os);

}  // namespace branchlab::cli
