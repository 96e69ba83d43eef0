#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "fbsde_cli/config.hpp"

namespace fbsde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitConditions = 2;
inline constexpr int kExitConvergence = 3;

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool quiet = false;
};

/// Exit status for an error code raised by the toolkit.
[[nodiscard]] int exit_status(const std::string& code);

/// JSON document {"error": {"code", "message"}}.
[[nodiscard]] nlohmann::json error_json(const std::string& code, const std::string& message);

/// Runs one command, writes artifacts under the output directory and a JSON
/// summary to `out`. Errors are reported as JSON on `err` (and error.json
/// when the output directory is writable) and mapped to exit statuses.
int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err);

/// Loads the config file first; config errors exit with status 1.
int run_file(const std::filesystem::path& config, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace fbsde::cli
