#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/problem.hpp"

namespace fbsde::cli {

enum class Command { check, solve, verify_nash, convergence };

[[nodiscard]] std::string to_string(Command c);

/// Coefficients of a custom problem written in the expression language.
struct CustomProblem {
    int n = 1;
    int d = 1;
    double T = 1.0;
    double x0 = 0.0;
    double K = 1.0;
    GrowthClass growth_class = GrowthClass::lipschitz;
    std::optional<double> lambda;
    bool drift_uses_z = false;
    bool diffusion_uses_state = false;
    std::string drift = "0";
    /// d entries.
    std::vector<std::string> diffusion{"1"};
    /// n entries.
    std::vector<std::string> driver{"0"};
    /// n entries, functions of x.
    std::vector<std::string> terminal{"x"};
};

struct ProblemConfig {
    /// Built-in name, or "custom".
    std::string name = "example36";
    nlohmann::json params = nlohmann::json::object();
    std::optional<CustomProblem> custom;
};

struct GridOverrides {
    std::optional<double> x_min;
    std::optional<double> x_max;
    int Nx = 401;
    int time_steps = 400;
    int quadrature_order = 7;
};

struct SolverConfig {
    double tolerance = 1e-9;
    int max_passes = 100;
    std::string initial_guess = "frozen_terminal";
    bool check_conditions = true;
    bool override_conditions = false;
    int condition_samples = 2000;
};

struct CheckConfig {
    std::size_t samples = 10000;
    std::vector<std::string> conditions{"M1", "M2", "M3"};
    /// Also run the Peng-Wu form check with this G.
    std::optional<double> peng_wu_G;
};

struct NashConfig {
    std::size_t paths = 10000;
    int deviations = 10;
    std::vector<double> epsilons{0.05, 0.1, 0.2};
};

struct OutputConfig {
    std::filesystem::path dir = "out";
    /// Number of simulated paths written to paths.csv.
    std::size_t csv_paths = 100;
};

struct ExperimentConfig {
    Command command = Command::solve;
    ProblemConfig problem;
    GridOverrides grid;
    std::uint64_t seed = 1;
    /// Paths simulated by solve.
    std::size_t paths = 1000;
    SolverConfig solver;
    CheckConfig check;
    NashConfig nash;
    int convergence_levels = 3;
    OutputConfig output;
};

/// Throws Error("config_invalid") on unknown keys, wrong types or bad values.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& j);

/// Reads and parses a JSON file; Error("config_parse") on malformed JSON.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Problem described by the config (built-in or custom).
[[nodiscard]] FBSDEProblem make_problem(const ProblemConfig& c);

/// Compiles a custom problem; Error("expression_syntax") on parse errors.
[[nodiscard]] FBSDEProblem make_custom_problem(const CustomProblem& c);

}  // namespace fbsde::cli
