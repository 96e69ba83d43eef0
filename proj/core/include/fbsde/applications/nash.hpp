#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/global_solver.hpp"

namespace fbsde::apps {

struct NashOptions {
    std::size_t n_paths = 10000;
    int n_deviations = 10;
    std::vector<double> epsilons{0.05, 0.1, 0.2};
    std::uint64_t seed = 2024;
    /// Improvements larger than this many standard errors fail the test.
    double se_threshold = 3.0;
};

/// One (player, perturbation, epsilon) cell.
struct NashTrial {
    int player = 0;
    int deviation = 0;
    double epsilon = 0.0;
    /// Mean of J^i(deviation) - J^i(equilibrium) over paths.
    double mean_difference = 0.0;
    /// Standard error of that mean (paired, common noise).
    double standard_error = 0.0;
    bool pass = true;
};

struct NashReport {
    bool pass = true;
    std::size_t paths = 0;
    /// Monte Carlo estimates of J^i at the candidate equilibrium.
    std::vector<double> cost;
    std::vector<double> cost_standard_error;
    std::vector<NashTrial> trials;
    /// Largest cost improvement of any deviation, in standard errors.
    double worst_improvement_se = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Smooth bounded perturbation k of the deviation family, evaluated at t.
[[nodiscard]] double perturbation(int k, double t, double T, std::uint64_t seed);

/// Candidate alpha_t = a_hat(t, X_t, u(t, X_t)) is simulated on the field's
/// time grid. For each player i, each perturbation k and each epsilon, the
/// state is re-simulated with the same Brownian increments under
/// alpha^i + epsilon phi_k(t) while the other players keep their recorded
/// equilibrium control processes. The test passes when no cell improves the
/// cost of the deviating player by more than se_threshold standard errors.
[[nodiscard]] NashReport verify_nash(const GameModel& model, const FBSDEProblem& problem,
                                     const DecouplingField& field, const NashOptions& options = {});

/// max |B_t Y_t + D_t + F_t u_t| with u_t = (-B_t Y_t - D_t) / F_t along the paths.
[[nodiscard]] double lq_first_order_residual(const LQControlParams& p, const std::vector<SolutionPath>& paths);

/// Single-player game with the same data as an LQ control problem.
[[nodiscard]] GameParams as_single_player_game(const LQControlParams& p);

}  // namespace fbsde::apps
