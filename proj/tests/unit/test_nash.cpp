#include <cmath>

#include <gtest/gtest.h>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/applications/nash.hpp"
#include "fbsde/applications/oracles.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/global_solver.hpp"

namespace {

using namespace fbsde;

struct Game {
    apps::GameModel model;
    FBSDEProblem problem;
    DecouplingField field;
};

Game solve_game(const apps::GameParams& gp, int Nx = 101, int steps = 100) {
    const auto p = apps::make_lq_game(gp);
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    auto field = build_decoupling_field(p, default_grid(p, env, Nx, steps), env).first;
    return {apps::GameModel(gp), p, std::move(field)};
}

TEST(Nash, SinglePlayerCostMatchesControlValue) {
    const apps::LQControlParams lq;
    const auto g = solve_game(apps::as_single_player_game(lq), 201, 200);
    apps::NashOptions o;
    o.n_paths = 4000;
    o.n_deviations = 2;
    o.epsilons = {0.1};
    const auto rep = apps::verify_nash(g.model, g.problem, g.field, o);
    const double value = apps::lq_value(apps::lq_oracle(lq), lq.x0);
    // Monte Carlo error plus O(dt) discretization bias.
    EXPECT_NEAR(rep.cost[0], value, 4.0 * rep.cost_standard_error[0] + 0.02);
    EXPECT_TRUE(rep.pass);
}

TEST(Nash, ZeroCostGameOnlyPenalizesDeviations) {
    apps::GameParams gp;
    gp.E = {0.0, 0.0};
    gp.G = {0.0, 0.0};
    const auto g = solve_game(gp, 61, 40);
    apps::NashOptions o;
    o.n_paths = 200;
    o.n_deviations = 3;
    const auto rep = apps::verify_nash(g.model, g.problem, g.field, o);
    EXPECT_TRUE(rep.pass);
    for (double c : rep.cost) EXPECT_NEAR(c, 0.0, 1e-12);
    for (const auto& t : rep.trials) EXPECT_GT(t.mean_difference, 0.0);
    EXPECT_EQ(rep.worst_improvement_se, 0.0);
}

TEST(Nash, ZeroEpsilonGivesExactlyZeroDifference) {
    const auto g = solve_game(apps::GameParams{}, 61, 40);
    apps::NashOptions o;
    o.n_paths = 100;
    o.n_deviations = 2;
    o.epsilons = {0.0};
    const auto rep = apps::verify_nash(g.model, g.problem, g.field, o);
    ASSERT_EQ(rep.trials.size(), 4u);
    for (const auto& t : rep.trials) {
        EXPECT_EQ(t.mean_difference, 0.0);
        EXPECT_EQ(t.standard_error, 0.0);
        EXPECT_TRUE(t.pass);
    }
}

TEST(Nash, DefaultGamePassesAndDifferencesScaleQuadratically) {
    const auto g = solve_game(apps::GameParams{}, 101, 100);
    apps::NashOptions o;
    o.n_paths = 1000;
    o.n_deviations = 4;
    o.epsilons = {0.1, 0.2};
    const auto rep = apps::verify_nash(g.model, g.problem, g.field, o);
    EXPECT_TRUE(rep.pass) << rep.worst_improvement_se;
    ASSERT_EQ(rep.trials.size(), 16u);
    for (std::size_t c = 0; c + 1 < rep.trials.size(); c += 2) {
        const double r = rep.trials[c + 1].mean_difference / rep.trials[c].mean_difference;
        EXPECT_NEAR(r, 4.0, 0.8) << c;
    }
}

TEST(Nash, ReportIsDeterministic) {
    const auto g = solve_game(apps::GameParams{}, 61, 40);
    apps::NashOptions o;
    o.n_paths = 300;
    o.n_deviations = 2;
    const auto a = apps::verify_nash(g.model, g.problem, g.field, o).to_json();
    const auto b = apps::verify_nash(g.model, g.problem, g.field, o).to_json();
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_EQ(a["trials"][0]["player"], 1);
}

TEST(Nash, PerturbationsAreBoundedAndSeeded) {
    for (int k = 0; k < 10; ++k) {
        for (double t = 0.0; t <= 1.0; t += 0.1) EXPECT_LE(std::abs(apps::perturbation(k, t, 1.0, 3)), 1.5);
    }
    EXPECT_EQ(apps::perturbation(2, 0.3, 1.0, 3), apps::perturbation(2, 0.3, 1.0, 3));
    EXPECT_NE(apps::perturbation(2, 0.3, 1.0, 3), apps::perturbation(2, 0.3, 1.0, 4));
}

TEST(Nash, RejectsMismatchedField) {
    const auto g = solve_game(apps::GameParams{}, 41, 20);
    apps::GameParams three;
    three.players = 3;
    three.b2 = {1, 1, 1};
    three.E = {1, 1, 1};
    three.C = {0, 0, 0};
    three.F = {1, 1, 1};
    three.D = {0, 0, 0};
    three.G = {1, 1, 1};
    three.g1 = {0, 0, 0};
    EXPECT_THROW((void)apps::verify_nash(apps::GameModel(three), g.problem, g.field), PreconditionError);
}

}  // namespace
