#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/global_solver.hpp"
#include "fbsde/parallel.hpp"
#include "reference.hpp"

namespace {

using namespace fbsde;

FBSDEProblem frozen_problem() {
    FBSDEProblem p;
    p.name = "frozen";
    p.T = 1.0;
    p.x0 = 0.3;
    p.K = 1.0;
    p.drift = [](double, double, std::span<const double>, std::span<const double>) { return 0.0; };
    p.diffusion = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    p.driver = {[](double, double, std::span<const double>, std::span<const double>) { return 0.0; }};
    p.terminal = [](double x, std::span<double> out) { out[0] = 0.5 * std::tanh(x) + 0.2 * x; };
    return p;
}

// Nonlinear in x and y, so the affine ansatz does not apply.
FBSDEProblem nonlinear_problem() {
    FBSDEProblem p;
    p.name = "nonlinear";
    p.T = 1.0;
    p.x0 = 0.0;
    p.K = 1.0;
    p.drift = [](double, double, std::span<const double> y, std::span<const double>) { return -0.5 * std::tanh(y[0]); };
    p.diffusion = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    p.driver = {[](double, double x, std::span<const double> y, std::span<const double>) {
        return 0.5 * std::tanh(x) - 0.5 * y[0];
    }};
    p.terminal = [](double x, std::span<double> out) { out[0] = 0.5 * std::tanh(x); };
    return p;
}

GridSpec small_grid(const FBSDEProblem& p, int Nx = 101, int steps = 100) {
    const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
    return default_grid(p, env, Nx, steps);
}

TEST(BuildField, FrozenDynamicsReturnTerminalMap) {
    const auto p = frozen_problem();
    GridSpec g = small_grid(p, 81, 20);
    g.x_min = -4.0;
    g.x_max = 4.0;
    const auto [field, diag] = build_decoupling_field(p, g);
    std::vector<double> h(1);
    for (double t : {0.0, 0.37, 1.0}) {
        for (double x : {-3.0, 0.0, 0.5, 2.0}) {
            p.terminal(x, h);
            // Node-exact at grid points; between nodes linear interpolation applies.
            EXPECT_NEAR(field.value(t, x)[0], h[0], 1e-2) << t << "," << x;
        }
    }
    for (std::size_t m = 0; m < static_cast<std::size_t>(g.Nx); ++m) {
        p.terminal(g.node(m), h);
        EXPECT_NEAR(field.u_layer(0)[m], h[0], 1e-12);
    }
    EXPECT_EQ(diag.sandwich_margin >= 0.0, true);
}

TEST(BuildField, LinearExampleAgreesWithAnalyticRiccati) {
    const auto p = apps::make_example36();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 201, 200));
    const double P0 = fbsde::testing::riccati_closed_form(1.0, 1.0, -1.0, 1.0, 1.0, 0.0);
    const double phi0 = fbsde::testing::linear_example_offset(
        [](double s) { return fbsde::testing::riccati_closed_form(1.0, 1.0, -1.0, 1.0, 1.0, s); },
        [](double) { return 1.0; }, 1.0, 0.0, 20000);
    const double ref = P0 * 1.0 + phi0;
    EXPECT_NEAR(field.value(0.0, 1.0)[0], ref, 0.02 * std::abs(ref));
    EXPECT_GT(diag.delta, 0.0);
    EXPECT_GE(diag.subintervals, 1u);
}

TEST(BuildField, SandwichHoldsForBuiltins) {
    for (const auto& name : apps::builtin_names()) {
        const auto p = apps::build_builtin(name);
        const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
        const auto [field, diag] = build_decoupling_field(p, default_grid(p, env, 101, 80), env);
        const auto rep = verify_sandwich(field, env, 1e-2);
        EXPECT_TRUE(rep.pass) << name << " margin " << rep.margin;
        EXPECT_GE(rep.min_slope, -1e-2) << name;
    }
}

TEST(BuildField, JunctionLayersCoincide) {
    const auto p = apps::make_lq_control();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 81, 80));
    ASSERT_GE(field.slices.size(), 2u);
    for (std::size_t k = 0; k + 1 < field.slices.size(); ++k) {
        const auto& a = field.slices[k];
        const auto& b = field.slices[k + 1];
        EXPECT_DOUBLE_EQ(a.end, b.start);
        const auto ua = a.u_layer(a.steps());
        const auto ub = b.u_layer(0);
        for (std::size_t m = 0; m < ua.size(); ++m) EXPECT_EQ(ua[m], ub[m]);
    }
    // Fine grid lists each junction once.
    for (std::size_t g = 0; g + 1 < field.times().size(); ++g) EXPECT_LT(field.times()[g], field.times()[g + 1]);
    EXPECT_DOUBLE_EQ(field.times().front(), 0.0);
    EXPECT_DOUBLE_EQ(field.times().back(), p.T);
}

TEST(BuildField, RaisedTerminalRaisesField) {
    const auto p = nonlinear_problem();
    auto q = p;
    q.terminal = [](double x, std::span<double> out) { out[0] = 0.5 * std::tanh(x) + 0.1; };
    const auto g = small_grid(p, 81, 50);
    const auto a = build_decoupling_field(p, g).first;
    const auto b = build_decoupling_field(q, g).first;
    for (double x : {-1.0, 0.0, 1.0}) {
        for (double t : {0.0, 0.5}) EXPECT_GT(b.value(t, x)[0], a.value(t, x)[0]);
    }
}

TEST(BuildField, InitialGuessDoesNotChangeTheLimit) {
    const auto p = nonlinear_problem();
    const auto g = small_grid(p, 81, 50);
    BuildOptions zero;
    zero.picard.initial_guess = InitialGuess::zero;
    const auto a = build_decoupling_field(p, g).first;
    const auto b = build_decoupling_field(p, g, zero).first;
    for (double x : {-2.0, -0.5, 0.0, 1.5}) EXPECT_NEAR(a.value(0.0, x)[0], b.value(0.0, x)[0], 1e-6);
}

TEST(BuildField, ConditionFailureRefusesUnlessOverridden) {
    auto p = frozen_problem();
    p.drift = [](double, double, std::span<const double> y, std::span<const double>) { return y[0]; };
    const auto g = small_grid(p, 41, 20);
    try {
        (void)build_decoupling_field(p, g);
        FAIL() << "expected condition_check_failed";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "condition_check_failed");
    }
    BuildOptions o;
    o.override_conditions = true;
    const auto [field, diag] = build_decoupling_field(p, g, o);
    EXPECT_FALSE(diag.warnings.empty());
}

TEST(BuildField, ValueOutsideHorizonThrows) {
    const auto p = frozen_problem();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 21, 10));
    EXPECT_THROW((void)field.value(-0.1, 0.0), PreconditionError);
    EXPECT_THROW((void)field.value(1.1, 0.0), PreconditionError);
}

TEST(Simulate, FrozenDynamicsKeepStateAndValue) {
    const auto p = frozen_problem();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 41, 20));
    const auto sim = simulate_forward(p, field, 5, 3);
    for (const auto& path : sim.paths) {
        for (double x : path.X) EXPECT_EQ(x, p.x0);
        for (double y : path.Y) EXPECT_NEAR(y, field.value(0.0, p.x0)[0], 1e-12);
    }
}

TEST(Simulate, InitialValueIsTheField) {
    const auto p = apps::make_example36();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 101, 100));
    const auto sim = simulate_forward(p, field, 20, 11);
    for (const auto& path : sim.paths) {
        EXPECT_EQ(path.X[0], p.x0);
        EXPECT_DOUBLE_EQ(path.Y[0], field.value(0.0, p.x0)[0]);
        EXPECT_EQ(path.t.size(), field.time_nodes());
        EXPECT_EQ(path.dW.size(), field.time_nodes() - 1);
    }
}

TEST(Simulate, DelayedProblemIsDeterministic) {
    const auto p = apps::build_builtin("delayed_bsde");
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 101, 100));
    const auto sim = simulate_forward(p, field, 10, 5);
    for (std::size_t j = 0; j < sim.paths[0].Y.size(); ++j) {
        for (const auto& path : sim.paths) EXPECT_EQ(path.Y[j], sim.paths[0].Y[j]);
    }
    for (const auto& path : sim.paths) {
        for (double z : path.Z) EXPECT_NEAR(z, 0.0, 1e-10);
    }
}

TEST(Simulate, ReproducibleAcrossRunsAndWorkers) {
    const auto p = apps::make_lq_game();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 81, 40));
    set_worker_count(1);
    const auto a = simulate_forward(p, field, 64, 9);
    set_worker_count(4);
    const auto b = simulate_forward(p, field, 64, 9);
    set_worker_count(0);
    ASSERT_EQ(a.paths.size(), b.paths.size());
    for (std::size_t k = 0; k < a.paths.size(); ++k) {
        EXPECT_EQ(a.paths[k].X, b.paths[k].X);
        EXPECT_EQ(a.paths[k].Y, b.paths[k].Y);
        EXPECT_EQ(a.paths[k].Z, b.paths[k].Z);
    }
    const auto c = simulate_forward(p, field, 64, 10);
    EXPECT_NE(a.paths[0].X, c.paths[0].X);
}

TEST(Simulate, ResidualShrinksUnderRefinement) {
    const auto p = nonlinear_problem();
    double previous = 0.0;
    for (int level = 0; level < 3; ++level) {
        const int steps = 25 << level;
        const auto [field, diag] = build_decoupling_field(p, small_grid(p, 50 * (1 << level) + 1, steps));
        const auto sim = simulate_forward(p, field, 400, 1);
        const double r = sim.diagnostics.max_backward_residual;
        EXPECT_GT(r, 0.0);
        if (level > 0) EXPECT_LT(r, previous) << level;
        previous = r;
    }
}

TEST(Sandwich, ConstantFieldPasses) {
    auto p = frozen_problem();
    p.terminal = [](double, std::span<double> out) { out[0] = 2.0; };
    const auto env = integrate_envelope(p.K, p.n, p.T, 100);
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 21, 10), env);
    const auto rep = verify_sandwich(field, env, 0.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.min_slope, 0.0);
    EXPECT_EQ(rep.max_slope, 0.0);
    EXPECT_EQ(rep.violating_nodes, 0u);
}

TEST(Sandwich, SteepFieldFailsWithWitness) {
    const auto p = frozen_problem();
    const auto env = integrate_envelope(p.K, p.n, p.T, 100);
    auto [field, diag] = build_decoupling_field(p, small_grid(p, 21, 10), env);
    for (auto& s : field.slices) {
        for (std::size_t j = 0; j <= s.steps(); ++j) {
            const double bar = env.at(s.times[j], 0);
            for (std::size_t m = 0; m < s.Nx; ++m) s.u[j * s.Nx + m] = 2.0 * bar * field.grid.node(m);
        }
    }
    field.index();
    const auto rep = verify_sandwich(field, env, 1e-2);
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.violating_nodes, 0u);
    EXPECT_LT(rep.margin, 0.0);
    EXPECT_GT(rep.worst.slope, rep.worst.bound);
    EXPECT_TRUE(rep.to_json().contains("worst"));
}

TEST(Csv, HeadersAndRowCounts) {
    const auto p = apps::make_lq_game();
    const auto [field, diag] = build_decoupling_field(p, small_grid(p, 11, 4));
    std::ostringstream f;
    write_field_csv(f, field);
    std::istringstream fin(f.str());
    std::string line;
    std::getline(fin, line);
    EXPECT_EQ(line, "t,x,u_1,u_2,v_11,v_21");
    std::size_t rows = 0;
    while (std::getline(fin, line)) ++rows;
    EXPECT_EQ(rows, field.time_nodes() * 11);

    const auto sim = simulate_forward(p, field, 2, 1);
    std::ostringstream s;
    write_paths_csv(s, sim.paths, 2, 1);
    std::istringstream sin(s.str());
    std::getline(sin, line);
    EXPECT_EQ(line, "path_id,t,X,Y_1,Y_2,Z_11,Z_21");
}

TEST(Csv, RoundTripFormatting) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
