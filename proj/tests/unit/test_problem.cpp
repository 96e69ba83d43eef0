#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/random.hpp"

namespace {

using namespace fbsde;

FBSDEProblem linear_problem() { return apps::make_example36(); }

bool has_code(const std::vector<Violation>& v, const std::string& code) {
    for (const auto& e : v) {
        if (e.code == code) return true;
    }
    return false;
}

TEST(ValidateProblem, WellFormedLinearProblemHasNoViolations) {
    EXPECT_TRUE(validate_problem(linear_problem()).empty());
}

TEST(ValidateProblem, DriftUsingZNeedsOneBackwardDimension) {
    auto p = apps::make_lq_game();
    p.drift_uses_z = true;
    const auto v = validate_problem(p);
    ASSERT_FALSE(v.empty());
    bool found = false;
    for (const auto& e : v) found = found || e.message.find("drift_uses_z requires n = 1") != std::string::npos;
    EXPECT_TRUE(found);
}

TEST(ValidateProblem, NonDiagonalDriverIsReported) {
    auto p = apps::make_lq_game();
    p.driver[0] = [](double, double, std::span<const double>, std::span<const double> z) { return z[1]; };
    EXPECT_TRUE(has_code(validate_problem(p), "diagonal_structure"));
}

TEST(ValidateProblem, RejectsBadDimensionsAndHorizon) {
    auto p = linear_problem();
    p.T = 0.0;
    EXPECT_FALSE(validate_problem(p).empty());
    p = linear_problem();
    p.K = -1.0;
    EXPECT_FALSE(validate_problem(p).empty());
    p = linear_problem();
    p.forward_dim = 2;
    EXPECT_FALSE(validate_problem(p).empty());
}

TEST(ValidateProblem, ExtensionFlagsNeedLipschitzClass) {
    auto p = linear_problem();
    p.drift_uses_z = true;
    p.diffusion_uses_state = true;
    EXPECT_TRUE(validate_problem(p).empty());
    p.growth_class = GrowthClass::quadratic;
    p.lambda = 1.0;
    EXPECT_FALSE(validate_problem(p).empty());
}

TEST(ValidateProblem, QuadraticClassNeedsLambda) {
    auto p = linear_problem();
    p.growth_class = GrowthClass::quadratic;
    EXPECT_FALSE(validate_problem(p).empty());
    p.lambda = 2.0;
    EXPECT_TRUE(validate_problem(p).empty());
}

TEST(ValidateProblem, IsIdempotent) {
    auto p = apps::make_lq_game();
    p.driver[1] = [](double, double, std::span<const double>, std::span<const double> z) { return z[0]; };
    const auto a = validate_problem(p);
    const auto b = validate_problem(p);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].code, b[k].code);
        EXPECT_EQ(a[k].message, b[k].message);
    }
}

TEST(DriverRow, LinearExampleAtUnitPoint) {
    const auto p = linear_problem();
    const std::vector<double> y{0.0}, z{0.0};
    EXPECT_DOUBLE_EQ(driver_row(p, 0, 0.3, 1.0, y, z), 1.0);
}

TEST(DriverRow, ZeroDriver) {
    auto p = linear_problem();
    p.driver[0] = [](double, double, std::span<const double>, std::span<const double>) { return 0.0; };
    const std::vector<double> y{2.0}, z{-1.0};
    EXPECT_EQ(driver_row(p, 0, 0.5, 4.0, y, z), 0.0);
}

TEST(DriverRow, LqAdjointDriver) {
    apps::LQControlParams lq;
    lq.A = apps::constant(1.0);
    lq.E = apps::constant(1.0);
    lq.C = apps::constant(1.0);
    const auto p = apps::make_lq_control(lq);
    const std::vector<double> y{3.0}, z{0.0};
    EXPECT_DOUBLE_EQ(driver_row(p, 0, 0.0, 2.0, y, z), 6.0);
}

TEST(DriverRow, NonFiniteOutputRaisesCoefficientError) {
    auto p = linear_problem();
    p.driver[0] = [](double, double x, std::span<const double>, std::span<const double>) { return std::log(x); };
    const std::vector<double> y{0.0}, z{0.0};
    try {
        (void)driver_row(p, 0, 0.0, -1.0, y, z);
        FAIL() << "expected CoefficientError";
    } catch (const CoefficientError& e) {
        EXPECT_EQ(e.code(), "coefficient_evaluation");
        EXPECT_NE(std::string(e.what()).find("x="), std::string::npos);
    }
}

TEST(DriverRow, BadIndexIsAPreconditionError) {
    const auto p = linear_problem();
    const std::vector<double> y{0.0}, z{0.0};
    EXPECT_THROW((void)driver_row(p, 1, 0.0, 0.0, y, z), PreconditionError);
    EXPECT_THROW((void)driver_row(p, -1, 0.0, 0.0, y, z), PreconditionError);
}

// Every built-in reads only its own row of z.
TEST(DriverRow, BuiltinsAreDiagonalUnderRandomPerturbations) {
    for (const auto& name : apps::builtin_names()) {
        const auto p = apps::build_builtin(name);
        const auto n = static_cast<std::size_t>(p.n);
        const auto d = static_cast<std::size_t>(p.d);
        CounterRng rng(11, 0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> y(n), z(n * d), z2;
            for (auto& e : y) e = rng.uniform(-3, 3);
            for (auto& e : z) e = rng.uniform(-3, 3);
            const double t = rng.uniform(0, p.T), x = rng.uniform(-3, 3);
            for (std::size_t i = 0; i < n; ++i) {
                z2 = z;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == i) continue;
                    for (std::size_t k = 0; k < d; ++k) z2[r * d + k] += rng.uniform(-5, 5);
                }
                EXPECT_EQ(p.driver[i](t, x, y, z), p.driver[i](t, x, y, z2)) << name;
            }
        }
    }
}

TEST(GrowthClass, RoundTripsThroughStrings) {
    for (auto g : {GrowthClass::lipschitz, GrowthClass::quadratic, GrowthClass::superquadratic}) {
        EXPECT_EQ(growth_class_from_string(to_string(g)), g);
    }
    EXPECT_FALSE(growth_class_from_string("cubic").has_value());
}

}  // namespace
