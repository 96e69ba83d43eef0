#include <cmath>

#include <gtest/gtest.h>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/expression.hpp"
#include "fbsde/random.hpp"

namespace {

using fbsde::Error;
using fbsde::Expression;

std::string syntax_message(const std::string& text, int n = 1, int d = 1) {
    try {
        (void)Expression::compile(text, n, d);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "expression_syntax");
        return e.what();
    }
    ADD_FAILURE() << "no error for '" << text << "'";
    return {};
}

TEST(Expression, MatchesHandCodedDriverBitForBit) {
    const auto e = Expression::compile("x - y1 - z11");
    const auto p = fbsde::apps::make_example36();
    fbsde::CounterRng rng(1, 0);
    for (int k = 0; k < 10000; ++k) {
        const double t = rng.uniform(), x = rng.uniform(-10, 10);
        const std::vector<double> y{rng.uniform(-10, 10)}, z{rng.uniform(-10, 10)};
        ASSERT_EQ(e(t, x, y, z), p.driver[0](t, x, y, z));
    }
    EXPECT_TRUE(e.uses_z());
    EXPECT_TRUE(e.uses_y());
    EXPECT_TRUE(e.uses_x());
}

TEST(Expression, ConstantsAndPrecedence) {
    const std::vector<double> y{2.0}, z{3.0};
    EXPECT_EQ(Expression::compile("0")(0, 0, y, z), 0.0);
    EXPECT_TRUE(Expression::compile("0").is_constant());
    EXPECT_EQ(Expression::compile("1 + 2 * 3")(0, 0, y, z), 7.0);
    EXPECT_EQ(Expression::compile("(1 + 2) * 3")(0, 0, y, z), 9.0);
    EXPECT_EQ(Expression::compile("8 / 4 / 2")(0, 0, y, z), 1.0);
    EXPECT_EQ(Expression::compile("2 - -3")(0, 0, y, z), 5.0);
    EXPECT_EQ(Expression::compile("1.5e2")(0, 0, y, z), 150.0);
    EXPECT_DOUBLE_EQ(Expression::compile("pi")(0, 0, y, z), M_PI);
    EXPECT_EQ(Expression::compile("y * z + t")(0.5, 0, y, z), 6.5);
}

TEST(Expression, Functions) {
    const std::vector<double> y{-0.5}, z{0.25};
    const double x = 0.7;
    EXPECT_DOUBLE_EQ(Expression::compile("exp(x)")(0, x, y, z), std::exp(x));
    EXPECT_DOUBLE_EQ(Expression::compile("log(x)")(0, x, y, z), std::log(x));
    EXPECT_DOUBLE_EQ(Expression::compile("sqrt(x)")(0, x, y, z), std::sqrt(x));
    EXPECT_DOUBLE_EQ(Expression::compile("abs(y1)")(0, x, y, z), 0.5);
    EXPECT_DOUBLE_EQ(Expression::compile("tanh(x)")(0, x, y, z), std::tanh(x));
    EXPECT_DOUBLE_EQ(Expression::compile("sin(x) + cos(x)")(0, x, y, z), std::sin(x) + std::cos(x));
    EXPECT_EQ(Expression::compile("min(y1, z11)")(0, x, y, z), -0.5);
    EXPECT_EQ(Expression::compile("max(y1, z11)")(0, x, y, z), 0.25);
}

TEST(Expression, IndexedVariablesInHigherDimensions) {
    const std::vector<double> y{1.0, 2.0, 3.0};
    const std::vector<double> z{1, 2, 3, 4, 5, 6};  // 3 x 2
    EXPECT_EQ(Expression::compile("y3", 3, 2)(0, 0, y, z), 3.0);
    EXPECT_EQ(Expression::compile("y_2", 3, 2)(0, 0, y, z), 2.0);
    EXPECT_EQ(Expression::compile("z32", 3, 2)(0, 0, y, z), 6.0);
    EXPECT_EQ(Expression::compile("z2_1", 3, 2)(0, 0, y, z), 3.0);
    EXPECT_EQ(Expression::compile("z_1_2", 3, 2)(0, 0, y, z), 2.0);
    EXPECT_EQ(Expression::compile("z2", 3, 1)(0, 0, y, z), 2.0);
    const auto e = Expression::compile("t + x", 3, 2);
    EXPECT_FALSE(e.uses_y());
    EXPECT_FALSE(e.uses_z());
    EXPECT_FALSE(e.is_constant());
}

TEST(Expression, ErrorsCarryLineAndColumn) {
    EXPECT_NE(syntax_message("x + q").find("line 1, column 5"), std::string::npos);
    EXPECT_NE(syntax_message("x +\n  foo").find("line 2, column 3"), std::string::npos);
    EXPECT_NE(syntax_message("x + q").find("unknown identifier 'q'"), std::string::npos);
    EXPECT_NE(syntax_message("(x + 1").find("expected ')'"), std::string::npos);
    EXPECT_NE(syntax_message("").find("empty"), std::string::npos);
    EXPECT_NE(syntax_message("x $ 2").find("unexpected '$'"), std::string::npos);
    EXPECT_NE(syntax_message("2x").find("malformed number"), std::string::npos);
    EXPECT_NE(syntax_message("x +").find("unexpected end"), std::string::npos);
    EXPECT_NE(syntax_message("min(x)").find("expected ','"), std::string::npos);
}

TEST(Expression, RejectsOutOfRangeIndices) {
    EXPECT_NE(syntax_message("y2").find("outside y1..y1"), std::string::npos);
    EXPECT_NE(syntax_message("z12", 2, 1).find("outside"), std::string::npos);
    EXPECT_NE(syntax_message("y0", 2, 1).find("outside"), std::string::npos);
    (void)syntax_message("y", 2, 1);
    (void)syntax_message("z", 1, 2);
}

TEST(Expression, RejectsExcessiveNesting) {
    std::string s = "x";
    for (int k = 0; k < 70; ++k) s = "1 + (" + s + ")";
    EXPECT_NE(syntax_message(s).find("nests too deeply"), std::string::npos);
}

}  // namespace
