#include <cmath>

#include <gtest/gtest.h>

#include "fbsde/errors.hpp"
#include "fbsde/quadrature.hpp"

namespace {

using fbsde::GaussHermite;

TEST(GaussHermite, WeightsSumToOne) {
    for (int q : {2, 3, 5, 7, 12}) {
        for (int dim : {1, 2, 3}) {
            const GaussHermite gh(q, dim);
            double s = 0.0;
            for (double w : gh.weights()) s += w;
            EXPECT_NEAR(s, 1.0, 1e-14) << q << "," << dim;
            EXPECT_EQ(gh.size(), static_cast<std::size_t>(std::pow(q, dim)));
        }
    }
}

TEST(GaussHermite, OddOrderContainsZeroNode) {
    for (int q : {3, 5, 7, 9}) {
        std::vector<double> x, w;
        GaussHermite::one_dimensional(q, x, w);
        bool zero = false;
        for (double v : x) zero = zero || v == 0.0;
        EXPECT_TRUE(zero) << q;
    }
}

// Standard normal moments: E xi^2 = 1, E xi^4 = 3, E xi^6 = 15.
TEST(GaussHermite, ReproducesNormalMoments) {
    const GaussHermite gh(7, 1);
    double m1 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t q = 0; q < gh.size(); ++q) {
        const double x = gh.node(q, 0), w = gh.weight(q);
        m1 += w * x;
        m2 += w * x * x;
        m4 += w * std::pow(x, 4);
        m6 += w * std::pow(x, 6);
    }
    EXPECT_NEAR(m1, 0.0, 1e-14);
    EXPECT_NEAR(m2, 1.0, 1e-13);
    EXPECT_NEAR(m4, 3.0, 1e-12);
    EXPECT_NEAR(m6, 15.0, 1e-11);
}

TEST(GaussHermite, TensorRuleFactorizes) {
    const GaussHermite gh(5, 2);
    double cross = 0, sq = 0;
    for (std::size_t q = 0; q < gh.size(); ++q) {
        cross += gh.weight(q) * gh.node(q, 0) * gh.node(q, 1);
        sq += gh.weight(q) * gh.node(q, 0) * gh.node(q, 0) * gh.node(q, 1) * gh.node(q, 1);
    }
    EXPECT_NEAR(cross, 0.0, 1e-14);
    EXPECT_NEAR(sq, 1.0, 1e-13);
}

TEST(GaussHermite, RejectsTooFewNodes) {
    EXPECT_THROW(GaussHermite(1, 1), fbsde::PreconditionError);
    EXPECT_THROW(GaussHermite(3, 0), fbsde::PreconditionError);
}

}  // namespace
