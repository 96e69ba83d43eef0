#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/problem.hpp"

namespace fbsde {

/// Evaluation point (x, y, z) with y in R^n and z in R^{n x d} row-major.
struct Theta {
    double x = 0.0;
    std::vector<double> y;
    std::vector<double> z;
};

struct SamplePair {
    double t = 0.0;
    Theta a;
    Theta b;
};

/// Deterministic map from sample index to a point pair.
using PairSampler = std::function<SamplePair(std::uint64_t index)>;

/// Uniform sampling box. With probability `tie_probability` a coordinate of
/// the second point copies the first, exercising the 0/0 convention.
struct SampleBox {
    double t_min = 0.0;
    double t_max = 1.0;
    double x_min = -5.0;
    double x_max = 5.0;
    double y_min = -5.0;
    double y_max = 5.0;
    double z_min = -5.0;
    double z_max = 5.0;
    double tie_probability = 0.05;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Box over [0, T] with the default ranges.
[[nodiscard]] SampleBox default_box(const FBSDEProblem& p);

[[nodiscard]] PairSampler box_sampler(const FBSDEProblem& p, const SampleBox& box, std::uint64_t seed);

/// Difference quotients in telescoping order. Index conventions:
/// f2[i * n + j], f3[i * d + k], b3[k] (n = 1), sigma2[k * n + j].
struct QuotientSet {
    std::vector<double> h1;
    double b1 = 0.0;
    std::vector<double> b2;
    std::vector<double> b3;
    std::vector<double> f1;
    std::vector<double> f2;
    std::vector<double> f3;
    std::vector<double> sigma1;
    std::vector<double> sigma2;
};

/// Quotient of two evaluations; 0 when the coordinates coincide.
[[nodiscard]] inline double quotient(double num, double a, double b) { return a == b ? 0.0 : num / (a - b); }

/// All quotients at time t for points a = theta_1 and b = theta_2:
///   x-quotients at (y_1, z_1); y-quotients at (x_2, z_1) moving y_1 -> y_2
///   one coordinate at a time in index order; z-quotients at (x_2, y_2)
///   moving row i (or the single row for b) from z_1 to z_2 likewise.
[[nodiscard]] QuotientSet difference_quotients(const FBSDEProblem& p, double t, const Theta& a, const Theta& b);

enum class Verdict { pass, fail, inconclusive };
[[nodiscard]] std::string to_string(Verdict v);

struct Witness {
    double t = 0.0;
    Theta a;
    Theta b;
    /// Violating value (excess over the bound, or the offending quotient).
    double value = 0.0;
    std::string detail;
};

struct ConditionReport {
    std::string id;
    Verdict verdict = Verdict::pass;
    /// Whether the problem's declared class makes this condition mandatory.
    bool required = false;
    std::optional<Witness> witness;
    double lipschitz_estimate = 0.0;
    double growth_estimate = 0.0;
    std::size_t samples = 0;
    std::size_t violations = 0;
    std::string note;

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] nlohmann::json to_json(const std::vector<ConditionReport>& reports);

/// Relative tolerance for Lipschitz and growth bounds.
inline constexpr double kStructuralTolerance = 1e-8;
/// Absolute tolerance for sign conditions.
inline constexpr double kMonotonicityTolerance = 1e-10;

/// (H), (A1), (A2), (A3), (B1) and, for n = 1, (B2), over N sampled pairs.
[[nodiscard]] std::vector<ConditionReport> check_structural(const FBSDEProblem& p, const PairSampler& sampler,
                                                            std::size_t N);

enum class Monotonicity { M1, M2, M3, M4, M5 };
[[nodiscard]] std::string to_string(Monotonicity m);
[[nodiscard]] std::optional<Monotonicity> monotonicity_from_string(std::string_view s);

/// Sign conditions on the quotients. M5 requires n = 1 (PreconditionError).
/// M4 and M5 are evaluated whatever the extension flags; when sigma ignores
/// (x, y) or b ignores z the corresponding quotients vanish.
[[nodiscard]] std::vector<ConditionReport> check_monotonicity(const FBSDEProblem& p,
                                                              const std::vector<Monotonicity>& which,
                                                              const PairSampler& sampler, std::size_t N);

/// G[-dx^2 - dy^2 + dx dy + dx dz].
[[nodiscard]] double peng_wu_value(double G, double dx, double dy, double dz);

/// Difference vectors (dx, dy, dz) drawn uniformly from the box ranges
/// shifted to be centred at 0. Fails when the form takes both signs, or when
/// G = 0 (the form vanishes identically).
[[nodiscard]] ConditionReport check_peng_wu(double G, const SampleBox& box, std::size_t N, std::uint64_t seed = 1);

}  // namespace fbsde
