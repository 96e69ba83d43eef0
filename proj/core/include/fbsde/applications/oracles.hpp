#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/applications/builtins.hpp"

namespace fbsde::apps {

/// Named reference curves on a uniform time grid over [0, T].
struct ReferenceSolution {
    std::string name;
    std::vector<double> times;
    std::map<std::string, std::vector<double>> curves;
    /// Affine field u(t, x) = slope(t) x + offset(t), named curves.
    std::string slope_curve;
    std::string offset_curve;

    /// Linear interpolation of a named curve.
    [[nodiscard]] double at(const std::string& curve, double t) const;
    /// slope(t) x + offset(t).
    [[nodiscard]] double field(double t, double x) const;
    [[nodiscard]] nlohmann::json to_json(std::size_t stride = 1) const;
};

inline constexpr int kOracleSteps = 20000;

/// Affine ansatz Y = P X + phi: P' = P^2 + P - 1, P(T) = 1;
/// phi' = (1 + P) phi + P sigma_t, phi(T) = 0; Z = P sigma. Curves P, phi, Z.
[[nodiscard]] ReferenceSolution example36_oracle(const Example36Params& p, int steps = kOracleSteps);

/// Riccati pair for the adjoint Y = P X + q plus the value scalar r:
///   P' = (B^2/F) P^2 - 2 A P - E, P(T) = G,
///   q' = -A q - C + P B (B q + D) / F, q(T) = g1,
///   r' = (B q + D)^2 / (2F) - sigma^2 P / 2, r(T) = 0.
/// The optimal cost from (0, x0) is P_0 x0^2 / 2 + q_0 x0 + r_0.
[[nodiscard]] ReferenceSolution lq_oracle(const LQControlParams& p, int steps = kOracleSteps);
[[nodiscard]] double lq_value(const ReferenceSolution& ref, double x0);

/// g = -alpha y, xi = c: Y_t = c cosh(sqrt(alpha) t) / cosh(sqrt(alpha) T),
/// field slope sqrt(alpha) tanh(sqrt(alpha)(T - t)) and offset
/// c / cosh(sqrt(alpha)(T - t)). Curves Y, P, phi.
[[nodiscard]] ReferenceSolution delayed_linear_oracle(double alpha, double c, double T, int steps = kOracleSteps);

/// Names with a closed-form reference.
[[nodiscard]] const std::vector<std::string>& oracle_names();

/// Dispatch by name with JSON parameters as for build_builtin; the delayed
/// oracle is named delayed_bsde_linear. Other names raise
/// Error("no_closed_form").
[[nodiscard]] ReferenceSolution oracle(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

}  // namespace fbsde::apps
