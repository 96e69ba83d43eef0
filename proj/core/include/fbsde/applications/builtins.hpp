#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/problem.hpp"

namespace fbsde::apps {

using TimeFn = std::function<double(double)>;

[[nodiscard]] TimeFn constant(double v);

/// Linear system with drift -y, driver x - y - z and terminal x.
struct Example36Params {
    TimeFn sigma = constant(1.0);
    double x0 = 1.0;
    double T = 1.0;
};

/// Linear-quadratic control: dX = (A X + B u) dt + sigma dW with running cost
/// C X + D u + E X^2 / 2 + F u^2 / 2 and terminal slope g_x(x) = G x + g1.
struct LQControlParams {
    TimeFn A = constant(1.0);
    TimeFn B = constant(1.0);
    TimeFn C = constant(0.0);
    TimeFn D = constant(0.0);
    TimeFn E = constant(1.0);
    TimeFn F = constant(1.0);
    TimeFn sigma = constant(1.0);
    double G = 1.0;
    double g1 = 0.0;
    double x0 = 1.0;
    double T = 1.0;
    /// Declared K; when <= 0 a bound is derived from the coefficients.
    double K = 0.0;
};

/// n-player linear-quadratic game on a common state:
///   dX = (A X + sum_i b2_i alpha^i) dt + sigma dW,
///   f^i(t, x, alpha^i) = E_i x^2 / 2 + C_i x + F_i (alpha^i)^2 / 2 + D_i alpha^i,
///   g^i(x) = G_i x^2 / 2 + g1_i x.
/// Each F_i > 0 is the convexity modulus in alpha^i.
struct GameParams {
    int players = 2;
    double A = 0.0;
    double sigma = 1.0;
    double x0 = 1.0;
    double T = 1.0;
    std::vector<double> b2{1.0, 1.0};
    std::vector<double> E{1.0, 0.5};
    std::vector<double> C{0.0, 0.0};
    std::vector<double> F{1.0, 2.0};
    std::vector<double> D{0.0, 0.0};
    std::vector<double> G{1.0, 0.5};
    std::vector<double> g1{0.0, 0.0};
    double K = 0.0;
};

/// Game primitives; all player indices are 0-based.
class GameModel {
public:
    explicit GameModel(GameParams params);

    [[nodiscard]] const GameParams& params() const { return p_; }
    [[nodiscard]] int players() const { return p_.players; }

    [[nodiscard]] double drift(double t, double x, std::span<const double> alpha) const;
    [[nodiscard]] double running_cost(int i, double t, double x, std::span<const double> alpha) const;
    [[nodiscard]] double terminal_cost(int i, double x) const;
    [[nodiscard]] double terminal_slope(int i, double x) const;
    /// H^i(t, x, y^i, alpha) = b(t, x, alpha) y^i + f^i(t, x, alpha).
    [[nodiscard]] double hamiltonian(int i, double t, double x, double yi, std::span<const double> alpha) const;
    /// b_x y^i + f^i_x.
    [[nodiscard]] double hamiltonian_x(int i, double t, double x, double yi, std::span<const double> alpha) const;
    /// Unique zero of d H^i / d alpha^i: -(b2_i y^i + D_i) / F_i.
    [[nodiscard]] double minimizer(int i, double t, double x, double yi) const;
    void minimizers(double t, double x, std::span<const double> y, std::span<double> out) const;

private:
    GameParams p_;
};

/// Time-delayed BSDE Y_t = xi + int_t^T g(s, int_0^s Y_r dr, Z_s) ds - int_t^T Z dW,
/// turned into an FBSDE with b(y) = -y, x0 = 0, f(t, x, y, z) = g(t, -x, z).
struct DelayedBSDESpec {
    std::function<double(double t, double y, std::span<const double> z)> g;
    /// Constant terminal value.
    double xi = 1.0;
    double T = 1.0;
    int d = 1;
    GrowthClass growth_class = GrowthClass::lipschitz;
    double K = 1.0;
};

/// g(t, y, z) = -alpha y.
[[nodiscard]] DelayedBSDESpec linear_delayed(double alpha, double xi, double T);

/// Throw PreconditionError when the parameters violate their invariants.
void validate(const Example36Params& p);
void validate(const LQControlParams& p);
void validate(const GameParams& p);
void validate(const DelayedBSDESpec& p);

[[nodiscard]] FBSDEProblem make_example36(const Example36Params& p = {});
[[nodiscard]] FBSDEProblem make_lq_control(const LQControlParams& p = {});
[[nodiscard]] FBSDEProblem make_lq_game(const GameParams& p = {});
[[nodiscard]] FBSDEProblem make_delayed_bsde(const DelayedBSDESpec& p);

/// Conservative K for the LQ adjoint system, sampled over [0, T].
[[nodiscard]] double lq_constant(const LQControlParams& p);
[[nodiscard]] double game_constant(const GameParams& p);

/// Names accepted by build_builtin.
[[nodiscard]] const std::vector<std::string>& builtin_names();

/// Builds a built-in from JSON parameters (constant coefficients). Missing
/// keys take the defaults above. Unknown names raise Error("unknown_builtin"),
/// bad parameters raise PreconditionError.
[[nodiscard]] FBSDEProblem build_builtin(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

[[nodiscard]] Example36Params example36_from_json(const nlohmann::json& j);
[[nodiscard]] LQControlParams lq_control_from_json(const nlohmann::json& j);
[[nodiscard]] GameParams game_from_json(const nlohmann::json& j);
/// Keys: alpha (g = -alpha y), xi, T.
[[nodiscard]] DelayedBSDESpec delayed_from_json(const nlohmann::json& j);

}  // namespace fbsde::apps
