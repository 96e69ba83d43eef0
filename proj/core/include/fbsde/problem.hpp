#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fbsde {

/// Growth regime of the backward driver in Z.
enum class GrowthClass { lipschitz, quadratic, superquadratic };

[[nodiscard]] std::string to_string(GrowthClass g);
[[nodiscard]] std::optional<GrowthClass> growth_class_from_string(std::string_view s);

/// Forward drift b(t, x, y, z). `z` is the full n x d matrix, row-major; it
/// is only meaningful when `FBSDEProblem::drift_uses_z` is set.
using DriftFn = std::function<double(double t, double x, std::span<const double> y, std::span<const double> z)>;

/// Forward diffusion, written into `out` (length d). `x` and `y` are only
/// meaningful when `FBSDEProblem::diffusion_uses_state` is set.
using DiffusionFn = std::function<void(double t, double x, std::span<const double> y, std::span<double> out)>;

/// One row f^i(t, x, y, z) of the driver. Receives the full n x d matrix z;
/// the diagonal structure requires that only row i is read.
using DriverFn = std::function<double(double t, double x, std::span<const double> y, std::span<const double> z)>;

/// Terminal map h(x), written into `out` (length n).
using TerminalFn = std::function<void(double x, std::span<double> out)>;

/// A coupled forward-backward system with a scalar forward state and an
/// n-dimensional backward component driven by a d-dimensional Brownian motion.
struct FBSDEProblem {
    std::string name = "custom";
    int n = 1;
    int d = 1;
    int forward_dim = 1;
    double T = 1.0;
    double x0 = 0.0;

    DriftFn drift;
    DiffusionFn diffusion;
    std::vector<DriverFn> driver;
    TerminalFn terminal;

    GrowthClass growth_class = GrowthClass::lipschitz;
    bool drift_uses_z = false;
    bool diffusion_uses_state = false;

    /// Declared Lipschitz / growth constant.
    double K = 0.0;
    /// Declared bound on |h|; required for the quadratic class.
    std::optional<double> lambda;

    [[nodiscard]] std::size_t z_size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(d); }

    // Convenience evaluators. They do not check finiteness; see driver_row.
    [[nodiscard]] double eval_drift(double t, double x, std::span<const double> y, std::span<const double> z) const {
        return drift(t, x, y, z);
    }
    void eval_diffusion(double t, double x, std::span<const double> y, std::span<double> out) const {
        diffusion(t, x, y, out);
    }
    void eval_terminal(double x, std::span<double> out) const { terminal(x, out); }
};

/// Simulated trajectory of (X, Y, Z) on a time grid.
struct SolutionPath {
    std::uint64_t path_id = 0;
    std::uint64_t seed = 0;
    std::vector<double> t;
    std::vector<double> X;
    /// (N+1) x n, row-major by time node.
    std::vector<double> Y;
    /// (N+1) x n x d, row-major by time node.
    std::vector<double> Z;
    /// N x d Brownian increments.
    std::vector<double> dW;
};

struct Violation {
    std::string code;
    std::string message;
};

/// Structural audit of a problem. An empty list means the problem is well
/// formed: dimensions and flags are admissible, all handles are present, and
/// probes confirm the diagonal structure of the driver together with the
/// declared (in)dependence of drift on z and diffusion on (x, y).
[[nodiscard]] std::vector<Violation> validate_problem(const FBSDEProblem& p);

/// f^i(t, x, y, z_row) for a 0-based row index. The row is embedded into an
/// otherwise zero n x d matrix. Throws CoefficientError on non-finite output
/// and PreconditionError on a bad index or shape.
[[nodiscard]] double driver_row(const FBSDEProblem& p, int i, double t, double x, std::span<const double> y,
                                std::span<const double> z_row);

/// Throws CoefficientError naming `what` and the evaluation point when v is
/// not finite.
void require_finite(double v, const char* what, double t, double x);

}  // namespace fbsde
