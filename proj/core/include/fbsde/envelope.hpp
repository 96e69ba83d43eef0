#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fbsde {

struct FBSDEProblem;

/// Backward solution of the slope-bound ODE
///
///     ybar_t = H + int_t^T (A |ybar_s| + K |ybar_s| + B) ds,
///
/// with every entry of H, B and A equal to K. It dominates the spatial slope
/// of the decoupling field component-wise.
class LipschitzEnvelope {
public:
    LipschitzEnvelope() = default;
    LipschitzEnvelope(double K, int n, double T, std::vector<double> times, std::vector<double> values);

    [[nodiscard]] double K() const { return K_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] double T() const { return T_; }
    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    /// (M+1) x n, row-major by time node.
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double value(std::size_t node, int component) const {
        return values_[node * static_cast<std::size_t>(n_) + static_cast<std::size_t>(component)];
    }

    /// nK(T+1)e^{(n+1)KT}.
    [[nodiscard]] double analytic_cap() const;
    /// Largest entry over the grid; the uniform slope bound C.
    [[nodiscard]] double max_value() const;
    /// ybar_t for arbitrary t in [0, T], by cubic Hermite interpolation using
    /// the ODE right-hand side as the derivative.
    [[nodiscard]] double at(double t, int component) const;

private:
    [[nodiscard]] double rhs(std::span<const double> y, int component) const;

    double K_ = 0.0;
    int n_ = 1;
    double T_ = 0.0;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Integrates the envelope backward from T with classical RK4 using `steps`
/// uniform steps. Throws OverflowError when the analytic cap is not finite.
[[nodiscard]] LipschitzEnvelope integrate_envelope(double K, int n, double T, int steps);

/// Closed form of the envelope: every component equals
/// (K + 1/(n+1)) e^{(n+1)K(T-t)} - 1/(n+1).
[[nodiscard]] double envelope_closed_form(double K, int n, double T, double t);

struct Partition {
    std::vector<double> breakpoints;
    double delta = 0.0;

    [[nodiscard]] std::size_t intervals() const { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }
    [[nodiscard]] double mesh() const;
};

/// Uniform partition of [0, T] into ceil(T / delta) intervals.
[[nodiscard]] Partition make_partition(double T, double delta);

/// Outcome of one probe on [T - delta, T]. `contraction` is the largest ratio
/// between successive Picard corrections; +inf marks a failed solve.
struct ProbeResult {
    double contraction = 0.0;
    int passes = 0;
};

/// probe(delta, terminal_lipschitz) runs a local Picard solve of length delta.
using DeltaProbe = std::function<ProbeResult(double delta, double terminal_lipschitz)>;

struct DeltaSelection {
    double delta = 0.0;
    int rung = 0;
    ProbeResult probe;
};

inline constexpr int kDeltaLadderCap = 20;
inline constexpr double kContractionThreshold = 0.9;

/// Walks the ladder delta_k = T / 2^k, k = 0..20, and returns the first rung
/// whose probe contracts with ratio < 0.9. The envelope maximum is passed to
/// the probe as the admissible terminal slope. Throws ConvergenceError when no
/// rung contracts.
[[nodiscard]] DeltaSelection select_delta(const FBSDEProblem& p, const LipschitzEnvelope& env, const DeltaProbe& probe);

}  // namespace fbsde
