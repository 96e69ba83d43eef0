#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fbsde/envelope.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/quadrature.hpp"

namespace fbsde {

/// Uniform space grid plus time and quadrature resolution.
///
/// `time_steps` is the number of Euler steps over the whole horizon [0, T];
/// a sub-interval of length l receives ceil(time_steps * l / T) of them.
struct GridSpec {
    double x_min = -1.0;
    double x_max = 1.0;
    int Nx = 401;
    int time_steps = 400;
    int quadrature_order = 7;

    [[nodiscard]] double dx() const { return (x_max - x_min) / (Nx - 1); }
    [[nodiscard]] double node(std::size_t m) const {
        return m + 1 == static_cast<std::size_t>(Nx) ? x_max : x_min + dx() * static_cast<double>(m);
    }
    [[nodiscard]] std::vector<double> nodes() const;
    /// Throws PreconditionError unless x_min < x_max, Nx >= 2, time_steps >= 1
    /// and quadrature_order >= 2.
    void validate() const;
};

/// Grid centred at x0 with half-width
/// R = (1 + |x0| + C) e^{KT} max(3 sqrt(int_0^T |sigma_t|^2 dt), 1),
/// where C is the envelope maximum and sigma is sampled along (t, x0, h(x0)).
[[nodiscard]] GridSpec default_grid(const FBSDEProblem& p, const LipschitzEnvelope& env, int Nx = 401,
                                    int time_steps = 400, int quadrature_order = 7);

/// Read-only view of one time layer of a field on the shared grid.
struct LayerView {
    const GridSpec* grid = nullptr;
    int n = 1;
    /// Nx x n values.
    std::span<const double> values;
    /// Per-component slope caps used to clamp extrapolated slopes to [0, cap].
    std::span<const double> slope_cap;
};

/// Piecewise-linear interpolation of a layer. Outside [x_min, x_max] the
/// boundary slope is clamped to [0, cap_i] and continued linearly.
void evaluate_layer(const LayerView& layer, double x, std::span<double> out);

/// Piecewise-linear interpolation of a per-node block of `width` entries
/// (e.g. the n x d Z-field), held constant outside the grid.
void evaluate_block(const GridSpec& grid, std::span<const double> values, std::size_t width, double x,
                    std::span<double> out);

/// Inputs to a single backward time step.
struct StepInputs {
    const FBSDEProblem* problem = nullptr;
    const GridSpec* grid = nullptr;
    const GaussHermite* quadrature = nullptr;
    double t = 0.0;
    double dt = 0.0;
    LayerView u_next;
    /// Current Picard guess at time t: Nx x n values and Nx x n x d Z-values.
    std::span<const double> u_guess;
    std::span<const double> v_guess;
};

struct StepOutput {
    std::vector<double> u;
    std::vector<double> v;
    std::size_t growth_violations = 0;
};

/// One step of the quadrature scheme at every grid node x:
///   Xq  = x + b(t, x, u_guess, v_guess) dt + sigma sqrt(dt) xi_q,
///   v^i = sum_q w_q u^i_next(Xq) xi_q / sqrt(dt),
///   Y   = sum_q w_q u_next(Xq) + f(t, x, Y, v) dt   (damped fixed point).
/// Writes Nx x n values to u_out and Nx x n x d values to v_out.
/// Returns the number of clipped quadratic-growth driver evaluations.
std::size_t backward_step(const StepInputs& in, std::span<double> u_out, std::span<double> v_out);
[[nodiscard]] StepOutput backward_step(const StepInputs& in);

inline constexpr double kInnerTolerance = 1e-12;
inline constexpr int kInnerMaxIterations = 50;

/// Solution of the coupled system on one sub-interval [start, end].
struct FieldSlice {
    double start = 0.0;
    double end = 0.0;
    int n = 1;
    int d = 1;
    std::size_t Nx = 0;
    std::vector<double> times;
    /// (steps+1) x Nx x n.
    std::vector<double> u;
    /// (steps+1) x Nx x n x d.
    std::vector<double> v;
    /// (steps+1) x n envelope values at the time nodes.
    std::vector<double> slope_cap;

    int picard_passes = 0;
    bool converged = false;
    /// Sup-norm change between successive passes.
    std::vector<double> corrections;
    /// corrections[k] / corrections[k-1].
    std::vector<double> contraction_ratios;
    /// Largest adjacent-node slope of the terminal layer.
    double terminal_slope = 0.0;
    std::size_t growth_violations = 0;

    [[nodiscard]] std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] std::size_t layer_size() const { return Nx * static_cast<std::size_t>(n); }
    [[nodiscard]] std::size_t z_layer_size() const { return Nx * static_cast<std::size_t>(n * d); }
    [[nodiscard]] std::span<const double> u_layer(std::size_t j) const {
        return {u.data() + j * layer_size(), layer_size()};
    }
    [[nodiscard]] std::span<const double> v_layer(std::size_t j) const {
        return {v.data() + j * z_layer_size(), z_layer_size()};
    }
    [[nodiscard]] std::span<const double> cap_layer(std::size_t j) const {
        return {slope_cap.data() + j * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }
    [[nodiscard]] double max_contraction() const;
};

enum class InitialGuess {
    /// Terminal field frozen in time.
    frozen_terminal,
    /// u = 0, v = 0 everywhere except at the terminal layer.
    zero,
};

struct PicardOptions {
    double tolerance = 1e-9;
    int max_passes = 100;
    InitialGuess initial_guess = InitialGuess::frozen_terminal;
    /// When set, stop early once two consecutive ratios reach this value.
    /// Used by the delta probe; the slice is then returned unconverged.
    std::optional<double> abandon_ratio;
};

/// Picard iteration over the forward-backward coupling on [start, end] with
/// `steps` time steps and terminal layer `terminal` (Nx x n values on the
/// grid). Each pass sweeps backward_step over all time nodes using the
/// previous pass as guess. Throws ConvergenceError("picard_divergence") when
/// three consecutive contraction ratios are >= 1.
[[nodiscard]] FieldSlice picard_solve_subinterval(const FBSDEProblem& p, std::span<const double> terminal, double start,
                                                  double end, std::size_t steps, const GridSpec& grid,
                                                  const LipschitzEnvelope& env, const PicardOptions& options = {});

/// Samples h on the grid.
[[nodiscard]] std::vector<double> sample_terminal(const FBSDEProblem& p, const GridSpec& grid);

/// Linear interpolation of a slice in t and x (slope-clamped extrapolation in
/// x). Throws PreconditionError when t lies outside [start, end].
[[nodiscard]] std::vector<double> interpolate_field(const FieldSlice& slice, const GridSpec& grid, double t, double x);

/// Number of time steps for a sub-interval of the given length.
[[nodiscard]] std::size_t steps_for_length(const GridSpec& grid, double T, double length);

}  // namespace fbsde
