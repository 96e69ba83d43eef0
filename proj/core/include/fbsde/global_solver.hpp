#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsde/envelope.hpp"
#include "fbsde/local_solver.hpp"
#include "fbsde/problem.hpp"

namespace fbsde {

/// Decoupling field on [0, T], stitched from per-sub-interval slices that
/// share one space grid. Slices are ordered by increasing time and the
/// initial layer of slice k+1 is the terminal layer of slice k.
struct DecouplingField {
    Partition partition;
    std::vector<FieldSlice> slices;
    LipschitzEnvelope envelope;
    GridSpec grid;
    DeltaSelection delta;
    int n = 1;
    int d = 1;

    /// Fine time grid (union of slice time nodes, junctions once).
    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] std::size_t time_nodes() const { return times_.size(); }
    /// u-layer at fine node g; a junction resolves to the later slice, whose
    /// initial layer carries the scheme's Z-values.
    [[nodiscard]] std::span<const double> u_layer(std::size_t g) const;
    [[nodiscard]] std::span<const double> v_layer(std::size_t g) const;
    [[nodiscard]] std::span<const double> cap_layer(std::size_t g) const;
    [[nodiscard]] LayerView layer(std::size_t g) const;

    /// u(t, x) by linear interpolation in t and slope-clamped linear
    /// interpolation in x. Throws PreconditionError outside [0, T].
    [[nodiscard]] std::vector<double> value(double t, double x) const;
    /// Z-field at fine node g and position x (n x d, row-major).
    void z_at(std::size_t g, double x, std::span<double> out) const;

    /// Rebuilds the fine-node index; called after slices are assigned.
    void index();

private:
    std::vector<double> times_;
    std::vector<std::pair<std::size_t, std::size_t>> lookup_;
};

struct Diagnostics {
    double max_backward_residual = 0.0;
    double mean_path_residual = 0.0;
    double max_abs_y = 0.0;
    double sandwich_margin = 0.0;
    double bmo_surrogate = 0.0;
    std::size_t growth_violations = 0;
    std::size_t escaped_paths = 0;
    std::size_t simulated_paths = 0;
    bool escape_flag = false;
    int picard_passes = 0;
    int delta_retries = 0;
    double delta = 0.0;
    std::size_t subintervals = 0;
    double max_abs_u = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct BuildOptions {
    PicardOptions picard;
    /// Run (M1)-(M3) before solving and refuse on failure.
    bool check_conditions = true;
    /// Solve anyway when the pre-check fails; a warning is recorded.
    bool override_conditions = false;
    int condition_samples = 2000;
    std::uint64_t condition_seed = 7;
    /// Steps of the envelope RK4 integration.
    int envelope_steps = 1000;
};

/// Envelope, delta selection, partition and backward stitching. The probe for
/// delta is a Picard solve on [T - delta, T]; when selected, its slice is
/// reused as the last sub-interval (using the configured initial guess).
/// A sub-interval whose Picard solve fails is retried once with half the
/// step; a second failure propagates.
[[nodiscard]] std::pair<DecouplingField, Diagnostics> build_decoupling_field(const FBSDEProblem& p,
                                                                           const GridSpec& grid,
                                                                           const BuildOptions& options = {});

/// Same, with an envelope computed by the caller (must match p's K, n, T).
[[nodiscard]] std::pair<DecouplingField, Diagnostics> build_decoupling_field(const FBSDEProblem& p,
                                                                           const GridSpec& grid,
                                                                           const LipschitzEnvelope& env,
                                                                           const BuildOptions& options = {});

struct SimulationResult {
    std::vector<SolutionPath> paths;
    Diagnostics diagnostics;
};

/// Euler-Maruyama on the field's fine grid, Y_j = u(t_j, X_j), Z_j read from
/// the stored Z-field. Path p draws from CounterRng(seed, p). A path counts as
/// escaped when it leaves [x_min, x_max]; the flag is raised above 1%.
[[nodiscard]] SimulationResult simulate_forward(const FBSDEProblem& p, const DecouplingField& field,
                                                std::size_t n_paths, std::uint64_t seed);

struct SandwichWitness {
    double t = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    int component = 0;
    double slope = 0.0;
    double bound = 0.0;
};

struct SandwichReport {
    bool pass = true;
    double min_slope = 0.0;
    double max_slope = 0.0;
    /// min over nodes of min(slope, ybar_t - slope); negative on violation.
    double margin = 0.0;
    std::size_t violating_nodes = 0;
    SandwichWitness worst;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Checks eps-slack bounds -eps <= quotient <= ybar_t + eps at every time
/// node. Adjacent-node quotients suffice: for a piecewise-linear field every
/// quotient between distinct nodes is an average of adjacent ones.
[[nodiscard]] SandwichReport verify_sandwich(const DecouplingField& field, const LipschitzEnvelope& env,
                                             double eps_slope);

/// Grid surrogate of the BMO norm of int Z dW: beta_j(x) = E[beta_{j+1}(Xq)] +
/// |v_j(x)|^2 dt along the scheme's quadrature transitions, reported as the
/// maximum over time nodes of the grid average of beta_j.
[[nodiscard]] double bmo_surrogate(const FBSDEProblem& p, const DecouplingField& field);

/// CSV columns t, x, u_1..u_n, v_11..v_nd, one row per (fine time node, x node).
void write_field_csv(std::ostream& os, const DecouplingField& field);
/// CSV columns path_id, t, X, Y_1..Y_n, Z_11..Z_nd.
void write_paths_csv(std::ostream& os, const std::vector<SolutionPath>& paths, int n, int d);
/// Shortest round-trip formatting with 17 significant digits.
[[nodiscard]] std::string format_double(double v);

}  // namespace fbsde
