#include "fbsde/global_solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "fbsde/conditions.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/quadrature.hpp"
#include "fbsde/random.hpp"

namespace fbsde {

void DecouplingField::index() {
    times_.clear();
    lookup_.clear();
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const auto& s = slices[k];
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            if (j == 0 && !times_.empty()) {
                // Junction: the later slice owns the node.
                lookup_.back() = {k, 0};
                continue;
            }
            times_.push_back(s.times[j]);
            lookup_.emplace_back(k, j);
        }
    }
}

std::span<const double> DecouplingField::u_layer(std::size_t g) const {
    const auto [k, j] = lookup_.at(g);
    return slices[k].u_layer(j);
}

std::span<const double> DecouplingField::v_layer(std::size_t g) const {
    const auto [k, j] = lookup_.at(g);
    return slices[k].v_layer(j);
}

std::span<const double> DecouplingField::cap_layer(std::size_t g) const {
    const auto [k, j] = lookup_.at(g);
    return slices[k].cap_layer(j);
}

LayerView DecouplingField::layer(std::size_t g) const { return LayerView{&grid, n, u_layer(g), cap_layer(g)}; }

std::vector<double> DecouplingField::value(double t, double x) const {
    if (times_.empty() || !(t >= times_.front() && t <= times_.back())) {
        std::ostringstream os;
        os << "decoupling field queried at t=" << t << " outside its time range";
        throw PreconditionError(os.str());
    }
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> lo(nn), hi(nn);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    auto g1 = static_cast<std::size_t>(std::distance(times_.begin(), it));
    if (times_.size() == 1) {
        evaluate_layer(layer(0), x, lo);
        return lo;
    }
    g1 = std::clamp<std::size_t>(g1, 1, times_.size() - 1);
    const std::size_t g0 = g1 - 1;
    const double w = (t - times_[g0]) / (times_[g1] - times_[g0]);
    evaluate_layer(layer(g0), x, lo);
    if (w == 0.0) return lo;
    evaluate_layer(layer(g1), x, hi);
    if (w == 1.0) return hi;
    for (std::size_t i = 0; i < nn; ++i) lo[i] += w * (hi[i] - lo[i]);
    return lo;
}

void DecouplingField::z_at(std::size_t g, double x, std::span<double> out) const {
    evaluate_block(grid, v_layer(g), static_cast<std::size_t>(n * d), x, out);
}

nlohmann::json Diagnostics::to_json() const {
    return {{"max_backward_residual", max_backward_residual},
            {"mean_path_residual", mean_path_residual},
            {"max_abs_y", max_abs_y},
            {"max_abs_u", max_abs_u},
            {"sandwich_margin", sandwich_margin},
            {"bmo_surrogate", bmo_surrogate},
            {"growth_violations", growth_violations},
            {"escaped_paths", escaped_paths},
            {"simulated_paths", simulated_paths},
            {"escape_flag", escape_flag},
            {"picard_passes", picard_passes},
            {"delta_retries", delta_retries},
            {"delta", delta},
            {"subintervals", subintervals},
            {"warnings", warnings}};
}

nlohmann::json SandwichReport::to_json() const {
    return {{"pass", pass},
            {"min_slope", min_slope},
            {"max_slope", max_slope},
            {"margin", margin},
            {"violating_nodes", violating_nodes},
            {"worst",
             {{"t", worst.t},
              {"x1", worst.x1},
              {"x2", worst.x2},
              {"component", worst.component + 1},
              {"slope", worst.slope},
              {"bound", worst.bound}}}};
}

namespace {

void precheck(const FBSDEProblem& p, const GridSpec& grid, const BuildOptions& options, Diagnostics& diag) {
    SampleBox box = default_box(p);
    box.x_min = grid.x_min;
    box.x_max = grid.x_max;
    const auto reports = check_monotonicity(p, {Monotonicity::M1, Monotonicity::M2, Monotonicity::M3},
                                            box_sampler(p, box, options.condition_seed),
                                            static_cast<std::size_t>(std::max(options.condition_samples, 1)));
    std::string failed;
    for (const auto& r : reports) {
        if (r.verdict == Verdict::fail) failed += (failed.empty() ? "" : ", ") + r.id;
    }
    if (failed.empty()) return;
    if (!options.override_conditions) {
        throw Error("condition_check_failed", "monotonicity pre-check failed for " + failed);
    }
    diag.warnings.push_back("monotonicity pre-check failed for " + failed + "; solving under override");
}

FieldSlice solve_once(const FBSDEProblem& p, std::span<const double> terminal, double s, double e,
                      const GridSpec& grid, const LipschitzEnvelope& env, const PicardOptions& opts) {
    FieldSlice slice = picard_solve_subinterval(p, terminal, s, e, steps_for_length(grid, p.T, e - s), grid, env, opts);
    if (!slice.converged) {
        std::ostringstream os;
        os << "Picard iteration on [" << s << ", " << e << "] did not reach tolerance " << opts.tolerance << " in "
           << opts.max_passes << " passes (last correction "
           << (slice.corrections.empty() ? 0.0 : slice.corrections.back()) << ")";
        throw ConvergenceError("picard_no_convergence", os.str());
    }
    return slice;
}

}  // namespace

std::pair<DecouplingField, Diagnostics> build_decoupling_field(const FBSDEProblem& p, const GridSpec& grid,
                                                             const BuildOptions& options) {
    if (const auto v = validate_problem(p); !v.empty()) {
        std::string msg = "problem is invalid:";
        for (const auto& e : v) msg += " [" + e.code + "] " + e.message + ";";
        throw PreconditionError(msg);
    }
    return build_decoupling_field(p, grid, integrate_envelope(p.K, p.n, p.T, options.envelope_steps), options);
}

std::pair<DecouplingField, Diagnostics> build_decoupling_field(const FBSDEProblem& p, const GridSpec& grid,
                                                             const LipschitzEnvelope& env,
                                                             const BuildOptions& options) {
    if (const auto v = validate_problem(p); !v.empty()) {
        std::string msg = "problem is invalid:";
        for (const auto& e : v) msg += " [" + e.code + "] " + e.message + ";";
        throw PreconditionError(msg);
    }
    grid.validate();
    Diagnostics diag;
    if (options.check_conditions) precheck(p, grid, options, diag);

    const std::vector<double> terminal = sample_terminal(p, grid);

    // Delta probe on [T - delta, T]; the accepted probe slice is kept.
    std::optional<FieldSlice> probe_slice;
    PicardOptions probe_opts = options.picard;
    probe_opts.abandon_ratio = kContractionThreshold;
    const DeltaProbe probe = [&](double delta, double C) {
        FieldSlice s = picard_solve_subinterval(p, terminal, p.T - delta, p.T, steps_for_length(grid, p.T, delta),
                                                grid, env, probe_opts);
        ProbeResult r;
        r.passes = s.picard_passes;
        r.contraction = s.contraction_ratios.empty() && !s.converged ? std::numeric_limits<double>::infinity()
                                                                     : s.max_contraction();
        if (s.terminal_slope > C + 1e-8 * (1.0 + C)) {
            diag.warnings.push_back("terminal slope exceeds the envelope cap");
        }
        probe_slice = std::move(s);
        return r;
    };
    DecouplingField field;
    field.delta = select_delta(p, env, probe);
    field.partition = make_partition(p.T, field.delta.delta);
    field.envelope = env;
    field.grid = grid;
    field.n = p.n;
    field.d = p.d;

    const auto& bp = field.partition.breakpoints;
    std::vector<FieldSlice> backward;
    std::vector<double> breaks{bp.back()};
    for (std::size_t k = field.partition.intervals(); k-- > 0;) {
        const double s = bp[k];
        const double e = bp[k + 1];
        const std::span<const double> term =
            backward.empty() ? std::span<const double>(terminal) : backward.back().u_layer(0);

        const bool reuse = backward.empty() && probe_slice && probe_slice->converged && probe_slice->start == s &&
                           probe_slice->end == e &&
                           options.picard.initial_guess == InitialGuess::frozen_terminal;
        if (reuse) {
            backward.push_back(std::move(*probe_slice));
            breaks.push_back(s);
            continue;
        }
        try {
            backward.push_back(solve_once(p, term, s, e, grid, env, options.picard));
            breaks.push_back(s);
        } catch (const ConvergenceError&) {
            // One halving retry: solve [mid, e] then [s, mid].
            ++diag.delta_retries;
            const double mid = 0.5 * (s + e);
            std::vector<double> term_copy(term.begin(), term.end());
            FieldSlice upper = solve_once(p, term_copy, mid, e, grid, env, options.picard);
            std::vector<double> mid_layer(upper.u_layer(0).begin(), upper.u_layer(0).end());
            backward.push_back(std::move(upper));
            breaks.push_back(mid);
            backward.push_back(solve_once(p, mid_layer, s, mid, grid, env, options.picard));
            breaks.push_back(s);
            diag.warnings.push_back("sub-interval [" + format_double(s) + ", " + format_double(e) +
                                    "] needed one delta halving");
        }
    }
    std::reverse(backward.begin(), backward.end());
    std::reverse(breaks.begin(), breaks.end());
    field.slices = std::move(backward);
    field.partition.breakpoints = std::move(breaks);
    field.index();

    diag.delta = field.delta.delta;
    diag.subintervals = field.slices.size();
    for (const auto& s : field.slices) {
        diag.picard_passes += s.picard_passes;
        diag.growth_violations += s.growth_violations;
        for (double v : s.u) diag.max_abs_u = std::max(diag.max_abs_u, std::abs(v));
    }
    diag.sandwich_margin = verify_sandwich(field, env, 0.0).margin;
    diag.bmo_surrogate = bmo_surrogate(p, field);
    return {std::move(field), std::move(diag)};
}

SimulationResult simulate_forward(const FBSDEProblem& p, const DecouplingField& field, std::size_t n_paths,
                                  std::uint64_t seed) {
    if (field.n != p.n || field.d != p.d) throw PreconditionError("simulate_forward: field was built for another problem");
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const std::size_t nz = n * d;
    const auto& times = field.times();
    const std::size_t N = times.size() - 1;
    const GridSpec& g = field.grid;

    SimulationResult res;
    res.paths.resize(n_paths);
    std::vector<char> escaped(n_paths, 0);
    std::vector<double> max_r(n_paths, 0.0), sum_r(n_paths, 0.0), max_y(n_paths, 0.0);

    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> sig(d), f(n);
        for (std::size_t id = begin; id < end; ++id) {
            CounterRng rng(seed, id);
            std::normal_distribution<double> normal(0.0, 1.0);
            SolutionPath& path = res.paths[id];
            path.path_id = id;
            path.seed = seed;
            path.t = times;
            path.X.assign(N + 1, 0.0);
            path.Y.assign((N + 1) * n, 0.0);
            path.Z.assign((N + 1) * nz, 0.0);
            path.dW.assign(N * d, 0.0);
            path.X[0] = p.x0;
            for (std::size_t j = 0; j <= N; ++j) {
                const double x = path.X[j];
                if (x < g.x_min || x > g.x_max) escaped[id] = 1;
                std::span<double> y(path.Y.data() + j * n, n);
                std::span<double> z(path.Z.data() + j * nz, nz);
                if (j == N) {
                    p.terminal(x, y);
                } else {
                    evaluate_layer(field.layer(j), x, y);
                }
                field.z_at(j, x, z);
                if (j == N) break;
                const double t = times[j];
                const double dt = times[j + 1] - t;
                const double b = p.drift(t, x, y, z);
                require_finite(b, "drift", t, x);
                p.diffusion(t, x, y, sig);
                double noise = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double dw = std::sqrt(dt) * normal(rng);
                    path.dW[j * d + k] = dw;
                    noise += sig[k] * dw;
                }
                path.X[j + 1] = x + b * dt + noise;
            }
            // Backward residuals along the path.
            std::vector<double> acc(n, 0.0);
            for (std::size_t j = 0; j < N; ++j) {
                const double t = times[j];
                const double dt = times[j + 1] - t;
                std::span<const double> y(path.Y.data() + j * n, n);
                std::span<const double> z(path.Z.data() + j * nz, nz);
                for (std::size_t i = 0; i < n; ++i) {
                    double zdw = 0.0;
                    for (std::size_t k = 0; k < d; ++k) zdw += z[i * d + k] * path.dW[j * d + k];
                    const double fi = p.driver[i](t, path.X[j], y, z);
                    const double r = y[i] - (path.Y[(j + 1) * n + i] + fi * dt - zdw);
                    max_r[id] = std::max(max_r[id], std::abs(r));
                    acc[i] += r;
                }
            }
            for (double a : acc) sum_r[id] = std::max(sum_r[id], std::abs(a));
            for (double v : path.Y) max_y[id] = std::max(max_y[id], std::abs(v));
        }
    });

    Diagnostics& diag = res.diagnostics;
    diag.simulated_paths = n_paths;
    double mean = 0.0;
    for (std::size_t id = 0; id < n_paths; ++id) {
        diag.max_backward_residual = std::max(diag.max_backward_residual, max_r[id]);
        diag.max_abs_y = std::max(diag.max_abs_y, max_y[id]);
        diag.escaped_paths += escaped[id] ? 1 : 0;
        mean += sum_r[id];
    }
    diag.mean_path_residual = n_paths ? mean / static_cast<double>(n_paths) : 0.0;
    diag.escape_flag = n_paths && static_cast<double>(diag.escaped_paths) > 0.01 * static_cast<double>(n_paths);
    if (diag.escape_flag) diag.warnings.push_back("more than 1% of paths left the grid range");
    return res;
}

SandwichReport verify_sandwich(const DecouplingField& field, const LipschitzEnvelope& env, double eps_slope) {
    SandwichReport rep;
    const GridSpec& g = field.grid;
    const auto n = static_cast<std::size_t>(field.n);
    const auto Nx = static_cast<std::size_t>(g.Nx);
    rep.min_slope = std::numeric_limits<double>::infinity();
    rep.max_slope = -std::numeric_limits<double>::infinity();
    rep.margin = std::numeric_limits<double>::infinity();
    const auto& times = field.times();
    for (std::size_t gi = 0; gi < times.size(); ++gi) {
        const auto u = field.u_layer(gi);
        for (std::size_t i = 0; i < n; ++i) {
            const double cap = env.at(times[gi], static_cast<int>(i));
            for (std::size_t m = 0; m + 1 < Nx; ++m) {
                const double x1 = g.node(m);
                const double x2 = g.node(m + 1);
                const double s = (u[(m + 1) * n + i] - u[m * n + i]) / (x2 - x1);
                rep.min_slope = std::min(rep.min_slope, s);
                rep.max_slope = std::max(rep.max_slope, s);
                const double margin = std::min(s, cap - s);
                if (s < -eps_slope || s > cap + eps_slope) ++rep.violating_nodes;
                if (margin < rep.margin) {
                    rep.margin = margin;
                    rep.worst = SandwichWitness{times[gi], x1, x2, static_cast<int>(i), s, s < 0.0 ? 0.0 : cap};
                }
            }
        }
    }
    rep.pass = rep.violating_nodes == 0;
    return rep;
}

double bmo_surrogate(const FBSDEProblem& p, const DecouplingField& field) {
    const auto& times = field.times();
    if (times.size() < 2) return 0.0;
    const GridSpec& g = field.grid;
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const std::size_t nz = n * d;
    const auto Nx = static_cast<std::size_t>(g.Nx);
    const GaussHermite gh(g.quadrature_order, p.d);

    std::vector<double> beta(Nx, 0.0), next(Nx, 0.0);
    double best = 0.0;
    for (std::size_t j = times.size() - 1; j-- > 0;) {
        const double t = times[j];
        const double dt = times[j + 1] - t;
        const auto u = field.u_layer(j);
        const auto v = field.v_layer(j);
        next.swap(beta);
        parallel_for(Nx, [&](std::size_t begin, std::size_t end) {
            std::vector<double> sig(d), one(1);
            for (std::size_t m = begin; m < end; ++m) {
                const double x = g.node(m);
                std::span<const double> y = u.subspan(m * n, n);
                std::span<const double> z = v.subspan(m * nz, nz);
                const double b = p.drift(t, x, y, z);
                p.diffusion(t, x, y, sig);
                double e = 0.0;
                for (std::size_t q = 0; q < gh.size(); ++q) {
                    double noise = 0.0;
                    for (std::size_t k = 0; k < d; ++k) noise += sig[k] * gh.node(q, static_cast<int>(k));
                    evaluate_block(g, next, 1, x + b * dt + std::sqrt(dt) * noise, one);
                    e += gh.weight(q) * one[0];
                }
                double z2 = 0.0;
                for (double c : z) z2 += c * c;
                beta[m] = e + z2 * dt;
            }
        });
        double mean = 0.0;
        for (double b : beta) mean += b;
        best = std::max(best, mean / static_cast<double>(Nx));
    }
    return best;
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

void write_field_csv(std::ostream& os, const DecouplingField& field) {
    const auto n = static_cast<std::size_t>(field.n);
    const auto d = static_cast<std::size_t>(field.d);
    os << "t,x";
    for (std::size_t i = 0; i < n; ++i) os << ",u_" << i + 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) os << ",v_" << i + 1 << k + 1;
    }
    os << '\n';
    const auto Nx = static_cast<std::size_t>(field.grid.Nx);
    const auto& times = field.times();
    for (std::size_t gi = 0; gi < times.size(); ++gi) {
        const auto u = field.u_layer(gi);
        const auto v = field.v_layer(gi);
        for (std::size_t m = 0; m < Nx; ++m) {
            os << format_double(times[gi]) << ',' << format_double(field.grid.node(m));
            for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(u[m * n + i]);
            for (std::size_t k = 0; k < n * d; ++k) os << ',' << format_double(v[m * n * d + k]);
            os << '\n';
        }
    }
}

void write_paths_csv(std::ostream& os, const std::vector<SolutionPath>& paths, int n, int d) {
    const auto nn = static_cast<std::size_t>(n);
    const auto dd = static_cast<std::size_t>(d);
    os << "path_id,t,X";
    for (std::size_t i = 0; i < nn; ++i) os << ",Y_" << i + 1;
    for (std::size_t i = 0; i < nn; ++i) {
        for (std::size_t k = 0; k < dd; ++k) os << ",Z_" << i + 1 << k + 1;
    }
    os << '\n';
    for (const auto& p : paths) {
        for (std::size_t j = 0; j < p.t.size(); ++j) {
            os << p.path_id << ',' << format_double(p.t[j]) << ',' << format_double(p.X[j]);
            for (std::size_t i = 0; i < nn; ++i) os << ',' << format_double(p.Y[j * nn + i]);
            for (std::size_t k = 0; k < nn * dd; ++k) os << ',' << format_double(p.Z[j * nn * dd + k]);
            os << '\n';
        }
    }
}

}  // namespace fbsde
