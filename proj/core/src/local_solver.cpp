#include "fbsde/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"

namespace fbsde {

std::vector<double> GridSpec::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(Nx));
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = node(m);
    return out;
}

void GridSpec::validate() const {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw PreconditionError("grid: x_min must be finite and below x_max");
    }
    if (Nx < 2) throw PreconditionError("grid: Nx must be at least 2");
    if (time_steps < 1) throw PreconditionError("grid: time_steps must be at least 1");
    if (quadrature_order < 2) throw PreconditionError("grid: quadrature order must be at least 2");
}

GridSpec default_grid(const FBSDEProblem& p, const LipschitzEnvelope& env, int Nx, int time_steps,
                      int quadrature_order) {
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    std::vector<double> h(n), s(d);
    p.terminal(p.x0, h);

    // Trapezoidal integral of |sigma_t|^2 along the frozen point (x0, h(x0)).
    constexpr int kSamples = 64;
    double integral = 0.0;
    double prev = 0.0;
    for (int k = 0; k <= kSamples; ++k) {
        const double t = p.T * k / kSamples;
        p.diffusion(t, p.x0, h, s);
        double sq = 0.0;
        for (double v : s) sq += v * v;
        if (k > 0) integral += 0.5 * (sq + prev) * p.T / kSamples;
        prev = sq;
    }
    const double C = env.max_value();
    double R = (1.0 + std::abs(p.x0) + C) * std::exp(p.K * p.T) * std::max(3.0 * std::sqrt(integral), 1.0);
    if (!std::isfinite(R)) throw OverflowError("default grid half-width is not finite");

    GridSpec g;
    g.x_min = p.x0 - R;
    g.x_max = p.x0 + R;
    g.Nx = Nx;
    g.time_steps = time_steps;
    g.quadrature_order = quadrature_order;
    g.validate();
    return g;
}

namespace {

struct Cell {
    std::size_t lo;
    double w;  // weight of node lo + 1
};

Cell locate(const GridSpec& g, double x) {
    const double pos = (x - g.x_min) / g.dx();
    const auto last = static_cast<std::size_t>(g.Nx - 2);
    if (!(pos > 0.0)) return {0, 0.0};
    const auto lo = std::min(static_cast<std::size_t>(pos), last);
    return {lo, std::min(pos - static_cast<double>(lo), 1.0)};
}

}  // namespace

void evaluate_layer(const LayerView& layer, double x, std::span<double> out) {
    const GridSpec& g = *layer.grid;
    const auto n = static_cast<std::size_t>(layer.n);
    const auto Nx = static_cast<std::size_t>(g.Nx);
    const auto& val = layer.values;
    auto at = [&](std::size_t m, std::size_t i) { return val[m * n + i]; };

    if (x < g.x_min || x > g.x_max) {
        const bool left = x < g.x_min;
        const std::size_t a = left ? 0 : Nx - 2;
        const double dx = g.node(a + 1) - g.node(a);
        for (std::size_t i = 0; i < n; ++i) {
            double slope = (at(a + 1, i) - at(a, i)) / dx;
            const double cap = layer.slope_cap.empty() ? std::numeric_limits<double>::infinity() : layer.slope_cap[i];
            slope = std::clamp(slope, 0.0, cap);
            out[i] = left ? at(0, i) + slope * (x - g.x_min) : at(Nx - 1, i) + slope * (x - g.x_max);
        }
        return;
    }
    const Cell c = locate(g, x);
    for (std::size_t i = 0; i < n; ++i) {
        const double u0 = at(c.lo, i);
        const double u1 = at(c.lo + 1, i);
        out[i] = c.w == 0.0 ? u0 : (c.w == 1.0 ? u1 : u0 + c.w * (u1 - u0));
    }
}

void evaluate_block(const GridSpec& grid, std::span<const double> values, std::size_t width, double x,
                    std::span<double> out) {
    const double xc = std::clamp(x, grid.x_min, grid.x_max);
    const Cell c = locate(grid, xc);
    for (std::size_t k = 0; k < width; ++k) {
        const double a = values[c.lo * width + k];
        const double b = values[(c.lo + 1) * width + k];
        out[k] = c.w == 0.0 ? a : (c.w == 1.0 ? b : a + c.w * (b - a));
    }
}

std::size_t backward_step(const StepInputs& in, std::span<double> u_out, std::span<double> v_out) {
    const FBSDEProblem& p = *in.problem;
    const GridSpec& g = *in.grid;
    const GaussHermite& gh = *in.quadrature;
    if (!(in.dt > 0.0)) throw PreconditionError("backward_step: dt must be positive");
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const auto Nx = static_cast<std::size_t>(g.Nx);
    const std::size_t nz = n * d;
    if (u_out.size() != Nx * n || v_out.size() != Nx * nz || in.u_guess.size() != Nx * n ||
        in.v_guess.size() != Nx * nz) {
        throw PreconditionError("backward_step: layer sizes do not match the grid");
    }

    const double t = in.t;
    const double dt = in.dt;
    const double sqdt = std::sqrt(dt);
    const double omega = 1.0 / (1.0 + p.K * dt);
    const bool quadratic = p.growth_class == GrowthClass::quadratic;
    const bool superquadratic = p.growth_class == GrowthClass::superquadratic;
    const double M = 8.0 * p.K * p.K * std::sqrt(static_cast<double>(d * n));

    std::vector<std::size_t> clipped(Nx, 0);

    parallel_for(Nx, [&](std::size_t begin, std::size_t end) {
        std::vector<double> sig(d), mean(n), un(n), y(n), f(n), z(nz);
        for (std::size_t m = begin; m < end; ++m) {
            const double x = g.node(m);
            std::span<const double> yg = in.u_guess.subspan(m * n, n);
            std::span<const double> zg = in.v_guess.subspan(m * nz, nz);

            const double b = p.drift(t, x, yg, zg);
            require_finite(b, "drift", t, x);
            p.diffusion(t, x, yg, sig);
            for (double s : sig) require_finite(s, "diffusion", t, x);

            std::fill(mean.begin(), mean.end(), 0.0);
            std::fill(z.begin(), z.end(), 0.0);
            for (std::size_t q = 0; q < gh.size(); ++q) {
                double noise = 0.0;
                for (std::size_t k = 0; k < d; ++k) noise += sig[k] * gh.node(q, static_cast<int>(k));
                evaluate_layer(in.u_next, x + b * dt + sqdt * noise, un);
                const double w = gh.weight(q);
                for (std::size_t i = 0; i < n; ++i) {
                    mean[i] += w * un[i];
                    for (std::size_t k = 0; k < d; ++k) z[i * d + k] += w * un[i] * gh.node(q, static_cast<int>(k));
                }
            }
            for (double& e : z) e /= sqdt;

            if (superquadratic) {
                double norm = 0.0;
                for (double e : z) norm += e * e;
                norm = std::sqrt(norm);
                if (norm > M) {
                    std::ostringstream os;
                    os << "computed |z| = " << norm << " leaves the truncation radius M = " << M << " at t=" << t
                       << ", x=" << x;
                    throw Error("z_truncation", os.str());
                }
            }

            auto driver = [&](std::span<const double> yy) {
                for (std::size_t i = 0; i < n; ++i) {
                    double v = p.driver[i](t, x, yy, z);
                    require_finite(v, "driver", t, x);
                    if (quadratic) {
                        double zr = 0.0;
                        for (double e : z) zr += e * e;
                        double ya = 0.0;
                        for (double e : yy) ya += e * e;
                        const double cap = p.K * (1.0 + std::sqrt(ya) + zr);
                        if (std::abs(v) > cap) {
                            v = std::copysign(cap, v);
                            clipped[m] = 1;
                        }
                    }
                    f[i] = v;
                }
            };

            std::copy(mean.begin(), mean.end(), y.begin());
            bool done = false;
            double residual = 0.0;
            for (int it = 0; it < kInnerMaxIterations && !done; ++it) {
                driver(y);
                residual = 0.0;
                double scale = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double target = mean[i] + f[i] * dt;
                    residual = std::max(residual, std::abs(target - y[i]));
                    y[i] += omega * (target - y[i]);
                    scale = std::max(scale, std::abs(y[i]));
                }
                const double tol = std::max(kInnerTolerance, 8.0 * std::numeric_limits<double>::epsilon() * scale);
                done = residual <= tol;
            }
            if (!done) {
                std::ostringstream os;
                os << "inner fixed point did not converge at t=" << t << ", x=" << x << " (residual " << residual
                   << ")";
                throw ConvergenceError("inner_fixed_point", os.str());
            }
            for (std::size_t i = 0; i < n; ++i) {
                require_finite(y[i], "backward value", t, x);
                u_out[m * n + i] = y[i];
            }
            std::copy(z.begin(), z.end(), v_out.begin() + static_cast<std::ptrdiff_t>(m * nz));
        }
    });

    std::size_t total = 0;
    for (auto c : clipped) total += c;
    return total;
}

StepOutput backward_step(const StepInputs& in) {
    const auto Nx = static_cast<std::size_t>(in.grid->Nx);
    StepOutput out;
    out.u.resize(Nx * static_cast<std::size_t>(in.problem->n));
    out.v.resize(Nx * in.problem->z_size());
    out.growth_violations = backward_step(in, out.u, out.v);
    return out;
}

double FieldSlice::max_contraction() const {
    double r = 0.0;
    for (double c : contraction_ratios) r = std::max(r, c);
    return r;
}

std::vector<double> sample_terminal(const FBSDEProblem& p, const GridSpec& grid) {
    const auto n = static_cast<std::size_t>(p.n);
    const auto Nx = static_cast<std::size_t>(grid.Nx);
    std::vector<double> out(Nx * n);
    for (std::size_t m = 0; m < Nx; ++m) {
        const double x = grid.node(m);
        std::span<double> row(out.data() + m * n, n);
        p.terminal(x, row);
        for (double v : row) require_finite(v, "terminal", p.T, x);
    }
    return out;
}

std::size_t steps_for_length(const GridSpec& grid, double T, double length) {
    if (!(length > 0.0)) return 0;
    const double raw = grid.time_steps * length / T;
    auto steps = static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw));
    return std::max<std::size_t>(steps, 1);
}

namespace {

// v = slope * sigma at the terminal layer, with one-sided differences at the
// grid ends.
void terminal_z(const FBSDEProblem& p, const GridSpec& g, double t, std::span<const double> u,
                std::span<double> v) {
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const auto Nx = static_cast<std::size_t>(g.Nx);
    std::vector<double> sig(d);
    for (std::size_t m = 0; m < Nx; ++m) {
        const std::size_t a = m == 0 ? 0 : m - 1;
        const std::size_t b = m + 1 == Nx ? m : m + 1;
        const double x = g.node(m);
        p.diffusion(t, x, u.subspan(m * n, n), sig);
        for (std::size_t i = 0; i < n; ++i) {
            const double slope = (u[b * n + i] - u[a * n + i]) / (g.node(b) - g.node(a));
            for (std::size_t k = 0; k < d; ++k) v[(m * n + i) * d + k] = slope * sig[k];
        }
    }
}

double max_adjacent_slope(const GridSpec& g, std::span<const double> u, std::size_t n) {
    double s = 0.0;
    const auto Nx = static_cast<std::size_t>(g.Nx);
    for (std::size_t m = 0; m + 1 < Nx; ++m) {
        const double dx = g.node(m + 1) - g.node(m);
        for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(u[(m + 1) * n + i] - u[m * n + i]) / dx);
    }
    return s;
}

}  // namespace

FieldSlice picard_solve_subinterval(const FBSDEProblem& p, std::span<const double> terminal, double start, double end,
                                    std::size_t steps, const GridSpec& grid, const LipschitzEnvelope& env,
                                    const PicardOptions& options) {
    grid.validate();
    const auto n = static_cast<std::size_t>(p.n);
    const auto Nx = static_cast<std::size_t>(grid.Nx);
    if (terminal.size() != Nx * n) throw PreconditionError("picard_solve_subinterval: terminal layer size mismatch");
    if (!(end >= start)) throw PreconditionError("picard_solve_subinterval: interval end precedes start");

    FieldSlice s;
    s.start = start;
    s.end = end;
    s.n = p.n;
    s.d = p.d;
    s.Nx = Nx;
    if (end == start) steps = 0;
    else if (steps == 0) throw PreconditionError("picard_solve_subinterval: a non-empty interval needs steps >= 1");

    const std::size_t L = s.layer_size();
    const std::size_t LZ = s.z_layer_size();
    s.times.resize(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
        s.times[j] = j == steps ? end : start + (end - start) * static_cast<double>(j) / static_cast<double>(steps);
    }
    s.slope_cap.resize((steps + 1) * n);
    for (std::size_t j = 0; j <= steps; ++j) {
        for (std::size_t i = 0; i < n; ++i) s.slope_cap[j * n + i] = env.at(s.times[j], static_cast<int>(i));
    }

    std::vector<double> term_v(LZ);
    terminal_z(p, grid, end, terminal, term_v);
    s.terminal_slope = max_adjacent_slope(grid, terminal, n);

    // Pass-0 guess.
    s.u.assign((steps + 1) * L, 0.0);
    s.v.assign((steps + 1) * LZ, 0.0);
    for (std::size_t j = 0; j <= steps; ++j) {
        if (j == steps || options.initial_guess == InitialGuess::frozen_terminal) {
            std::copy(terminal.begin(), terminal.end(), s.u.begin() + static_cast<std::ptrdiff_t>(j * L));
            std::copy(term_v.begin(), term_v.end(), s.v.begin() + static_cast<std::ptrdiff_t>(j * LZ));
        }
    }
    if (steps == 0) {
        s.converged = true;
        return s;
    }

    const GaussHermite gh(grid.quadrature_order, p.d);
    std::vector<double> nu(s.u.size()), nv(s.v.size());
    std::copy(terminal.begin(), terminal.end(), nu.begin() + static_cast<std::ptrdiff_t>(steps * L));
    std::copy(term_v.begin(), term_v.end(), nv.begin() + static_cast<std::ptrdiff_t>(steps * LZ));

    int over_one = 0;
    int over_abandon = 0;
    for (int pass = 1; pass <= options.max_passes; ++pass) {
        std::size_t clipped = 0;
        for (std::size_t j = steps; j-- > 0;) {
            StepInputs in;
            in.problem = &p;
            in.grid = &grid;
            in.quadrature = &gh;
            in.t = s.times[j];
            in.dt = s.times[j + 1] - s.times[j];
            in.u_next = LayerView{&grid, p.n, {nu.data() + (j + 1) * L, L}, s.cap_layer(j + 1)};
            in.u_guess = {s.u.data() + j * L, L};
            in.v_guess = {s.v.data() + j * LZ, LZ};
            clipped += backward_step(in, {nu.data() + j * L, L}, {nv.data() + j * LZ, LZ});
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < nu.size(); ++k) diff = std::max(diff, std::abs(nu[k] - s.u[k]));
        s.u.swap(nu);
        s.v.swap(nv);
        // The swapped-out buffers keep the terminal layer intact.
        s.picard_passes = pass;
        s.growth_violations = clipped;
        if (!s.corrections.empty()) {
            const double prev = s.corrections.back();
            const double ratio = prev == 0.0 ? (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()) : diff / prev;
            s.contraction_ratios.push_back(ratio);
            over_one = ratio >= 1.0 ? over_one + 1 : 0;
            over_abandon = options.abandon_ratio && ratio >= *options.abandon_ratio ? over_abandon + 1 : 0;
        }
        s.corrections.push_back(diff);
        if (!std::isfinite(diff)) throw ConvergenceError("picard_divergence", "Picard correction is not finite");
        if (diff < options.tolerance) {
            s.converged = true;
            break;
        }
        if (over_one >= 3) {
            std::ostringstream os;
            os << "Picard iteration on [" << start << ", " << end << "] diverges: three consecutive ratios >= 1 (last "
               << s.contraction_ratios.back() << ")";
            throw ConvergenceError("picard_divergence", os.str());
        }
        if (over_abandon >= 2) break;
    }
    return s;
}

std::vector<double> interpolate_field(const FieldSlice& slice, const GridSpec& grid, double t, double x) {
    if (slice.times.empty() || t < slice.start || t > slice.end || std::isnan(t)) {
        std::ostringstream os;
        os << "interpolate_field: t=" << t << " outside [" << slice.start << ", " << slice.end << "]";
        throw PreconditionError(os.str());
    }
    const auto n = static_cast<std::size_t>(slice.n);
    std::vector<double> out(n), hi(n);
    if (slice.steps() == 0) {
        evaluate_layer(LayerView{&grid, slice.n, slice.u_layer(0), slice.cap_layer(0)}, x, out);
        return out;
    }
    auto it = std::upper_bound(slice.times.begin(), slice.times.end(), t);
    auto j1 = static_cast<std::size_t>(std::distance(slice.times.begin(), it));
    j1 = std::clamp<std::size_t>(j1, 1, slice.steps());
    const std::size_t j0 = j1 - 1;
    const double w = (t - slice.times[j0]) / (slice.times[j1] - slice.times[j0]);
    evaluate_layer(LayerView{&grid, slice.n, slice.u_layer(j0), slice.cap_layer(j0)}, x, out);
    if (w == 0.0) return out;
    evaluate_layer(LayerView{&grid, slice.n, slice.u_layer(j1), slice.cap_layer(j1)}, x, hi);
    if (w == 1.0) return hi;
    for (std::size_t i = 0; i < n; ++i) out[i] += w * (hi[i] - out[i]);
    return out;
}

}  // namespace fbsde
