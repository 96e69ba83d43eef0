// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/applications/nash.hpp"
#include "fbsde/applications/oracles.hpp"
#include "fbsde/conditions.hpp"
#include "fbsde/envelope.hpp"
#include "fbsde/global_solver.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/random.hpp"
#include "fbsde_cli/config.hpp"
#include "fbsde_cli/run.hpp"
#include "reference.hpp"

namespace {

using namespace fbsde;
namespace ref = fbsde::testing;
using Clock = std::chrono::steady_clock;

constexpr int kRefNx = 401;
constexpr int kRefSteps = 400;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::pair<DecouplingField, Diagnostics> solve(const FBSDEProblem& p, int Nx = kRefNx, int steps = kRefSteps,
                                              const BuildOptions& o = {}) {
    const auto env = integrate_envelope(p.K, p.n, p.T, o.envelope_steps);
    return build_decoupling_field(p, default_grid(p, env, Nx, steps), env, o);
}

Outcome envelope_bound() {
    const auto t0 = Clock::now();
    CounterRng rng(2026, 1);
    std::size_t violations = 0;
    for (int c = 0; c < 200; ++c) {
        const double K = rng.uniform(0.0, 3.0);
        const int n = 1 + static_cast<int>(rng() % 4);
        const double T = 2.0 * (1.0 - rng.uniform());  // (0, 2]
        const auto env = integrate_envelope(K, n, T, 1000);
        const double cap = n * K * (T + 1.0) * std::exp((n + 1) * K * T);
        for (int i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < env.times().size(); ++j) {
                const double v = env.value(j, i);
                if (!(v >= 0.0) || v > cap * (1.0 + 1e-12)) ++violations;
                if (j + 1 < env.times().size() && env.value(j + 1, i) > v) ++violations;
            }
        }
    }
    const double s = seconds_since(t0);
    return {violations == 0 && s < 5.0, fmt("200 cases, %zu violations, %.2f s", violations, s)};
}

Outcome envelope_closed_form_check() {
    const auto t0 = Clock::now();
    const auto env = integrate_envelope(1.0, 1, 1.0, 10000);
    const double exact = 1.5 * std::exp(2.0) - 0.5;
    const double rel = std::abs(env.value(0, 0) - exact) / exact;
    const double s = seconds_since(t0);
    return {rel <= 1e-8 && s < 1.0, fmt("ybar_0 = %.12f, exact %.12f, rel %.2e, %.3f s", env.value(0, 0), exact, rel, s)};
}

// Independent affine reference for the linear example: analytic slope, Heun offset.
double linear_example_reference(double x0) {
    auto P = [](double t) { return ref::riccati_closed_form(1.0, 1.0, -1.0, 1.0, 1.0, t); };
    return P(0.0) * x0 + ref::linear_example_offset(P, [](double) { return 1.0; }, 1.0, 0.0, 20000);
}

Outcome linear_example() {
    set_worker_count(1);
    const auto t0 = Clock::now();
    const auto p = apps::make_example36();
    const double exact = linear_example_reference(p.x0);
    const double u0 = solve(p).first.value(0.0, p.x0)[0];
    const double s = seconds_since(t0);
    const double fine = solve(p, 2 * kRefNx - 1, 2 * kRefSteps).first.value(0.0, p.x0)[0];
    set_worker_count(0);
    const double err = std::abs(u0 - exact), err_fine = std::abs(fine - exact);
    const double rel = err / std::abs(exact), ratio = err / err_fine;
    return {rel <= 0.02 && ratio >= 1.7 && s < 60.0,
            fmt("u(0,1) = %.6f vs %.6f, rel %.2e, refinement ratio %.2f, %.1f s single-threaded", u0, exact, rel, ratio,
                s)};
}

Outcome sandwich() {
    std::size_t violating = 0;
    std::string detail;
    for (const auto& name : apps::builtin_names()) {
        const auto p = apps::build_builtin(name);
        const auto sampler = box_sampler(p, default_box(p), 7);
        bool monotone = true;
        for (const auto& r : check_monotonicity(p, {Monotonicity::M1, Monotonicity::M2, Monotonicity::M3}, sampler, 2000)) {
            monotone = monotone && r.verdict == Verdict::pass;
        }
        if (!monotone) continue;
        const auto env = integrate_envelope(p.K, p.n, p.T, 1000);
        const auto field = build_decoupling_field(p, default_grid(p, env, kRefNx, kRefSteps), env).first;
        const auto rep = verify_sandwich(field, env, 1e-2);
        violating += rep.violating_nodes;
        detail += fmt("%s margin %.3g; ", name.c_str(), rep.margin);
    }
    return {violating == 0, detail + fmt("%zu violating nodes", violating)};
}

Outcome checkers() {
    const auto t0 = Clock::now();
    const auto p = apps::make_example36();
    const auto sampler = box_sampler(p, default_box(p), 11);
    std::size_t violations = 0;
    bool ok = true;
    for (const auto& r : check_structural(p, sampler, 100000)) {
        if (r.id == "H" || r.id == "A1") {
            ok = ok && r.verdict == Verdict::pass;
            violations += r.violations;
        }
    }
    for (const auto& r : check_monotonicity(p, {Monotonicity::M1, Monotonicity::M2, Monotonicity::M3}, sampler, 100000)) {
        ok = ok && r.verdict == Verdict::pass;
        violations += r.violations;
    }
    int peng_wu_fails = 0;
    const std::vector<double> Gs{-2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0};
    for (double G : Gs) {
        const auto r = check_peng_wu(G, default_box(p), 10000, 3);
        if (r.verdict == Verdict::fail && (G == 0.0 || r.witness)) ++peng_wu_fails;
    }
    const double s = seconds_since(t0);
    return {ok && violations == 0 && peng_wu_fails == static_cast<int>(Gs.size()) && s < 10.0,
            fmt("H, A1, M1-M3 over 1e5 samples: %zu violations; Peng-Wu fails for %d/%zu G; %.2f s", violations,
                peng_wu_fails, Gs.size(), s)};
}

Outcome lq_control() {
    const auto t0 = Clock::now();
    const apps::LQControlParams lq;
    const auto p = apps::make_lq_control(lq);
    const auto [field, diag] = solve(p);
    const double P0 = ref::riccati_closed_form(1.0, -2.0, -1.0, 1.0, 1.0, 0.0);
    const double exact = P0 * lq.x0;  // q = 0 for C = D = g1 = 0
    const auto sim = simulate_forward(p, field, 1000, 1);
    const double y0 = sim.paths[0].Y[0];
    const double residual = apps::lq_first_order_residual(lq, sim.paths);
    const double rel = std::abs(y0 - exact) / std::abs(exact);
    const double s = seconds_since(t0);
    return {rel <= 0.02 && residual <= 1e-10 && s < 90.0,
            fmt("Y_0 = %.6f vs %.6f, rel %.2e; first-order residual %.1e over 1000 paths; %.1f s", y0, exact, rel,
                residual, s)};
}

Outcome delayed() {
    const auto t0 = Clock::now();
    const auto p = apps::make_delayed_bsde(apps::linear_delayed(1.0, 1.0, 1.0));
    const auto [field, diag] = solve(p);
    const auto sim = simulate_forward(p, field, 1000, 1);
    const double exact = 1.0 / std::cosh(1.0);
    const double y0 = sim.paths[0].Y[0];
    double worst = 0.0, dt_max = 0.0;
    for (const auto& path : sim.paths) {
        double integral = 0.0;
        for (std::size_t j = 0; j < path.t.size(); ++j) {
            if (j > 0) {
                const double dt = path.t[j] - path.t[j - 1];
                dt_max = std::max(dt_max, dt);
                integral += 0.5 * dt * (path.Y[j - 1] + path.Y[j]);
            }
            worst = std::max(worst, std::abs(path.X[j] + integral));
        }
    }
    const double rel = std::abs(y0 - exact) / exact;
    const double s = seconds_since(t0);
    // Y is bounded by 1 here, so the O(dt) constant is 1.
    return {rel <= 0.01 && worst <= dt_max && s < 60.0,
            fmt("Y_0 = %.6f vs %.6f, rel %.2e; max |X_t + int Y| = %.2e (dt %.2e); %.1f s", y0, exact, rel, worst,
                dt_max, s)};
}

Outcome nash() {
    const auto t0 = Clock::now();
    const apps::GameParams gp;
    const auto p = apps::make_lq_game(gp);
    const auto field = solve(p).first;
    const auto rep = apps::verify_nash(apps::GameModel(gp), p, field, apps::NashOptions{});

    const apps::LQControlParams lq;
    const auto single = apps::as_single_player_game(lq);
    const auto ps = apps::make_lq_game(single);
    const auto fs = solve(ps).first;
    apps::NashOptions o;
    o.n_deviations = 1;
    o.epsilons = {0.1};
    const auto srep = apps::verify_nash(apps::GameModel(single), ps, fs, o);
    const double value = apps::lq_value(apps::lq_oracle(lq), lq.x0);
    const double gap = std::abs(srep.cost[0] - value);
    const double se = srep.cost_standard_error[0];
    const double s = seconds_since(t0);
    return {rep.pass && rep.trials.size() == 60 && gap <= 3.0 * se && s < 300.0,
            fmt("%zu trials, worst improvement %.2f SE; single player %.5f vs %.5f (SE %.4f); %.1f s",
                rep.trials.size(), rep.worst_improvement_se, srep.cost[0], value, se, s)};
}

Outcome comparison() {
    const auto base = apps::make_example36();
    auto raised = base;
    const auto h = base.terminal;
    raised.terminal = [h](double x, std::span<double> out) {
        h(x, out);
        out[0] += 0.1;
    };
    const auto a = solve(base).first;
    const auto b = solve(raised).first;
    const auto ua = a.u_layer(0), ub = b.u_layer(0);
    double worst_drop = 0.0, min_rise = 1e300;
    for (std::size_t m = 0; m < ua.size(); ++m) {
        worst_drop = std::max(worst_drop, ua[m] - ub[m]);
        min_rise = std::min(min_rise, ub[m] - ua[m]);
    }
    return {worst_drop <= 1e-8 && min_rise > 0.0, fmt("min rise of u(0,.) %.4e over %zu nodes", min_rise, ua.size())};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    namespace fsys = std::filesystem;
    const auto root = fsys::temp_directory_path() / "fbsde_acceptance_determinism";
    fsys::remove_all(root);
    const nlohmann::json cfg = {{"command", "solve"}, {"problem", "lq_game"}, {"seed", 5}, {"paths", 200}};
    bool identical = true;
    std::vector<std::string> field, paths;
    for (const char* run : {"a", "b"}) {
        cli::RunOptions o;
        o.out_dir = root / run;
        o.quiet = true;
        std::ostringstream out, err;
        if (cli::run(cli::parse_config(cfg), o, out, err) != cli::kExitOk) return {false, "solve failed: " + err.str()};
        field.push_back(slurp(root / run / "field.csv"));
        paths.push_back(slurp(root / run / "paths.csv"));
    }
    identical = !field[0].empty() && field[0] == field[1] && paths[0] == paths[1];

    const auto p = apps::make_example36();
    BuildOptions zero;
    zero.picard.initial_guess = InitialGuess::zero;
    const double u1 = solve(p).first.value(0.0, p.x0)[0];
    const double u2 = solve(p, kRefNx, kRefSteps, zero).first.value(0.0, p.x0)[0];
    const double gap = std::abs(u1 - u2);
    return {identical && gap <= 1e-6,
            fmt("CSV byte-identical: %s (%zu + %zu bytes); initial guesses differ by %.1e", identical ? "yes" : "no",
                field[0].size(), paths[0].size(), gap)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"envelope bound over 200 random (K, n, T)", envelope_bound},
        {"closed-form envelope K = n = T = 1", envelope_closed_form_check},
        {"linear example vs Riccati oracle and refinement", linear_example},
        {"decoupling-field sandwich for built-ins", sandwich},
        {"monotonicity checkers and Peng-Wu failure", checkers},
        {"LQ control vs Riccati and first-order condition", lq_control},
        {"delayed BSDE vs 1/cosh(1) and transform identity", delayed},
        {"Nash verification for the 2-player LQ game", nash},
        {"comparison under a raised terminal", comparison},
        {"determinism of CSV output and initial guesses", determinism},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
