#include "fbsde_cli/run.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/applications/nash.hpp"
#include "fbsde/applications/oracles.hpp"
#include "fbsde/conditions.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/global_solver.hpp"
#include "fbsde/parallel.hpp"

namespace fbsde::cli {

namespace fs = std::filesystem;

int exit_status(const std::string& code) {
    static const std::set<std::string> conditions{"condition_check_failed", "condition_failed", "nash_failed"};
    static const std::set<std::string> convergence{"inner_fixed_point",     "picard_divergence",
                                                   "picard_no_convergence", "delta_no_convergence",
                                                   "z_truncation",          "overflow",
                                                   "coefficient_evaluation"};
    if (conditions.contains(code)) return kExitConditions;
    if (convergence.contains(code)) return kExitConvergence;
    return kExitConfig;
}

nlohmann::json error_json(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}, {"exit_status", exit_status(code)}}}};
}

namespace {

struct Context {
    const ExperimentConfig& config;
    fs::path dir;
    std::uint64_t seed;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> artifacts;

    void write_json(const std::string& file, const nlohmann::json& j) {
        std::ofstream os(dir / file);
        if (!os) throw Error("output_failed", "cannot write " + (dir / file).string());
        os << j.dump(2) << '\n';
        artifacts.push_back(file);
    }

    std::ofstream open(const std::string& file) {
        std::ofstream os(dir / file);
        if (!os) throw Error("output_failed", "cannot write " + (dir / file).string());
        artifacts.push_back(file);
        return os;
    }
};

void require_valid(const FBSDEProblem& p) {
    const auto violations = validate_problem(p);
    if (violations.empty()) return;
    std::string msg = "problem is not well formed:";
    for (const auto& v : violations) msg += " [" + v.code + "] " + v.message;
    throw Error("problem_invalid", msg);
}

GridSpec make_grid(const FBSDEProblem& p, const LipschitzEnvelope& env, const GridOverrides& g, int refine = 0) {
    const int scale = 1 << refine;
    GridSpec grid = default_grid(p, env, (g.Nx - 1) * scale + 1, g.time_steps * scale, g.quadrature_order);
    if (g.x_min) {
        grid.x_min = *g.x_min;
        grid.x_max = *g.x_max;
        grid.validate();
    }
    return grid;
}

BuildOptions build_options(const ExperimentConfig& c) {
    BuildOptions o;
    o.picard.tolerance = c.solver.tolerance;
    o.picard.max_passes = c.solver.max_passes;
    o.picard.initial_guess = c.solver.initial_guess == "zero" ? InitialGuess::zero : InitialGuess::frozen_terminal;
    o.check_conditions = c.solver.check_conditions;
    o.override_conditions = c.solver.override_conditions;
    o.condition_samples = c.solver.condition_samples;
    return o;
}

int run_check(Context& ctx, const FBSDEProblem& p) {
    const auto& cfg = ctx.config.check;
    std::vector<Monotonicity> which;
    for (const auto& s : cfg.conditions) {
        const auto m = monotonicity_from_string(s);
        if (!m) throw Error("config_invalid", "unknown monotonicity condition '" + s + "'");
        which.push_back(*m);
    }
    const SampleBox box = default_box(p);
    const auto sampler = box_sampler(p, box, ctx.seed);

    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : validate_problem(p)) violations.push_back({{"code", v.code}, {"message", v.message}});

    std::vector<ConditionReport> reports;
    if (violations.empty()) {
        reports = check_structural(p, sampler, cfg.samples);
        auto mono = check_monotonicity(p, which, sampler, cfg.samples);
        reports.insert(reports.end(), mono.begin(), mono.end());
    }
    if (cfg.peng_wu_G) reports.push_back(check_peng_wu(*cfg.peng_wu_G, box, cfg.samples, ctx.seed));

    std::vector<std::string> failed;
    for (const auto& r : reports) {
        if (r.verdict == Verdict::fail && r.required) failed.push_back(r.id);
    }
    const bool pass = failed.empty() && violations.empty();
    ctx.write_json("conditions.json", {{"problem", p.name},
                                       {"pass", pass},
                                       {"failed", failed},
                                       {"problem_violations", violations},
                                       {"box", box.to_json()},
                                       {"seed", ctx.seed},
                                       {"reports", to_json(reports)}});
    ctx.summary["pass"] = pass;
    ctx.summary["failed"] = failed;
    if (!pass) {
        std::string msg = "conditions failed:";
        for (const auto& f : failed) msg += " " + f;
        for (const auto& v : violations) msg += " " + v.at("code").get<std::string>();
        ctx.summary["error"] = error_json("condition_failed", msg).at("error");
        return kExitConditions;
    }
    return kExitOk;
}

nlohmann::json merged_diagnostics(const Diagnostics& build, const Diagnostics& sim) {
    Diagnostics d = build;
    d.max_backward_residual = sim.max_backward_residual;
    d.mean_path_residual = sim.mean_path_residual;
    d.max_abs_y = sim.max_abs_y;
    d.escaped_paths = sim.escaped_paths;
    d.simulated_paths = sim.simulated_paths;
    d.escape_flag = sim.escape_flag;
    d.warnings.insert(d.warnings.end(), sim.warnings.begin(), sim.warnings.end());
    return d.to_json();
}

int run_solve(Context& ctx, const FBSDEProblem& p) {
    require_valid(p);
    const auto env = integrate_envelope(p.K, p.n, p.T, build_options(ctx.config).envelope_steps);
    const GridSpec grid = make_grid(p, env, ctx.config.grid);
    auto [field, build] = build_decoupling_field(p, grid, env, build_options(ctx.config));
    auto sim = simulate_forward(p, field, ctx.config.paths, ctx.seed);
    const auto sandwich = verify_sandwich(field, env, 1e-2);

    {
        auto os = ctx.open("field.csv");
        write_field_csv(os, field);
    }
    {
        auto os = ctx.open("paths.csv");
        const std::size_t keep = std::min(ctx.config.output.csv_paths, sim.paths.size());
        const std::vector<SolutionPath> head(sim.paths.begin(), sim.paths.begin() + static_cast<std::ptrdiff_t>(keep));
        write_paths_csv(os, head, p.n, p.d);
    }
    auto diag = merged_diagnostics(build, sim.diagnostics);
    if (p.name == "lq_control") {
        const auto params = apps::lq_control_from_json(ctx.config.problem.params);
        diag["lq_first_order_residual"] = apps::lq_first_order_residual(params, sim.paths);
        diag["note"] = "linear terminal slope makes g unbounded; outside the bounded-cost hypothesis, reference only";
    }
    ctx.write_json("diagnostics.json", diag);
    ctx.write_json("sandwich.json", sandwich.to_json());

    const auto u0 = field.value(0.0, p.x0);
    ctx.summary["u0"] = u0;
    ctx.summary["x0"] = p.x0;
    ctx.summary["sandwich_pass"] = sandwich.pass;
    ctx.summary["sandwich_margin"] = diag.at("sandwich_margin");
    ctx.summary["grid"] = {{"x_min", grid.x_min},
                           {"x_max", grid.x_max},
                           {"Nx", grid.Nx},
                           {"time_steps", grid.time_steps},
                           {"quadrature_order", grid.quadrature_order}};
    return kExitOk;
}

int run_nash(Context& ctx) {
    const auto& cfg = ctx.config;
    if (cfg.problem.custom || cfg.problem.name != "lq_game") {
        throw Error("config_invalid", "verify-nash needs the lq_game built-in");
    }
    const auto params = apps::game_from_json(cfg.problem.params);
    const apps::GameModel model(params);
    const FBSDEProblem p = apps::make_lq_game(params);
    const auto env = integrate_envelope(p.K, p.n, p.T, build_options(cfg).envelope_steps);
    auto [field, build] = build_decoupling_field(p, make_grid(p, env, cfg.grid), env, build_options(cfg));

    apps::NashOptions o;
    o.n_paths = cfg.nash.paths;
    o.n_deviations = cfg.nash.deviations;
    o.epsilons = cfg.nash.epsilons;
    o.seed = ctx.seed;
    const auto rep = apps::verify_nash(model, p, field, o);
    auto j = rep.to_json();
    j["diagnostics"] = build.to_json();
    ctx.write_json("nash.json", j);
    ctx.summary["pass"] = rep.pass;
    ctx.summary["cost"] = rep.cost;
    ctx.summary["worst_improvement_se"] = rep.worst_improvement_se;
    if (!rep.pass) {
        ctx.summary["error"] = error_json("nash_failed", "a deviation improved a player's cost").at("error");
        return kExitConditions;
    }
    return kExitOk;
}

int run_convergence(Context& ctx, const FBSDEProblem& p) {
    require_valid(p);
    const auto& cfg = ctx.config;
    std::optional<apps::ReferenceSolution> ref;
    if (!cfg.problem.custom) {
        const auto& names = apps::oracle_names();
        const std::string oracle_name = cfg.problem.name == "delayed_bsde" ? "delayed_bsde_linear" : cfg.problem.name;
        if (std::find(names.begin(), names.end(), oracle_name) != names.end()) {
            ref = apps::oracle(oracle_name, cfg.problem.params);
        }
    }
    const auto env = integrate_envelope(p.K, p.n, p.T, build_options(cfg).envelope_steps);
    const double reference = ref ? ref->field(0.0, p.x0) : std::nan("");

    struct Row {
        int Nx, steps;
        double u0, error, order;
    };
    std::vector<Row> rows;
    for (int level = 0; level < cfg.convergence_levels; ++level) {
        const GridSpec grid = make_grid(p, env, cfg.grid, level);
        auto [field, diag] = build_decoupling_field(p, grid, env, build_options(cfg));
        const double u0 = field.value(0.0, p.x0)[0];
        rows.push_back({grid.Nx, grid.time_steps, u0, ref ? std::abs(u0 - reference) : std::nan(""), std::nan("")});
    }
    // Observed order from oracle errors, or from successive differences.
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (ref) {
            if (rows[k].error > 0.0) rows[k].order = std::log2(rows[k - 1].error / rows[k].error);
        } else if (k >= 2) {
            const double a = std::abs(rows[k - 1].u0 - rows[k - 2].u0);
            const double b = std::abs(rows[k].u0 - rows[k - 1].u0);
            if (b > 0.0) rows[k].order = std::log2(a / b);
        }
    }

    auto os = ctx.open("convergence.csv");
    os << "level,Nx,time_steps,u0,reference,abs_error,observed_order\n";
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Row& r = rows[k];
        os << k << ',' << r.Nx << ',' << r.steps << ',' << format_double(r.u0) << ','
           << (ref ? format_double(reference) : "") << ',' << (ref ? format_double(r.error) : "") << ','
           << (std::isnan(r.order) ? "" : format_double(r.order)) << '\n';
        nlohmann::json row{{"level", k}, {"Nx", r.Nx}, {"time_steps", r.steps}, {"u0", r.u0}};
        if (ref) row["abs_error"] = r.error;
        if (!std::isnan(r.order)) row["observed_order"] = r.order;
        table.push_back(row);
    }
    nlohmann::json j{{"problem", p.name}, {"x0", p.x0}, {"levels", table}, {"reference_kind", ref ? "oracle" : "successive_differences"}};
    if (ref) j["reference"] = reference;
    ctx.write_json("convergence.json", j);
    ctx.summary["levels"] = table;
    return kExitOk;
}

unsigned threads_from_env() {
    const char* v = std::getenv("FBSDE_KIT_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    char* end = nullptr;
    const unsigned long k = std::strtoul(v, &end, 10);
    if (end == v || *end != '\0') throw Error("config_invalid", "FBSDE_KIT_THREADS must be a nonnegative integer");
    return static_cast<unsigned>(k);
}

void report_error(const std::optional<fs::path>& dir, const std::string& code, const std::string& message,
                  std::ostream& err) {
    const auto j = error_json(code, message);
    err << j.dump() << '\n';
    if (!dir) return;
    std::error_code ec;
    fs::create_directories(*dir, ec);
    if (!ec) {
        std::ofstream os(*dir / "error.json");
        if (os) os << j.dump(2) << '\n';
    }
}

}  // namespace

int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
    const fs::path dir = options.out_dir.value_or(config.output.dir);
    try {
        set_worker_count(options.threads ? *options.threads : threads_from_env());
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error("output_failed", "cannot create output directory " + dir.string() + ": " + ec.message());

        Context ctx{config, dir, options.seed.value_or(config.seed), nlohmann::json::object(), {}};
        int status = kExitOk;
        if (config.command == Command::verify_nash) {
            status = run_nash(ctx);
        } else {
            const FBSDEProblem p = make_problem(config.problem);
            switch (config.command) {
                case Command::check: status = run_check(ctx, p); break;
                case Command::solve: status = run_solve(ctx, p); break;
                case Command::convergence: status = run_convergence(ctx, p); break;
                case Command::verify_nash: break;
            }
        }
        ctx.summary["command"] = to_string(config.command);
        ctx.summary["problem"] = config.problem.name;
        ctx.summary["seed"] = ctx.seed;
        ctx.summary["exit_status"] = status;
        ctx.summary["artifacts"] = ctx.artifacts;
        if (ctx.summary.contains("error")) err << nlohmann::json{{"error", ctx.summary.at("error")}}.dump() << '\n';
        if (!options.quiet) out << ctx.summary.dump(2) << '\n';
        return status;
    } catch (const Error& e) {
        report_error(dir, e.code(), e.what(), err);
        return exit_status(e.code());
    } catch (const std::exception& e) {
        report_error(dir, "internal", e.what(), err);
        return kExitConfig;
    }
}

int run_file(const fs::path& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
    ExperimentConfig c;
    try {
        c = load_config(config);
    } catch (const Error& e) {
        report_error(options.out_dir, e.code(), e.what(), err);
        return kExitConfig;
    }
    return run(c, options, out, err);
}

}  // namespace fbsde::cli
