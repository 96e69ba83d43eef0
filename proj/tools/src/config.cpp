#include "fbsde_cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "fbsde/applications/builtins.hpp"
#include "fbsde/errors.hpp"

namespace fbsde::cli {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error("config_invalid", msg); }

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) invalid(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.contains(key)) invalid("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const nlohmann::json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid("'" + std::string(key) + "' in " + where + " has the wrong type");
    }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, const std::string& where, T& out) {
    if (j.contains(key)) out = get<T>(j, key, where);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, const std::string& where, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = get<T>(j, key, where);
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    return get<std::vector<std::string>>(j, key, where);
}

void positive(double v, const char* what) {
    if (!(v > 0.0)) invalid(std::string(what) + " must be positive");
}

CustomProblem parse_custom(const nlohmann::json& j) {
    const std::string w = "problem.custom";
    check_keys(j,
               {"n", "d", "T", "x0", "K", "growth_class", "lambda", "drift_uses_z", "diffusion_uses_state", "drift",
                "diffusion", "driver", "terminal"},
               w);
    CustomProblem c;
    read(j, "n", w, c.n);
    read(j, "d", w, c.d);
    read(j, "T", w, c.T);
    read(j, "x0", w, c.x0);
    read(j, "K", w, c.K);
    if (j.contains("growth_class")) {
        const auto g = growth_class_from_string(get<std::string>(j, "growth_class", w));
        if (!g) invalid("growth_class must be lipschitz, quadratic or superquadratic");
        c.growth_class = *g;
    }
    read(j, "lambda", w, c.lambda);
    read(j, "drift_uses_z", w, c.drift_uses_z);
    read(j, "diffusion_uses_state", w, c.diffusion_uses_state);
    read(j, "drift", w, c.drift);
    if (c.n < 1 || c.d < 1) invalid("problem.custom: n and d must be at least 1");
    c.diffusion.assign(static_cast<std::size_t>(c.d), "1");
    c.driver.assign(static_cast<std::size_t>(c.n), "0");
    c.terminal.assign(static_cast<std::size_t>(c.n), "x");
    if (j.contains("diffusion")) c.diffusion = string_list(j, "diffusion", w);
    if (j.contains("driver")) c.driver = string_list(j, "driver", w);
    if (j.contains("terminal")) c.terminal = string_list(j, "terminal", w);
    if (c.diffusion.size() != static_cast<std::size_t>(c.d)) invalid("problem.custom.diffusion needs d entries");
    if (c.driver.size() != static_cast<std::size_t>(c.n)) invalid("problem.custom.driver needs n entries");
    if (c.terminal.size() != static_cast<std::size_t>(c.n)) invalid("problem.custom.terminal needs n entries");
    positive(c.T, "problem.custom.T");
    if (c.K < 0.0) invalid("problem.custom.K must be nonnegative");
    return c;
}

Command parse_command(const std::string& s) {
    if (s == "check") return Command::check;
    if (s == "solve") return Command::solve;
    if (s == "verify-nash") return Command::verify_nash;
    if (s == "convergence") return Command::convergence;
    invalid("command must be check, solve, verify-nash or convergence (got '" + s + "')");
}

}  // namespace

std::string to_string(Command c) {
    switch (c) {
        case Command::check: return "check";
        case Command::solve: return "solve";
        case Command::verify_nash: return "verify-nash";
        case Command::convergence: return "convergence";
    }
    return "unknown";
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    check_keys(j, {"command", "problem", "grid", "seed", "paths", "solver", "check", "nash", "convergence", "output"},
               "config");
    ExperimentConfig c;
    if (!j.contains("command")) invalid("config needs a 'command'");
    c.command = parse_command(get<std::string>(j, "command", "config"));
    if (!j.contains("problem")) invalid("config needs a 'problem'");

    const auto& pj = j.at("problem");
    if (pj.is_string()) {
        c.problem.name = pj.get<std::string>();
    } else {
        check_keys(pj, {"builtin", "params", "custom"}, "problem");
        if (pj.contains("custom")) {
            if (pj.contains("builtin")) invalid("problem takes either 'builtin' or 'custom'");
            c.problem.name = "custom";
            c.problem.custom = parse_custom(pj.at("custom"));
        } else {
            if (!pj.contains("builtin")) invalid("problem needs 'builtin' or 'custom'");
            c.problem.name = get<std::string>(pj, "builtin", "problem");
        }
        if (pj.contains("params")) {
            c.problem.params = pj.at("params");
            if (!c.problem.params.is_object()) invalid("problem.params must be an object");
        }
    }
    if (!c.problem.custom) {
        const auto& names = apps::builtin_names();
        if (std::find(names.begin(), names.end(), c.problem.name) == names.end()) {
            throw Error("unknown_builtin", "unknown built-in problem '" + c.problem.name + "'");
        }
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, {"x_min", "x_max", "Nx", "time_steps", "quadrature_order"}, "grid");
        read(g, "x_min", "grid", c.grid.x_min);
        read(g, "x_max", "grid", c.grid.x_max);
        read(g, "Nx", "grid", c.grid.Nx);
        read(g, "time_steps", "grid", c.grid.time_steps);
        read(g, "quadrature_order", "grid", c.grid.quadrature_order);
        if (c.grid.x_min.has_value() != c.grid.x_max.has_value()) invalid("grid: give both x_min and x_max");
        if (c.grid.x_min && !(*c.grid.x_min < *c.grid.x_max)) invalid("grid: x_min must be below x_max");
        if (c.grid.Nx < 2) invalid("grid.Nx must be at least 2");
        if (c.grid.time_steps < 1) invalid("grid.time_steps must be at least 1");
        if (c.grid.quadrature_order < 2) invalid("grid.quadrature_order must be at least 2");
    }
    read(j, "seed", "config", c.seed);
    read(j, "paths", "config", c.paths);
    if (c.paths < 1) invalid("paths must be at least 1");

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        const std::string w = "solver";
        check_keys(s,
                   {"tolerance", "max_passes", "initial_guess", "check_conditions", "override_conditions",
                    "condition_samples"},
                   w);
        read(s, "tolerance", w, c.solver.tolerance);
        read(s, "max_passes", w, c.solver.max_passes);
        read(s, "initial_guess", w, c.solver.initial_guess);
        read(s, "check_conditions", w, c.solver.check_conditions);
        read(s, "override_conditions", w, c.solver.override_conditions);
        read(s, "condition_samples", w, c.solver.condition_samples);
        positive(c.solver.tolerance, "solver.tolerance");
        if (c.solver.max_passes < 1) invalid("solver.max_passes must be at least 1");
        if (c.solver.initial_guess != "frozen_terminal" && c.solver.initial_guess != "zero") {
            invalid("solver.initial_guess must be frozen_terminal or zero");
        }
        if (c.solver.condition_samples < 1) invalid("solver.condition_samples must be at least 1");
    }
    if (j.contains("check")) {
        const auto& s = j.at("check");
        check_keys(s, {"samples", "conditions", "peng_wu_G"}, "check");
        read(s, "samples", "check", c.check.samples);
        if (s.contains("conditions")) c.check.conditions = string_list(s, "conditions", "check");
        read(s, "peng_wu_G", "check", c.check.peng_wu_G);
        if (c.check.samples < 1) invalid("check.samples must be at least 1");
    }
    if (j.contains("nash")) {
        const auto& s = j.at("nash");
        check_keys(s, {"paths", "deviations", "epsilons"}, "nash");
        read(s, "paths", "nash", c.nash.paths);
        read(s, "deviations", "nash", c.nash.deviations);
        read(s, "epsilons", "nash", c.nash.epsilons);
        if (c.nash.paths < 2) invalid("nash.paths must be at least 2");
        if (c.nash.deviations < 1) invalid("nash.deviations must be at least 1");
        if (c.nash.epsilons.empty()) invalid("nash.epsilons must not be empty");
    }
    if (j.contains("convergence")) {
        const auto& s = j.at("convergence");
        check_keys(s, {"levels"}, "convergence");
        read(s, "levels", "convergence", c.convergence_levels);
        if (c.convergence_levels < 2 || c.convergence_levels > 5) invalid("convergence.levels must be in 2..5");
    }
    if (j.contains("output")) {
        const auto& s = j.at("output");
        check_keys(s, {"dir", "csv_paths"}, "output");
        if (s.contains("dir")) c.output.dir = get<std::string>(s, "dir", "output");
        read(s, "csv_paths", "output", c.output.csv_paths);
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("config_parse", "cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("config_parse", "malformed JSON in '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

FBSDEProblem make_problem(const ProblemConfig& c) {
    if (c.custom) return make_custom_problem(*c.custom);
    return apps::build_builtin(c.name, c.params);
}

}  // namespace fbsde::cli
