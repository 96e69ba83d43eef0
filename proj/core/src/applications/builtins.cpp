#include "fbsde/applications/builtins.hpp"

#include <algorithm>
#include <cmath>

#include "fbsde/errors.hpp"

namespace fbsde::apps {

TimeFn constant(double v) {
    return [v](double) { return v; };
}

namespace {

constexpr int kCoefficientSamples = 65;

template <typename Fn>
double sup_over_time(double T, Fn&& fn) {
    double s = 0.0;
    for (int k = 0; k < kCoefficientSamples; ++k) s = std::max(s, fn(T * k / (kCoefficientSamples - 1)));
    return s;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw PreconditionError(msg);
}

}  // namespace

void validate(const Example36Params& p) {
    require(p.sigma != nullptr, "example36: sigma is empty");
    require(p.T > 0.0 && std::isfinite(p.T), "example36: T must be positive");
    require(std::isfinite(p.x0), "example36: x0 must be finite");
}

void validate(const LQControlParams& p) {
    require(p.A && p.B && p.C && p.D && p.E && p.F && p.sigma, "lq_control: coefficient function is empty");
    require(p.T > 0.0 && std::isfinite(p.T), "lq_control: T must be positive");
    require(std::isfinite(p.x0), "lq_control: x0 must be finite");
    require(p.G >= 0.0, "lq_control: terminal slope g_x = G x + g1 must be nondecreasing (G >= 0)");
    for (int k = 0; k < kCoefficientSamples; ++k) {
        const double t = p.T * k / (kCoefficientSamples - 1);
        require(p.F(t) > 0.0, "lq_control: F must be positive");
        require(p.E(t) >= 0.0, "lq_control: E must be nonnegative");
    }
}

void validate(const GameParams& p) {
    require(p.players >= 1, "lq_game: players must be at least 1");
    const auto n = static_cast<std::size_t>(p.players);
    for (const auto* v : {&p.b2, &p.E, &p.C, &p.F, &p.D, &p.G, &p.g1}) {
        require(v->size() == n, "lq_game: per-player coefficient lists must have one entry per player");
    }
    require(p.T > 0.0 && std::isfinite(p.T), "lq_game: T must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        require(p.F[i] > 0.0, "lq_game: F_i (convexity modulus) must be positive");
        require(p.E[i] >= 0.0, "lq_game: E_i must be nonnegative");
        require(p.G[i] >= 0.0, "lq_game: G_i must be nonnegative");
    }
}

void validate(const DelayedBSDESpec& p) {
    require(p.g != nullptr, "delayed_bsde: generator is empty");
    require(p.T > 0.0 && std::isfinite(p.T), "delayed_bsde: T must be positive");
    require(p.d >= 1, "delayed_bsde: d must be at least 1");
    std::vector<double> z(static_cast<std::size_t>(p.d), 0.0);
    // (C0): g nonincreasing in y, sampled.
    for (int k = 0; k < 32; ++k) {
        const double t = p.T * k / 31.0;
        const double y = -4.0 + 0.25 * k;
        for (auto& e : z) e = std::sin(1.0 + k);
        require(p.g(t, y, z) >= p.g(t, y + 0.5, z) - 1e-12, "delayed_bsde: g must be nonincreasing in y");
    }
}

DelayedBSDESpec linear_delayed(double alpha, double xi, double T) {
    if (!(alpha > 0.0)) throw PreconditionError("delayed_bsde: alpha must be positive");
    DelayedBSDESpec s;
    s.g = [alpha](double, double y, std::span<const double>) { return -alpha * y; };
    s.xi = xi;
    s.T = T;
    s.K = std::max(1.0, alpha);
    return s;
}

FBSDEProblem make_example36(const Example36Params& p) {
    validate(p);
    FBSDEProblem q;
    q.name = "example36";
    q.T = p.T;
    q.x0 = p.x0;
    q.K = 1.0;
    q.drift = [](double, double, std::span<const double> y, std::span<const double>) { return -y[0]; };
    q.diffusion = [sigma = p.sigma](double t, double, std::span<const double>, std::span<double> out) {
        out[0] = sigma(t);
    };
    q.driver = {[](double, double x, std::span<const double> y, std::span<const double> z) { return x - y[0] - z[0]; }};
    q.terminal = [](double x, std::span<double> out) { out[0] = x; };
    return q;
}

double lq_constant(const LQControlParams& p) {
    if (p.K > 0.0) return p.K;
    const double k = sup_over_time(p.T, [&](double t) {
        const double B = p.B(t), F = p.F(t);
        return std::max({std::abs(p.A(t)), B * B / F, std::abs(B * p.D(t) / F), std::abs(p.E(t)),
                         std::abs(p.C(t))});
    });
    return std::max(k, std::abs(p.G));
}

FBSDEProblem make_lq_control(const LQControlParams& p) {
    validate(p);
    FBSDEProblem q;
    q.name = "lq_control";
    q.T = p.T;
    q.x0 = p.x0;
    q.K = lq_constant(p);
    q.drift = [A = p.A, B = p.B, D = p.D, F = p.F](double t, double x, std::span<const double> y,
                                                   std::span<const double>) {
        const double b = B(t);
        return A(t) * x + b * (-b * y[0] - D(t)) / F(t);
    };
    q.diffusion = [sigma = p.sigma](double t, double, std::span<const double>, std::span<double> out) {
        out[0] = sigma(t);
    };
    q.driver = {[A = p.A, E = p.E, C = p.C](double t, double x, std::span<const double> y, std::span<const double>) {
        return A(t) * y[0] + E(t) * x + C(t);
    }};
    q.terminal = [G = p.G, g1 = p.g1](double x, std::span<double> out) { out[0] = G * x + g1; };
    return q;
}

GameModel::GameModel(GameParams params) : p_(std::move(params)) { validate(p_); }

double GameModel::drift(double, double x, std::span<const double> alpha) const {
    double b = p_.A * x;
    for (std::size_t i = 0; i < alpha.size(); ++i) b += p_.b2[i] * alpha[i];
    return b;
}

double GameModel::running_cost(int i, double, double x, std::span<const double> alpha) const {
    const auto k = static_cast<std::size_t>(i);
    const double a = alpha[k];
    return 0.5 * p_.E[k] * x * x + p_.C[k] * x + 0.5 * p_.F[k] * a * a + p_.D[k] * a;
}

double GameModel::terminal_cost(int i, double x) const {
    const auto k = static_cast<std::size_t>(i);
    return 0.5 * p_.G[k] * x * x + p_.g1[k] * x;
}

double GameModel::terminal_slope(int i, double x) const {
    const auto k = static_cast<std::size_t>(i);
    return p_.G[k] * x + p_.g1[k];
}

double GameModel::hamiltonian(int i, double t, double x, double yi, std::span<const double> alpha) const {
    return drift(t, x, alpha) * yi + running_cost(i, t, x, alpha);
}

double GameModel::hamiltonian_x(int i, double, double x, double yi, std::span<const double>) const {
    const auto k = static_cast<std::size_t>(i);
    return p_.A * yi + p_.E[k] * x + p_.C[k];
}

double GameModel::minimizer(int i, double, double, double yi) const {
    const auto k = static_cast<std::size_t>(i);
    return -(p_.b2[k] * yi + p_.D[k]) / p_.F[k];
}

void GameModel::minimizers(double t, double x, std::span<const double> y, std::span<double> out) const {
    for (int i = 0; i < p_.players; ++i) out[static_cast<std::size_t>(i)] = minimizer(i, t, x, y[static_cast<std::size_t>(i)]);
}

double game_constant(const GameParams& p) {
    if (p.K > 0.0) return p.K;
    std::vector<double> c(p.b2.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = p.b2[i] * p.b2[i] / p.F[i];
        offset += std::abs(p.b2[i] * p.D[i] / p.F[i]);
    }
    double cmax = 0.0;
    for (double v : p.C) cmax = std::max(cmax, std::abs(v));
    return std::max({std::abs(p.A), l2(c), offset, l2(p.E), l2(p.G), cmax});
}

FBSDEProblem make_lq_game(const GameParams& params) {
    validate(params);
    auto model = std::make_shared<const GameModel>(params);
    FBSDEProblem q;
    q.name = "lq_game";
    q.n = params.players;
    q.d = 1;
    q.T = params.T;
    q.x0 = params.x0;
    q.K = game_constant(params);
    q.drift = [model](double t, double x, std::span<const double> y, std::span<const double>) {
        double b = model->params().A * x;
        for (int i = 0; i < model->players(); ++i) {
            b += model->params().b2[static_cast<std::size_t>(i)] * model->minimizer(i, t, x, y[static_cast<std::size_t>(i)]);
        }
        return b;
    };
    q.diffusion = [s = params.sigma](double, double, std::span<const double>, std::span<double> out) { out[0] = s; };
    for (int i = 0; i < params.players; ++i) {
        q.driver.push_back([model, i](double t, double x, std::span<const double> y, std::span<const double>) {
            const double yi = y[static_cast<std::size_t>(i)];
            return model->hamiltonian_x(i, t, x, yi, {});
        });
    }
    q.terminal = [model](double x, std::span<double> out) {
        for (int i = 0; i < model->players(); ++i) out[static_cast<std::size_t>(i)] = model->terminal_slope(i, x);
    };
    return q;
}

FBSDEProblem make_delayed_bsde(const DelayedBSDESpec& p) {
    validate(p);
    FBSDEProblem q;
    q.name = "delayed_bsde";
    q.d = p.d;
    q.T = p.T;
    q.x0 = 0.0;
    q.K = p.K;
    q.growth_class = p.growth_class;
    if (p.growth_class == GrowthClass::quadratic) q.lambda = std::abs(p.xi);
    q.drift = [](double, double, std::span<const double> y, std::span<const double>) { return -y[0]; };
    q.diffusion = [](double, double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    q.driver = {[g = p.g](double t, double x, std::span<const double>, std::span<const double> z) { return g(t, -x, z); }};
    q.terminal = [xi = p.xi](double, std::span<double> out) { out[0] = xi; };
    return q;
}

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{"example36", "lq_control", "lq_game", "delayed_bsde"};
    return names;
}

namespace {

double num(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw PreconditionError(std::string("parameter '") + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> vec(const nlohmann::json& j, const char* key, std::vector<double> fallback, std::size_t n) {
    if (!j.contains(key)) {
        if (fallback.size() != n) fallback.assign(n, fallback.empty() ? 0.0 : fallback.front());
        return fallback;
    }
    const auto& v = j.at(key);
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (!v.is_array()) throw PreconditionError(std::string("parameter '") + key + "' must be a number or an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw PreconditionError(std::string("parameter '") + key + "' must contain numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& name) {
    if (!j.is_object()) throw PreconditionError(name + ": params must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; })) {
            throw PreconditionError(name + ": unknown parameter '" + k + "'");
        }
    }
}

}  // namespace

Example36Params example36_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"sigma", "x0", "T"}, "example36");
    Example36Params p;
    p.sigma = constant(num(j, "sigma", 1.0));
    p.x0 = num(j, "x0", p.x0);
    p.T = num(j, "T", p.T);
    return p;
}

LQControlParams lq_control_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"A", "B", "C", "D", "E", "F", "G", "g1", "sigma", "x0", "T", "K"}, "lq_control");
    LQControlParams p;
    p.A = constant(num(j, "A", 1.0));
    p.B = constant(num(j, "B", 1.0));
    p.C = constant(num(j, "C", 0.0));
    p.D = constant(num(j, "D", 0.0));
    p.E = constant(num(j, "E", 1.0));
    p.F = constant(num(j, "F", 1.0));
    p.sigma = constant(num(j, "sigma", 1.0));
    p.G = num(j, "G", p.G);
    p.g1 = num(j, "g1", p.g1);
    p.x0 = num(j, "x0", p.x0);
    p.T = num(j, "T", p.T);
    p.K = num(j, "K", 0.0);
    return p;
}

GameParams game_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"players", "A", "sigma", "x0", "T", "b2", "E", "C", "F", "D", "G", "g1", "K"}, "lq_game");
    GameParams p;
    if (j.contains("players")) {
        if (!j.at("players").is_number_integer()) throw PreconditionError("lq_game: players must be an integer");
        p.players = j.at("players").get<int>();
    }
    if (p.players < 1) throw PreconditionError("lq_game: players must be at least 1");
    const auto n = static_cast<std::size_t>(p.players);
    p.A = num(j, "A", p.A);
    p.sigma = num(j, "sigma", p.sigma);
    p.x0 = num(j, "x0", p.x0);
    p.T = num(j, "T", p.T);
    p.b2 = vec(j, "b2", p.b2, n);
    p.E = vec(j, "E", p.E, n);
    p.C = vec(j, "C", p.C, n);
    p.F = vec(j, "F", p.F, n);
    p.D = vec(j, "D", p.D, n);
    p.G = vec(j, "G", p.G, n);
    p.g1 = vec(j, "g1", p.g1, n);
    p.K = num(j, "K", 0.0);
    return p;
}

DelayedBSDESpec delayed_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"alpha", "xi", "T"}, "delayed_bsde");
    return linear_delayed(num(j, "alpha", 1.0), num(j, "xi", 1.0), num(j, "T", 1.0));
}

FBSDEProblem build_builtin(const std::string& name, const nlohmann::json& params) {
    const nlohmann::json& j = params.is_null() ? nlohmann::json::object() : params;
    if (name == "example36") return make_example36(example36_from_json(j));
    if (name == "lq_control") return make_lq_control(lq_control_from_json(j));
    if (name == "lq_game") return make_lq_game(game_from_json(j));
    if (name == "delayed_bsde") return make_delayed_bsde(delayed_from_json(j));
    throw Error("unknown_builtin", "unknown builtin problem '" + name + "'");
}

}  // namespace fbsde::apps
