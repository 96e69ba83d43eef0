#include "fbsde/applications/nash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/random.hpp"

namespace fbsde::apps {

nlohmann::json NashReport::to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& c : trials) {
        t.push_back({{"player", c.player + 1},
                     {"deviation", c.deviation},
                     {"epsilon", c.epsilon},
                     {"mean_difference", c.mean_difference},
                     {"standard_error", c.standard_error},
                     {"pass", c.pass}});
    }
    return {{"pass", pass},
            {"paths", paths},
            {"cost", cost},
            {"cost_standard_error", cost_standard_error},
            {"worst_improvement_se", worst_improvement_se},
            {"trials", t}};
}

double perturbation(int k, double t, double T, std::uint64_t seed) {
    CounterRng rng(seed, 0xDE7u, static_cast<std::uint64_t>(k));
    const double amp = rng.uniform(0.5, 1.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double freq = 1.0 + static_cast<double>(k % 4);
    const double shift = rng.uniform(-0.5, 0.5);
    return amp * std::sin(freq * std::numbers::pi * t / T + phase) + shift * std::cos(std::numbers::pi * t / T);
}

NashReport verify_nash(const GameModel& model, const FBSDEProblem& problem, const DecouplingField& field,
                       const NashOptions& options) {
    const int n = model.players();
    if (problem.n != n || field.n != n) throw PreconditionError("verify_nash: field and game disagree on players");
    if (options.n_paths < 2) throw PreconditionError("verify_nash: at least two paths are needed");
    const auto nn = static_cast<std::size_t>(n);
    const auto& times = field.times();
    const std::size_t N = times.size() - 1;
    const double T = problem.T;
    const double sigma = model.params().sigma;

    struct Cell {
        int player, deviation;
        double eps;
    };
    std::vector<Cell> cells;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < options.n_deviations; ++k) {
            for (double e : options.epsilons) cells.push_back({i, k, e});
        }
    }
    // Perturbation values on the time grid.
    std::vector<std::vector<double>> phi(static_cast<std::size_t>(options.n_deviations), std::vector<double>(N));
    for (int k = 0; k < options.n_deviations; ++k) {
        for (std::size_t j = 0; j < N; ++j) phi[static_cast<std::size_t>(k)][j] = perturbation(k, times[j], T, options.seed);
    }

    const std::size_t P = options.n_paths;
    std::vector<double> base(P * nn), diff(P * cells.size());

    parallel_for(P, [&](std::size_t begin, std::size_t end) {
        std::vector<double> dW(N), alpha_hat(N * nn), y(nn), a(nn);
        for (std::size_t path = begin; path < end; ++path) {
            CounterRng rng(options.seed, path);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t j = 0; j < N; ++j) dW[j] = std::sqrt(times[j + 1] - times[j]) * normal(rng);

            // Candidate equilibrium along this path.
            std::vector<double> cost(nn, 0.0);
            double x = problem.x0;
            for (std::size_t j = 0; j < N; ++j) {
                const double t = times[j];
                const double dt = times[j + 1] - t;
                evaluate_layer(field.layer(j), x, y);
                std::span<double> ah(alpha_hat.data() + j * nn, nn);
                model.minimizers(t, x, y, ah);
                for (int i = 0; i < n; ++i) cost[static_cast<std::size_t>(i)] += model.running_cost(i, t, x, ah) * dt;
                x += model.drift(t, x, ah) * dt + sigma * dW[j];
            }
            for (int i = 0; i < n; ++i) {
                cost[static_cast<std::size_t>(i)] += model.terminal_cost(i, x);
                base[path * nn + static_cast<std::size_t>(i)] = cost[static_cast<std::size_t>(i)];
            }

            for (std::size_t c = 0; c < cells.size(); ++c) {
                const Cell& cell = cells[c];
                const auto pi = static_cast<std::size_t>(cell.player);
                const auto& ph = phi[static_cast<std::size_t>(cell.deviation)];
                double xd = problem.x0;
                double J = 0.0;
                for (std::size_t j = 0; j < N; ++j) {
                    const double t = times[j];
                    const double dt = times[j + 1] - t;
                    std::copy_n(alpha_hat.data() + j * nn, nn, a.begin());
                    a[pi] += cell.eps * ph[j];
                    J += model.running_cost(cell.player, t, xd, a) * dt;
                    xd += model.drift(t, xd, a) * dt + sigma * dW[j];
                }
                J += model.terminal_cost(cell.player, xd);
                diff[path * cells.size() + c] = J - cost[pi];
            }
        }
    });

    NashReport rep;
    rep.paths = P;
    const double Pd = static_cast<double>(P);
    for (std::size_t i = 0; i < nn; ++i) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t path = 0; path < P; ++path) {
            const double v = base[path * nn + i];
            s += v;
            s2 += v * v;
        }
        const double mean = s / Pd;
        const double var = std::max(0.0, (s2 - Pd * mean * mean) / (Pd - 1.0));
        rep.cost.push_back(mean);
        rep.cost_standard_error.push_back(std::sqrt(var / Pd));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double s = 0.0;
        for (std::size_t path = 0; path < P; ++path) s += diff[path * cells.size() + c];
        const double mean = s / Pd;
        double ss = 0.0;
        for (std::size_t path = 0; path < P; ++path) {
            const double e = diff[path * cells.size() + c] - mean;
            ss += e * e;
        }
        NashTrial tr;
        tr.player = cells[c].player;
        tr.deviation = cells[c].deviation;
        tr.epsilon = cells[c].eps;
        tr.mean_difference = mean;
        tr.standard_error = std::sqrt(ss / (Pd - 1.0) / Pd);
        tr.pass = mean >= -options.se_threshold * tr.standard_error;
        if (mean < 0.0 && tr.standard_error > 0.0) {
            rep.worst_improvement_se = std::max(rep.worst_improvement_se, -mean / tr.standard_error);
        } else if (mean < 0.0) {
            rep.worst_improvement_se = std::numeric_limits<double>::infinity();
        }
        rep.pass = rep.pass && tr.pass;
        rep.trials.push_back(tr);
    }
    return rep;
}

double lq_first_order_residual(const LQControlParams& p, const std::vector<SolutionPath>& paths) {
    double worst = 0.0;
    for (const auto& path : paths) {
        for (std::size_t j = 0; j < path.t.size(); ++j) {
            const double t = path.t[j];
            const double B = p.B(t), D = p.D(t), F = p.F(t);
            const double y = path.Y[j];
            const double u = (-B * y - D) / F;
            worst = std::max(worst, std::abs(B * y + D + F * u));
        }
    }
    return worst;
}

GameParams as_single_player_game(const LQControlParams& p) {
    GameParams g;
    g.players = 1;
    g.A = p.A(0.0);
    g.sigma = p.sigma(0.0);
    g.x0 = p.x0;
    g.T = p.T;
    g.b2 = {p.B(0.0)};
    g.E = {p.E(0.0)};
    g.C = {p.C(0.0)};
    g.F = {p.F(0.0)};
    g.D = {p.D(0.0)};
    g.G = {p.G};
    g.g1 = {p.g1};
    g.K = p.K;
    return g;
}

}  // namespace fbsde::apps
