#include <memory>

#include "fbsde/errors.hpp"
#include "fbsde/expression.hpp"
#include "fbsde_cli/config.hpp"

namespace fbsde::cli {

namespace {

Expression compile(const std::string& text, int n, int d, const std::string& what) {
    try {
        return Expression::compile(text, n, d);
    } catch (const Error& e) {
        throw Error(e.code(), what + ": " + e.what());
    }
}

}  // namespace

FBSDEProblem make_custom_problem(const CustomProblem& c) {
    FBSDEProblem p;
    p.name = "custom";
    p.n = c.n;
    p.d = c.d;
    p.T = c.T;
    p.x0 = c.x0;
    p.K = c.K;
    p.growth_class = c.growth_class;
    p.lambda = c.lambda;
    p.drift_uses_z = c.drift_uses_z;
    p.diffusion_uses_state = c.diffusion_uses_state;

    auto drift = std::make_shared<Expression>(compile(c.drift, c.n, c.d, "drift"));
    p.drift = [drift](double t, double x, std::span<const double> y, std::span<const double> z) {
        return (*drift)(t, x, y, z);
    };

    auto diffusion = std::make_shared<std::vector<Expression>>();
    for (std::size_t k = 0; k < c.diffusion.size(); ++k) {
        auto e = compile(c.diffusion[k], c.n, c.d, "diffusion[" + std::to_string(k) + "]");
        if (e.uses_z()) throw Error("expression_syntax", "diffusion[" + std::to_string(k) + "] may not read z");
        diffusion->push_back(std::move(e));
    }
    const std::vector<double> zero_z(p.z_size(), 0.0);
    p.diffusion = [diffusion, zero_z](double t, double x, std::span<const double> y, std::span<double> out) {
        for (std::size_t k = 0; k < diffusion->size(); ++k) out[k] = (*diffusion)[k](t, x, y, zero_z);
    };

    for (std::size_t i = 0; i < c.driver.size(); ++i) {
        auto e = std::make_shared<Expression>(compile(c.driver[i], c.n, c.d, "driver[" + std::to_string(i) + "]"));
        p.driver.push_back([e](double t, double x, std::span<const double> y, std::span<const double> z) {
            return (*e)(t, x, y, z);
        });
    }

    auto terminal = std::make_shared<std::vector<Expression>>();
    for (std::size_t i = 0; i < c.terminal.size(); ++i) {
        auto e = compile(c.terminal[i], c.n, c.d, "terminal[" + std::to_string(i) + "]");
        if (e.uses_y() || e.uses_z()) {
            throw Error("expression_syntax", "terminal[" + std::to_string(i) + "] may only read x and t");
        }
        terminal->push_back(std::move(e));
    }
    const std::vector<double> zero_y(static_cast<std::size_t>(c.n), 0.0);
    const double T = c.T;
    p.terminal = [terminal, zero_y, zero_z, T](double x, std::span<double> out) {
        for (std::size_t i = 0; i < terminal->size(); ++i) out[i] = (*terminal)[i](T, x, zero_y, zero_z);
    };
    return p;
}

}  // namespace fbsde::cli
