#include "fbsde/applications/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fbsde/errors.hpp"

namespace fbsde::apps {

double ReferenceSolution::at(const std::string& curve, double t) const {
    const auto it = curves.find(curve);
    if (it == curves.end()) throw PreconditionError("reference '" + name + "' has no curve '" + curve + "'");
    const auto& v = it->second;
    if (t <= times.front()) return v.front();
    if (t >= times.back()) return v.back();
    const double h = times[1] - times[0];
    auto k = static_cast<std::size_t>((t - times.front()) / h);
    k = std::min(k, times.size() - 2);
    const double w = (t - times[k]) / h;
    return v[k] + w * (v[k + 1] - v[k]);
}

double ReferenceSolution::field(double t, double x) const { return at(slope_curve, t) * x + at(offset_curve, t); }

nlohmann::json ReferenceSolution::to_json(std::size_t stride) const {
    stride = std::max<std::size_t>(stride, 1);
    nlohmann::json j{{"name", name}};
    std::vector<double> ts;
    for (std::size_t k = 0; k < times.size(); k += stride) ts.push_back(times[k]);
    j["t"] = ts;
    for (const auto& [key, v] : curves) {
        std::vector<double> out;
        for (std::size_t k = 0; k < v.size(); k += stride) out.push_back(v[k]);
        j[key] = out;
    }
    return j;
}

namespace {

// Backward RK4 for y' = rhs(t, y) from y(T) = yT on a uniform grid.
template <std::size_t N, typename Rhs>
std::vector<std::array<double, N>> integrate_backward(double T, int steps, std::array<double, N> yT, Rhs&& rhs) {
    const double h = T / steps;
    std::vector<std::array<double, N>> out(static_cast<std::size_t>(steps) + 1);
    out.back() = yT;
    std::array<double, N> y = yT;
    auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
        std::array<double, N> r{};
        for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    for (int k = steps; k > 0; --k) {
        const double t = h * k;
        const auto k1 = rhs(t, y);
        const auto k2 = rhs(t - 0.5 * h, axpy(y, -0.5 * h, k1));
        const auto k3 = rhs(t - 0.5 * h, axpy(y, -0.5 * h, k2));
        const auto k4 = rhs(t - h, axpy(y, -h, k3));
        for (std::size_t i = 0; i < N; ++i) y[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        out[static_cast<std::size_t>(k - 1)] = y;
    }
    return out;
}

std::vector<double> uniform_times(double T, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = k + 1 == t.size() ? T : T * static_cast<double>(k) / steps;
    return t;
}

}  // namespace

ReferenceSolution example36_oracle(const Example36Params& p, int steps) {
    validate(p);
    if (steps < 1) throw PreconditionError("oracle: steps must be at least 1");
    const auto sol = integrate_backward<2>(p.T, steps, {1.0, 0.0}, [&](double t, const std::array<double, 2>& y) {
        const double P = y[0];
        return std::array<double, 2>{P * P + P - 1.0, (1.0 + P) * y[1] + P * p.sigma(t)};
    });
    ReferenceSolution r;
    r.name = "example36";
    r.times = uniform_times(p.T, steps);
    auto& P = r.curves["P"];
    auto& phi = r.curves["phi"];
    auto& Z = r.curves["Z"];
    for (std::size_t k = 0; k < sol.size(); ++k) {
        P.push_back(sol[k][0]);
        phi.push_back(sol[k][1]);
        Z.push_back(sol[k][0] * p.sigma(r.times[k]));
    }
    r.slope_curve = "P";
    r.offset_curve = "phi";
    return r;
}

ReferenceSolution lq_oracle(const LQControlParams& p, int steps) {
    validate(p);
    if (steps < 1) throw PreconditionError("oracle: steps must be at least 1");
    const auto sol = integrate_backward<3>(p.T, steps, {p.G, p.g1, 0.0}, [&](double t, const std::array<double, 3>& y) {
        const double A = p.A(t), B = p.B(t), C = p.C(t), D = p.D(t), E = p.E(t), F = p.F(t), s = p.sigma(t);
        const double P = y[0], q = y[1];
        const double u = B * q + D;
        return std::array<double, 3>{B * B / F * P * P - 2.0 * A * P - E, -A * q - C + P * B * u / F,
                                     u * u / (2.0 * F) - 0.5 * s * s * P};
    });
    ReferenceSolution r;
    r.name = "lq_control";
    r.times = uniform_times(p.T, steps);
    auto& P = r.curves["P"];
    auto& q = r.curves["q"];
    auto& rr = r.curves["r"];
    for (const auto& y : sol) {
        P.push_back(y[0]);
        q.push_back(y[1]);
        rr.push_back(y[2]);
    }
    r.slope_curve = "P";
    r.offset_curve = "q";
    return r;
}

double lq_value(const ReferenceSolution& ref, double x0) {
    return 0.5 * ref.at("P", 0.0) * x0 * x0 + ref.at("q", 0.0) * x0 + ref.at("r", 0.0);
}

ReferenceSolution delayed_linear_oracle(double alpha, double c, double T, int steps) {
    if (!(alpha > 0.0)) throw PreconditionError("delayed oracle: alpha must be positive");
    if (!(T > 0.0)) throw PreconditionError("delayed oracle: T must be positive");
    if (steps < 1) throw PreconditionError("oracle: steps must be at least 1");
    const double s = std::sqrt(alpha);
    ReferenceSolution r;
    r.name = "delayed_bsde_linear";
    r.times = uniform_times(T, steps);
    auto& Y = r.curves["Y"];
    auto& P = r.curves["P"];
    auto& phi = r.curves["phi"];
    for (double t : r.times) {
        Y.push_back(c * std::cosh(s * t) / std::cosh(s * T));
        P.push_back(s * std::tanh(s * (T - t)));
        phi.push_back(c / std::cosh(s * (T - t)));
    }
    r.slope_curve = "P";
    r.offset_curve = "phi";
    return r;
}

const std::vector<std::string>& oracle_names() {
    static const std::vector<std::string> names{"example36", "lq_control", "delayed_bsde_linear"};
    return names;
}

ReferenceSolution oracle(const std::string& name, const nlohmann::json& params) {
    const nlohmann::json& j = params.is_null() ? nlohmann::json::object() : params;
    if (name == "example36") return example36_oracle(example36_from_json(j));
    if (name == "lq_control") return lq_oracle(lq_control_from_json(j));
    if (name == "delayed_bsde_linear" || name == "delayed_bsde") {
        const auto spec = delayed_from_json(j);
        const double alpha = j.contains("alpha") ? j.at("alpha").get<double>() : 1.0;
        return delayed_linear_oracle(alpha, spec.xi, spec.T);
    }
    throw Error("no_closed_form", "no closed-form reference for '" + name + "'");
}

}  // namespace fbsde::apps
