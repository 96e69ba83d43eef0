#include "fbsde/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/random.hpp"

namespace fbsde {

nlohmann::json SampleBox::to_json() const {
    return {{"t", {t_min, t_max}},
            {"x", {x_min, x_max}},
            {"y", {y_min, y_max}},
            {"z", {z_min, z_max}},
            {"tie_probability", tie_probability}};
}

SampleBox default_box(const FBSDEProblem& p) {
    SampleBox box;
    box.t_max = p.T;
    return box;
}

PairSampler box_sampler(const FBSDEProblem& p, const SampleBox& box, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(p.n);
    const std::size_t nz = p.z_size();
    return [box, seed, n, nz](std::uint64_t index) {
        CounterRng rng(seed, index);
        auto tie = [&](double copy, double fresh) { return rng.uniform() < box.tie_probability ? copy : fresh; };
        SamplePair s;
        s.t = rng.uniform(box.t_min, box.t_max);
        s.a.x = rng.uniform(box.x_min, box.x_max);
        s.b.x = tie(s.a.x, rng.uniform(box.x_min, box.x_max));
        s.a.y.resize(n);
        s.b.y.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            s.a.y[j] = rng.uniform(box.y_min, box.y_max);
            s.b.y[j] = tie(s.a.y[j], rng.uniform(box.y_min, box.y_max));
        }
        s.a.z.resize(nz);
        s.b.z.resize(nz);
        for (std::size_t k = 0; k < nz; ++k) {
            s.a.z[k] = rng.uniform(box.z_min, box.z_max);
            s.b.z[k] = tie(s.a.z[k], rng.uniform(box.z_min, box.z_max));
        }
        return s;
    };
}

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

struct Eval {
    const FBSDEProblem& p;
    double t;

    double b(double x, std::span<const double> y, std::span<const double> z) const {
        const double v = p.drift(t, x, y, z);
        require_finite(v, "drift", t, x);
        return v;
    }
    double f(std::size_t i, double x, std::span<const double> y, std::span<const double> z) const {
        const double v = p.driver[i](t, x, y, z);
        require_finite(v, "driver", t, x);
        return v;
    }
    std::vector<double> f_all(double x, std::span<const double> y, std::span<const double> z) const {
        std::vector<double> out(static_cast<std::size_t>(p.n));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(i, x, y, z);
        return out;
    }
    std::vector<double> h(double x) const {
        std::vector<double> out(static_cast<std::size_t>(p.n));
        p.terminal(x, out);
        for (double v : out) require_finite(v, "terminal", t, x);
        return out;
    }
    std::vector<double> sigma(double x, std::span<const double> y) const {
        std::vector<double> out(static_cast<std::size_t>(p.d));
        p.diffusion(t, x, y, out);
        for (double v : out) require_finite(v, "diffusion", t, x);
        return out;
    }
};

}  // namespace

QuotientSet difference_quotients(const FBSDEProblem& p, double t, const Theta& a, const Theta& b) {
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const std::size_t nz = n * d;
    if (a.y.size() != n || b.y.size() != n || a.z.size() != nz || b.z.size() != nz) {
        throw PreconditionError("difference_quotients: point shapes do not match (n, d)");
    }
    const Eval e{p, t};
    QuotientSet q;

    const auto h1 = e.h(a.x);
    const auto h2 = e.h(b.x);
    q.h1.resize(n);
    for (std::size_t i = 0; i < n; ++i) q.h1[i] = quotient(h1[i] - h2[i], a.x, b.x);

    q.b1 = quotient(e.b(a.x, a.y, a.z) - e.b(b.x, a.y, a.z), a.x, b.x);
    q.f1.resize(n);
    for (std::size_t i = 0; i < n; ++i) q.f1[i] = quotient(e.f(i, a.x, a.y, a.z) - e.f(i, b.x, a.y, a.z), a.x, b.x);

    const auto s_a = e.sigma(a.x, a.y);
    const auto s_b = e.sigma(b.x, a.y);
    q.sigma1.resize(d);
    for (std::size_t k = 0; k < d; ++k) q.sigma1[k] = quotient(s_a[k] - s_b[k], a.x, b.x);

    // y-telescoping at (x_2, z_1): coordinates below j already at y_2.
    q.b2.resize(n);
    q.f2.resize(n * n);
    q.sigma2.resize(d * n);
    std::vector<double> ylo = a.y;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> yhi = ylo;
        yhi[j] = b.y[j];
        q.b2[j] = quotient(e.b(b.x, ylo, a.z) - e.b(b.x, yhi, a.z), a.y[j], b.y[j]);
        for (std::size_t i = 0; i < n; ++i) {
            q.f2[i * n + j] = quotient(e.f(i, b.x, ylo, a.z) - e.f(i, b.x, yhi, a.z), a.y[j], b.y[j]);
        }
        const auto s_lo = e.sigma(b.x, ylo);
        const auto s_hi = e.sigma(b.x, yhi);
        for (std::size_t k = 0; k < d; ++k) q.sigma2[k * n + j] = quotient(s_lo[k] - s_hi[k], a.y[j], b.y[j]);
        ylo = std::move(yhi);
    }

    // z-telescoping at (x_2, y_2), row by row.
    q.f3.resize(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> zlo = a.z;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t c = i * d + k;
            std::vector<double> zhi = zlo;
            zhi[c] = b.z[c];
            q.f3[c] = quotient(e.f(i, b.x, b.y, zlo) - e.f(i, b.x, b.y, zhi), a.z[c], b.z[c]);
            zlo = std::move(zhi);
        }
    }
    if (n == 1) {
        q.b3.resize(d);
        std::vector<double> zlo = a.z;
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<double> zhi = zlo;
            zhi[k] = b.z[k];
            q.b3[k] = quotient(e.b(b.x, b.y, zlo) - e.b(b.x, b.y, zhi), a.z[k], b.z[k]);
            zlo = std::move(zhi);
        }
    }
    return q;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

std::string to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::M1: return "M1";
        case Monotonicity::M2: return "M2";
        case Monotonicity::M3: return "M3";
        case Monotonicity::M4: return "M4";
        case Monotonicity::M5: return "M5";
    }
    return "unknown";
}

std::optional<Monotonicity> monotonicity_from_string(std::string_view s) {
    if (s == "M1") return Monotonicity::M1;
    if (s == "M2") return Monotonicity::M2;
    if (s == "M3") return Monotonicity::M3;
    if (s == "M4") return Monotonicity::M4;
    if (s == "M5") return Monotonicity::M5;
    return std::nullopt;
}

namespace {

nlohmann::json theta_json(const Theta& th) { return {{"x", th.x}, {"y", th.y}, {"z", th.z}}; }

// Per-sample outcome of one condition.
struct Outcome {
    bool violated = false;
    double excess = -std::numeric_limits<double>::infinity();
    double lipschitz = 0.0;
    double growth = 0.0;
    std::string detail;
};

class Tally {
public:
    explicit Tally(Outcome& o) : o_(o) {}

    // lhs <= rhs with relative slack.
    void bound(double lhs, double rhs, const char* what) {
        const double slack = kStructuralTolerance * std::abs(rhs) + 1e-12;
        const double excess = lhs - rhs;
        if (excess > slack) {
            if (!o_.violated || excess > o_.excess) {
                o_.excess = excess;
                o_.detail = what;
            }
            o_.violated = true;
        } else if (!o_.violated && excess > o_.excess) {
            o_.excess = excess;
        }
    }
    // Sign condition value <= tol.
    void nonpositive(double value, const std::string& what) {
        if (value > kMonotonicityTolerance) {
            if (!o_.violated || value > o_.excess) {
                o_.excess = value;
                o_.detail = what;
            }
            o_.violated = true;
        } else if (!o_.violated && value > o_.excess) {
            o_.excess = value;
        }
    }
    void lipschitz(double v) {
        if (std::isfinite(v)) o_.lipschitz = std::max(o_.lipschitz, v);
    }
    void growth(double v) {
        if (std::isfinite(v)) o_.growth = std::max(o_.growth, v);
    }

private:
    Outcome& o_;
};

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::vector<ConditionReport> reduce(std::vector<ConditionReport> reports, const std::vector<SamplePair>& samples,
                                    const std::vector<std::vector<Outcome>>& outcomes) {
    for (std::size_t c = 0; c < reports.size(); ++c) {
        auto& r = reports[c];
        r.samples = samples.size();
        double worst = -std::numeric_limits<double>::infinity();
        std::size_t worst_at = 0;
        bool any = false;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const Outcome& o = outcomes[s][c];
            r.lipschitz_estimate = std::max(r.lipschitz_estimate, o.lipschitz);
            r.growth_estimate = std::max(r.growth_estimate, o.growth);
            if (o.violated) {
                ++r.violations;
                if (!any || o.excess > worst) {
                    worst = o.excess;
                    worst_at = s;
                }
                any = true;
            }
        }
        if (any) {
            r.verdict = Verdict::fail;
            const auto& sp = samples[worst_at];
            r.witness = Witness{sp.t, sp.a, sp.b, worst, outcomes[worst_at][c].detail};
        } else if (r.verdict != Verdict::inconclusive) {
            r.verdict = Verdict::pass;
        }
    }
    return reports;
}

std::vector<SamplePair> draw(const PairSampler& sampler, std::size_t N) {
    std::vector<SamplePair> out(N);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) out[s] = sampler(s);
    });
    return out;
}

}  // namespace

nlohmann::json ConditionReport::to_json() const {
    nlohmann::json j{{"condition", id},
                     {"verdict", to_string(verdict)},
                     {"required", required},
                     {"lipschitz_estimate", lipschitz_estimate},
                     {"growth_estimate", growth_estimate},
                     {"samples", samples},
                     {"violations", violations}};
    if (!note.empty()) j["note"] = note;
    if (witness) {
        j["witness"] = {{"t", witness->t},
                        {"theta_1", theta_json(witness->a)},
                        {"theta_2", theta_json(witness->b)},
                        {"value", witness->value},
                        {"detail", witness->detail}};
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

nlohmann::json to_json(const std::vector<ConditionReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    return arr;
}

std::vector<ConditionReport> check_structural(const FBSDEProblem& p, const PairSampler& sampler, std::size_t N) {
    if (N < 1) throw PreconditionError("check_structural: N must be at least 1");
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    const double K = p.K;
    const bool section4 = p.diffusion_uses_state || p.drift_uses_z;
    const bool has_b2 = n == 1;

    std::vector<ConditionReport> reports;
    auto add = [&](std::string id, bool required) {
        ConditionReport r;
        r.id = std::move(id);
        r.required = required;
        reports.push_back(std::move(r));
    };
    add("H", !section4);
    add("A1", !section4 && p.growth_class == GrowthClass::lipschitz);
    add("A2", !section4 && p.growth_class == GrowthClass::quadratic);
    add("A3", !section4 && p.growth_class == GrowthClass::superquadratic);
    add("B1", p.diffusion_uses_state && !p.drift_uses_z);
    if (has_b2) add("B2", p.drift_uses_z);
    if (!p.lambda) reports[2].note = "lambda not declared; (A2)(i) skipped";
    reports[3].note = "rho-dependent z-Lipschitz bound not checkable; x-Lipschitz restricted to |z| <= M";

    const double M = 8.0 * K * K * std::sqrt(static_cast<double>(d * n));
    const auto samples = draw(sampler, N);
    std::vector<std::vector<Outcome>> outcomes(N, std::vector<Outcome>(reports.size()));

    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const auto& sp = samples[s];
            const Theta& a = sp.a;
            const Theta& b = sp.b;
            const Eval e{p, sp.t};
            auto& out = outcomes[s];
            const QuotientSet q = difference_quotients(p, sp.t, a, b);

            const double dx = std::abs(a.x - b.x);
            const double dy = dist(a.y, b.y);
            const double dz = dist(a.z, b.z);
            const double ya = norm(a.y);
            const double za = norm(a.z);
            const double zb = norm(b.z);

            const double b_a = e.b(a.x, a.y, a.z);
            const double b_xy = std::abs(b_a - e.b(b.x, b.y, a.z));
            const double b_xyz = std::abs(b_a - e.b(b.x, b.y, b.z));
            const auto h_a = e.h(a.x);
            const auto h_b = e.h(b.x);
            const double dh = dist(h_a, h_b);
            const auto f_a = e.f_all(a.x, a.y, a.z);
            const auto f_b = e.f_all(b.x, b.y, b.z);
            const double df = dist(f_a, f_b);
            const double fa_norm = norm(f_a);
            const auto s_a = e.sigma(a.x, a.y);
            const double ds = dist(s_a, e.sigma(b.x, b.y));

            double quotient_b = std::abs(q.b1);
            for (double v : q.b2) quotient_b = std::max(quotient_b, std::abs(v));
            double quotient_h = 0.0;
            for (double v : q.h1) quotient_h = std::max(quotient_h, std::abs(v));
            double quotient_f = 0.0;
            for (double v : q.f1) quotient_f = std::max(quotient_f, std::abs(v));
            for (double v : q.f2) quotient_f = std::max(quotient_f, std::abs(v));
            for (double v : q.f3) quotient_f = std::max(quotient_f, std::abs(v));

            // (H)
            {
                Tally tl(out[0]);
                tl.bound(b_xy, K * (dx + dy), "b Lipschitz in (x, y)");
                tl.bound(std::abs(b_a), K * (1.0 + std::abs(a.x) + ya), "b linear growth");
                tl.bound(dh, K * dx, "h Lipschitz");
                for (std::size_t i = 0; i < n && n > 1; ++i) {
                    std::vector<double> zm = b.z;
                    std::copy_n(a.z.begin() + static_cast<std::ptrdiff_t>(i * d), d,
                                zm.begin() + static_cast<std::ptrdiff_t>(i * d));
                    const double fi = f_a[i];
                    tl.bound(std::abs(fi - e.f(i, a.x, a.y, zm)), 0.0, "driver reads z outside its own row");
                }
                tl.lipschitz(ratio(b_xy, dx + dy));
                tl.lipschitz(ratio(dh, dx));
                tl.lipschitz(std::max(quotient_b, quotient_h));
                tl.growth(std::abs(b_a) / (1.0 + std::abs(a.x) + ya));
            }
            // (A1)
            {
                Tally tl(out[1]);
                tl.bound(df, K * (dx + dy + dz), "f Lipschitz in (x, y, z)");
                tl.lipschitz(ratio(df, dx + dy + dz));
                tl.lipschitz(quotient_f);
            }
            // (A2)
            {
                Tally tl(out[2]);
                if (p.lambda) tl.bound(norm(h_a), *p.lambda, "|h| <= lambda");
                const double local = K * (dx + dy) + K * (1.0 + za + zb) * dz;
                tl.bound(df, local, "f quadratic-local Lipschitz");
                tl.bound(fa_norm, K * (1.0 + ya + za * za), "f quadratic growth");
                tl.lipschitz(ratio(df, dx + dy + (1.0 + za + zb) * dz));
                tl.growth(fa_norm / (1.0 + ya + za * za));
            }
            // (A3)
            {
                Tally tl(out[3]);
                tl.bound(norm(s_a), K, "|sigma_t| <= K");
                std::vector<double> zM = a.z;
                if (za > M) {
                    for (auto& v : zM) v = za > 0.0 ? v * M / za : 0.0;
                }
                const double fx = dist(e.f_all(a.x, a.y, zM), e.f_all(b.x, a.y, zM));
                tl.bound(fx, K * dx, "f x-Lipschitz on |z| <= M");
                const auto f_xa = e.f_all(b.x, a.y, a.z);
                const auto f_yb = e.f_all(a.x, b.y, b.z);
                double mixed = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double m = f_a[i] - f_xa[i] - f_yb[i] + f_b[i];
                    mixed += m * m;
                }
                mixed = std::sqrt(mixed);
                tl.bound(mixed, K * dx * (dy + dz), "f mixed x-(y, z) condition");
                tl.lipschitz(ratio(fx, dx));
                tl.growth(ratio(mixed, dx * (dy + dz)));
            }
            // (B1)
            {
                Tally tl(out[4]);
                tl.bound(df, K * (dx + dy + dz), "f Lipschitz in (x, y, z)");
                tl.bound(dh, K * dx, "h Lipschitz");
                tl.bound(ds, K * (dx + dy), "sigma Lipschitz in (x, y)");
                tl.bound(b_xy, K * (dx + dy), "b Lipschitz in (x, y)");
                tl.lipschitz(ratio(df, dx + dy + dz));
                tl.lipschitz(ratio(ds, dx + dy));
                tl.lipschitz(ratio(b_xy, dx + dy));
                tl.lipschitz(std::max({quotient_b, quotient_h, quotient_f}));
            }
            // (B2)
            if (has_b2) {
                Tally tl(out[5]);
                tl.bound(df, K * (dx + dy + dz), "f Lipschitz in (x, y, z)");
                tl.bound(dh, K * dx, "h Lipschitz");
                tl.bound(ds, K * (dx + dy), "sigma Lipschitz in (x, y)");
                tl.bound(b_xyz, K * (dx + dy + dz), "b Lipschitz in (x, y, z)");
                tl.lipschitz(ratio(df, dx + dy + dz));
                tl.lipschitz(ratio(b_xyz, dx + dy + dz));
                tl.lipschitz(std::max({quotient_b, quotient_h, quotient_f}));
            }
        }
    });
    return reduce(std::move(reports), samples, outcomes);
}

std::vector<ConditionReport> check_monotonicity(const FBSDEProblem& p, const std::vector<Monotonicity>& which,
                                                const PairSampler& sampler, std::size_t N) {
    if (N < 1) throw PreconditionError("check_monotonicity: N must be at least 1");
    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    for (auto m : which) {
        if (m == Monotonicity::M5 && n != 1) throw PreconditionError("M5 is defined for n = 1 only");
    }
    std::vector<ConditionReport> reports;
    for (auto m : which) {
        ConditionReport r;
        r.id = to_string(m);
        r.required = m == Monotonicity::M1 || m == Monotonicity::M2 || m == Monotonicity::M3 ||
                     (m == Monotonicity::M4 && p.diffusion_uses_state) ||
                     (m == Monotonicity::M5 && p.drift_uses_z);
        if (m == Monotonicity::M2 && n == 1) r.note = "vacuous for n = 1 (no off-diagonal coupling)";
        reports.push_back(std::move(r));
    }
    const auto samples = draw(sampler, N);
    std::vector<std::vector<Outcome>> outcomes(N, std::vector<Outcome>(reports.size()));

    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const auto& sp = samples[s];
            const QuotientSet q = difference_quotients(p, sp.t, sp.a, sp.b);
            for (std::size_t c = 0; c < which.size(); ++c) {
                Tally tl(outcomes[s][c]);
                switch (which[c]) {
                    case Monotonicity::M1:
                        for (std::size_t j = 0; j < n; ++j) {
                            tl.nonpositive(q.b2[j], "b_2^" + std::to_string(j + 1));
                            tl.lipschitz(std::abs(q.b2[j]));
                        }
                        break;
                    case Monotonicity::M2:
                        for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < n; ++j) {
                                if (i == j) continue;
                                const double v = q.f2[i * n + j];
                                tl.nonpositive(-v, "f_2^" + std::to_string(i + 1) + std::to_string(j + 1));
                                tl.lipschitz(std::abs(v));
                            }
                        }
                        break;
                    case Monotonicity::M3:
                        for (std::size_t i = 0; i < n; ++i) {
                            tl.nonpositive(-q.f1[i], "f_1^" + std::to_string(i + 1));
                            tl.nonpositive(-q.h1[i], "h_1^" + std::to_string(i + 1));
                            tl.lipschitz(std::max(std::abs(q.f1[i]), std::abs(q.h1[i])));
                        }
                        break;
                    case Monotonicity::M4:
                        for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < n; ++j) {
                                double v = q.b2[j];
                                for (std::size_t k = 0; k < d; ++k) v += q.f3[i * d + k] * q.sigma2[k * n + j];
                                tl.nonpositive(v, "b_2 + f_3^" + std::to_string(i + 1) + " sigma_2^T, column " +
                                                      std::to_string(j + 1));
                                tl.lipschitz(std::abs(v));
                            }
                        }
                        break;
                    case Monotonicity::M5: {
                        double v = q.b2[0];
                        double w = 0.0;
                        for (std::size_t k = 0; k < d; ++k) {
                            v += q.f3[k] * q.sigma2[k] + q.b3[k] * q.sigma1[k];
                            w += q.b3[k] * q.sigma2[k];
                        }
                        tl.nonpositive(v, "b_2 + f_3 sigma_2^T + b_3 sigma_1^T");
                        tl.nonpositive(w, "b_3 sigma_2^T");
                        tl.lipschitz(std::max(std::abs(v), std::abs(w)));
                        break;
                    }
                }
            }
        }
    });
    return reduce(std::move(reports), samples, outcomes);
}

double peng_wu_value(double G, double dx, double dy, double dz) {
    return G * (-dx * dx - dy * dy + dx * dy + dx * dz);
}

ConditionReport check_peng_wu(double G, const SampleBox& box, std::size_t N, std::uint64_t seed) {
    if (N < 1) throw PreconditionError("check_peng_wu: N must be at least 1");
    ConditionReport r;
    r.id = "PengWu";
    r.samples = N;
    const double hx = 0.5 * (box.x_max - box.x_min);
    const double hy = 0.5 * (box.y_max - box.y_min);
    const double hz = 0.5 * (box.z_max - box.z_min);

    struct Extreme {
        double value = 0.0;
        double dx = 0.0, dy = 0.0, dz = 0.0;
        bool seen = false;
    } pos, neg;
    double terminal_min = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < N; ++s) {
        CounterRng rng(seed, s);
        const double dx = rng.uniform(-hx, hx);
        const double dy = rng.uniform(-hy, hy);
        const double dz = rng.uniform(-hz, hz);
        const double v = peng_wu_value(G, dx, dy, dz);
        terminal_min = std::min(terminal_min, dx * dx);
        r.growth_estimate = std::max(r.growth_estimate, std::abs(v));
        if (v > kMonotonicityTolerance && (!pos.seen || v > pos.value)) pos = {v, dx, dy, dz, true};
        if (v < -kMonotonicityTolerance && (!neg.seen || v < neg.value)) neg = {v, dx, dy, dz, true};
    }
    auto diff_theta = [](double dx, double dy, double dz) { return Theta{dx, {dy}, {dz}}; };
    std::ostringstream note;
    note << "terminal part (x - x')^2 >= 0 holds on all samples (min " << terminal_min << ")";

    if (G == 0.0) {
        r.verdict = Verdict::fail;
        r.witness = Witness{0.0, diff_theta(0, 0, 0), Theta{0.0, {0.0}, {0.0}}, 0.0, "G = 0: the form vanishes identically"};
        note << "; G = 0 is degenerate";
    } else if (pos.seen && neg.seen) {
        r.verdict = Verdict::fail;
        r.violations = 1;
        std::ostringstream detail;
        detail << "sign flip: value " << pos.value << " at theta_1 and " << neg.value << " at theta_2";
        r.witness = Witness{0.0, diff_theta(pos.dx, pos.dy, pos.dz), diff_theta(neg.dx, neg.dy, neg.dz), pos.value,
                            detail.str()};
    } else {
        r.verdict = Verdict::pass;
    }
    r.note = note.str();
    return r;
}

}  // namespace fbsde
