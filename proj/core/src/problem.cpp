#include "fbsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/random.hpp"

namespace fbsde {

std::string to_string(GrowthClass g) {
    switch (g) {
        case GrowthClass::lipschitz: return "lipschitz";
        case GrowthClass::quadratic: return "quadratic";
        case GrowthClass::superquadratic: return "superquadratic";
    }
    return "unknown";
}

std::optional<GrowthClass> growth_class_from_string(std::string_view s) {
    if (s == "lipschitz") return GrowthClass::lipschitz;
    if (s == "quadratic") return GrowthClass::quadratic;
    if (s == "superquadratic") return GrowthClass::superquadratic;
    return std::nullopt;
}

void require_finite(double v, const char* what, double t, double x) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << what << " returned a non-finite value at t=" << t << ", x=" << x;
        throw CoefficientError(os.str());
    }
}

namespace {

constexpr int kProbeCount = 12;

bool nearly_equal(double a, double b) {
    if (a == b) return true;
    return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b));
}

void fill(CounterRng& rng, std::span<double> v, double lo, double hi) {
    for (auto& e : v) e = rng.uniform(lo, hi);
}

}  // namespace

std::vector<Violation> validate_problem(const FBSDEProblem& p) {
    std::vector<Violation> out;
    auto report = [&](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };

    if (!(p.T > 0.0) || !std::isfinite(p.T)) report("horizon", "T must be positive and finite");
    if (p.n < 1) report("dimension", "n must be at least 1");
    if (p.d < 1) report("dimension", "d must be at least 1");
    if (p.forward_dim != 1) report("forward_dimension", "forward state must be scalar");
    if (!(p.K >= 0.0) || !std::isfinite(p.K)) report("constant", "K must be nonnegative and finite");
    if (!std::isfinite(p.x0)) report("initial_value", "x0 must be finite");
    if (p.drift_uses_z && p.n != 1) report("drift_uses_z", "drift_uses_z requires n = 1");
    if ((p.drift_uses_z || p.diffusion_uses_state) && p.growth_class != GrowthClass::lipschitz) {
        report("extension_class", "state-dependent diffusion and z-dependent drift require growth_class = lipschitz");
    }
    if (p.growth_class == GrowthClass::quadratic && !p.lambda) {
        report("lambda", "quadratic growth class requires a declared terminal bound lambda");
    }
    if (p.lambda && !(*p.lambda >= 0.0)) report("lambda", "lambda must be nonnegative");

    const bool shapes_ok = p.n >= 1 && p.d >= 1;
    if (!p.drift) report("missing_handle", "drift handle is empty");
    if (!p.diffusion) report("missing_handle", "diffusion handle is empty");
    if (!p.terminal) report("missing_handle", "terminal handle is empty");
    if (shapes_ok && p.driver.size() != static_cast<std::size_t>(p.n)) {
        report("missing_handle", "driver must have exactly n rows");
    }
    for (std::size_t i = 0; i < p.driver.size(); ++i) {
        if (!p.driver[i]) report("missing_handle", "driver row " + std::to_string(i + 1) + " is empty");
    }
    if (!out.empty() || !shapes_ok) return out;

    const auto n = static_cast<std::size_t>(p.n);
    const auto d = static_cast<std::size_t>(p.d);
    std::vector<double> y(n), y2(n), z(n * d), z2(n * d), s1(d), s2(d);

    try {
        // Diagonal structure: f^i must ignore rows j != i of z.
        for (std::size_t i = 0; i < n && n > 1; ++i) {
            bool diagonal = true;
            for (int k = 0; k < kProbeCount && diagonal; ++k) {
                CounterRng rng(0x5eed, i, static_cast<std::uint64_t>(k));
                const double t = rng.uniform(0.0, p.T);
                const double x = rng.uniform(-2.0, 2.0);
                fill(rng, y, -2.0, 2.0);
                fill(rng, z, -2.0, 2.0);
                z2 = z;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == i) continue;
                    for (std::size_t c = 0; c < d; ++c) z2[r * d + c] = rng.uniform(-3.0, 3.0);
                }
                diagonal = nearly_equal(p.driver[i](t, x, y, z), p.driver[i](t, x, y, z2));
            }
            if (!diagonal) {
                report("diagonal_structure",
                       "diagonal structure: driver row " + std::to_string(i + 1) + " reads z outside its own row");
            }
        }

        if (!p.drift_uses_z) {
            bool independent = true;
            for (int k = 0; k < kProbeCount && independent; ++k) {
                CounterRng rng(0x5eed, 1000, static_cast<std::uint64_t>(k));
                const double t = rng.uniform(0.0, p.T);
                const double x = rng.uniform(-2.0, 2.0);
                fill(rng, y, -2.0, 2.0);
                fill(rng, z, -2.0, 2.0);
                fill(rng, z2, -2.0, 2.0);
                independent = nearly_equal(p.drift(t, x, y, z), p.drift(t, x, y, z2));
            }
            if (!independent) report("drift_uses_z", "drift depends on z but drift_uses_z is not set");
        }

        if (!p.diffusion_uses_state) {
            bool independent = true;
            for (int k = 0; k < kProbeCount && independent; ++k) {
                CounterRng rng(0x5eed, 2000, static_cast<std::uint64_t>(k));
                const double t = rng.uniform(0.0, p.T);
                fill(rng, y, -2.0, 2.0);
                fill(rng, y2, -2.0, 2.0);
                p.diffusion(t, rng.uniform(-2.0, 2.0), y, s1);
                p.diffusion(t, rng.uniform(-2.0, 2.0), y2, s2);
                for (std::size_t c = 0; c < d; ++c) independent = independent && nearly_equal(s1[c], s2[c]);
            }
            if (!independent) {
                report("diffusion_uses_state", "diffusion depends on (x, y) but diffusion_uses_state is not set");
            }
        }
    } catch (const std::exception& e) {
        report("probe_failure", std::string("coefficient probe threw: ") + e.what());
    }
    return out;
}

double driver_row(const FBSDEProblem& p, int i, double t, double x, std::span<const double> y,
                  std::span<const double> z_row) {
    if (i < 0 || i >= p.n || static_cast<std::size_t>(i) >= p.driver.size()) {
        throw PreconditionError("driver row index " + std::to_string(i) + " out of range");
    }
    if (z_row.size() != static_cast<std::size_t>(p.d) || y.size() != static_cast<std::size_t>(p.n)) {
        throw PreconditionError("driver_row: y must have n entries and z_row d entries");
    }
    std::vector<double> z(p.z_size(), 0.0);
    std::copy(z_row.begin(), z_row.end(), z.begin() + static_cast<std::ptrdiff_t>(i) * p.d);
    const double v = p.driver[static_cast<std::size_t>(i)](t, x, y, z);
    require_finite(v, "driver", t, x);
    return v;
}

}  // namespace fbsde
