#include "fbsde/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/problem.hpp"

namespace fbsde {

LipschitzEnvelope::LipschitzEnvelope(double K, int n, double T, std::vector<double> times, std::vector<double> values)
    : K_(K), n_(n), T_(T), times_(std::move(times)), values_(std::move(values)) {}

double LipschitzEnvelope::analytic_cap() const {
    return n_ * K_ * (T_ + 1.0) * std::exp((n_ + 1) * K_ * T_);
}

double LipschitzEnvelope::max_value() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

// d ybar^i / ds in reversed time s = T - t. ybar stays nonnegative, so the
// absolute values in the integrand are the identity.
double LipschitzEnvelope::rhs(std::span<const double> y, int component) const {
    double sum = 0.0;
    for (double v : y) sum += std::abs(v);
    return K_ * sum + K_ * std::abs(y[static_cast<std::size_t>(component)]) + K_;
}

double LipschitzEnvelope::at(double t, int component) const {
    if (times_.size() < 2) return values_.empty() ? 0.0 : value(0, component);
    t = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t hi = static_cast<std::size_t>(std::distance(times_.begin(), it));
    hi = std::clamp<std::size_t>(hi, 1, times_.size() - 1);
    const std::size_t lo = hi - 1;
    const double t0 = times_[lo];
    const double t1 = times_[hi];
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const auto nn = static_cast<std::size_t>(n_);
    std::span<const double> y0(values_.data() + lo * nn, nn);
    std::span<const double> y1(values_.data() + hi * nn, nn);
    // dybar/dt = -rhs.
    const double m0 = -rhs(y0, component) * h;
    const double m1 = -rhs(y1, component) * h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0[static_cast<std::size_t>(component)] + (s3 - 2 * s2 + s) * m0 +
           (-2 * s3 + 3 * s2) * y1[static_cast<std::size_t>(component)] + (s3 - s2) * m1;
}

LipschitzEnvelope integrate_envelope(double K, int n, double T, int steps) {
    if (steps < 1) throw PreconditionError("integrate_envelope: steps must be at least 1");
    if (n < 1) throw PreconditionError("integrate_envelope: n must be at least 1");
    if (!(T > 0.0)) throw PreconditionError("integrate_envelope: T must be positive");
    if (!(K >= 0.0)) throw PreconditionError("integrate_envelope: K must be nonnegative");

    const double cap = n * K * (T + 1.0) * std::exp((n + 1) * K * T);
    if (!std::isfinite(cap)) {
        std::ostringstream os;
        os << "envelope cap overflows for K=" << K << ", n=" << n << ", T=" << T;
        throw OverflowError(os.str());
    }

    const auto nn = static_cast<std::size_t>(n);
    const auto M = static_cast<std::size_t>(steps);
    std::vector<double> times(M + 1);
    std::vector<double> values((M + 1) * nn);
    const double h = T / static_cast<double>(steps);
    for (std::size_t m = 0; m <= M; ++m) times[m] = (m == M) ? T : h * static_cast<double>(m);

    auto ode = [K, nn](std::span<const double> y, std::span<double> dy) {
        double sum = 0.0;
        for (double v : y) sum += std::abs(v);
        for (std::size_t i = 0; i < nn; ++i) dy[i] = K * sum + K * std::abs(y[i]) + K;
    };

    std::vector<double> y(nn, K), k1(nn), k2(nn), k3(nn), k4(nn), tmp(nn);
    std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(M * nn));
    for (std::size_t m = M; m-- > 0;) {
        ode(y, k1);
        for (std::size_t i = 0; i < nn; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        ode(tmp, k2);
        for (std::size_t i = 0; i < nn; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        ode(tmp, k3);
        for (std::size_t i = 0; i < nn; ++i) tmp[i] = y[i] + h * k3[i];
        ode(tmp, k4);
        for (std::size_t i = 0; i < nn; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(m * nn));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "envelope integration overflowed for K=" << K << ", n=" << n << ", T=" << T;
            throw OverflowError(os.str());
        }
    }
    return LipschitzEnvelope(K, n, T, std::move(times), std::move(values));
}

double envelope_closed_form(double K, int n, double T, double t) {
    const double c = 1.0 / (n + 1);
    return (K + c) * std::exp((n + 1) * K * (T - t)) - c;
}

double Partition::mesh() const {
    double m = 0.0;
    for (std::size_t i = 1; i < breakpoints.size(); ++i) m = std::max(m, breakpoints[i] - breakpoints[i - 1]);
    return m;
}

Partition make_partition(double T, double delta) {
    if (!(delta > 0.0)) throw PreconditionError("make_partition: delta must be positive");
    if (!(T > 0.0)) throw PreconditionError("make_partition: T must be positive");
    auto m = static_cast<std::size_t>(std::ceil(T / delta));
    // Guard against T/delta landing a hair above an integer.
    if (m > 1 && T / static_cast<double>(m - 1) <= delta) --m;
    m = std::max<std::size_t>(m, 1);
    Partition part;
    part.delta = delta;
    part.breakpoints.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        part.breakpoints[i] = (i == m) ? T : T * static_cast<double>(i) / static_cast<double>(m);
    }
    return part;
}

DeltaSelection select_delta(const FBSDEProblem& p, const LipschitzEnvelope& env, const DeltaProbe& probe) {
    if (env.n() != p.n || env.K() != p.K || env.T() != p.T) {
        throw PreconditionError("select_delta: envelope was not computed with the problem's (K, n, T)");
    }
    const double C = env.max_value();
    ProbeResult last;
    for (int k = 0; k <= kDeltaLadderCap; ++k) {
        const double delta = p.T / std::ldexp(1.0, k);
        ProbeResult r;
        try {
            r = probe(delta, C);
        } catch (const ConvergenceError&) {
            r.contraction = std::numeric_limits<double>::infinity();
        } catch (const CoefficientError&) {
            r.contraction = std::numeric_limits<double>::infinity();
        }
        if (r.contraction < kContractionThreshold) return DeltaSelection{delta, k, r};
        last = r;
    }
    std::ostringstream os;
    os << "no delta on the ladder T/2^k (k <= " << kDeltaLadderCap << ") produced a contracting Picard probe; last ratio "
       << last.contraction;
    throw ConvergenceError("delta_no_convergence", os.str());
}

}  // namespace fbsde
