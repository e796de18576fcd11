#pragma once

// Induced scalar connections on [0, inf): (x sigma~ y) I = (x I) sigma (y I),
// x sigma~ y = x f(y/x) for x, y > 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "opmeans/connection.hpp"
#include "opmeans/errors.hpp"
#include "opmeans/representing_function.hpp"

namespace opmeans {

struct ScalarConnection {
    RepresentingFunction f;
    std::string label;

    [[nodiscard]] static ScalarConnection of(RepresentingFunction f) {
        auto label = f.name();
        return {std::move(f), std::move(label)};
    }

    /// From a binary operation on [0, inf) that is positively homogeneous.
    /// The representing function is recovered as f(x) = 1 sigma~ x, with
    /// f(0+) = 1 sigma~ 0 and slope at infinity 0 sigma~ 1.
    [[nodiscard]] static ScalarConnection from_binary(std::function<double(double, double)> op, std::string label) {
        const BoundaryCoefficients b{op(1.0, 0.0), op(0.0, 1.0)};
        auto f = RepresentingFunction::custom([op](double x) { return op(1.0, x); }, label, b);
        return {std::move(f), std::move(label)};
    }
};

/// x sigma~ y. Boundaries: x = 0 gives beta(f) y, y = 0 gives alpha(f) x, 0 sigma~ 0 = 0.
[[nodiscard]] inline double induced_eval(const ScalarConnection& s, double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0) || !std::isfinite(x) || !std::isfinite(y))
        throw ParameterError("induced_eval: arguments must be finite and nonnegative");
    double r;
    if (x == 0.0 && y == 0.0) r = 0.0;
    else if (x == 0.0) r = s.f.boundary().beta * y;
    else if (y == 0.0) r = s.f.boundary().alpha * x;
    else r = x * s.f(y / x);
    if (!std::isfinite(r) || r < 0.0) throw EvaluationError("induced connection value is not finite and >= 0", r);
    return r;
}

/// f(x) = 1 sigma~ x.
[[nodiscard]] inline RepresentingFunction representing_from_scalar(const ScalarConnection& s) {
    if (!s.f.is_custom()) return s.f;
    std::optional<BoundaryCoefficients> b;
    try {
        b = s.f.boundary();
    } catch (const EvaluationError&) {
    }
    return RepresentingFunction::custom([s](double x) { return induced_eval(s, 1.0, x); }, s.label, b);
}

/// The unique connection whose induced connection is `s`.
[[nodiscard]] inline Connection lift_to_operator(const ScalarConnection& s,
                                                 EpsSchedule eps = default_eps_schedule()) {
    return Connection(representing_from_scalar(s), std::move(eps));
}

/// c1 s1 + c2 s2 for c1, c2 >= 0 (the affine structure on connections).
[[nodiscard]] inline ScalarConnection combine(double c1, const ScalarConnection& s1, double c2,
                                              const ScalarConnection& s2) {
    auto f = combine(c1, s1.f, c2, s2.f);
    auto label = f.params().value("label", std::string("combination"));
    return {std::move(f), std::move(label)};
}

/// Scalar quasi-arithmetic power mean [(1-alpha) x^p + alpha y^p]^{1/p}, p != 0,
/// written directly as a binary operation.
[[nodiscard]] inline ScalarConnection scalar_power_mean(double p, double alpha) {
    if (!(p >= -1.0 && p <= 1.0) || p == 0.0) throw ParameterError("scalar_power_mean: p must lie in [-1, 0) u (0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("scalar_power_mean: alpha must lie in [0, 1]");
    return ScalarConnection::from_binary(
        [p, alpha](double x, double y) {
            if (alpha == 0.0) return x;
            if (alpha == 1.0) return y;
            if (p < 0.0 && (x == 0.0 || y == 0.0)) return 0.0;
            return std::pow((1.0 - alpha) * std::pow(x, p) + alpha * std::pow(y, p), 1.0 / p);
        },
        "power_mean");
}

/// The four scalar means 2x/(1+x), sqrt(x), (x-1)/log x, (1+x)/2 at one x.
struct ChainValues {
    double x;
    double harmonic;
    double geometric;
    double logarithmic;
    double arithmetic;

    /// Smallest gap between consecutive entries.
    [[nodiscard]] double min_gap() const {
        return std::min({geometric - harmonic, logarithmic - geometric, arithmetic - logarithmic});
    }
    [[nodiscard]] bool strictly_ordered() const {
        return harmonic < geometric && geometric < logarithmic && logarithmic < arithmetic;
    }
};

/// Throws ParameterError for x <= 0 and for the degenerate x = 1 (all four equal 1).
[[nodiscard]] inline ChainValues scalar_chain_check(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("scalar_chain_check: x must be finite and positive");
    if (x == 1.0) throw ParameterError("scalar_chain_check: degenerate input x = 1 (all four means equal 1)");
    return {x, 2.0 * x / (1.0 + x), std::sqrt(x), (x - 1.0) / std::log(x), (1.0 + x) / 2.0};
}

}  // namespace opmeans
