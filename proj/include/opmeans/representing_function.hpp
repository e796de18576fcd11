#pragma once

// Representing functions f: [0, inf) -> [0, inf) of connections, with
// closed-form families, the transpose g(x) = x f(1/x) and the boundary
// coefficients alpha = f(0+), beta = lim f(x)/x.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include <nlohmann/json.hpp>

#include "opmeans/errors.hpp"

namespace opmeans {

/// alpha = f(0+) and beta = lim_{x -> inf} f(x)/x.
struct BoundaryCoefficients {
    double alpha;
    double beta;
};

class RepresentingFunction;
[[nodiscard]] BoundaryCoefficients numerical_boundary(const RepresentingFunction& f);

/// Richardson-style extrapolation of a limit from samples at h = 1e-4, 1e-6, 1e-8.
/// Assumes v(h) ~ L + c h^r and sums the geometric tail of the differences;
/// throws EvaluationError when the samples do not settle (rel 1e-3).
template <class F>
[[nodiscard]] double extrapolate_to_zero(F&& v, const char* what) {
    const double h[3] = {1e-4, 1e-6, 1e-8};
    double s[3];
    for (int i = 0; i < 3; ++i) {
        s[i] = v(h[i]);
        if (!std::isfinite(s[i])) throw EvaluationError(std::string(what) + ": non-finite sample", h[i]);
    }
    const double d1 = s[0] - s[1];
    const double d2 = s[1] - s[2];
    double estimate = s[2];
    if (d2 != 0.0) {
        const double q = d1 != 0.0 ? d2 / d1 : INFINITY;
        if (!(q >= 0.0 && q < 1.0))
            throw EvaluationError(std::string(what) + ": samples do not settle", h[2]);
        estimate = s[2] - d2 * q / (1.0 - q);
    }
    if (std::abs(estimate - s[2]) > 1e-3 * std::max(1.0, std::abs(estimate)))
        throw EvaluationError(std::string(what) + ": extrapolation did not converge", h[2]);
    return estimate;
}

class RepresentingFunction {
public:
    struct ArithmeticT { double t; };
    struct GeometricT { double t; };
    struct HarmonicT { double t; };
    struct Logarithmic {};
    struct PowerQuasi { double p; double alpha; };
    struct Affine { double alpha; double beta; };
    struct Custom {
        std::shared_ptr<const std::function<double(double)>> fn;
        std::string label;
        std::optional<BoundaryCoefficients> boundary;  // known closed-form boundary, if any
        bool transposed = false;                       // evaluates x fn(1/x) instead of fn
        std::string control;                           // named negative control, serializable
    };
    using Family = std::variant<ArithmeticT, GeometricT, HarmonicT, Logarithmic, PowerQuasi, Affine, Custom>;

    /// p with |p| below this evaluates the p -> 0 limit x^alpha.
    static constexpr double kPowerZeroCutoff = 1e-6;
    /// Below this distance from 1 the logarithmic family uses its series.
    static constexpr double kLogSeriesRadius = 1e-4;

    // (1-t) + t x
    [[nodiscard]] static RepresentingFunction arithmetic_t(double t) {
        check_unit("arithmetic_t: t", t);
        return RepresentingFunction(ArithmeticT{t});
    }
    // x^t
    [[nodiscard]] static RepresentingFunction geometric_t(double t) {
        check_unit("geometric_t: t", t);
        return RepresentingFunction(GeometricT{t});
    }
    // [(1-t) + t/x]^{-1}
    [[nodiscard]] static RepresentingFunction harmonic_t(double t) {
        check_unit("harmonic_t: t", t);
        return RepresentingFunction(HarmonicT{t});
    }
    // (x-1)/log x
    [[nodiscard]] static RepresentingFunction logarithmic() { return RepresentingFunction(Logarithmic{}); }
    // [(1-alpha) + alpha x^p]^{1/p}
    [[nodiscard]] static RepresentingFunction power_quasi(double p, double alpha) {
        if (!(p >= -1.0 && p <= 1.0)) throw ParameterError("power_quasi: p must lie in [-1, 1]");
        check_unit("power_quasi: alpha", alpha);
        return RepresentingFunction(PowerQuasi{p, alpha});
    }
    // alpha + beta x
    [[nodiscard]] static RepresentingFunction affine(double alpha, double beta) {
        if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw ParameterError("affine: alpha and beta must be finite and nonnegative");
        return RepresentingFunction(Affine{alpha, beta});
    }

    /// Arbitrary callable; it must be total on [0, inf).
    [[nodiscard]] static RepresentingFunction custom(std::function<double(double)> fn, std::string label,
                                                     std::optional<BoundaryCoefficients> boundary = std::nullopt) {
        if (!fn) throw ParameterError("custom: empty callable");
        return RepresentingFunction(Custom{std::make_shared<const std::function<double(double)>>(std::move(fn)),
                                           std::move(label), boundary, false, {}});
    }

    /// Functions that are monotone on scalars but not operator monotone
    /// (or not monotone in the connection sense): "square", "cube", "exp".
    [[nodiscard]] static RepresentingFunction negative_control(std::string_view name) {
        RepresentingFunction f = [&] {
            if (name == "square") return custom([](double x) { return x * x; }, "x^2", BoundaryCoefficients{0.0, INFINITY});
            if (name == "cube") return custom([](double x) { return x * x * x; }, "x^3", BoundaryCoefficients{0.0, INFINITY});
            if (name == "exp") return custom([](double x) { return std::exp(x); }, "exp(x)", BoundaryCoefficients{1.0, INFINITY});
            throw ParameterError("unknown negative control '" + std::string(name) + "'");
        }();
        std::get<Custom>(f.family_).control = std::string(name);
        return f;
    }

    [[nodiscard]] const Family& family() const noexcept { return family_; }
    [[nodiscard]] bool is_custom() const noexcept { return std::holds_alternative<Custom>(family_); }

    /// f(x) for x >= 0; the value at 0 is the right limit f(0+).
    [[nodiscard]] double operator()(double x) const {
        if (!(x >= 0.0)) throw EvaluationError("representing function evaluated at negative argument", x);
        return std::visit([x, this](const auto& fam) { return eval(fam, x); }, family_);
    }

    /// g(x) = x f(1/x), the representing function of (A, B) -> B sigma A.
    [[nodiscard]] RepresentingFunction transpose() const;

    /// Closed forms for the built-in families; numerical extrapolation for custom callables.
    [[nodiscard]] BoundaryCoefficients boundary() const;

    [[nodiscard]] std::string name() const;
    [[nodiscard]] nlohmann::json params() const;

private:
    explicit RepresentingFunction(Family f) : family_(std::move(f)) {}

    static void check_unit(const char* what, double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
    }

    static double eval(const ArithmeticT& f, double x) { return (1.0 - f.t) + f.t * x; }

    static double eval(const GeometricT& f, double x) {
        if (f.t == 0.0) return 1.0;
        if (x == 0.0) return 0.0;
        return std::pow(x, f.t);
    }

    static double eval(const HarmonicT& f, double x) {
        if (f.t == 0.0) return 1.0;
        if (x == 0.0) return 0.0;
        if (std::isinf(x)) return 1.0 / (1.0 - f.t);
        return x / ((1.0 - f.t) * x + f.t);
    }

    static double eval(const Logarithmic&, double x) {
        if (x == 0.0) return 0.0;
        const double d = x - 1.0;
        if (std::abs(d) < kLogSeriesRadius) return 1.0 + d * (0.5 + d * (-1.0 / 12.0 + d * (1.0 / 24.0)));
        return d / std::log(x);
    }

    static double eval(const PowerQuasi& f, double x) {
        if (f.alpha == 0.0) return 1.0;
        if (f.alpha == 1.0) return x;
        if (std::abs(f.p) < kPowerZeroCutoff) return eval(GeometricT{f.alpha}, x);
        if (x == 0.0) return f.p > 0.0 ? std::pow(1.0 - f.alpha, 1.0 / f.p) : 0.0;
        // (1-a) + a x^p = 1 + a expm1(p log x), kept in log space for small |p|.
        const double inner = std::log1p(f.alpha * std::expm1(f.p * std::log(x)));
        return std::exp(inner / f.p);
    }

    static double eval(const Affine& f, double x) { return f.alpha + f.beta * x; }

    double eval(const Custom& f, double x) const {
        if (!f.transposed) return (*f.fn)(x);
        if (x == 0.0) return transposed_origin(f);
        return x * (*f.fn)(1.0 / x);
    }

    // Value at 0 of x f(1/x): the slope at infinity of the untransposed f.
    double transposed_origin(const Custom& f) const {
        if (f.boundary) return f.boundary->beta;
        return extrapolate_to_zero([&](double h) { return h * (*f.fn)(1.0 / h); }, "transpose at 0");
    }

    Family family_;
};

inline RepresentingFunction RepresentingFunction::transpose() const {
    return std::visit(
        [](const auto& f) -> RepresentingFunction {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ArithmeticT>) return arithmetic_t(1.0 - f.t);
            else if constexpr (std::is_same_v<T, GeometricT>) return geometric_t(1.0 - f.t);
            else if constexpr (std::is_same_v<T, HarmonicT>) return harmonic_t(1.0 - f.t);
            else if constexpr (std::is_same_v<T, Logarithmic>) return logarithmic();
            else if constexpr (std::is_same_v<T, PowerQuasi>) return power_quasi(f.p, 1.0 - f.alpha);
            else if constexpr (std::is_same_v<T, Affine>) return affine(f.beta, f.alpha);
            else {
                Custom g = f;
                g.transposed = !f.transposed;
                if (f.boundary) g.boundary = BoundaryCoefficients{f.boundary->beta, f.boundary->alpha};
                g.label = f.transposed && f.label.starts_with("transpose(")
                              ? f.label.substr(10, f.label.size() - 11)
                              : "transpose(" + f.label + ")";
                return RepresentingFunction(std::move(g));
            }
        },
        family_);
}

inline BoundaryCoefficients RepresentingFunction::boundary() const {
    return std::visit(
        [this](const auto& f) -> BoundaryCoefficients {
            using T = std::decay_t<decltype(f)>;
            const auto ind = [](bool b) { return b ? 1.0 : 0.0; };
            if constexpr (std::is_same_v<T, ArithmeticT>) return {1.0 - f.t, f.t};
            else if constexpr (std::is_same_v<T, GeometricT> || std::is_same_v<T, HarmonicT>)
                return {ind(f.t == 0.0), ind(f.t == 1.0)};
            else if constexpr (std::is_same_v<T, Logarithmic>) return {0.0, 0.0};
            else if constexpr (std::is_same_v<T, PowerQuasi>) {
                if (f.alpha == 0.0 || f.alpha == 1.0 || std::abs(f.p) < kPowerZeroCutoff)
                    return {ind(f.alpha == 0.0), ind(f.alpha == 1.0)};
                if (f.p > 0.0) return {std::pow(1.0 - f.alpha, 1.0 / f.p), std::pow(f.alpha, 1.0 / f.p)};
                return {0.0, 0.0};
            } else if constexpr (std::is_same_v<T, Affine>) return {f.alpha, f.beta};
            else {
                if (f.boundary) return *f.boundary;
                return numerical_boundary(*this);
            }
        },
        family_);
}

/// Extrapolated alpha = f(0+) and beta = lim f(x)/x, independent of any closed form.
[[nodiscard]] inline BoundaryCoefficients numerical_boundary(const RepresentingFunction& f) {
    const double alpha = extrapolate_to_zero([&](double h) { return f(h); }, "boundary alpha");
    const double beta = extrapolate_to_zero([&](double h) { return h * f(1.0 / h); }, "boundary beta");
    return {alpha, beta};
}

/// c1 f1 + c2 f2 for c1, c2 >= 0.
[[nodiscard]] inline RepresentingFunction combine(double c1, const RepresentingFunction& f1, double c2,
                                                  const RepresentingFunction& f2) {
    if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ParameterError("combine: coefficients must be nonnegative");
    std::optional<BoundaryCoefficients> b;
    try {
        const auto b1 = f1.boundary();
        const auto b2 = f2.boundary();
        b = BoundaryCoefficients{c1 * b1.alpha + c2 * b2.alpha, c1 * b1.beta + c2 * b2.beta};
    } catch (const EvaluationError&) {
    }
    auto label = std::to_string(c1) + "*" + f1.name() + " + " + std::to_string(c2) + "*" + f2.name();
    return RepresentingFunction::custom([=](double x) { return c1 * f1(x) + c2 * f2(x); }, std::move(label), b);
}

inline std::string RepresentingFunction::name() const {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ArithmeticT>) return "arithmetic";
            else if constexpr (std::is_same_v<T, GeometricT>) return "geometric";
            else if constexpr (std::is_same_v<T, HarmonicT>) return "harmonic";
            else if constexpr (std::is_same_v<T, Logarithmic>) return "logarithmic";
            else if constexpr (std::is_same_v<T, PowerQuasi>) return "power_quasi";
            else if constexpr (std::is_same_v<T, Affine>) return "affine";
            else return "custom";
        },
        family_);
}

inline nlohmann::json RepresentingFunction::params() const {
    return std::visit(
        [](const auto& f) -> nlohmann::json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ArithmeticT> || std::is_same_v<T, GeometricT> ||
                          std::is_same_v<T, HarmonicT>)
                return {{"t", f.t}};
            else if constexpr (std::is_same_v<T, Logarithmic>) return nlohmann::json::object();
            else if constexpr (std::is_same_v<T, PowerQuasi>) return {{"p", f.p}, {"alpha", f.alpha}};
            else if constexpr (std::is_same_v<T, Affine>) return {{"alpha", f.alpha}, {"beta", f.beta}};
            else {
                nlohmann::json j = {{"label", f.label}};
                if (!f.control.empty()) j["name"] = f.control;
                if (f.transposed) j["transposed"] = true;
                return j;
            }
        },
        family_);
}

}  // namespace opmeans
