#pragma once

// Operator connections: evaluation from a representing function,
//
//   A sigma B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}     (A, B > 0),
//
// or from a representing measure, extended to PSD operands by the limit of
// (A + eps I) sigma (B + eps I) along a decreasing schedule of eps.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmeans/errors.hpp"
#include "opmeans/measure.hpp"
#include "opmeans/psd.hpp"
#include "opmeans/representing_function.hpp"

namespace opmeans {

using EpsSchedule = std::vector<double>;

/// Terminal step gap accepted as converged, relative to 1 + |result|.
inline constexpr double kConvergenceTol = 1e-7;
/// Every schedule must end at or below this.
inline constexpr double kEpsMin = 1e-8;

/// eps_k = 0.1 * 4^{-k}, k = 0..14.
[[nodiscard]] inline EpsSchedule default_eps_schedule() {
    EpsSchedule s;
    double e = 0.1;
    for (int k = 0; k <= 14; ++k, e /= 4.0) s.push_back(e);
    return s;
}

inline void validate_eps_schedule(const EpsSchedule& s) {
    if (s.empty()) throw ParameterError("eps schedule is empty");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0) || !std::isfinite(s[i])) throw ParameterError("eps schedule entries must be positive");
        if (i > 0 && !(s[i] < s[i - 1])) throw ParameterError("eps schedule must be strictly decreasing");
    }
    if (s.back() > kEpsMin) throw ParameterError("eps schedule must end at or below 1e-8");
}

struct EvalTrace {
    std::vector<double> epsilons_used;
    std::vector<double> step_deltas;  ///< |iter_k - iter_{k-1}|_2, k >= 1
    double terminal_delta = 0.0;
    double scale = 0.0;                    ///< largest iterate norm
    double worst_monotone_margin = 0.0;    ///< min over k of lambda_min(iter_{k-1} - iter_k)
    bool monotone = true;                  ///< every step Loewner-decreasing within the default tolerance
    bool converged = true;
    bool exact_endpoint = false;  ///< result is the unregularized eps = 0 evaluation

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"epsilons_used", epsilons_used}, {"step_deltas", step_deltas},
                {"terminal_delta", terminal_delta}, {"scale", scale},
                {"worst_monotone_margin", worst_monotone_margin}, {"monotone", monotone},
                {"converged", converged}, {"exact_endpoint", exact_endpoint}};
    }
};

/// The eps-limit did not settle; carries the trace and the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, EvalTrace trace, HermitianMatrix last)
        : Error(what), trace_(std::move(trace)), last_(std::move(last)) {}

    [[nodiscard]] const EvalTrace& trace() const noexcept { return trace_; }
    [[nodiscard]] const HermitianMatrix& last_iterate() const noexcept { return last_; }

private:
    EvalTrace trace_;
    HermitianMatrix last_;
};

namespace detail {

/// Spectrum with negative noise clamped to zero and `shift` added.
inline Spectrum shifted(const Spectrum& s, double shift) {
    Spectrum out = s;
    for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values(i) = std::max(out.values(i), 0.0) + shift;
    return out;
}

/// A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2} computed in A's eigenbasis, where the
/// middle factor is the graded matrix G_ij = B'_ij / sqrt(d_i d_j), B' = U* B U.
template <class F>
HermitianMatrix function_kernel(const F& f, const Spectrum& a, const DenseMatrix& b_in_a_basis) {
    const Eigen::Index n = a.values.size();
    RealVector root(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(a.values(i) > 0.0))
            throw SingularityError("left operand is not positive definite", a.values(i));
        root(i) = std::sqrt(a.values(i));
    }
    DenseMatrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = b_in_a_basis(i, j) / (root(i) * root(j));
    const HermitianMatrix fg = apply_spectral(spectral(symmetrize(g)), f);
    DenseMatrix r(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) r(i, j) = root(i) * fg.matrix()(i, j) * root(j);
    return symmetrize(a.vectors * r * a.vectors.adjoint());
}

inline void check_pd(const Spectrum& s, const char* which) {
    if (!(s.values.minCoeff() > 0.0))
        throw SingularityError(std::string(which) + " operand is not positive definite", s.values.minCoeff());
}

/// X (X + Y)^{-1} Y, symmetrized. Only the sum is factored, so one nearly
/// singular operand costs no accuracy (the explicit inverse form loses cond(X) * u).
inline HermitianMatrix parallel_product(const HermitianMatrix& x, const HermitianMatrix& y) {
    const Eigen::LDLT<DenseMatrix> sum(x.matrix() + y.matrix());
    return symmetrize(x.matrix() * sum.solve(y.matrix()));
}

/// Measure route on PD operands given their spectra. Each node contributes
/// (lambda + 1)/(2 lambda) (lambda A ! B) = (lambda + 1) A (lambda A + B)^{-1} B,
/// scaled so that lambda^{+-1} <= 1 multiplies an operand.
inline HermitianMatrix measure_kernel(const DiscreteMeasure& m, const HermitianMatrix& a, const Spectrum& sa,
                                      const HermitianMatrix& b, const Spectrum& sb) {
    HermitianMatrix acc = m.alpha() * a + m.beta() * b;
    if (m.nodes().empty()) return acc;
    check_pd(sa, "left");
    check_pd(sb, "right");
    for (const auto& node : m.nodes()) {
        if (node.weight == 0.0) continue;
        const double l = node.lambda;
        const HermitianMatrix par = l <= 1.0 ? parallel_product(l * a, b) : parallel_product(a, (1.0 / l) * b);
        const double coeff = l <= 1.0 ? (l + 1.0) / l : (l + 1.0);
        acc = acc + (node.weight * coeff) * par;
    }
    return acc;
}

}  // namespace detail

/// A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2} for A positive definite and B PSD.
/// A singular A is an error; use eval() with an eps schedule for singular operands.
[[nodiscard]] inline PsdMatrix eval_function_pd(const RepresentingFunction& f, const PsdMatrix& a,
                                                const PsdMatrix& b) {
    HermitianMatrix::check_same(a, b);
    const Spectrum sa = spectral(a.hermitian());
    if (!(sa.min() > 0.0)) throw SingularityError("eval_function_pd: A is not positive definite", sa.min());
    const DenseMatrix bp = sa.vectors.adjoint() * b.matrix() * sa.vectors;
    HermitianMatrix r = detail::function_kernel(f, sa, bp);
    return PsdMatrix::assume(std::move(r), 0.0);
}

/// (A^{-1} + B^{-1})^{-1} for positive definite A, B.
[[nodiscard]] inline PsdMatrix parallel_sum_pd(const PsdMatrix& a, const PsdMatrix& b) {
    HermitianMatrix::check_same(a, b);
    const Spectrum sa = spectral(a.hermitian());
    const Spectrum sb = spectral(b.hermitian());
    detail::check_pd(sa, "left");
    detail::check_pd(sb, "right");
    return PsdMatrix::assume(detail::parallel_product(a.hermitian(), b.hermitian()), 0.0);
}

/// Measure route on positive definite operands (no eps limit).
[[nodiscard]] inline PsdMatrix eval_measure_pd(const DiscreteMeasure& m, const PsdMatrix& a, const PsdMatrix& b) {
    HermitianMatrix::check_same(a, b);
    const Spectrum sa = spectral(a.hermitian());
    const Spectrum sb = spectral(b.hermitian());
    return PsdMatrix::assume(detail::measure_kernel(m, a, sa, b, sb), 0.0);
}

/// A binary operation on PSD matrices given by a representing function or a
/// representing measure, together with the eps schedule used for singular operands.
class Connection {
public:
    using Backend = std::variant<RepresentingFunction, DiscreteMeasure>;

    explicit Connection(RepresentingFunction f, EpsSchedule eps = default_eps_schedule())
        : backend_(std::move(f)), eps_(std::move(eps)) {
        validate_eps_schedule(eps_);
    }
    explicit Connection(DiscreteMeasure m, EpsSchedule eps = default_eps_schedule())
        : backend_(std::move(m)), eps_(std::move(eps)) {
        validate_eps_schedule(eps_);
    }

    [[nodiscard]] const Backend& backend() const noexcept { return backend_; }
    [[nodiscard]] const EpsSchedule& eps_schedule() const noexcept { return eps_; }
    [[nodiscard]] bool is_function() const noexcept { return std::holds_alternative<RepresentingFunction>(backend_); }

    [[nodiscard]] Connection with_eps(EpsSchedule eps) const {
        Connection c = *this;
        validate_eps_schedule(eps);
        c.eps_ = std::move(eps);
        return c;
    }

    /// Representing function x -> 1 sigma~ x (closed form for the measure backend).
    [[nodiscard]] RepresentingFunction representing_function() const {
        if (const auto* f = std::get_if<RepresentingFunction>(&backend_)) return *f;
        const auto& m = std::get<DiscreteMeasure>(backend_);
        return RepresentingFunction::custom([m](double x) { return m.representing(x); }, "measure",
                                            BoundaryCoefficients{m.alpha(), m.beta()});
    }

    /// True when the result is PSD by construction (no certificate needed).
    [[nodiscard]] bool trusted_psd() const noexcept {
        const auto* f = std::get_if<RepresentingFunction>(&backend_);
        return f == nullptr || !f->is_custom();
    }

    /// Backend evaluated on positive definite operands given with their spectra.
    [[nodiscard]] HermitianMatrix evaluate_pd(const HermitianMatrix& a, const Spectrum& sa, const HermitianMatrix& b,
                                              const Spectrum& sb) const {
        if (const auto* f = std::get_if<RepresentingFunction>(&backend_)) {
            const DenseMatrix bp = sa.vectors.adjoint() * b.matrix() * sa.vectors;
            return detail::function_kernel(*f, sa, bp);
        }
        return detail::measure_kernel(std::get<DiscreteMeasure>(backend_), a, sa, b, sb);
    }

    /// Backend evaluated on positive definite operands.
    [[nodiscard]] HermitianMatrix evaluate_pd(const HermitianMatrix& a, const HermitianMatrix& b) const {
        HermitianMatrix::check_same(a, b);
        return evaluate_pd(a, spectral(a), b, spectral(b));
    }

    [[nodiscard]] nlohmann::json to_json() const;

private:
    Backend backend_;
    EpsSchedule eps_;
};

struct EvalResult {
    PsdMatrix value;
    EvalTrace trace;
};

/// Runs the eps schedule: iter_k = (A + eps_k I) sigma (B + eps_k I), closed with
/// eps = 0 when both operands are well inside the PD cone. Never throws
/// ConvergenceError; `trace.converged` records the verdict.
[[nodiscard]] inline std::pair<HermitianMatrix, EvalTrace> eval_along_schedule(const Connection& conn,
                                                                               const HermitianMatrix& a,
                                                                               const HermitianMatrix& b,
                                                                               const Tolerance& monotone_tol = {}) {
    HermitianMatrix::check_same(a, b);
    const Spectrum sa = spectral(a);
    const Spectrum sb = spectral(b);
    const HermitianMatrix eye = HermitianMatrix::identity(a.dim());
    EvalTrace trace;
    std::optional<HermitianMatrix> prev;
    double prev_norm = 0.0;
    for (const double eps : conn.eps_schedule()) {
        const Spectrum sae = detail::shifted(sa, eps);
        const Spectrum sbe = detail::shifted(sb, eps);
        HermitianMatrix iter = conn.evaluate_pd(a + eps * eye, sae, b + eps * eye, sbe);
        const double norm = iter.norm();
        trace.epsilons_used.push_back(eps);
        trace.scale = std::max(trace.scale, norm);
        if (prev) {
            const HermitianMatrix diff = *prev - iter;
            const Spectrum sd = spectral(diff);
            const double delta = sd.max_abs();
            const double margin = sd.min();
            trace.step_deltas.push_back(delta);
            if (trace.step_deltas.size() == 1 || margin < trace.worst_monotone_margin)
                trace.worst_monotone_margin = margin;
            if (margin < -monotone_tol.at_scale(std::max(norm, prev_norm))) trace.monotone = false;
        }
        prev = std::move(iter);
        prev_norm = norm;
    }
    // Robustly PD operands: the limit is the value at eps = 0 itself, so the
    // schedule is closed with that endpoint instead of stopping one eps short.
    const auto robust_pd = [](const Spectrum& s) { return s.min() > 1e-10 * (1.0 + s.max_abs()); };
    if (robust_pd(sa) && robust_pd(sb)) {
        HermitianMatrix iter = conn.evaluate_pd(a, detail::shifted(sa, 0.0), b, detail::shifted(sb, 0.0));
        const double norm = iter.norm();
        trace.epsilons_used.push_back(0.0);
        trace.scale = std::max(trace.scale, norm);
        const Spectrum sd = spectral(*prev - iter);
        trace.worst_monotone_margin =
            trace.step_deltas.empty() ? sd.min() : std::min(trace.worst_monotone_margin, sd.min());
        trace.step_deltas.push_back(sd.max_abs());
        if (sd.min() < -monotone_tol.at_scale(std::max(norm, prev_norm))) trace.monotone = false;
        prev = std::move(iter);
        prev_norm = norm;
        trace.exact_endpoint = true;
    }
    trace.terminal_delta = trace.step_deltas.empty() ? 0.0 : trace.step_deltas.back();
    // The endpoint needs no limit, so its last step only measures the eps bias of
    // the schedule (about eps_min / lambda_min), not an error in the result.
    trace.converged = trace.exact_endpoint || trace.terminal_delta <= kConvergenceTol * (1.0 + prev_norm);
    return {std::move(*prev), std::move(trace)};
}

namespace detail {
inline PsdMatrix as_result(const Connection& conn, HermitianMatrix r) {
    if (conn.trusted_psd()) return PsdMatrix::assume(std::move(r), 0.0);
    const Spectrum s = spectral(r);
    if (s.min() < -psd_tol(s.max_abs()))
        throw EvaluationError("representing function produced a result that is not PSD", s.min());
    return PsdMatrix::assume(std::move(r), s.min());
}
}  // namespace detail

/// A sigma B for PSD A, B: the last iterate of the eps schedule. Throws
/// ConvergenceError when the terminal step exceeds 1e-7 (1 + |result|).
[[nodiscard]] inline EvalResult eval(const Connection& conn, const PsdMatrix& a, const PsdMatrix& b) {
    auto [r, trace] = eval_along_schedule(conn, a, b);
    if (!trace.converged)
        throw ConvergenceError("eps-limit did not converge (terminal delta " + std::to_string(trace.terminal_delta) +
                                   ")",
                               std::move(trace), std::move(r));
    return {detail::as_result(conn, std::move(r)), std::move(trace)};
}

/// Regularized limit of (A^{-1} + B^{-1})^{-1}.
[[nodiscard]] inline PsdMatrix parallel_sum(const PsdMatrix& a, const PsdMatrix& b,
                                            const EpsSchedule& eps = default_eps_schedule()) {
    return eval(Connection(DiscreteMeasure(0.0, 0.0, {{1.0, 0.5}}), eps), a, b).value;
}

/// A ! B = 2 (A : B).
[[nodiscard]] inline PsdMatrix harmonic_mean(const PsdMatrix& a, const PsdMatrix& b,
                                             const EpsSchedule& eps = default_eps_schedule()) {
    return 2.0 * parallel_sum(a, b, eps);
}

/// alpha A + beta B + sum w (lambda+1)/(2 lambda) ((lambda A) ! B) along the eps schedule.
[[nodiscard]] inline PsdMatrix eval_measure(const DiscreteMeasure& m, const PsdMatrix& a, const PsdMatrix& b,
                                            const EpsSchedule& eps = default_eps_schedule()) {
    return eval(Connection(m, eps), a, b).value;
}

/// Named catalog. Families: arithmetic, geometric, harmonic {t}; logarithmic;
/// power_quasi {p, alpha}; affine {alpha, beta}; sum; parallel_sum;
/// custom {name: square|cube|exp} (negative controls).
[[nodiscard]] inline Connection make_named(std::string_view family, const nlohmann::json& params = {},
                                           EpsSchedule eps = default_eps_schedule()) {
    const auto num = [&](const char* key, std::optional<double> dflt = std::nullopt) -> double {
        if (params.is_object() && params.contains(key)) {
            if (!params[key].is_number()) throw ParameterError(std::string("parameter '") + key + "' must be a number");
            return params[key].get<double>();
        }
        if (dflt) return *dflt;
        throw ParameterError(std::string("missing parameter '") + key + "' for family " + std::string(family));
    };
    if (family == "arithmetic") return Connection(RepresentingFunction::arithmetic_t(num("t", 0.5)), eps);
    if (family == "geometric") return Connection(RepresentingFunction::geometric_t(num("t", 0.5)), eps);
    if (family == "harmonic") return Connection(RepresentingFunction::harmonic_t(num("t", 0.5)), eps);
    if (family == "logarithmic") return Connection(RepresentingFunction::logarithmic(), eps);
    if (family == "power_quasi") return Connection(RepresentingFunction::power_quasi(num("p"), num("alpha")), eps);
    if (family == "affine") return Connection(RepresentingFunction::affine(num("alpha"), num("beta")), eps);
    if (family == "sum") return Connection(RepresentingFunction::affine(1.0, 1.0), eps);
    if (family == "parallel_sum") return Connection(DiscreteMeasure(0.0, 0.0, {{1.0, 0.5}}), eps);
    if (family == "custom") {
        if (!params.is_object() || !params.contains("name") || !params["name"].is_string())
            throw ParameterError("custom family needs params.name (square, cube or exp)");
        return Connection(RepresentingFunction::negative_control(params["name"].get<std::string>()), eps);
    }
    throw ParameterError("unknown mean family '" + std::string(family) + "'");
}

inline nlohmann::json Connection::to_json() const {
    nlohmann::json j;
    if (const auto* f = std::get_if<RepresentingFunction>(&backend_)) {
        j = {{"backend", "function"}, {"family", f->name()}, {"params", f->params()}};
    } else {
        const auto& m = std::get<DiscreteMeasure>(backend_);
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : m.nodes()) nodes.push_back({n.lambda, n.weight});
        j = {{"backend", "measure"}, {"alpha", m.alpha()}, {"beta", m.beta()}, {"nodes", std::move(nodes)}};
    }
    if (eps_ != default_eps_schedule()) j["eps"] = eps_;
    return j;
}

/// Parses a connection descriptor:
///   {"backend": "function", "family": ..., "params": {...}}
///   {"backend": "measure", "alpha": a, "beta": b, "nodes": [[lambda, w], ...]}
///   {"backend": "measure", "quadrature": {"family": "geometric"|"logarithmic", "t": .., "nodes": n}}
/// with an optional "eps": [...] override.
[[nodiscard]] inline Connection connection_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("connection: expected an object");
    EpsSchedule eps = default_eps_schedule();
    if (j.contains("eps")) {
        if (!j["eps"].is_array()) throw ParseError("connection: \"eps\" must be an array");
        eps.clear();
        for (const auto& e : j["eps"]) {
            if (!e.is_number()) throw ParseError("connection: \"eps\" entries must be numbers");
            eps.push_back(e.get<double>());
        }
    }
    const std::string backend = j.value("backend", j.contains("family") ? "function" : "measure");
    try {
        if (backend == "function") {
            if (!j.contains("family") || !j["family"].is_string()) throw ParseError("connection: missing \"family\"");
            return make_named(j["family"].get<std::string>(), j.value("params", nlohmann::json::object()), eps);
        }
        if (backend == "measure") {
            if (j.contains("quadrature")) {
                const auto& q = j["quadrature"];
                const auto fam = q.value("family", std::string("geometric"));
                const auto n = q.value("nodes", 200);
                if (n < 1) throw ParseError("connection: quadrature needs at least one node");
                if (fam == "geometric") return Connection(geometric_quadrature(q.value("t", 0.5), static_cast<std::size_t>(n)), eps);
                if (fam == "logarithmic") return Connection(logarithmic_quadrature(static_cast<std::size_t>(n)), eps);
                throw ParseError("connection: unknown quadrature family '" + fam + "'");
            }
            std::vector<MeasureNode> nodes;
            if (j.contains("nodes")) {
                if (!j["nodes"].is_array()) throw ParseError("connection: \"nodes\" must be an array");
                for (const auto& n : j["nodes"]) {
                    if (!n.is_array() || n.size() != 2 || !n[0].is_number() || !n[1].is_number())
                        throw ParseError("connection: each node must be [lambda, weight]");
                    nodes.push_back({n[0].get<double>(), n[1].get<double>()});
                }
            }
            const auto atom = [&](const char* k) {
                if (!j.contains(k)) return 0.0;
                if (!j[k].is_number()) throw ParseError(std::string("connection: \"") + k + "\" must be a number");
                return j[k].get<double>();
            };
            return Connection(DiscreteMeasure(atom("alpha"), atom("beta"), std::move(nodes)), eps);
        }
    } catch (const ParameterError& e) {
        throw ParseError(std::string("connection: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("connection: ") + e.what());
    }
    throw ParseError("connection: unknown backend '" + backend + "'");
}

}  // namespace opmeans
