#pragma once

// Property-based verification of the connection axioms on random operands.
//
// Every check is a pair (generator, replay): the generator draws a payload of
// named matrices and scalar parameters for one trial, and replay evaluates the
// axiom on that payload and returns a margin. Reports are deterministic in
// (connection, config): trial i draws from substream(seed, check, i) and
// results are merged in trial order regardless of how many workers run.
//
// Evaluations of singular operands are eps-limits. Each comparison therefore
// allows, on top of tol.abs + tol.rel * scale, the terminal step gaps of the
// evaluations it involves: a finite schedule only pins the limit down to that
// resolution.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmeans/connection.hpp"
#include "opmeans/matrix_json.hpp"
#include "opmeans/psd.hpp"
#include "opmeans/random.hpp"
#include "opmeans/representing_function.hpp"

namespace opmeans {

struct TrialConfig {
    std::vector<std::size_t> dims{1, 2, 3, 5, 8};
    std::size_t trials_per_check = 200;
    std::uint64_t seed = 0;
    double cond_max = 1e6;
    Tolerance tol{};
    unsigned jobs = 1;
    bool shrink = true;

    void validate() const {
        if (dims.empty()) throw ParameterError("trial config: dims must be nonempty");
        for (auto d : dims)
            if (d < 1) throw ParameterError("trial config: dims must be >= 1");
        if (trials_per_check < 1) throw ParameterError("trial config: trials_per_check must be >= 1");
        if (!(cond_max >= 1.0)) throw ParameterError("trial config: cond_max must be >= 1");
        tol.validate();
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"dims", dims}, {"trials_per_check", trials_per_check}, {"cond_max", cond_max},
                {"tol_abs", tol.abs}, {"tol_rel", tol.rel}};
    }
};

enum class CheckKind { M1, M2, M3, M3Prime, M3DoublePrime, M4, M4Prime, PropertyP, PropertyF, Superadditivity };

inline constexpr CheckKind kAllChecks[] = {CheckKind::M1,        CheckKind::M2,          CheckKind::M3,
                                           CheckKind::M3Prime,   CheckKind::M3DoublePrime, CheckKind::M4,
                                           CheckKind::M4Prime,   CheckKind::PropertyP,   CheckKind::PropertyF,
                                           CheckKind::Superadditivity};

[[nodiscard]] constexpr std::string_view check_name(CheckKind k) noexcept {
    switch (k) {
        case CheckKind::M1: return "M1";
        case CheckKind::M2: return "M2";
        case CheckKind::M3: return "M3";
        case CheckKind::M3Prime: return "M3'";
        case CheckKind::M3DoublePrime: return "M3''";
        case CheckKind::M4: return "M4";
        case CheckKind::M4Prime: return "M4'";
        case CheckKind::PropertyP: return "P";
        case CheckKind::PropertyF: return "F";
        case CheckKind::Superadditivity: return "superadditivity";
    }
    return "?";
}

[[nodiscard]] inline std::optional<CheckKind> parse_check_name(std::string_view s) {
    for (auto k : kAllChecks)
        if (check_name(k) == s) return k;
    if (s == "M3prime") return CheckKind::M3Prime;
    if (s == "M3doubleprime") return CheckKind::M3DoublePrime;
    if (s == "M4prime") return CheckKind::M4Prime;
    return std::nullopt;
}

/// Inputs of one trial: named PSD matrices of a common dimension plus scalars.
struct Payload {
    std::vector<std::pair<std::string, HermitianMatrix>> matrices;
    std::vector<std::pair<std::string, double>> params;

    [[nodiscard]] const HermitianMatrix& matrix(std::string_view name) const {
        for (const auto& [k, v] : matrices)
            if (k == name) return v;
        throw ParameterError("payload: no matrix named '" + std::string(name) + "'");
    }
    [[nodiscard]] double param(std::string_view name) const {
        for (const auto& [k, v] : params)
            if (k == name) return v;
        throw ParameterError("payload: no parameter named '" + std::string(name) + "'");
    }
    [[nodiscard]] std::size_t dim() const { return matrices.empty() ? 0 : matrices.front().second.dim(); }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [k, v] : matrices) m[k] = matrix_to_json(v);
        nlohmann::json p = nlohmann::json::object();
        for (const auto& [k, v] : params) p[k] = v;
        return {{"dim", dim()}, {"matrices", std::move(m)}, {"params", std::move(p)}};
    }

    [[nodiscard]] static Payload from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("matrices") || !j["matrices"].is_object())
            throw ParseError("payload: expected {\"matrices\": {...}}");
        Payload p;
        for (const auto& [k, v] : j["matrices"].items()) p.matrices.emplace_back(k, matrix_from_json(v));
        if (j.contains("params"))
            for (const auto& [k, v] : j["params"].items()) {
                if (!v.is_number()) throw ParseError("payload: params must be numbers");
                p.params.emplace_back(k, v.get<double>());
            }
        return p;
    }
};

/// Result of one comparison. A violation is margin < -allowed.
struct Outcome {
    double margin = 0.0;   ///< smallest eigenvalue of (rhs - lhs), or -|deviation| for equalities
    double allowed = 0.0;  ///< tol.abs + tol.rel * scale + eps-limit slack
    double scale = 0.0;    ///< largest operand norm involved

    [[nodiscard]] bool violated() const noexcept { return margin < -allowed; }
    [[nodiscard]] double excess() const noexcept { return margin + allowed; }
    /// margin / (1 + scale): relative for large operands, absolute near zero.
    [[nodiscard]] double relative_margin() const noexcept { return margin / (1.0 + scale); }

    /// Keeps whichever of the two comparisons is closer to (or further into) violation.
    [[nodiscard]] static Outcome worst(const Outcome& a, const Outcome& b) {
        const double ea = a.scale > 0.0 ? a.excess() / a.scale : a.excess();
        const double eb = b.scale > 0.0 ? b.excess() / b.scale : b.excess();
        return eb < ea ? b : a;
    }
};

struct Counterexample {
    std::string check;
    Payload payload;
    Outcome outcome;
    std::size_t trial = 0;
    bool shrunk = false;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = payload.to_json();
        j["check"] = check;
        j["trial"] = trial;
        j["margin"] = outcome.margin;
        j["allowed"] = outcome.allowed;
        j["scale"] = outcome.scale;
        j["shrunk"] = shrunk;
        return j;
    }
};

struct CheckResult {
    std::string name;
    std::size_t trials = 0;         ///< trials actually executed
    std::size_t violations = 0;
    std::size_t eval_failures = 0;  ///< trials whose evaluation raised an error
    double worst_margin = 0.0;      ///< smallest margin / (1 + scale) over executed trials
    std::optional<Counterexample> counterexample;
    std::string first_failure;      ///< message of the first evaluation failure
    std::string detail;

    [[nodiscard]] bool passed() const noexcept { return violations == 0; }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = {{"name", name},
                            {"trials", trials},
                            {"violations", violations},
                            {"eval_failures", eval_failures},
                            {"worst_margin", worst_margin},
                            {"counterexample", counterexample ? counterexample->to_json() : nlohmann::json(nullptr)}};
        if (!first_failure.empty()) j["first_failure"] = first_failure;
        if (!detail.empty()) j["detail"] = detail;
        return j;
    }
};

namespace verify_detail {

struct Evaluated {
    HermitianMatrix value;
    double slack;  // terminal step gap of the eps schedule, 0 for an exact endpoint
};

inline Evaluated ev(const Connection& c, const HermitianMatrix& a, const HermitianMatrix& b) {
    auto [r, trace] = eval_along_schedule(c, a, b);
    return {std::move(r), trace.exact_endpoint ? 0.0 : trace.terminal_delta};
}

inline double min_eig(const HermitianMatrix& h) { return spectral(h).min(); }

/// Spectral norm of an arbitrary (not necessarily Hermitian) square matrix.
inline double op_norm(const DenseMatrix& m) {
    Eigen::JacobiSVD<DenseMatrix> svd(m);
    return svd.singularValues()(0);
}

/// lhs <= rhs in the Loewner order.
inline Outcome leq(const HermitianMatrix& lhs, const HermitianMatrix& rhs, const Tolerance& tol, double slack) {
    const double scale = std::max(lhs.norm(), rhs.norm());
    return {min_eig(rhs - lhs), tol.at_scale(scale) + slack, scale};
}

/// lhs == rhs (dense, may be non-Hermitian products).
inline Outcome equal(const DenseMatrix& lhs, const DenseMatrix& rhs, double scale, const Tolerance& tol,
                     double slack) {
    return {-op_norm(lhs - rhs), tol.at_scale(scale) + slack, scale};
}

inline HermitianMatrix id(std::size_t n) { return HermitianMatrix::identity(n); }

inline double mean_slack(std::initializer_list<double> s) {
    double t = 0.0;
    for (double v : s) t += v;
    return t;
}

/// Log-grid used by the property (F) check.
inline const std::vector<double>& f_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        for (int k = -6; k <= 6; ++k) g.push_back(std::pow(10.0, 0.5 * k));
        return g;
    }();
    return grid;
}

inline std::uint64_t stream_id(CheckKind k) { return 0x1000 + static_cast<std::uint64_t>(k); }

inline HermitianMatrix scaled_psd(std::size_t dim, double cond_max, Rng& rng) {
    const double c = uniform(rng);
    if (c < 0.15) return HermitianMatrix::zero(dim);
    return c * gen_psd(dim, cond_max, rng).hermitian();
}

}  // namespace verify_detail

/// Everything a replay needs besides the payload.
struct CheckContext {
    const Connection& conn;
    RepresentingFunction f;  ///< function asserted by property (F)
    Tolerance tol;
};

namespace verify_detail {

inline std::optional<Outcome> replay_raw(const CheckContext& ctx, CheckKind kind, const Payload& p) {
    const Connection& c = ctx.conn;
    const Tolerance& tol = ctx.tol;
    const std::size_t n = p.dim();
    switch (kind) {
        case CheckKind::M1: {
            const auto& a = p.matrix("A");
            const auto& b = p.matrix("B");
            const auto lhs = ev(c, a, b);
            const auto rhs = ev(c, a + p.matrix("E"), b + p.matrix("F"));
            return leq(lhs.value, rhs.value, tol, lhs.slack + rhs.slack);
        }
        case CheckKind::M2: {
            const auto& a = p.matrix("A");
            const auto& b = p.matrix("B");
            const auto& cm = p.matrix("C");
            const auto& k = p.matrix("K");
            if (cm.norm() > 1.0 + 1e-12 || k.norm() > 1.0 + 1e-12 || min_eig(k) < 0.45) return std::nullopt;
            const auto x = ev(c, a, b);
            // transformer inequality, C PSD with |C| <= 1 (possibly singular)
            const auto rhs = ev(c, a.congruence(cm.matrix()), b.congruence(cm.matrix()));
            const Outcome ineq = leq(x.value.congruence(cm.matrix()), rhs.value, tol, x.slack + rhs.slack);
            // congruence invariance, K positive definite
            const auto rhs_k = ev(c, a.congruence(k.matrix()), b.congruence(k.matrix()));
            const HermitianMatrix lhs_k = x.value.congruence(k.matrix());
            const Outcome eq = equal(lhs_k.matrix(), rhs_k.value.matrix(), std::max(lhs_k.norm(), rhs_k.value.norm()),
                                     tol, x.slack + rhs_k.slack);
            return Outcome::worst(ineq, eq);
        }
        case CheckKind::M3: {
            auto [r, trace] = eval_along_schedule(c, p.matrix("A"), p.matrix("B"), tol);
            if (trace.step_deltas.empty()) return Outcome{0.0, tol.at_scale(trace.scale), trace.scale};
            return Outcome{trace.worst_monotone_margin, tol.at_scale(trace.scale), trace.scale};
        }
        case CheckKind::M3Prime:
        case CheckKind::M3DoublePrime: {
            const bool prime = kind == CheckKind::M3Prime;
            const auto& a = p.matrix("A");
            const auto& x = p.matrix("X");
            const Spectrum sa = spectral(a);
            const Spectrum sx = spectral(x);
            const Spectrum si = spectral(id(n));
            const HermitianMatrix eye = id(n);
            // a singular X (e.g. X = 0) has no direct PD evaluation; its terms are eps-limits themselves
            const bool x_pd = sx.min() > 0.0;
            const auto with_x = [&](const HermitianMatrix& ae, const Spectrum& sae) {
                if (x_pd) return prime ? c.evaluate_pd(ae, sae, x, sx) : c.evaluate_pd(x, sx, ae, sae);
                return prime ? ev(c, ae, x).value : ev(c, x, ae).value;
            };
            // A_k = A + eps_k I decreases to A; X sigma A_k (M3'') or A_k sigma X (M3'), and the
            // companion sequences I sigma A_k (M3') / A_k sigma I (M3'').
            std::optional<HermitianMatrix> prev_s, prev_t;
            Outcome out{0.0, tol.at_scale(0.0), 0.0};
            bool first = true;
            for (const double eps : c.eps_schedule()) {
                const Spectrum sae = detail::shifted(sa, eps);
                const HermitianMatrix ae = a + eps * eye;
                HermitianMatrix s = with_x(ae, sae);
                HermitianMatrix t = prime ? c.evaluate_pd(eye, si, ae, sae) : c.evaluate_pd(ae, sae, eye, si);
                if (prev_s) {
                    const Outcome os = leq(s, *prev_s, tol, 0.0);
                    const Outcome ot = leq(t, *prev_t, tol, 0.0);
                    out = first ? Outcome::worst(os, ot) : Outcome::worst(out, Outcome::worst(os, ot));
                    first = false;
                }
                prev_s = std::move(s);
                prev_t = std::move(t);
            }
            // terminal gap to the value at the limit point
            const auto lim_s = prime ? ev(c, a, x) : ev(c, x, a);
            const auto lim_t = prime ? ev(c, eye, a) : ev(c, a, eye);
            const auto gap = [&](const HermitianMatrix& last, const Evaluated& lim) {
                const double nrm = lim.value.norm();
                return Outcome{-distance(last, lim.value), kConvergenceTol * (1.0 + nrm) + lim.slack,
                               std::max(nrm, last.norm())};
            };
            const Outcome g = Outcome::worst(gap(*prev_s, lim_s), gap(*prev_t, lim_t));
            return first ? g : Outcome::worst(out, g);
        }
        case CheckKind::M4:
        case CheckKind::M4Prime: {
            const double t = p.param("t");
            if (!(t >= 0.0 && t <= 1.0)) return std::nullopt;
            const auto& a = p.matrix("A");
            const auto& a2 = p.matrix("A'");
            const auto& b = p.matrix("B");
            const auto& b2 = p.matrix("B'");
            const auto x1 = ev(c, a, a2);
            const auto x2 = ev(c, b, b2);
            const auto rhs = ev(c, t * a + (1.0 - t) * b, t * a2 + (1.0 - t) * b2);
            const HermitianMatrix lhs = t * x1.value + (1.0 - t) * x2.value;
            return leq(lhs, rhs.value, tol, t * x1.slack + (1.0 - t) * x2.slack + rhs.slack);
        }
        case CheckKind::Superadditivity: {
            const auto& a = p.matrix("A");
            const auto& b = p.matrix("B");
            const auto& cm = p.matrix("C");
            const auto& d = p.matrix("D");
            const auto x1 = ev(c, a, b);
            const auto x2 = ev(c, cm, d);
            const auto rhs = ev(c, a + cm, b + d);
            return leq(x1.value + x2.value, rhs.value, tol, x1.slack + x2.slack + rhs.slack);
        }
        case CheckKind::PropertyP: {
            const auto& a = p.matrix("A");
            const auto& b = p.matrix("B");
            const auto& pr = p.matrix("P");
            const DenseMatrix& pm = pr.matrix();
            const double comm = std::max(op_norm(pm * a.matrix() - a.matrix() * pm) / (1.0 + a.norm()),
                                         op_norm(pm * b.matrix() - b.matrix() * pm) / (1.0 + b.norm()));
            if (comm > 1e-10 || op_norm(pm * pm - pm) > 1e-10) return std::nullopt;
            const auto x = ev(c, a, b);
            const auto y = ev(c, symmetrize(pm * a.matrix()), symmetrize(pm * b.matrix()));
            const double scale = std::max(x.value.norm(), y.value.norm());
            const double slack = x.slack + y.slack;
            return Outcome::worst(equal(pm * x.value.matrix(), y.value.matrix(), scale, tol, slack),
                                  equal(x.value.matrix() * pm, y.value.matrix(), scale, tol, slack));
        }
        case CheckKind::PropertyF: {
            const double xv = p.param("x");
            const double fx = ctx.f(xv);
            const auto form = [&](const HermitianMatrix& m) {
                const auto r = ev(c, m, xv * m);
                const HermitianMatrix expect = fx * m;
                return equal(expect.matrix(), r.value.matrix(), std::max(expect.norm(), r.value.norm()), tol,
                             r.slack);
            };
            Outcome out = form(id(n));
            out = Outcome::worst(out, form(p.matrix("P")));
            out = Outcome::worst(out, form(p.matrix("A")));
            out = Outcome::worst(out, form(p.matrix("A0")));
            return out;
        }
    }
    return std::nullopt;
}

/// Largest operand norm of a payload; property (F) also feeds x A as an operand.
inline double operand_scale(CheckKind kind, const Payload& p) {
    double s = 0.0;
    for (const auto& [name, m] : p.matrices) s = std::max(s, m.norm());
    if (kind == CheckKind::PropertyF) s = std::max(1.0, s) * std::max(1.0, p.param("x"));
    return s;
}

}  // namespace verify_detail

/// Evaluates check `kind` on `p`. Returns nullopt when the payload violates a
/// precondition of the check (e.g. P does not commute with A after shrinking).
/// The scale of the outcome is the larger of the operand and result norms.
[[nodiscard]] inline std::optional<Outcome> replay_check(const CheckContext& ctx, CheckKind kind, const Payload& p) {
    auto out = verify_detail::replay_raw(ctx, kind, p);
    if (!out) return out;
    const double s = verify_detail::operand_scale(kind, p);
    if (s > out->scale) {
        out->allowed += ctx.tol.rel * (s - out->scale);
        out->scale = s;
    }
    return out;
}

/// Draws the payload of trial `trial` for check `kind`.
[[nodiscard]] inline Payload generate_payload(CheckKind kind, std::size_t dim, const TrialConfig& cfg, Rng& rng,
                                              std::size_t trial) {
    using namespace verify_detail;
    const double cm = cfg.cond_max;
    Payload p;
    const auto add = [&](const char* name, HermitianMatrix m) { p.matrices.emplace_back(name, std::move(m)); };
    switch (kind) {
        case CheckKind::M1:
            add("A", gen_psd(dim, cm, rng));
            add("B", gen_psd(dim, cm, rng));
            add("E", scaled_psd(dim, cm, rng));
            add("F", scaled_psd(dim, cm, rng));
            break;
        case CheckKind::M2: {
            add("A", gen_psd(dim, cm, rng));
            add("B", gen_psd(dim, cm, rng));
            const double pick = uniform(rng);
            HermitianMatrix c = HermitianMatrix::zero(dim);
            if (pick < 0.05) c = HermitianMatrix::identity(dim);
            else if (pick >= 0.1) {
                const PsdMatrix g = gen_psd(dim, cm, rng);
                const double nrm = g.norm();
                if (nrm > 0.0) c = (uniform(rng, 0.05, 1.0) / nrm) * g.hermitian();
            }
            add("C", std::move(c));
            RealVector kd(static_cast<Eigen::Index>(dim));
            for (Eigen::Index i = 0; i < kd.size(); ++i) kd(i) = uniform(rng, 0.5, 1.0);
            add("K", reconstruct(haar_unitary(dim, rng), kd));
            break;
        }
        case CheckKind::M3:
            add("A", gen_psd(dim, cm, rng));
            add("B", gen_psd(dim, cm, rng));
            break;
        case CheckKind::M3Prime:
        case CheckKind::M3DoublePrime:
            add("A", gen_singular(dim, cm, rng));
            add("X", gen_pd(dim, cm, rng));
            break;
        case CheckKind::M4:
        case CheckKind::M4Prime:
            add("A", gen_psd(dim, cm, rng));
            add("A'", gen_psd(dim, cm, rng));
            add("B", gen_psd(dim, cm, rng));
            add("B'", gen_psd(dim, cm, rng));
            p.params.emplace_back("t", kind == CheckKind::M4Prime ? 0.5 : uniform(rng, 0.0, 1.0));
            break;
        case CheckKind::Superadditivity: {
            add("A", gen_psd(dim, cm, rng));
            add("B", gen_psd(dim, cm, rng));
            const bool zero_pair = uniform(rng) < 0.1;
            add("C", zero_pair ? HermitianMatrix::zero(dim) : gen_psd(dim, cm, rng).hermitian());
            add("D", zero_pair ? HermitianMatrix::zero(dim) : gen_psd(dim, cm, rng).hermitian());
            break;
        }
        case CheckKind::PropertyP: {
            auto triple = gen_commuting_pair(dim, cm, rng);
            const double pick = uniform(rng);
            HermitianMatrix proj = triple.projection;
            if (pick < 0.05) proj = HermitianMatrix::identity(dim);
            else if (pick < 0.1) proj = HermitianMatrix::zero(dim);
            add("A", triple.a);
            add("B", triple.b);
            add("P", std::move(proj));
            break;
        }
        case CheckKind::PropertyF: {
            const auto& grid = f_grid();
            p.params.emplace_back("x", grid[trial % grid.size()]);
            add("A", gen_pd(dim, cm, rng));
            add("A0", gen_psd(dim, cm, rng));
            add("P", gen_projection(dim, rng));
            break;
        }
    }
    return p;
}

namespace verify_detail {

inline double round_one_digit(double v) {
    if (v <= 0.0) return 0.0;
    const double e = std::pow(10.0, std::floor(std::log10(v)));
    return std::round(v / e) * e;
}

inline HermitianMatrix round_spectrum(const HermitianMatrix& m) {
    Spectrum s = spectral(m);
    const double tiny = 1e-14 * std::max(1.0, s.max_abs());
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        s.values(i) = s.values(i) <= tiny ? 0.0 : round_one_digit(s.values(i));
    return reconstruct(s.vectors, s.values);
}

inline bool still_violates(const CheckContext& ctx, CheckKind kind, const Payload& p, Outcome& out) {
    try {
        const auto o = replay_check(ctx, kind, p);
        if (o && o->violated()) {
            out = *o;
            return true;
        }
    } catch (const Error&) {
    }
    return false;
}

}  // namespace verify_detail

/// Greedy shrinking: drop one index from every matrix while the violation persists,
/// then round each matrix's eigenvalues to one significant digit.
[[nodiscard]] inline Counterexample shrink_counterexample(const CheckContext& ctx, CheckKind kind, Counterexample cx) {
    using namespace verify_detail;
    bool changed = true;
    while (changed && cx.payload.dim() > 1) {
        changed = false;
        for (std::size_t k = 0; k < cx.payload.dim(); ++k) {
            Payload cand = cx.payload;
            for (auto& [name, m] : cand.matrices) m = m.drop_index(k);
            Outcome o;
            if (still_violates(ctx, kind, cand, o)) {
                cx.payload = std::move(cand);
                cx.outcome = o;
                cx.shrunk = true;
                changed = true;
                break;
            }
        }
    }
    for (std::size_t i = 0; i < cx.payload.matrices.size(); ++i) {
        Payload cand = cx.payload;
        cand.matrices[i].second = round_spectrum(cand.matrices[i].second);
        Outcome o;
        if (still_violates(ctx, kind, cand, o)) {
            cx.payload = std::move(cand);
            cx.outcome = o;
            cx.shrunk = true;
        }
    }
    return cx;
}

namespace verify_detail {

struct TrialRecord {
    std::optional<Outcome> outcome;
    std::optional<Payload> payload;  // kept only for violations
    std::string failure;
};

/// Runs body(i) for i in [0, count) on up to `jobs` threads; results land at index i.
template <class Body>
void parallel_trials(std::size_t count, unsigned jobs, Body&& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(count));
    for (unsigned w = 0; w < n; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
}

}  // namespace verify_detail

/// Runs one axiom check; `f` is the representing function asserted by (F).
[[nodiscard]] inline CheckResult run_check(const Connection& conn, CheckKind kind, const TrialConfig& cfg,
                                           const RepresentingFunction& f) {
    using namespace verify_detail;
    cfg.validate();
    const CheckContext ctx{conn, f, cfg.tol};
    std::vector<TrialRecord> records(cfg.trials_per_check);
    parallel_trials(cfg.trials_per_check, cfg.jobs, [&](std::size_t i) {
        Rng rng = substream(cfg.seed, stream_id(kind), i);
        const std::size_t dim = cfg.dims[i % cfg.dims.size()];
        Payload p = generate_payload(kind, dim, cfg, rng, i);
        TrialRecord& rec = records[i];
        try {
            rec.outcome = replay_check(ctx, kind, p);
            if (!rec.outcome) rec.failure = "generated payload failed the check's precondition";
            else if (rec.outcome->violated()) rec.payload = std::move(p);
        } catch (const Error& e) {
            rec.failure = e.what();
        }
    });

    CheckResult res;
    res.name = std::string(check_name(kind));
    std::optional<std::size_t> worst_idx;
    bool have_margin = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!rec.outcome) {
            ++res.eval_failures;
            if (res.first_failure.empty()) res.first_failure = "trial " + std::to_string(i) + ": " + rec.failure;
            continue;
        }
        ++res.trials;
        const double rm = rec.outcome->relative_margin();
        if (!have_margin || rm < res.worst_margin) res.worst_margin = rm;
        have_margin = true;
        if (rec.outcome->violated()) {
            ++res.violations;
            const auto& o = *rec.outcome;
            const auto rel_excess = [](const Outcome& x) { return x.scale > 0.0 ? x.excess() / x.scale : x.excess(); };
            if (!worst_idx || rel_excess(o) < rel_excess(*records[*worst_idx].outcome)) worst_idx = i;
        }
    }
    if (worst_idx) {
        Counterexample cx{res.name, *records[*worst_idx].payload, *records[*worst_idx].outcome, *worst_idx, false};
        res.counterexample = cfg.shrink ? shrink_counterexample(ctx, kind, std::move(cx)) : std::move(cx);
    }
    return res;
}

[[nodiscard]] inline CheckResult run_check(const Connection& conn, CheckKind kind, const TrialConfig& cfg) {
    return run_check(conn, kind, cfg, conn.representing_function());
}

/// Named wrappers, one per axiom.
[[nodiscard]] inline CheckResult check_M1(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M1, cfg); }
[[nodiscard]] inline CheckResult check_M2(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M2, cfg); }
[[nodiscard]] inline CheckResult check_M3(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M3, cfg); }
[[nodiscard]] inline CheckResult check_M3prime(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M3Prime, cfg); }
[[nodiscard]] inline CheckResult check_M3doubleprime(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M3DoublePrime, cfg); }
[[nodiscard]] inline CheckResult check_M4(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M4, cfg); }
[[nodiscard]] inline CheckResult check_M4prime(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::M4Prime, cfg); }
[[nodiscard]] inline CheckResult check_property_P(const Connection& c, const TrialConfig& cfg) { return run_check(c, CheckKind::PropertyP, cfg); }
[[nodiscard]] inline CheckResult check_property_F(const Connection& c, const RepresentingFunction& f, const TrialConfig& cfg) {
    return run_check(c, CheckKind::PropertyF, cfg, f);
}
[[nodiscard]] inline CheckResult check_superadditivity(const Connection& c, const TrialConfig& cfg) {
    return run_check(c, CheckKind::Superadditivity, cfg);
}

/// Order isomorphism between representing functions and connections. When
/// f1 <= f2 on a log-grid of [1e-4, 1e4], the lifted connections must satisfy
/// A sigma1 B <= A sigma2 B on random PSD pairs (a violation otherwise). When
/// f1(x*) > f2(x*) somewhere, the witness pair (I, x* I) must break operator
/// dominance at every configured dimension.
[[nodiscard]] inline CheckResult check_order_isomorphism(const RepresentingFunction& f1, const RepresentingFunction& f2,
                                                         const TrialConfig& cfg) {
    using namespace verify_detail;
    cfg.validate();
    const Connection c1(f1);
    const Connection c2(f2);
    double worst_x = 0.0;
    double worst_gap = -INFINITY;
    for (int k = -80; k <= 80; ++k) {
        const double x = std::pow(10.0, 0.05 * k);
        const double v2 = f2(x);
        const double gap = (f1(x) - v2) / std::max(1.0, std::abs(v2));
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_x = x;
        }
    }
    const bool dominated = worst_gap <= 1e-12;

    CheckResult res;
    res.name = "order_isomorphism";
    std::vector<TrialRecord> records;
    if (dominated) {
        res.detail = "f1 <= f2 on the grid; checking A sigma1 B <= A sigma2 B";
        records.resize(cfg.trials_per_check);
        parallel_trials(cfg.trials_per_check, cfg.jobs, [&](std::size_t i) {
            Rng rng = substream(cfg.seed, 0x2000, i);
            const std::size_t dim = cfg.dims[i % cfg.dims.size()];
            Payload p;
            p.matrices.emplace_back("A", gen_psd(dim, cfg.cond_max, rng));
            p.matrices.emplace_back("B", gen_psd(dim, cfg.cond_max, rng));
            try {
                const auto x1 = ev(c1, p.matrix("A"), p.matrix("B"));
                const auto x2 = ev(c2, p.matrix("A"), p.matrix("B"));
                records[i].outcome = leq(x1.value, x2.value, cfg.tol, x1.slack + x2.slack);
                if (records[i].outcome->violated()) records[i].payload = std::move(p);
            } catch (const Error& e) {
                records[i].failure = e.what();
            }
        });
    } else {
        res.detail = "f1 > f2 at x = " + std::to_string(worst_x) + "; checking the witness (I, xI) breaks dominance";
        for (const auto dim : cfg.dims) {
            TrialRecord rec;
            Payload p;
            p.matrices.emplace_back("A", HermitianMatrix::identity(dim));
            p.matrices.emplace_back("B", worst_x * HermitianMatrix::identity(dim));
            p.params.emplace_back("x", worst_x);
            try {
                const auto x1 = ev(c1, p.matrix("A"), p.matrix("B"));
                const auto x2 = ev(c2, p.matrix("A"), p.matrix("B"));
                const Outcome dom = leq(x1.value, x2.value, cfg.tol, x1.slack + x2.slack);
                // Success here means dominance is broken, so the outcome is the mirror image:
                // how far past the threshold the witness lands.
                rec.outcome = Outcome{-dom.margin - 2.0 * dom.allowed, dom.allowed, dom.scale};
                if (rec.outcome->violated()) rec.payload = std::move(p);
            } catch (const Error& e) {
                rec.failure = e.what();
            }
            records.push_back(std::move(rec));
        }
    }
    std::optional<std::size_t> worst_idx;
    bool have_margin = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!rec.outcome) {
            ++res.eval_failures;
            if (res.first_failure.empty()) res.first_failure = rec.failure;
            continue;
        }
        ++res.trials;
        const double rm = rec.outcome->relative_margin();
        if (!have_margin || rm < res.worst_margin) res.worst_margin = rm;
        have_margin = true;
        if (rec.outcome->violated()) {
            ++res.violations;
            if (!worst_idx || rec.outcome->excess() < records[*worst_idx].outcome->excess()) worst_idx = i;
        }
    }
    if (worst_idx)
        res.counterexample = Counterexample{res.name, *records[*worst_idx].payload, *records[*worst_idx].outcome,
                                            *worst_idx, false};
    return res;
}

struct AxiomSet {
    std::string name;
    std::vector<CheckKind> members;
};

/// Axiom sets characterizing connections: (M1, M2, M3') and (M1, M2, M3''),
/// and under (M2) the pairs {M4, M4'} x {M3, M3', M3''}.
[[nodiscard]] inline const std::vector<AxiomSet>& axiom_sets() {
    using K = CheckKind;
    static const std::vector<AxiomSet> sets = {
        {"BO(M1,M2,M3')", {K::M1, K::M2, K::M3Prime}},   {"BO(M1,M2,M3'')", {K::M1, K::M2, K::M3DoublePrime}},
        {"BO(M2,M4,M3)", {K::M2, K::M4, K::M3}},          {"BO(M2,M4,M3')", {K::M2, K::M4, K::M3Prime}},
        {"BO(M2,M4,M3'')", {K::M2, K::M4, K::M3DoublePrime}}, {"BO(M2,M4',M3)", {K::M2, K::M4Prime, K::M3}},
        {"BO(M2,M4',M3')", {K::M2, K::M4Prime, K::M3Prime}}, {"BO(M2,M4',M3'')", {K::M2, K::M4Prime, K::M3DoublePrime}},
    };
    return sets;
}

struct AxiomSetVerdict {
    std::string name;
    std::string verdict;  ///< "no violation found", "violation found" or "not checked"
};

struct VerificationReport {
    nlohmann::json connection;
    std::uint64_t seed = 0;
    TrialConfig config;
    std::vector<CheckResult> checks;
    std::vector<AxiomSetVerdict> sets;
    bool pass = true;
    double wall_time_s = 0.0;

    [[nodiscard]] const CheckResult* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    [[nodiscard]] nlohmann::json to_json(bool include_timing = true) const {
        nlohmann::json cs = nlohmann::json::array();
        for (const auto& c : checks) cs.push_back(c.to_json());
        nlohmann::json as = nlohmann::json::array();
        for (const auto& s : sets) as.push_back({{"name", s.name}, {"verdict", s.verdict}});
        nlohmann::json j = {{"connection", connection}, {"seed", seed},      {"config", config.to_json()},
                            {"checks", std::move(cs)},  {"axiom_sets", std::move(as)},
                            {"verdict", pass ? "pass" : "fail"}};
        if (include_timing) j["wall_time_s"] = wall_time_s;
        return j;
    }
};

/// Runs the selected checks and derives the per-axiom-set verdicts.
[[nodiscard]] inline VerificationReport run_suite(const Connection& conn, const TrialConfig& cfg,
                                                  std::span<const CheckKind> checks = kAllChecks) {
    const auto start = std::chrono::steady_clock::now();
    VerificationReport rep;
    rep.connection = conn.to_json();
    rep.seed = cfg.seed;
    rep.config = cfg;
    const RepresentingFunction f = conn.representing_function();
    for (const auto k : checks) rep.checks.push_back(run_check(conn, k, cfg, f));
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.passed();
    for (const auto& set : axiom_sets()) {
        // one violated member refutes the set even when others were not run
        bool violated = false, missing = false;
        for (const auto k : set.members) {
            const CheckResult* r = rep.find(check_name(k));
            if (r == nullptr) missing = true;
            else if (!r->passed()) violated = true;
        }
        rep.sets.push_back(
            {set.name, violated ? "violation found" : missing ? "not checked" : "no violation found"});
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace opmeans
