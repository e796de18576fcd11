#pragma once

// Discrete representing measures: atoms alpha at 0, beta at infinity and
// weighted nodes (lambda_i, w_i) on (0, inf). The connection they represent is
//
//   A sigma B = alpha A + beta B + sum_i w_i (lambda_i + 1)/(2 lambda_i) ((lambda_i A) ! B),
//
// and on scalars f(x) = alpha + beta x + sum_i w_i (lambda_i + 1) x / (lambda_i + x).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "opmeans/errors.hpp"

namespace opmeans {

struct MeasureNode {
    double lambda;
    double weight;
};

class DiscreteMeasure {
public:
    /// Validates and sorts the nodes; nodes with equal lambda are merged.
    DiscreteMeasure(double alpha, double beta, std::vector<MeasureNode> nodes)
        : alpha_(alpha), beta_(beta), nodes_(std::move(nodes)) {
        if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw ParameterError("measure: atoms must be finite and nonnegative");
        for (const auto& n : nodes_) {
            if (!(n.lambda > 0.0) || !std::isfinite(n.lambda))
                throw ParameterError("measure: node positions must be finite and positive");
            if (!(n.weight >= 0.0) || !std::isfinite(n.weight))
                throw ParameterError("measure: node weights must be finite and nonnegative");
        }
        std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
        std::vector<MeasureNode> merged;
        for (const auto& n : nodes_) {
            if (!merged.empty() && merged.back().lambda == n.lambda) merged.back().weight += n.weight;
            else merged.push_back(n);
        }
        nodes_ = std::move(merged);
    }

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] const std::vector<MeasureNode>& nodes() const noexcept { return nodes_; }

    /// Total mass mu([0, inf]); equals f(1).
    [[nodiscard]] double mass() const {
        double m = alpha_ + beta_;
        for (const auto& n : nodes_) m += n.weight;
        return m;
    }

    /// Kernel (lambda + 1)/(2 lambda) (lambda x ! y) on scalars, with 0 ! y = x ! 0 = 0.
    [[nodiscard]] static double scalar_kernel(double lambda, double x, double y) {
        const double lx = lambda * x;
        if (lx == 0.0 || y == 0.0) return 0.0;
        const double harmonic = 2.0 * lx * y / (lx + y);
        return (lambda + 1.0) / (2.0 * lambda) * harmonic;
    }

    /// x sigma~ y = alpha x + beta y + sum w_i kernel(lambda_i, x, y).
    [[nodiscard]] double scalar_eval(double x, double y) const {
        double s = alpha_ * x + beta_ * y;
        for (const auto& n : nodes_) s += n.weight * scalar_kernel(n.lambda, x, y);
        return s;
    }

    /// The representing function f(x) = 1 sigma~ x.
    [[nodiscard]] double representing(double x) const { return scalar_eval(1.0, x); }

private:
    double alpha_;
    double beta_;
    std::vector<MeasureNode> nodes_;
};

/// Gauss-Legendre rule on [-1, 1]: abscissae ascending with their weights.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

[[nodiscard]] inline GaussLegendre gauss_legendre(std::size_t n) {
    if (n == 0) throw ParameterError("gauss_legendre: need at least one node");
    GaussLegendre rule{std::vector<double>(n), std::vector<double>(n)};
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n from the Tricomi initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const auto kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = nd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const auto kd = static_cast<double>(k);
            const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = nd * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
    }
    return rule;
}

/// Representing measure of x^t, 0 < t < 1:
///   dmu = (sin(t pi)/pi) lambda^{t-1}/(1 + lambda) dlambda.
/// For t = 1/2 the map lambda = tan^2(theta) makes the density uniform, (2/pi) dtheta.
/// Otherwise the two halves are straightened separately: lambda = w^{1/t} on (0, 1]
/// and lambda = w^{-1/(1-t)} on [1, inf), where the density becomes
/// c / (t (1 + lambda)) dw and c / ((1 - t)(1 + 1/lambda)) dw respectively.
[[nodiscard]] inline DiscreteMeasure geometric_quadrature(double t, std::size_t node_count = 200) {
    if (!(t > 0.0 && t < 1.0)) throw ParameterError("geometric_quadrature: t must lie in (0, 1)");
    std::vector<MeasureNode> nodes;
    nodes.reserve(node_count);
    if (t == 0.5) {
        const auto rule = gauss_legendre(node_count);
        const double half = std::numbers::pi / 4.0;  // theta = half (u + 1), u in [-1, 1]
        for (std::size_t i = 0; i < node_count; ++i) {
            const double tn = std::tan(half * (rule.nodes[i] + 1.0));
            nodes.push_back({tn * tn, half * rule.weights[i] * 2.0 / std::numbers::pi});
        }
        return DiscreteMeasure(0.0, 0.0, std::move(nodes));
    }
    if (node_count < 2) throw ParameterError("geometric_quadrature: need at least two nodes for t != 1/2");
    const auto rule = gauss_legendre(node_count / 2);
    const double c = std::sin(t * std::numbers::pi) / std::numbers::pi;
    double lost_low = 0.0, lost_high = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double w = 0.5 * (rule.nodes[i] + 1.0);
        const double gw = 0.5 * rule.weights[i];
        const double lo = std::pow(w, 1.0 / t);
        const double hi = std::pow(w, -1.0 / (1.0 - t));
        const double wlo = c / (t * (1.0 + lo)) * gw;
        const double whi = c / ((1.0 - t) * (1.0 + 1.0 / hi)) * gw;
        if (lo > 0.0) nodes.push_back({lo, wlo});
        else lost_low += wlo;
        if (std::isfinite(hi)) nodes.push_back({hi, whi});
        else lost_high += whi;
    }
    return DiscreteMeasure(lost_low, lost_high, std::move(nodes));
}

/// Representing measure of (x - 1)/log x: dmu = du / (pi^2 + u^2) with
/// u = log lambda; under u = pi tan(phi) it is dphi/pi on (-pi/2, pi/2).
[[nodiscard]] inline DiscreteMeasure logarithmic_quadrature(std::size_t node_count = 200) {
    const auto rule = gauss_legendre(node_count);
    const double half = std::numbers::pi / 2.0;
    std::vector<MeasureNode> nodes;
    nodes.reserve(node_count);
    double lost_low = 0.0, lost_high = 0.0;
    for (std::size_t i = 0; i < node_count; ++i) {
        const double phi = half * rule.nodes[i];
        const double w = half * rule.weights[i] / std::numbers::pi;
        const double lambda = std::exp(std::numbers::pi * std::tan(phi));
        // nodes outside double range carry their mass to the atoms they approach
        if (lambda == 0.0) lost_low += w;
        else if (!std::isfinite(lambda)) lost_high += w;
        else nodes.push_back({lambda, w});
    }
    // the kernel tends to 1 as lambda -> 0 and to x as lambda -> inf
    return DiscreteMeasure(lost_low, lost_high, std::move(nodes));
}

/// Single atom at lambda = 1 with unit weight: the harmonic mean.
[[nodiscard]] inline DiscreteMeasure harmonic_atom() { return DiscreteMeasure(0.0, 0.0, {{1.0, 1.0}}); }

}  // namespace opmeans
