#pragma once

// Dense Hermitian / positive-semidefinite primitives: the carrier types for
// every operand, the spectral functional calculus, and the Loewner order.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opmeans/errors.hpp"

namespace opmeans {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Absolute/relative tolerance pair. Comparisons accept an error of
/// `abs + rel * scale`, where `scale` is a norm chosen by the caller.
struct Tolerance {
    double abs = 1e-8;
    double rel = 1e-8;

    [[nodiscard]] double at_scale(double scale) const noexcept { return abs + rel * scale; }

    void validate() const {
        if (!std::isfinite(abs) || !std::isfinite(rel) || abs < 0.0 || rel < 0.0)
            throw ParameterError("tolerance components must be finite and nonnegative");
    }
};

/// Acceptance slack for PSD certificates of a matrix with spectral norm `norm`.
[[nodiscard]] inline double psd_tol(double norm) noexcept { return 1e-9 * (1.0 + norm); }

class HermitianMatrix;
HermitianMatrix symmetrize(const DenseMatrix& m);

/// Dense n x n complex Hermitian matrix. Entries satisfy a(i,j) == conj(a(j,i))
/// exactly; every construction path goes through symmetrize().
class HermitianMatrix {
public:
    [[nodiscard]] static HermitianMatrix identity(std::size_t n) {
        check_dim(n);
        return HermitianMatrix(DenseMatrix::Identity(idx(n), idx(n)));
    }

    [[nodiscard]] static HermitianMatrix zero(std::size_t n) {
        check_dim(n);
        return HermitianMatrix(DenseMatrix::Zero(idx(n), idx(n)));
    }

    [[nodiscard]] static HermitianMatrix diagonal(std::span<const double> d) {
        check_dim(d.size());
        DenseMatrix m = DenseMatrix::Zero(idx(d.size()), idx(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) m(idx(i), idx(i)) = d[i];
        return HermitianMatrix(std::move(m));
    }

    [[nodiscard]] static HermitianMatrix diagonal(std::initializer_list<double> d) {
        return diagonal(std::span<const double>(d.begin(), d.size()));
    }

    /// Real symmetric matrix from row-major nested lists.
    [[nodiscard]] static HermitianMatrix real(std::initializer_list<std::initializer_list<double>> rows);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] const DenseMatrix& matrix() const noexcept { return m_; }
    [[nodiscard]] Complex operator()(std::size_t i, std::size_t j) const { return m_(idx(i), idx(j)); }

    /// Spectral norm; for Hermitian matrices this is the largest |eigenvalue|.
    [[nodiscard]] double norm() const {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) return m_.norm();  // Frobenius bound
        const auto& ev = es.eigenvalues();
        return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    }

    friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
        check_same(a, b);
        return HermitianMatrix(a.m_ + b.m_);
    }
    friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
        check_same(a, b);
        return HermitianMatrix(a.m_ - b.m_);
    }
    friend HermitianMatrix operator*(double s, const HermitianMatrix& a) { return HermitianMatrix(s * a.m_); }
    friend HermitianMatrix operator*(const HermitianMatrix& a, double s) { return s * a; }

    /// C A C* for an arbitrary square C of the same dimension.
    [[nodiscard]] HermitianMatrix congruence(const DenseMatrix& c) const {
        if (c.rows() != m_.rows() || c.cols() != m_.cols())
            throw DimensionError("congruence: dimension mismatch");
        return symmetrize(c * m_ * c.adjoint());
    }

    /// Principal submatrix with row/column `k` removed.
    [[nodiscard]] HermitianMatrix drop_index(std::size_t k) const;

    friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) {
        return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
    }

    static void check_same(const HermitianMatrix& a, const HermitianMatrix& b) {
        if (a.dim() != b.dim())
            throw DimensionError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                 std::to_string(b.dim()));
    }

private:
    friend HermitianMatrix symmetrize(const DenseMatrix& m);

    // Callers guarantee the input is already exactly Hermitian.
    explicit HermitianMatrix(DenseMatrix m) : m_(std::move(m)) {}

    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
    static void check_dim(std::size_t n) {
        if (n == 0) throw DimensionError("matrix dimension must be >= 1");
    }

    DenseMatrix m_;
};

/// (M + M*)/2. The result is exactly Hermitian and symmetrize is idempotent.
inline HermitianMatrix symmetrize(const DenseMatrix& m) {
    if (m.rows() != m.cols())
        throw DimensionError("symmetrize: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    if (m.rows() == 0) throw DimensionError("matrix dimension must be >= 1");
    const Eigen::Index n = m.rows();
    DenseMatrix h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = Complex(m(i, i).real(), 0.0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Complex v = 0.5 * (m(i, j) + std::conj(m(j, i)));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return HermitianMatrix(std::move(h));
}

inline HermitianMatrix HermitianMatrix::real(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = rows.size();
    check_dim(n);
    DenseMatrix m(idx(n), idx(n));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        if (row.size() != n) throw DimensionError("HermitianMatrix::real: ragged rows");
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return symmetrize(m);
}

inline HermitianMatrix HermitianMatrix::drop_index(std::size_t k) const {
    const auto n = dim();
    if (n <= 1) throw DimensionError("drop_index: cannot shrink a 1x1 matrix");
    if (k >= n) throw DimensionError("drop_index: index out of range");
    DenseMatrix out(idx(n - 1), idx(n - 1));
    for (std::size_t i = 0, r = 0; i < n; ++i) {
        if (i == k) continue;
        for (std::size_t j = 0, c = 0; j < n; ++j) {
            if (j == k) continue;
            out(idx(r), idx(c++)) = m_(idx(i), idx(j));
        }
        ++r;
    }
    return HermitianMatrix(std::move(out));
}

/// Raised when the Hermitian eigensolver reports failure; keeps the input.
class EigenError : public Error {
public:
    EigenError(const std::string& what, HermitianMatrix input) : Error(what), input_(std::move(input)) {}
    [[nodiscard]] const HermitianMatrix& input() const noexcept { return input_; }

private:
    HermitianMatrix input_;
};

/// Eigen-decomposition A = U diag(values) U*, values ascending.
struct Spectrum {
    RealVector values;
    DenseMatrix vectors;

    [[nodiscard]] double min() const { return values(0); }
    [[nodiscard]] double max_abs() const {
        return std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
    }
};

[[nodiscard]] inline Spectrum spectral(const HermitianMatrix& a) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a.matrix());
    if (es.info() != Eigen::Success) throw EigenError("Hermitian eigensolver did not converge", a);
    if (!es.eigenvalues().allFinite()) throw EigenError("eigensolver produced non-finite eigenvalues", a);
    return Spectrum{es.eigenvalues(), es.eigenvectors()};
}

/// U diag(d) U*.
[[nodiscard]] inline HermitianMatrix reconstruct(const DenseMatrix& u, const RealVector& d) {
    return symmetrize(u * d.cast<Complex>().asDiagonal() * u.adjoint());
}

/// Applies `f` to every eigenvalue of `s` and rebuilds the matrix. Eigenvalues
/// below zero (eigensolver noise on PSD input) are clamped to 0 first.
template <class F>
[[nodiscard]] HermitianMatrix apply_spectral(const Spectrum& s, F&& f) {
    RealVector mapped(s.values.size());
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
        const double x = std::max(s.values(i), 0.0);
        const double y = f(x);
        if (!std::isfinite(y))
            throw EvaluationError("function value is not finite at eigenvalue " + std::to_string(x), x);
        mapped(i) = y;
    }
    return reconstruct(s.vectors, mapped);
}

/// Hermitian matrix certified positive semidefinite: its smallest eigenvalue
/// is at least `min_eig_bound() >= -psd_tol(norm)`.
class PsdMatrix {
public:
    /// Certifies `h` via its spectrum; throws SingularityError when it is not PSD.
    [[nodiscard]] static PsdMatrix certify(HermitianMatrix h) {
        const Spectrum s = spectral(h);
        const double tol = psd_tol(s.max_abs());
        if (s.min() < -tol)
            throw SingularityError("matrix is not positive semidefinite (min eigenvalue " +
                                       std::to_string(s.min()) + ")",
                                   s.min());
        return PsdMatrix(std::move(h), s.min());
    }

    /// Wraps a matrix known to be PSD by construction, with a caller-supplied bound.
    [[nodiscard]] static PsdMatrix assume(HermitianMatrix h, double min_eig_bound) {
        return PsdMatrix(std::move(h), min_eig_bound);
    }

    [[nodiscard]] static PsdMatrix identity(std::size_t n) { return assume(HermitianMatrix::identity(n), 1.0); }
    [[nodiscard]] static PsdMatrix zero(std::size_t n) { return assume(HermitianMatrix::zero(n), 0.0); }
    [[nodiscard]] static PsdMatrix diagonal(std::initializer_list<double> d) {
        return certify(HermitianMatrix::diagonal(d));
    }

    [[nodiscard]] const HermitianMatrix& hermitian() const noexcept { return h_; }
    [[nodiscard]] const DenseMatrix& matrix() const noexcept { return h_.matrix(); }
    [[nodiscard]] std::size_t dim() const noexcept { return h_.dim(); }
    [[nodiscard]] double min_eig_bound() const noexcept { return bound_; }
    [[nodiscard]] double norm() const { return h_.norm(); }

    operator const HermitianMatrix&() const noexcept { return h_; }  // NOLINT(google-explicit-constructor)

    /// Nonnegative combinations stay PSD.
    friend PsdMatrix operator+(const PsdMatrix& a, const PsdMatrix& b) {
        return PsdMatrix(a.h_ + b.h_, a.bound_ + b.bound_);
    }
    friend PsdMatrix operator*(double s, const PsdMatrix& a) {
        if (!(s >= 0.0)) throw ParameterError("PSD matrices may only be scaled by nonnegative reals");
        return PsdMatrix(s * a.h_, s * a.bound_);
    }

private:
    PsdMatrix(HermitianMatrix h, double bound) : h_(std::move(h)), bound_(bound) {}

    HermitianMatrix h_;
    double bound_;
};

/// f(A) = U diag(f(lambda_i)) U*. `f` is any callable double -> double defined on [0, inf).
template <class F>
[[nodiscard]] HermitianMatrix matrix_function(const PsdMatrix& a, F&& f) {
    return apply_spectral(spectral(a.hermitian()), std::forward<F>(f));
}

[[nodiscard]] inline PsdMatrix sqrt_psd(const PsdMatrix& a) {
    const Spectrum s = spectral(a.hermitian());
    return PsdMatrix::assume(apply_spectral(s, [](double x) { return std::sqrt(x); }),
                             std::sqrt(std::max(s.min(), 0.0)));
}

/// Inverse of a positive definite matrix whose smallest eigenvalue is >= floor.
[[nodiscard]] inline PsdMatrix inv_pd(const PsdMatrix& a, double floor) {
    if (!(floor > 0.0)) throw ParameterError("inv_pd: floor must be positive");
    const Spectrum s = spectral(a.hermitian());
    if (s.min() < floor)
        throw SingularityError("inv_pd: smallest eigenvalue " + std::to_string(s.min()) + " is below floor " +
                                   std::to_string(floor),
                               s.min());
    const double top = s.values(s.values.size() - 1);
    return PsdMatrix::assume(apply_spectral(s, [](double x) { return 1.0 / x; }), 1.0 / top);
}

struct LoewnerResult {
    bool holds;
    double margin;     ///< smallest eigenvalue of B - A
    double threshold;  ///< margin must be >= -threshold
    explicit operator bool() const noexcept { return holds; }
};

/// A <= B in the Loewner order, up to tol.abs + tol.rel * max(|A|, |B|).
[[nodiscard]] inline LoewnerResult loewner_leq(const HermitianMatrix& a, const HermitianMatrix& b,
                                               const Tolerance& tol = {}) {
    HermitianMatrix::check_same(a, b);
    const double margin = spectral(b - a).min();
    const double threshold = tol.at_scale(std::max(a.norm(), b.norm()));
    return {margin >= -threshold, margin, threshold};
}

/// A + eps I.
[[nodiscard]] inline PsdMatrix regularize(const PsdMatrix& a, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("regularize: eps must be positive");
    return PsdMatrix::assume(a.hermitian() + eps * HermitianMatrix::identity(a.dim()), a.min_eig_bound() + eps);
}

/// Spectral-norm distance between two Hermitian matrices.
[[nodiscard]] inline double distance(const HermitianMatrix& a, const HermitianMatrix& b) { return (a - b).norm(); }

}  // namespace opmeans
