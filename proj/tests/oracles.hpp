#pragma once

// Independent reference computations for the tests. None of these route
// through the library's evaluation code: they use Eigen's dense inverse and
// products directly, closed forms on commuting diagonals, or defining
// equations (the Riccati equation of the geometric mean).

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "opmeans/psd.hpp"
#include "opmeans/random.hpp"

namespace oracle {

using opmeans::DenseMatrix;
using opmeans::HermitianMatrix;

inline DenseMatrix inverse(const DenseMatrix& m) { return m.inverse(); }

/// 2 (A^{-1} + B^{-1})^{-1} via Eigen's LU inverse.
inline DenseMatrix harmonic(const DenseMatrix& a, const DenseMatrix& b) {
    return 2.0 * (a.inverse() + b.inverse()).inverse();
}

/// X A^{-1} X - B; zero exactly when X = A # B (X PD).
inline double riccati_residual(const DenseMatrix& x, const DenseMatrix& a, const DenseMatrix& b) {
    return (x * a.inverse() * x - b).norm();
}

/// Spectral norm of (a - b) relative to 1 + |b|.
inline double rel_gap(const DenseMatrix& a, const DenseMatrix& b) {
    Eigen::JacobiSVD<DenseMatrix> d(a - b), s(b);
    return d.singularValues()(0) / (1.0 + s.singularValues()(0));
}

inline double gap(const DenseMatrix& a, const DenseMatrix& b) {
    Eigen::JacobiSVD<DenseMatrix> d(a - b);
    return d.singularValues()(0);
}

/// Diagonal matrix from entries.
inline DenseMatrix diag(const std::vector<double>& d) {
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return m;
}

/// Commuting pair U diag(a) U*, U diag(b) U* with the scalar answer U diag(op(a_i, b_i)) U*.
template <class Op>
struct CommutingCase {
    HermitianMatrix a, b;
    DenseMatrix expected;
};

template <class Op>
CommutingCase<Op> commuting(std::size_t n, opmeans::Rng& rng, Op op, double lo = 0.1, double hi = 10.0) {
    const DenseMatrix u = opmeans::haar_unitary(n, rng);
    opmeans::RealVector da(static_cast<Eigen::Index>(n)), db(static_cast<Eigen::Index>(n)), dr(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < da.size(); ++i) {
        da(i) = opmeans::log_uniform(rng, lo, hi);
        db(i) = opmeans::log_uniform(rng, lo, hi);
        dr(i) = op(da(i), db(i));
    }
    return {opmeans::reconstruct(u, da), opmeans::reconstruct(u, db), u * dr.asDiagonal() * u.adjoint()};
}

}  // namespace oracle
