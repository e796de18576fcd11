#pragma once

// Random test operands: Haar unitaries, PSD/PD matrices with bounded
// condition number, projections and commuting pairs.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "opmeans/psd.hpp"

namespace opmeans {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent generator for (seed, stream, index); used for per-trial substreams.
[[nodiscard]] inline Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return Rng(mix64(mix64(mix64(seed) ^ stream) ^ index));
}

[[nodiscard]] inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

[[nodiscard]] inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of R's diagonal removed.
[[nodiscard]] inline DenseMatrix haar_unitary(std::size_t dim, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) z(i, j) = Complex(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<DenseMatrix> qr(z);
    DenseMatrix q = qr.householderQ();
    const DenseMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mag = std::abs(r(j, j));
        if (mag > 0.0) q.col(j) *= r(j, j) / mag;
    }
    return q;
}

/// Eigenvalues for a PSD draw: log-uniform in [s/cond_max, s] with an overall
/// scale s log-uniform in [0.1, 10]; with probability 0.3 (dim > 1) or 0.2
/// (dim = 1) one or more eigenvalues are exactly zero.
[[nodiscard]] inline RealVector psd_spectrum(std::size_t dim, double cond_max, Rng& rng, bool allow_zero) {
    const auto n = static_cast<Eigen::Index>(dim);
    const double s = log_uniform(rng, 0.1, 10.0);
    RealVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = s * log_uniform(rng, 1.0 / cond_max, 1.0);
    if (n > 1) d(0) = s;  // pin the top so the condition number is attained
    if (allow_zero && uniform(rng) < (dim == 1 ? 0.2 : 0.3)) {
        const auto zeros = std::uniform_int_distribution<Eigen::Index>(1, std::max<Eigen::Index>(1, n - 1))(rng);
        for (Eigen::Index i = 0; i < zeros; ++i) d(n - 1 - i) = 0.0;
    }
    return d;
}

[[nodiscard]] inline PsdMatrix gen_psd(std::size_t dim, double cond_max, Rng& rng) {
    const RealVector d = psd_spectrum(dim, cond_max, rng, true);
    return PsdMatrix::assume(reconstruct(haar_unitary(dim, rng), d), 0.0);
}

[[nodiscard]] inline PsdMatrix gen_pd(std::size_t dim, double cond_max, Rng& rng) {
    const RealVector d = psd_spectrum(dim, cond_max, rng, false);
    return PsdMatrix::assume(reconstruct(haar_unitary(dim, rng), d), d.minCoeff());
}

/// PSD draw with at least one zero eigenvalue (for dim = 1 this is the zero matrix).
[[nodiscard]] inline PsdMatrix gen_singular(std::size_t dim, double cond_max, Rng& rng) {
    RealVector d = psd_spectrum(dim, cond_max, rng, false);
    d(static_cast<Eigen::Index>(dim) - 1) = 0.0;
    return PsdMatrix::assume(reconstruct(haar_unitary(dim, rng), d), 0.0);
}

/// Random 0/1 pattern of length dim (each entry 1 with probability 1/2).
[[nodiscard]] inline RealVector projection_pattern(std::size_t dim, Rng& rng) {
    RealVector p(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = uniform(rng) < 0.5 ? 0.0 : 1.0;
    return p;
}

[[nodiscard]] inline PsdMatrix gen_projection(std::size_t dim, Rng& rng) {
    const DenseMatrix u = haar_unitary(dim, rng);
    return PsdMatrix::assume(reconstruct(u, projection_pattern(dim, rng)), 0.0);
}

/// Two PSD matrices sharing the eigenbasis `basis`, plus a projection from the same basis.
struct CommutingTriple {
    PsdMatrix a;
    PsdMatrix b;
    PsdMatrix projection;
    DenseMatrix basis;
};

[[nodiscard]] inline CommutingTriple gen_commuting_pair(std::size_t dim, double cond_max, Rng& rng) {
    const DenseMatrix u = haar_unitary(dim, rng);
    const RealVector da = psd_spectrum(dim, cond_max, rng, true);
    const RealVector db = psd_spectrum(dim, cond_max, rng, true);
    const RealVector p = projection_pattern(dim, rng);
    return {PsdMatrix::assume(reconstruct(u, da), 0.0), PsdMatrix::assume(reconstruct(u, db), 0.0),
            PsdMatrix::assume(reconstruct(u, p), 0.0), u};
}

}  // namespace opmeans
