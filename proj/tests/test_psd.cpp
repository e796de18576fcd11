#include <cmath>

#include <gtest/gtest.h>

#include "opmeans/matrix_json.hpp"
#include "opmeans/psd.hpp"
#include "opmeans/random.hpp"
#include "oracles.hpp"

using namespace opmeans;

TEST(Symmetrize, AveragesWithAdjoint) {
    DenseMatrix m(2, 2);
    m << 1, 2, 0, 1;
    const HermitianMatrix h = symmetrize(m);
    EXPECT_EQ(h, HermitianMatrix::real({{1, 1}, {1, 1}}));
}

TEST(Symmetrize, FixedPoints) {
    EXPECT_EQ(symmetrize(DenseMatrix::Identity(4, 4)), HermitianMatrix::identity(4));
    Rng rng = substream(1, 0, 0);
    const HermitianMatrix h = gen_psd(3, 100.0, rng).hermitian();
    EXPECT_EQ(symmetrize(h.matrix()), h);
}

TEST(Symmetrize, ExactlyHermitianForComplexInput) {
    Rng rng = substream(1, 1, 0);
    DenseMatrix m = haar_unitary(5, rng) * 3.0;
    const HermitianMatrix h = symmetrize(m);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(h(i, j), std::conj(h(j, i)));
}

TEST(HermitianMatrix, RejectsEmptyAndMismatch) {
    EXPECT_THROW((void)HermitianMatrix::identity(0), DimensionError);
    EXPECT_THROW((void)(HermitianMatrix::identity(2) + HermitianMatrix::identity(3)), DimensionError);
}

TEST(Spectral, DiagonalAndTwoByTwo) {
    const Spectrum s = spectral(HermitianMatrix::diagonal({3, 1}));
    EXPECT_DOUBLE_EQ(s.values(0), 1.0);
    EXPECT_DOUBLE_EQ(s.values(1), 3.0);
    // (2 - l)^2 - 1 = 0
    const Spectrum t = spectral(HermitianMatrix::real({{2, 1}, {1, 2}}));
    EXPECT_NEAR(t.values(0), 1.0, 1e-14);
    EXPECT_NEAR(t.values(1), 3.0, 1e-14);
    const Spectrum i4 = spectral(HermitianMatrix::identity(4));
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(i4.values(k), 1.0);
}

TEST(Spectral, ReconstructionAndUnitarity) {
    Rng rng = substream(2, 0, 0);
    for (std::size_t n : {1, 2, 3, 5, 8}) {
        const HermitianMatrix h = gen_psd(n, 1e4, rng).hermitian();
        const Spectrum s = spectral(h);
        EXPECT_LT(oracle::gap(reconstruct(s.vectors, s.values).matrix(), h.matrix()), 1e-12 * (1.0 + h.norm()));
        EXPECT_LT(oracle::gap(s.vectors.adjoint() * s.vectors, DenseMatrix::Identity(n, n)), 1e-12);
        for (Eigen::Index i = 1; i < s.values.size(); ++i) EXPECT_LE(s.values(i - 1), s.values(i));
    }
}

TEST(MatrixFunction, Examples) {
    const PsdMatrix a = PsdMatrix::diagonal({4, 9});
    EXPECT_EQ(matrix_function(a, [](double x) { return std::sqrt(x); }), HermitianMatrix::diagonal({2, 3}));
    const PsdMatrix b = PsdMatrix::certify(HermitianMatrix::real({{2, 1}, {1, 2}}));
    const HermitianMatrix sq = matrix_function(b, [](double x) { return x * x; });
    EXPECT_LT(oracle::gap(sq.matrix(), b.matrix() * b.matrix()), 1e-13);
    const HermitianMatrix ident = matrix_function(b, [](double x) { return x; });
    EXPECT_LT(oracle::gap(ident.matrix(), b.matrix()), 1e-13);
}

TEST(MatrixFunction, NonFiniteValueIsAnError) {
    const PsdMatrix a = PsdMatrix::diagonal({0, 1});
    EXPECT_THROW((void)matrix_function(a, [](double x) { return 1.0 / x; }), EvaluationError);
}

TEST(SqrtPsd, Examples) {
    EXPECT_EQ(sqrt_psd(PsdMatrix::identity(3)).hermitian(), HermitianMatrix::identity(3));
    EXPECT_EQ(sqrt_psd(PsdMatrix::diagonal({4, 25})).hermitian(), HermitianMatrix::diagonal({2, 5}));
    const PsdMatrix a = PsdMatrix::certify(HermitianMatrix::real({{5, 4}, {4, 5}}));
    const PsdMatrix r = sqrt_psd(a);
    EXPECT_LT(oracle::gap(r.matrix() * r.matrix(), a.matrix()), 1e-13);
    EXPECT_LT(oracle::gap(r.matrix(), HermitianMatrix::real({{2, 1}, {1, 2}}).matrix()), 1e-13);
}

TEST(InvPd, ExamplesAgainstLuInverse) {
    EXPECT_EQ(inv_pd(2.0 * PsdMatrix::identity(2), 1e-12).hermitian(), 0.5 * HermitianMatrix::identity(2));
    EXPECT_EQ(inv_pd(PsdMatrix::diagonal({2, 4}), 1e-12).hermitian(), HermitianMatrix::diagonal({0.5, 0.25}));
    const PsdMatrix a = PsdMatrix::certify(HermitianMatrix::real({{2, 1}, {1, 2}}));
    const DenseMatrix expect = HermitianMatrix::real({{2, -1}, {-1, 2}}).matrix() / 3.0;
    EXPECT_LT(oracle::gap(inv_pd(a, 1e-12).matrix(), expect), 1e-14);
    Rng rng = substream(3, 0, 0);
    for (int k = 0; k < 20; ++k) {
        const PsdMatrix p = gen_pd(5, 1e3, rng);
        EXPECT_LT(oracle::rel_gap(inv_pd(p, 1e-300).matrix(), oracle::inverse(p.matrix())), 1e-9);
    }
}

TEST(InvPd, BelowFloorThrows) {
    EXPECT_THROW((void)inv_pd(PsdMatrix::diagonal({0, 1}), 1e-12), SingularityError);
    EXPECT_THROW((void)inv_pd(PsdMatrix::identity(2), 0.0), ParameterError);
}

TEST(Certify, RejectsIndefinite) {
    EXPECT_THROW((void)PsdMatrix::certify(HermitianMatrix::diagonal({1, -1e-3})), SingularityError);
    EXPECT_NO_THROW((void)PsdMatrix::certify(HermitianMatrix::diagonal({1, -1e-12})));
}

TEST(LoewnerLeq, Examples) {
    const auto i2 = HermitianMatrix::identity(2);
    auto r = loewner_leq(i2, 2.0 * i2);
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.margin, 1.0, 1e-15);
    r = loewner_leq(2.0 * i2, i2);
    EXPECT_FALSE(r.holds);
    EXPECT_NEAR(r.margin, -1.0, 1e-15);
    r = loewner_leq(i2, HermitianMatrix::real({{2, 1}, {1, 2}}));
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.margin, 0.0, 1e-15);
}

TEST(LoewnerLeq, ReflexiveAndScaledTolerance) {
    Rng rng = substream(4, 0, 0);
    const HermitianMatrix a = gen_psd(4, 1e6, rng).hermitian();
    EXPECT_TRUE(loewner_leq(a, a).holds);
    const HermitianMatrix big = 1e6 * a;
    EXPECT_TRUE(loewner_leq(big + 1e-5 * HermitianMatrix::identity(4), big).holds == (1e-5 <= 1e-8 + 1e-8 * big.norm()));
}

TEST(Regularize, Examples) {
    EXPECT_EQ(regularize(PsdMatrix::zero(2), 1.0).hermitian(), HermitianMatrix::identity(2));
    EXPECT_EQ(regularize(PsdMatrix::identity(2), 0.5).hermitian(), 1.5 * HermitianMatrix::identity(2));
    EXPECT_EQ(regularize(PsdMatrix::diagonal({0, 3}), 1e-3).hermitian(), HermitianMatrix::diagonal({1e-3, 3.001}));
    EXPECT_THROW((void)regularize(PsdMatrix::identity(1), 0.0), ParameterError);
}

TEST(MatrixJson, RoundTripIsBitwise) {
    Rng rng = substream(5, 0, 0);
    for (std::size_t n : {1, 2, 5}) {
        const HermitianMatrix h = gen_psd(n, 1e6, rng).hermitian();
        const auto text = matrix_to_json(h).dump();
        EXPECT_EQ(matrix_from_json(json::parse(text)), h);
    }
}

TEST(MatrixJson, RealMatricesOmitImaginaryPart) {
    const auto j = matrix_to_json(HermitianMatrix::diagonal({1, 2}));
    EXPECT_FALSE(j.contains("im"));
    EXPECT_EQ(j["dim"], 2);
}

TEST(MatrixJson, RejectsMalformed) {
    EXPECT_THROW((void)matrix_from_json(json::parse(R"({"dim":2,"re":[[1,2],[0,1]]})")), ParseError);
    EXPECT_THROW((void)matrix_from_json(json::parse(R"({"dim":2,"re":[[1,0]]})")), ParseError);
    EXPECT_THROW((void)matrix_from_json(json::parse(R"({"re":[[1]]})")), ParseError);
    EXPECT_THROW((void)matrix_from_json(json::parse(R"([1,2])")), ParseError);
}
