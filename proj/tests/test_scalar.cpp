#include <cmath>

#include <gtest/gtest.h>

#include "opmeans/random.hpp"
#include "opmeans/scalar.hpp"
#include "oracles.hpp"

using namespace opmeans;
using RF = RepresentingFunction;

TEST(InducedEval, Examples) {
    EXPECT_DOUBLE_EQ(induced_eval(ScalarConnection::of(RF::geometric_t(0.5)), 4, 9), 6.0);
    EXPECT_NEAR(induced_eval(ScalarConnection::of(RF::harmonic_t(0.5)), 3, 6), 4.0, 1e-15);
    for (const RF& f : {RF::arithmetic_t(0.3), RF::logarithmic(), RF::power_quasi(-0.5, 0.2)})
        for (double x : {1e-3, 0.7, 42.0}) EXPECT_NEAR(induced_eval(ScalarConnection::of(f), x, x), x, 1e-14 * x);
}

TEST(InducedEval, BoundaryConventions) {
    const auto a = ScalarConnection::of(RF::arithmetic_t(0.25));
    EXPECT_DOUBLE_EQ(induced_eval(a, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(induced_eval(a, 0, 8), 2.0);
    EXPECT_DOUBLE_EQ(induced_eval(a, 8, 0), 6.0);
    const auto g = ScalarConnection::of(RF::geometric_t(0.5));
    EXPECT_DOUBLE_EQ(induced_eval(g, 0, 5), 0.0);
    EXPECT_THROW((void)induced_eval(g, -1, 2), ParameterError);
    EXPECT_THROW((void)induced_eval(g, 1, INFINITY), ParameterError);
}

TEST(RepresentingFromScalar, RecoversChainFunctions) {
    const auto h = ScalarConnection::from_binary([](double x, double y) { return x + y == 0 ? 0.0 : 2 * x * y / (x + y); }, "h");
    const auto g = ScalarConnection::from_binary([](double x, double y) { return std::sqrt(x * y); }, "g");
    const auto a = ScalarConnection::from_binary([](double x, double y) { return (x + y) / 2; }, "a");
    const RF fh = representing_from_scalar(h), fg = representing_from_scalar(g), fa = representing_from_scalar(a);
    for (double x : {1e-3, 0.2, 1.0, 3.0, 1e3}) {
        EXPECT_NEAR(fh(x), 2 * x / (1 + x), 1e-15 * (1 + x));
        EXPECT_NEAR(fg(x), std::sqrt(x), 1e-15 * (1 + x));
        EXPECT_NEAR(fa(x), (1 + x) / 2, 1e-15 * (1 + x));
    }
    EXPECT_DOUBLE_EQ(fa.boundary().alpha, 0.5);
    EXPECT_DOUBLE_EQ(fa.boundary().beta, 0.5);
}

TEST(LiftToOperator, Examples) {
    const auto g = ScalarConnection::of(RF::geometric_t(0.5));
    const auto r = eval(lift_to_operator(g), 4.0 * PsdMatrix::identity(3), 9.0 * PsdMatrix::identity(3));
    EXPECT_LT(distance(r.value, 6.0 * HermitianMatrix::identity(3)), 1e-13);

    Rng rng = substream(31, 0, 0);
    const auto a = ScalarConnection::from_binary([](double x, double y) { return (x + y) / 2; }, "a");
    const PsdMatrix pa = gen_psd(4, 1e4, rng), pb = gen_psd(4, 1e4, rng);
    const auto s = eval(lift_to_operator(a), pa, pb);
    EXPECT_LT(oracle::gap(s.value.matrix(), 0.5 * (pa.matrix() + pb.matrix())), 1e-8 * (1 + pa.norm() + pb.norm()));

    const auto pq = scalar_power_mean(-1.0, 0.5);
    EXPECT_NEAR(induced_eval(pq, 2, 6), 3.0, 1e-15);
    const auto l = eval(lift_to_operator(pq), PsdMatrix::diagonal({2}), PsdMatrix::diagonal({6}));
    EXPECT_NEAR(l.value.matrix()(0, 0).real(), 3.0, 1e-12);
}

TEST(ScalarPowerMean, AgreesWithFamily) {
    for (double p : {-1.0, -0.3, 0.5, 1.0})
        for (double alpha : {0.1, 0.5, 0.8}) {
            const auto s = scalar_power_mean(p, alpha);
            const auto f = ScalarConnection::of(RF::power_quasi(p, alpha));
            for (double x : {0.01, 1.0, 50.0})
                for (double y : {0.02, 3.0, 400.0})
                    EXPECT_NEAR(induced_eval(s, x, y), induced_eval(f, x, y), 1e-12 * (x + y));
        }
    EXPECT_THROW((void)scalar_power_mean(0.0, 0.5), ParameterError);
}

TEST(CombineScalar, AffineStructure) {
    const auto c = combine(0.3, ScalarConnection::of(RF::harmonic_t(0.5)), 0.7, ScalarConnection::of(RF::arithmetic_t(0.5)));
    EXPECT_NEAR(induced_eval(c, 2, 8), 0.3 * 3.2 + 0.7 * 5.0, 1e-14);
}

TEST(ScalarChain, Examples) {
    const ChainValues v = scalar_chain_check(4.0);
    EXPECT_DOUBLE_EQ(v.harmonic, 1.6);
    EXPECT_DOUBLE_EQ(v.geometric, 2.0);
    EXPECT_NEAR(v.logarithmic, 3.0 / std::log(4.0), 1e-15);
    EXPECT_DOUBLE_EQ(v.arithmetic, 2.5);
    EXPECT_TRUE(v.strictly_ordered());
    EXPECT_THROW((void)scalar_chain_check(1.0), ParameterError);
    EXPECT_THROW((void)scalar_chain_check(0.0), ParameterError);

    const ChainValues q = scalar_chain_check(0.25);
    EXPECT_TRUE(q.strictly_ordered());
    EXPECT_LT(q.arithmetic, 1.0);
    // each mean is self-transpose: m(1/x) = m(x)/x
    EXPECT_NEAR(q.harmonic, v.harmonic / 4.0, 1e-15);
    EXPECT_NEAR(q.logarithmic, v.logarithmic / 4.0, 1e-15);
}
