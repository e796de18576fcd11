#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "opmeans/connection.hpp"
#include "opmeans/matrix_json.hpp"
#include "opmeans/random.hpp"
#include "oracles.hpp"

using namespace opmeans;
using RF = RepresentingFunction;

namespace {

double max_entry_gap(const HermitianMatrix& a, const HermitianMatrix& b) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(EvalFunctionPd, Examples) {
    Rng rng = substream(21, 0, 0);
    const PsdMatrix b = gen_psd(3, 1e3, rng);
    const PsdMatrix r = eval_function_pd(RF::geometric_t(0.5), PsdMatrix::identity(3), b);
    EXPECT_LT(oracle::gap(r.matrix(), sqrt_psd(b).matrix()), 1e-12 * (1 + b.norm()));

    const PsdMatrix s = eval_function_pd(RF::arithmetic_t(0.5), PsdMatrix::diagonal({2, 4}), PsdMatrix::diagonal({4, 2}));
    EXPECT_LT(max_entry_gap(s, HermitianMatrix::diagonal({3, 3})), 1e-14);

    const PsdMatrix g = eval_function_pd(RF::geometric_t(0.5), PsdMatrix::diagonal({1, 4}), PsdMatrix::diagonal({4, 1}));
    EXPECT_LT(max_entry_gap(g, HermitianMatrix::diagonal({2, 2})), 1e-14);
}

TEST(EvalFunctionPd, SingularLeftOperandThrows) {
    EXPECT_THROW((void)eval_function_pd(RF::geometric_t(0.5), PsdMatrix::diagonal({0, 1}), PsdMatrix::identity(2)),
                 SingularityError);
    EXPECT_THROW((void)eval_function_pd(RF::geometric_t(0.5), PsdMatrix::identity(2), PsdMatrix::identity(3)),
                 DimensionError);
}

TEST(EvalFunctionPd, GeometricMeanSolvesRiccati) {
    Rng rng = substream(21, 1, 0);
    for (std::size_t n : {2, 3, 5, 8}) {
        const PsdMatrix a = gen_pd(n, 1e3, rng), b = gen_pd(n, 1e3, rng);
        const PsdMatrix x = eval_function_pd(RF::geometric_t(0.5), a, b);
        EXPECT_LT(oracle::riccati_residual(x.matrix(), a.matrix(), b.matrix()), 1e-8 * (1 + b.norm())) << n;
    }
}

TEST(EvalFunctionPd, CommutingPairsMatchScalarFormulas) {
    Rng rng = substream(21, 2, 0);
    struct Case {
        RF f;
        double (*op)(double, double);
    };
    const std::vector<Case> cases = {
        {RF::geometric_t(0.3), [](double x, double y) { return std::pow(x, 0.7) * std::pow(y, 0.3); }},
        {RF::harmonic_t(0.5), [](double x, double y) { return 2 * x * y / (x + y); }},
        {RF::logarithmic(), [](double x, double y) { return x == y ? x : (y - x) / std::log(y / x); }},
        {RF::power_quasi(0.5, 0.4),
         [](double x, double y) { return std::pow(0.6 * std::sqrt(x) + 0.4 * std::sqrt(y), 2.0); }},
    };
    for (const auto& c : cases) {
        for (std::size_t n : {1, 3, 6}) {
            const auto cc = oracle::commuting(n, rng, c.op);
            const PsdMatrix r = eval_function_pd(c.f, PsdMatrix::certify(cc.a), PsdMatrix::certify(cc.b));
            EXPECT_LT(oracle::rel_gap(r.matrix(), cc.expected), 1e-11) << c.f.name() << " n=" << n;
        }
    }
}

TEST(Eval, Examples) {
    const Connection h = make_named("harmonic");
    const PsdMatrix two = 2.0 * PsdMatrix::identity(3);
    EXPECT_LT(max_entry_gap(eval(h, two, two).value, two), 1e-14);

    Rng rng = substream(22, 0, 0);
    const PsdMatrix a = gen_pd(3, 1e2, rng);
    const PsdMatrix z = parallel_sum(a, PsdMatrix::zero(3));
    EXPECT_LT(z.norm(), 1e-8);
}

TEST(Eval, GeometricOfComplementarySupportsFailsToConverge) {
    // sqrt(eps) decay on each axis: the terminal step is far above the convergence threshold
    const Connection g = make_named("geometric");
    try {
        (void)eval(g, PsdMatrix::diagonal({0, 1}), PsdMatrix::diagonal({1, 0}));
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_FALSE(e.trace().converged);
        EXPECT_TRUE(e.trace().monotone);
        EXPECT_LT(e.last_iterate().norm(), 1e-4);
        EXPECT_EQ(e.trace().epsilons_used.size(), 15u);
    }
    // a longer schedule drives the iterate toward the scalar answer 0
    EpsSchedule deep;
    for (double e = 0.1; e > 1e-30; e /= 4) deep.push_back(e);
    const auto r = eval(g.with_eps(deep), PsdMatrix::diagonal({0, 1}), PsdMatrix::diagonal({1, 0}));
    EXPECT_LT(r.value.norm(), 1e-13);
}

TEST(Eval, TraceIsMonotoneAndConverges) {
    Rng rng = substream(22, 1, 0);
    for (const char* fam : {"arithmetic", "harmonic", "parallel_sum", "sum"}) {
        const Connection c = make_named(fam);
        const PsdMatrix a = gen_singular(4, 1e4, rng), b = gen_psd(4, 1e4, rng);
        const auto r = eval(c, a, b);
        EXPECT_TRUE(r.trace.monotone) << fam;
        EXPECT_TRUE(r.trace.converged) << fam;
        EXPECT_EQ(r.trace.step_deltas.size() + 1, r.trace.epsilons_used.size());
    }
}

TEST(Eval, DimensionMismatch) {
    EXPECT_THROW((void)eval(make_named("geometric"), PsdMatrix::identity(2), PsdMatrix::identity(3)), DimensionError);
}

TEST(ParallelSum, Examples) {
    EXPECT_LT(max_entry_gap(parallel_sum(2.0 * PsdMatrix::identity(2), 2.0 * PsdMatrix::identity(2)),
                            HermitianMatrix::identity(2)),
              1e-14);
    EXPECT_LT(max_entry_gap(parallel_sum(PsdMatrix::diagonal({2, 6}), PsdMatrix::diagonal({6, 2})),
                            HermitianMatrix::diagonal({1.5, 1.5})),
              1e-14);
    Rng rng = substream(23, 0, 0);
    for (int k = 0; k < 10; ++k) {
        const PsdMatrix a = gen_pd(5, 1e3, rng), b = gen_pd(5, 1e3, rng);
        EXPECT_LT(oracle::rel_gap(parallel_sum(a, b).matrix(), 0.5 * oracle::harmonic(a.matrix(), b.matrix())), 1e-10);
    }
}

TEST(HarmonicMean, Examples) {
    EXPECT_LT(max_entry_gap(harmonic_mean(PsdMatrix::identity(2), PsdMatrix::identity(2)), HermitianMatrix::identity(2)),
              1e-14);
    EXPECT_NEAR(harmonic_mean(PsdMatrix::diagonal({3}), PsdMatrix::diagonal({6})).matrix()(0, 0).real(), 4.0, 1e-13);
    Rng rng = substream(23, 1, 0);
    const PsdMatrix a = gen_psd(4, 1e4, rng);
    EXPECT_LT(distance(harmonic_mean(a, a), a), 1e-7 * (1 + a.norm()));
}

TEST(MakeNamed, PowerQuasiEndpoints) {
    Rng rng = substream(24, 0, 0);
    for (double alpha : {0.2, 0.5, 0.9}) {
        const PsdMatrix a = gen_pd(3, 1e3, rng), b = gen_pd(3, 1e3, rng);
        const auto pq = [&](double p) { return eval(make_named("power_quasi", {{"p", p}, {"alpha", alpha}}), a, b).value; };
        const auto named = [&](const char* f) { return eval(make_named(f, {{"t", alpha}}), a, b).value; };
        EXPECT_LT(distance(pq(1.0), named("arithmetic")), 1e-10 * (1 + a.norm() + b.norm()));
        EXPECT_LT(distance(pq(-1.0), named("harmonic")), 1e-10 * (1 + a.norm() + b.norm()));
        EXPECT_LT(distance(pq(0.0), named("geometric")), 1e-10 * (1 + a.norm() + b.norm()));
    }
}

TEST(MakeNamed, Errors) {
    EXPECT_THROW((void)make_named("quadratic"), ParameterError);
    EXPECT_THROW((void)make_named("power_quasi", {{"p", 0.5}}), ParameterError);
    EXPECT_THROW((void)make_named("geometric", {{"t", "half"}}), ParameterError);
    EXPECT_THROW((void)make_named("custom"), ParameterError);
}

TEST(EpsSchedule, Validation) {
    EXPECT_EQ(default_eps_schedule().size(), 15u);
    EXPECT_DOUBLE_EQ(default_eps_schedule().back(), 0.1 / std::pow(4.0, 14));
    EXPECT_THROW(Connection(RF::logarithmic(), EpsSchedule{}), ParameterError);
    EXPECT_THROW(Connection(RF::logarithmic(), EpsSchedule{1e-3, 1e-2, 1e-9}), ParameterError);
    EXPECT_THROW(Connection(RF::logarithmic(), EpsSchedule{1e-3, 1e-6}), ParameterError);
    EXPECT_NO_THROW(Connection(RF::logarithmic(), EpsSchedule{1e-3, 1e-9}));
}

TEST(ConnectionJson, RoundTrips) {
    for (const char* text : {R"({"backend":"function","family":"geometric","params":{"t":0.25}})",
                             R"({"backend":"function","family":"power_quasi","params":{"p":-0.5,"alpha":0.3}})",
                             R"({"backend":"measure","alpha":0.1,"beta":0.2,"nodes":[[1.0,0.5],[2.0,0.25]]})",
                             R"({"family":"logarithmic","eps":[0.01,1e-9]})"}) {
        const Connection c = connection_from_json(json::parse(text));
        const Connection d = connection_from_json(c.to_json());
        EXPECT_EQ(c.to_json(), d.to_json()) << text;
    }
}

TEST(ConnectionJson, QuadratureDescriptor) {
    const Connection c =
        connection_from_json(json::parse(R"({"backend":"measure","quadrature":{"family":"geometric","t":0.5}})"));
    EXPECT_FALSE(c.is_function());
    EXPECT_NEAR(c.representing_function()(4.0), 2.0, 1e-6);
}

TEST(ConnectionJson, Errors) {
    EXPECT_THROW((void)connection_from_json(json::parse("[]")), ParseError);
    EXPECT_THROW((void)connection_from_json(json::parse(R"({"backend":"function"})")), ParseError);
    EXPECT_THROW((void)connection_from_json(json::parse(R"({"backend":"tensor","family":"x"})")), ParseError);
    EXPECT_THROW((void)connection_from_json(json::parse(R"({"family":"geometric","params":{"t":2}})")), ParseError);
    EXPECT_THROW((void)connection_from_json(json::parse(R"({"backend":"measure","nodes":[[1]]})")), ParseError);
    EXPECT_THROW((void)connection_from_json(json::parse(R"({"family":"geometric","eps":[1e-3]})")), ParseError);
}

TEST(Connection, ConcurrentEvaluationMatchesSerial) {
    const Connection c = make_named("logarithmic");
    Rng rng = substream(25, 0, 0);
    std::vector<std::pair<PsdMatrix, PsdMatrix>> inputs;
    for (int k = 0; k < 16; ++k) inputs.emplace_back(gen_pd(4, 1e3, rng), gen_pd(4, 1e3, rng));
    std::vector<HermitianMatrix> serial, parallel(inputs.size(), HermitianMatrix::zero(1));
    for (const auto& [a, b] : inputs) serial.push_back(eval(c, a, b).value);
    {
        std::vector<std::jthread> ts;
        for (std::size_t i = 0; i < inputs.size(); ++i)
            ts.emplace_back([&, i] { parallel[i] = eval(c, inputs[i].first, inputs[i].second).value; });
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) EXPECT_EQ(serial[i], parallel[i]);
}

TEST(Connection, CustomNonPsdResultIsReported) {
    // a representing function with negative values cannot produce a PSD result
    const Connection c(RF::custom([](double x) { return x - 1.0; }, "shifted"));
    try {
        (void)eval(c, PsdMatrix::identity(2), PsdMatrix::diagonal({0.5, 2}));
        FAIL() << "expected an error";
    } catch (const EvaluationError&) {
    }
}
