#include "oracles.hpp"

#include <affinecf/gensym.hpp>

#include <gtest/gtest.h>

using namespace affinecf;
using cd = std::complex<double>;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }
VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

const HestonParams kHeston{0.02, -0.5, 0.06, 1.5, 0.3, -0.7};
const VasicekParams kVasicek{0.04, 0.1, -0.5};

AffineModel hestonWithJumps() {
    auto m = hestonModel(kHeston);
    m.jumps[0] = GaussianJumps{0.3, v2(0.0, -0.05), (MatrixXd(2, 2) << 0.0, 0.0, 0.0, 0.01).finished()};
    return m;
}

// Vasicek with the drift-only part as baseline (closed form written out here).
BaselineSolution driftBaseline() {
    auto g = vasicekModel(VasicekParams{0.0, kVasicek.b0, kVasicek.b1});
    return customBaseline("drift", g, "i*u*b0*(exp(b1*t) - 1)/b1", {"i*u*exp(b1*t)"}, {{"b0", kVasicek.b0}, {"b1", kVasicek.b1}});
}

}  // namespace

TEST(Expression, ArithmeticAndFunctions) {
    Expression::Env env{{"t", 0.5}, {"u", 2.0}};
    EXPECT_EQ(Expression::parse("1 + 2*3 - 4/2").eval(env), cd(5.0));
    EXPECT_EQ(Expression::parse("-2^2").eval(env), cd(-4.0));
    EXPECT_EQ(Expression::parse("2^3^2").eval(env), cd(512.0));
    EXPECT_NEAR(std::abs(Expression::parse("exp(i*pi) + 1").eval(env)), 0.0, 1e-15);
    EXPECT_EQ(Expression::parse("re(conj(1 + 2*i)) + im(conj(1 + 2*i))").eval(env), cd(-1.0));
    EXPECT_EQ(Expression::parse("u*t").eval(env), cd(1.0));
    EXPECT_NEAR(std::abs(Expression::parse("pow(e, 2) - exp(2)").eval(env)), 0.0, 1e-14);
}

TEST(Expression, Errors) {
    EXPECT_THROW(Expression::parse("1 +"), ExprError);
    EXPECT_THROW(Expression::parse("foo(1)"), ExprError);
    EXPECT_THROW(Expression::parse("(1"), ExprError);
    EXPECT_THROW(Expression::parse("x + 1").eval({}), ExprError);
}

TEST(Baseline, ZeroFrequencyAndZeroTime) {
    for (const auto& b : {vasicekBaseline(kVasicek), hestonBaseline(kHeston), zeroBaseline(2)}) {
        const int d = b.generator.dimension;
        VectorXd x = VectorXd::Constant(d, 0.05);
        EXPECT_LT(std::abs(evalBaselineCF(b, x, VectorXd::Zero(d), 0.8) - 1.0), 1e-13) << b.name;
        VectorXd u = VectorXd::Zero(d);
        u(d - 1) = 1.3;
        EXPECT_LT(std::abs(evalBaselineCF(b, x, u, 0.0) - std::exp(cd(0.0, 1.3 * 0.05))), 1e-15) << b.name;
    }
    EXPECT_EQ(hestonBaseline(kHeston).psi0(0.0, v2(0.0, 1.0))(0), cd(0.0));
}

TEST(Baseline, VasicekAgainstRiccati) {
    auto b = vasicekBaseline(kVasicek);
    auto o = riccatiCF(b.generator, v1(0.2), v1(1.0), 0.5);
    EXPECT_LT(std::abs(evalBaselineCF(b, v1(0.2), v1(1.0), 0.5) - o.value), 1e-8);
}

TEST(Baseline, ResidualCertification) {
    EXPECT_NO_THROW(certifyBaseline(vasicekBaseline(kVasicek), {v1(0.5), v1(1.0)}, v1(0.1)));
    EXPECT_NO_THROW(certifyBaseline(hestonBaseline(kHeston), {v2(0.0, 0.5), v2(0.0, 1.0)}, v2(0.04, 0.0)));
    EXPECT_NO_THROW(certifyBaseline(driftBaseline(), {v1(0.5), v1(1.0)}, v1(0.1)));
    // wrong sign in the exponent
    auto bad = customBaseline("bad", vasicekModel(kVasicek), "0", {"i*u*exp(0.5*t)"});
    EXPECT_THROW(certifyBaseline(bad, {v1(1.0)}, v1(0.1)), ModelError);
}

TEST(Baseline, HestonRejectsVarianceFrequency) {
    EXPECT_THROW(hestonBaseline(kHeston).phi0(0.5, v2(0.3, 1.0)), DomainError);
}

TEST(Baseline, FromJson) {
    auto b = baselineFromJson(nlohmann::json::parse(R"({"name": "vasicek", "params": {"a0": 0.04, "b0": 0.1, "b1": -0.5}})"));
    EXPECT_EQ(b.name, "vasicek");
    try {
        baselineFromJson(nlohmann::json::parse(R"({"name": "heston", "params": {"b10": 0.0}})"));
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_EQ(e.path(), "baseline.params.b11");
    }
    auto c = baselineFromJson(nlohmann::json::parse(
        R"({"name": "custom", "model": {"dimension": 1, "b0": [0.3]}, "phi0": "i*u*m*t", "psi0": ["i*u"], "params": {"m": 0.3}})"));
    EXPECT_NO_THROW(certifyBaseline(c, {v1(1.0)}, v1(0.0)));
}

TEST(CorrectionSeries, VanishesWhenTargetIsBaseline) {
    auto b = hestonBaseline(kHeston);
    auto d = correctionSeries(b.generator, b, 8);
    for (int k = 1; k <= 8; ++k) EXPECT_TRUE(d[static_cast<std::size_t>(k)].isZero()) << k;
}

TEST(CorrectionSeries, DriftBaselineLeavesOnlyDiffusionAtoms) {
    auto target = vasicekModel(kVasicek);
    auto d = correctionSeries(target, driftBaseline(), 4);
    // Delta sigma = a0 xi^2 / 2: only |eps| <= 2 base atoms of the difference, no slopes of it
    for (int k = 1; k <= 4; ++k)
        for (const auto& [m, c] : d[static_cast<std::size_t>(k)].terms())
            for (const auto& [a, e] : m.factors())
                if (a.family() == Family::DeltaSigma) {
                    EXPECT_TRUE(a.isBase()) << a.str();
                    EXPECT_LE(a.order(), 2) << a.str();
                }
}

TEST(EvalGeneralized, ZeroBaselineIsPlainSeries) {
    auto m = vasicekModel(kVasicek);
    for (double u : {-1.0, 0.6})
        for (double t : {0.1, 0.4}) {
            auto g = evalGeneralized(m, zeroBaseline(1), v1(0.2), v1(u), t, 12);
            auto l = evalLocal(m, v1(0.2), v1(u), t, 12);
            EXPECT_LT(std::abs(g.value - l.value), 1e-12);
            auto bf = evalGeneralized(m, zeroBaseline(1), v1(0.2), v1(u), t, 12, SeriesKind::BruteForce);
            EXPECT_LT(std::abs(bf.value - l.value), 1e-12);
        }
}

TEST(EvalGeneralized, TargetEqualsBaseline) {
    auto b = hestonBaseline(kHeston);
    for (double u : {-2.0, 1.0})
        for (double t : {0.5, 2.0}) {
            auto r = evalGeneralized(b.generator, b, v2(0.04, 0.1), v2(0.0, u), t, 12);
            EXPECT_EQ(r.value, evalBaselineCF(b, v2(0.04, 0.1), v2(0.0, u), t));
            EXPECT_LT(std::abs(r.value - hestonCF(kHeston, 0.1, 0.04, u, t)), 1e-10);
        }
}

TEST(EvalGeneralized, HestonWithJumpsAgainstRiccati) {
    auto target = hestonWithJumps();
    auto b = hestonBaseline(kHeston);
    for (double t : {0.1, 0.3})
        for (double u : {-1.0, 2.0}) {
            auto r = evalGeneralized(target, b, v2(0.04, 0.0), v2(0.0, u), t, 12);
            auto o = riccatiCF(target, v2(0.04, 0.0), v2(0.0, u), t);
            EXPECT_LT(std::abs(r.value - o.value), 1e-5) << t << " " << u;
        }
}

TEST(EvalGeneralized, NormalizationAtZeroFrequency) {
    auto r = evalGeneralized(hestonWithJumps(), hestonBaseline(kHeston), v2(0.04, 0.0), v2(0.0, 0.0), 0.7, 10);
    EXPECT_LT(std::abs(r.value - 1.0), 1e-14);
}

TEST(BruteForce, VanishesNumericallyWhenTargetIsBaseline) {
    auto b = vasicekBaseline(kVasicek);
    auto r = evalGeneralized(b.generator, b, v1(0.1), v1(1.0), 0.3, 10, SeriesKind::BruteForce);
    for (const auto& c : r.contributions) EXPECT_LT(std::abs(c), 1e-9);
}

TEST(BruteForce, AgreesWithDifferenceRecursion) {
    auto target = vasicekModel(kVasicek);
    auto b = driftBaseline();
    auto a = evalGeneralized(target, b, v1(0.1), v1(1.0), 0.2, 12, SeriesKind::Difference);
    auto c = evalGeneralized(target, b, v1(0.1), v1(1.0), 0.2, 12, SeriesKind::BruteForce);
    EXPECT_LT(std::abs(a.value - c.value), 1e-7);
}

TEST(BruteForce, SeriesUsesTimeDriftAtom) {
    auto b = vasicekBaseline(kVasicek);
    auto d = bruteForceSeries(vasicekModel(kVasicek), b, 2);
    bool seen = false;
    for (const auto& [m, c] : d[1].terms())
        for (const auto& [a, e] : m.factors()) seen = seen || a.family() == Family::TimeDrift;
    EXPECT_TRUE(seen);
}

TEST(Generalized, MismatchedBaselineIsRejected) {
    EXPECT_THROW(evalGeneralized(vasicekModel(kVasicek), hestonBaseline(kHeston), v1(0.0), v1(1.0), 0.1, 4), std::invalid_argument);
    EXPECT_THROW(namedBaseline("vasicek", hestonModel(kHeston)), ModelError);
    EXPECT_THROW(namedBaseline("nope", vasicekModel(kVasicek)), ModelError);
}
