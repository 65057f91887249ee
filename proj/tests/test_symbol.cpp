#include "oracles.hpp"

#include <affinecf/oracle.hpp>
#include <affinecf/symbol.hpp>

#include <gtest/gtest.h>

#include <fstream>

using namespace affinecf;
namespace to = testing_oracles;
using cd = std::complex<double>;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }
VectorXd v2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

AffineModel bm() {
    auto m = AffineModel::zero(1);
    m.a0(0, 0) = 1.0;
    return m;
}

AffineModel gaussJump(double lambda, double mean, double var) {
    auto m = AffineModel::zero(1);
    m.a0(0, 0) = 0.04;
    m.b0(0) = 0.05;
    m.jumps[0] = GaussianJumps{lambda, v1(mean), MatrixXd::Constant(1, 1, var)};
    return m;
}

}  // namespace

TEST(Symbol, BrownianMotion) { EXPECT_EQ(evalSymbol(bm(), v1(0.3), v1(2.0)), cd(-2.0, 0.0)); }

TEST(Symbol, DriftedBrownianMotionIsStateIndependent) {
    auto m = bm();
    m.b0(0) = 0.7;
    for (double x : {-3.0, 0.0, 5.0}) EXPECT_NEAR(std::abs(evalSymbol(m, v1(x), v1(1.5)) - cd(-1.125, 1.05)), 0.0, 1e-15);
}

TEST(Symbol, GaussianJumpsMatchQuadrature) {
    auto m = gaussJump(1.3, -0.1, 0.04);
    m.a0(0, 0) = 0.0;
    m.b0(0) = 0.0;
    for (double u : {-2.0, 0.5, 3.0}) {
        const cd oracle = to::gaussianJumpExponent(1.3, -0.1, 0.2, u);
        EXPECT_NEAR(std::abs(evalSymbol(m, v1(0.0), v1(u)) - oracle), 0.0, 1e-10) << u;
    }
}

TEST(Symbol, ExponentialJumpsMatchQuadrature) {
    auto m = AffineModel::zero(1);
    m.jumps[0] = ExponentialJumps{0.8, v1(4.0)};
    for (double u : {-1.0, 2.0}) {
        const cd oracle = to::exponentialJumpMoment(0.8, 4.0, u, 0) - 0.8;
        EXPECT_NEAR(std::abs(evalSymbol(m, v1(0.0), v1(u)) - oracle), 0.0, 1e-10);
    }
}

TEST(Symbol, SlopeSymbolWithDriftOnly) {
    auto m = AffineModel::zero(2);
    m.bSlope << 0.3, -0.2, 0.5, 0.1;
    auto t = evalSymbolTable(m, v2(0.0, 0.0), v2(1.5, -0.5), 0);
    for (int l = 1; l <= 2; ++l) {
        const double expect = m.bSlope(0, l - 1) * 1.5 + m.bSlope(1, l - 1) * -0.5;
        EXPECT_NEAR(std::abs(t.slopeAt(l, MultiIndex::zero(2)) - cd(0.0, expect)), 0.0, 1e-15);
    }
}

TEST(SymbolTable, BrownianDerivativeConvention) {
    // sigma(xi) = xi^2 / 2 along xi = iu
    auto t = evalSymbolTable(bm(), v1(0.0), v1(1.0), 3);
    EXPECT_NEAR(std::abs(t.baseAt(MultiIndex({1})) - cd(0.0, 1.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(t.baseAt(MultiIndex({2})) - cd(1.0, 0.0)), 0.0, 1e-15);
    EXPECT_EQ(t.baseAt(MultiIndex({3})), cd(0.0));
}

TEST(SymbolTable, FirstDerivativeMatchesFiniteDifferenceAlongImaginaryAxis) {
    auto m = gaussJump(0.7, 0.2, 0.09);
    const double h = 1e-5, u = 0.8;
    // d/dxi = -i d/du
    const cd fd = cd(0.0, -1.0) * (evalSymbol(m, v1(0.0), v1(u + h)) - evalSymbol(m, v1(0.0), v1(u - h))) / (2 * h);
    auto t = evalSymbolTable(m, v1(0.0), v1(u), 1);
    EXPECT_NEAR(std::abs(t.baseAt(MultiIndex({1})) - fd), 0.0, 1e-8);
}

TEST(SymbolTable, GaussianJumpMomentsMatchQuadrature) {
    auto m = gaussJump(0.7, 0.2, 0.09);
    m.a0(0, 0) = 0.0;
    m.b0(0) = 0.0;
    auto t = evalSymbolTable(m, v1(0.0), v1(1.1), 5);
    for (int n = 1; n <= 5; ++n) {
        const cd oracle = to::gaussianJumpMoment(0.7, 0.2, 0.3, 1.1, n);
        EXPECT_NEAR(std::abs(t.baseAt(MultiIndex({n})) - oracle), 0.0, 1e-10) << n;
    }
}

TEST(SymbolTable, ExponentialJumpMomentsMatchQuadrature) {
    auto m = AffineModel::zero(1);
    m.jumps[0] = ExponentialJumps{0.8, v1(4.0)};
    auto t = evalSymbolTable(m, v1(0.0), v1(-0.6), 4);
    for (int n = 1; n <= 4; ++n)
        EXPECT_NEAR(std::abs(t.baseAt(MultiIndex({n})) - to::exponentialJumpMoment(0.8, 4.0, -0.6, n)), 0.0, 1e-9) << n;
}

TEST(SymbolTable, UserJumpCapabilityNamesIndex) {
    auto m = AffineModel::zero(1);
    UserJump uj;
    uj.maxOrder = 2;
    uj.derivative = [](const MultiIndex& e, const VectorXcd& xi) { return e.order() == 0 ? std::exp(xi(0)) - 1.0 : std::exp(xi(0)); };
    m.jumps[0] = uj;
    EXPECT_NO_THROW(evalSymbolTable(m, v1(0.0), v1(1.0), 2));
    try {
        evalSymbolTable(m, v1(0.0), v1(1.0), 3);
        FAIL() << "expected CapabilityError";
    } catch (const CapabilityError& e) {
        EXPECT_NE(std::string(e.what()).find("(3)"), std::string::npos) << e.what();
    }
}

TEST(SymbolTable, AffinityIdentity) {
    auto m = hestonModel(HestonParams{0.02, -0.5, 0.06, 1.5, 0.3, -0.7});
    const VectorXd x = v2(0.3, 1.2), u = v2(0.4, -1.1);
    auto t = evalSymbolTable(m, x, u, 2);
    auto t0 = evalSymbolTable(m, v2(0.0, 0.0), u, 2);
    for (const auto& [e, val] : t.base) {
        cd rhs = t0.baseAt(e);
        for (int l = 1; l <= 2; ++l) rhs += x(l - 1) * t.slopeAt(l, e);
        EXPECT_NEAR(std::abs(val - rhs), 0.0, 1e-12);
    }
}

TEST(Boundedness, Classification) {
    EXPECT_EQ(classifyBoundedness(bm()).classification, Boundedness::Bounded);
    auto vas = vasicekModel(VasicekParams{0.04, 0.1, -0.5});
    auto r = classifyBoundedness(vas);
    EXPECT_EQ(r.classification, Boundedness::BoundedOnlyOnBoundedDomain);
    ASSERT_EQ(r.reasons.size(), 1u);
    EXPECT_EQ(r.reasons[0], "b_11 != 0");
    vas.stateDomain[0] = Interval{-10.0, 10.0};
    EXPECT_EQ(classifyBoundedness(vas).classification, Boundedness::Bounded);
}

TEST(Boundedness, AgreesWithGrowthOfGridSup) {
    auto vas = vasicekModel(VasicekParams{0.04, 0.1, -0.5});
    const std::vector<Interval> ub{{-1.0, 1.0}};
    EXPECT_GT(supBound(vas, {{-10.0, 10.0}}, ub), supBound(vas, {{-1.0, 1.0}}, ub) * 2);
    EXPECT_NEAR(supBound(bm(), {{-10.0, 10.0}}, ub), supBound(bm(), {{-1.0, 1.0}}, ub), 1e-15);
}

TEST(SupBound, Examples) {
    EXPECT_NEAR(supBound(bm(), {{-1.0, 1.0}}, {{-1.0, 1.0}}), 0.75, 1e-15);
    EXPECT_EQ(supBound(AffineModel::zero(2), {{-1.0, 1.0}, {-1.0, 1.0}}, {{-1.0, 1.0}, {-1.0, 1.0}}), 0.0);
    auto vas = vasicekModel(VasicekParams{0.04, 0.1, -0.5});
    const double sb = supBound(vas, {{-2.0, 2.0}}, {{-3.0, 3.0}});
    for (double x = -2.0; x <= 2.0; x += 0.37)
        for (double u = -3.0; u <= 3.0; u += 0.41) EXPECT_LE(std::abs(evalSymbol(vas, v1(x), v1(u))), sb);
}

TEST(Model, JsonRoundTrip) {
    auto m = hestonModel(HestonParams{0.02, -0.5, 0.06, 1.5, 0.3, -0.7});
    m.jumps[0] = GaussianJumps{0.5, v2(0.0, -0.05), (MatrixXd(2, 2) << 0.0, 0.0, 0.0, 0.01).finished()};
    auto j = modelToJson(m);
    auto back = modelFromJson(j);
    EXPECT_EQ(modelToJson(back), j);
    EXPECT_TRUE(j["state_domain"][0][1].is_null());
}

TEST(Model, ErrorsCarryFieldPath) {
    auto expectPath = [](const char* text, const std::string& path) {
        try {
            modelFromJson(nlohmann::json::parse(text));
            FAIL() << "expected ModelError for " << text;
        } catch (const ModelError& e) {
            EXPECT_EQ(e.path(), path) << e.what();
        }
    };
    expectPath(R"({"a0": [[1]]})", "dimension");
    expectPath(R"({"dimension": 1, "a0": [[1, 2]]})", "a0[0]");
    expectPath(R"({"dimension": 1, "a0": [[-1]]})", "a0");
    expectPath(R"({"dimension": 1, "jumps": [{"type": "levy"}, {"type": "none"}]})", "jumps[0].type");
    expectPath(R"({"dimension": 1, "truncation": "half"})", "truncation");
}

TEST(Model, SemiellipticityViolationOnDomain) {
    // a(x) = x is negative for x < 0 unless the domain is restricted
    auto m = cirModel(CirParams{0.09, 0.06, -1.5});
    EXPECT_NO_THROW(m.validate());
    m.stateDomain[0] = Interval{};
    EXPECT_THROW(m.validate(), ModelError);
}

TEST(Model, SampleModelsLoad) {
    for (const char* name : {"bm", "drifted_bm", "gauss_jump", "vasicek", "cir", "heston", "heston_jump"}) {
        const std::string path = std::string(AFFINECF_MODELS_DIR) + "/" + name + ".json";
        EXPECT_NO_THROW(loadModel(path)) << path;
    }
}

TEST(Symbol, VanishesAtZeroFrequencyAndIsHermitian) {
    std::vector<AffineModel> models{bm(), gaussJump(1.0, -0.1, 0.04), cirModel(CirParams{0.09, 0.06, -1.5}),
                                    hestonModel(HestonParams{0.02, -0.5, 0.06, 1.5, 0.3, -0.7})};
    for (const auto& m : models) {
        const int d = m.dimension;
        VectorXd x = VectorXd::Constant(d, 0.4), u = VectorXd::LinSpaced(d, 0.7, -1.3);
        EXPECT_EQ(evalSymbol(m, x, VectorXd::Zero(d)), cd(0.0));
        EXPECT_NEAR(std::abs(evalSymbol(m, x, -u) - std::conj(evalSymbol(m, x, u))), 0.0, 1e-14);
    }
}
