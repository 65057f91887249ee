#pragma once

// Generalized-symbol expansions about a solvable baseline A_0 with
//   T^0_t e^{iux} = exp(phi_0(t,u) + psi_0(t,u).x).
//
// Writing p = exp(phi_0 + psi_0.x) w, the correction w solves
//   d_t w = Dsigma(x, psi_0) w + sum_{|eps|>=1} D^eps sigma(x, psi_0)/eps! D^eps_x w,
// with Dsigma = sigma - sigma_0 and D^eps sigma = D^eps Dsigma + D^eps sigma_0.
// The series 1 + sum d_k t^k is built with the atoms frozen at psi_0(t, u),
// so its terms are polynomials in atoms whose values depend on t.

#include "errors.hpp"
#include "expr.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "series_eval.hpp"
#include "structure.hpp"
#include "symalg.hpp"
#include "symbol.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace affinecf {

struct BaselineSolution {
    std::string name;
    AffineModel generator;
    std::function<cd(double, const VectorXd&)> phi0;
    std::function<VectorXcd(double, const VectorXd&)> psi0;

    /// Central differences in t (step h; one-sided near t = 0).
    cd phiDot(double t, const VectorXd& u, double h = 1e-6) const {
        if (t < h) return (-3.0 * phi0(t, u) + 4.0 * phi0(t + h, u) - phi0(t + 2 * h, u)) / (2 * h);
        return (phi0(t + h, u) - phi0(t - h, u)) / (2 * h);
    }
    VectorXcd psiDot(double t, const VectorXd& u, double h = 1e-6) const {
        if (t < h) return (-3.0 * psi0(t, u) + 4.0 * psi0(t + h, u) - psi0(t + 2 * h, u)) / (2 * h);
        return (psi0(t + h, u) - psi0(t - h, u)) / (2 * h);
    }

    /// |d_t(phi_0 + psi_0.x) - sigma_0(x, psi_0)| / max(1, |sigma_0(x, psi_0)|).
    double residual(const VectorXd& x, const VectorXd& u, double t) const {
        const cd lhs = phiDot(t, u) + (psiDot(t, u).transpose() * x.cast<cd>())(0);
        const cd rhs = symbolAt(generator, x, psi0(t, u));
        return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    }
};

/// exp(phi_0 + psi_0.x).
inline cd evalBaselineCF(const BaselineSolution& b, const VectorXd& x, const VectorXd& u, double t) {
    const cd phi = b.phi0(t, u);
    const VectorXcd psi = b.psi0(t, u);
    if (!std::isfinite(phi.real()) || !std::isfinite(phi.imag()) || !psi.allFinite())
        throw OracleError("baseline '" + b.name + "' is not finite at t = " + std::to_string(t));
    return std::exp(phi + (psi.transpose() * x.cast<cd>())(0));
}

/// Throws if the baseline fails the Cauchy-problem residual check at the
/// sample points (t in {0.05, 0.3}, u in {0.5, 1} on every coordinate
/// the baseline admits, x at a domain point).
inline void certifyBaseline(const BaselineSolution& b, const std::vector<VectorXd>& us, const VectorXd& x, double tol = 1e-6) {
    for (double t : {0.05, 0.3})
        for (const auto& u : us) {
            const double r = b.residual(x, u, t);
            if (!(r <= tol))
                throw ModelError("baseline", "'" + b.name + "' fails the residual check (" + std::to_string(r) + " > " +
                                                 std::to_string(tol) + ") at t = " + std::to_string(t));
        }
}

// ----------------------------------------------------------- registry

inline BaselineSolution zeroBaseline(int d) {
    BaselineSolution b;
    b.name = "zero";
    b.generator = AffineModel::zero(d);
    b.phi0 = [](double, const VectorXd&) { return cd(0.0); };
    b.psi0 = [](double, const VectorXd& u) { return VectorXcd(u.cast<cd>() * cd(0.0, 1.0)); };
    return b;
}

inline BaselineSolution vasicekBaseline(const VasicekParams& p) {
    BaselineSolution b;
    b.name = "vasicek";
    b.generator = vasicekModel(p);
    b.phi0 = [p](double t, const VectorXd& u) {
        cd phi, psi;
        vasicekExponent(p, u(0), t, phi, psi);
        return phi;
    };
    b.psi0 = [p](double t, const VectorXd& u) {
        cd phi, psi;
        vasicekExponent(p, u(0), t, phi, psi);
        VectorXcd v(1);
        v(0) = psi;
        return v;
    };
    return b;
}

/// Heston baseline on state (v, x); defined for frequencies with u_v = 0.
inline BaselineSolution hestonBaseline(const HestonParams& p) {
    BaselineSolution b;
    b.name = "heston";
    b.generator = hestonModel(p);
    auto check = [](const VectorXd& u) {
        if (u(0) != 0.0) throw DomainError("heston baseline: frequency on the variance coordinate must be 0");
    };
    b.phi0 = [p, check](double t, const VectorXd& u) {
        check(u);
        cd phi, psi;
        hestonExponent(p, u(1), t, phi, psi);
        return phi;
    };
    b.psi0 = [p, check](double t, const VectorXd& u) {
        check(u);
        cd phi, psi;
        hestonExponent(p, u(1), t, phi, psi);
        VectorXcd v(2);
        v << psi, cd(0.0, u(1));
        return v;
    };
    return b;
}

/// Jump-free part of a model (the natural baseline generator).
inline AffineModel jumpFreePart(const AffineModel& m) {
    AffineModel g = m;
    for (auto& j : g.jumps) j = NoJumps{};
    g.truncation = Truncation::NoCompensation;
    return g;
}

/// Heston parameters from a model whose jump-free part has Heston structure.
inline HestonParams hestonParamsOf(const AffineModel& m) {
    const auto fail = [](const std::string& why) { return ModelError("baseline", "heston baseline: target " + why); };
    if (m.dimension != 2) throw fail("must have dimension 2 (state (v, x))");
    if (!m.a0.isZero(0.0) || !m.aSlope[1].isZero(0.0)) throw fail("diffusion must be v * A with constant A");
    const MatrixXd& A = m.aSlope[0];
    if (!(A(0, 0) > 0.0) || A(1, 1) != 1.0) throw fail("diffusion slope must be [[sigma^2, rho sigma], [rho sigma, 1]]");
    if (m.bSlope(0, 1) != 0.0 || m.bSlope(1, 1) != 0.0) throw fail("drift must not depend on x");
    HestonParams p;
    p.sigma = std::sqrt(A(0, 0));
    p.rho = A(0, 1) / p.sigma;
    p.b20 = m.b0(0);
    p.b10 = m.b0(1);
    p.b21 = -m.bSlope(0, 0);
    p.b11 = m.bSlope(1, 0);
    return p;
}

inline VasicekParams vasicekParamsOf(const AffineModel& m) {
    if (m.dimension != 1 || !m.aSlope[0].isZero(0.0))
        throw ModelError("baseline", "vasicek baseline: target must be one-dimensional with constant diffusion");
    return VasicekParams{m.a0(0, 0), m.b0(0), m.bSlope(0, 0)};
}

/// User baseline from expression strings in t, u (= u1), u1..ud and params.
inline BaselineSolution customBaseline(const std::string& name, AffineModel generator, const std::string& phiText,
                                       const std::vector<std::string>& psiTexts, std::map<std::string, double> params = {}) {
    const int d = generator.dimension;
    if (static_cast<int>(psiTexts.size()) != d)
        throw ModelError("baseline.psi0", "expected " + std::to_string(d) + " expressions");
    auto phiE = std::make_shared<Expression>(Expression::parse(phiText));
    auto psiE = std::make_shared<std::vector<Expression>>();
    for (const auto& s : psiTexts) psiE->push_back(Expression::parse(s));
    auto env = [params, d](double t, const VectorXd& u) {
        Expression::Env e;
        for (const auto& [k, v] : params) e[k] = v;
        e["t"] = t;
        for (int r = 0; r < d; ++r) e["u" + std::to_string(r + 1)] = u(r);
        e["u"] = u(0);
        return e;
    };
    BaselineSolution b;
    b.name = name;
    b.generator = std::move(generator);
    b.phi0 = [phiE, env](double t, const VectorXd& u) { return phiE->eval(env(t, u)); };
    b.psi0 = [psiE, env, d](double t, const VectorXd& u) {
        const auto e = env(t, u);
        VectorXcd v(d);
        for (int r = 0; r < d; ++r) v(r) = (*psiE)[static_cast<std::size_t>(r)].eval(e);
        return v;
    };
    return b;
}

/// Baseline from a config object:
///   {"name": "heston", "params": {"b10":..,"b11":..,"b20":..,"b21":..,"sigma":..,"rho":..}}
///   {"name": "vasicek", "params": {"a0":..,"b0":..,"b1":..}}
///   {"name": "zero", "dimension": d}
///   {"name": "custom", "model": {...}, "phi0": "...", "psi0": ["...", ...], "params": {...}}
inline BaselineSolution baselineFromJson(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) throw ModelError("baseline.name", "required string");
    const std::string name = j["name"];
    auto param = [&](const char* k) {
        if (!j.contains("params") || !j["params"].contains(k) || !j["params"][k].is_number())
            throw ModelError(std::string("baseline.params.") + k, "required number");
        return j["params"][k].get<double>();
    };
    if (name == "heston") return hestonBaseline(HestonParams{param("b10"), param("b11"), param("b20"), param("b21"), param("sigma"), param("rho")});
    if (name == "vasicek") return vasicekBaseline(VasicekParams{param("a0"), param("b0"), param("b1")});
    if (name == "zero") {
        if (!j.contains("dimension") || !j["dimension"].is_number_integer()) throw ModelError("baseline.dimension", "required integer");
        return zeroBaseline(j["dimension"].get<int>());
    }
    if (name == "custom" || j.contains("phi0")) {
        if (!j.contains("model")) throw ModelError("baseline.model", "required");
        AffineModel g;
        try {
            g = modelFromJson(j["model"]);
        } catch (const ModelError& e) {
            throw ModelError("baseline.model." + e.path(), e.what());
        }
        if (!j.contains("phi0") || !j["phi0"].is_string()) throw ModelError("baseline.phi0", "required string");
        if (!j.contains("psi0") || !j["psi0"].is_array()) throw ModelError("baseline.psi0", "required array of strings");
        std::vector<std::string> psi;
        for (const auto& s : j["psi0"]) {
            if (!s.is_string()) throw ModelError("baseline.psi0", "entries must be strings");
            psi.push_back(s.get<std::string>());
        }
        std::map<std::string, double> params;
        if (j.contains("params"))
            for (const auto& [k, v] : j["params"].items()) {
                if (!v.is_number()) throw ModelError("baseline.params." + k, "expected number");
                params[k] = v.get<double>();
            }
        return customBaseline(name, std::move(g), j["phi0"], psi, std::move(params));
    }
    throw ModelError("baseline.name", "unknown baseline '" + name + "'");
}

/// Named baseline with parameters taken from the target model.
inline BaselineSolution namedBaseline(const std::string& name, const AffineModel& target) {
    if (name == "zero") return zeroBaseline(target.dimension);
    if (name == "heston") return hestonBaseline(hestonParamsOf(target));
    if (name == "vasicek") return vasicekBaseline(vasicekParamsOf(target));
    throw ModelError("baseline", "unknown baseline '" + name + "' (expected heston, vasicek, zero or a config file)");
}

// ----------------------------------------------------------- series

inline FamilyPatterns differencePatterns(const AffineModel& target, const AffineModel& generator) {
    FamilyPatterns p;
    p.delta = ModelPattern::difference(target, generator);
    p.baseline = ModelPattern::of(generator);
    return p;
}

inline FamilyPatterns bruteForcePatterns(const AffineModel& target) {
    FamilyPatterns p;
    p.sigma = ModelPattern::of(target);
    return p;
}

namespace detail {
inline void checkCompatible(const AffineModel& target, const BaselineSolution& b) {
    if (target.dimension != b.generator.dimension) throw std::invalid_argument("target and baseline dimensions differ");
    if (target.truncation != b.generator.truncation)
        throw std::invalid_argument("target and baseline use different truncation conventions");
}
}  // namespace detail

/// d_0..d_K of the difference-symbol recursion (atoms: DeltaSigma, BaselineSigma).
inline std::vector<SymPoly> correctionSeries(const AffineModel& target, const BaselineSolution& b, int K) {
    detail::checkCompatible(target, b);
    return SeriesCache::global().symbolic(SeriesKind::Difference, target.dimension, differencePatterns(target, b.generator), K);
}

/// d_0..d_K of the brute-force recursion (atoms: Sigma, TimeDrift).
inline std::vector<SymPoly> bruteForceSeries(const AffineModel& target, const BaselineSolution& b, int K) {
    detail::checkCompatible(target, b);
    return SeriesCache::global().symbolic(SeriesKind::BruteForce, target.dimension, bruteForcePatterns(target), K);
}

/// exp(phi_0 + psi_0.x) (1 + sum_k d_k(x, psi_0(t,u)) t^k).
inline CFResult evalGeneralized(const AffineModel& target, const BaselineSolution& b, const VectorXd& x, const VectorXd& u,
                                double t, int K, SeriesKind kind = SeriesKind::Difference) {
    detail::checkCompatible(target, b);
    detail::checkPoint(target, x, u, K);
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    if (kind == SeriesKind::Plain) throw std::invalid_argument("evalGeneralized: use Difference or BruteForce");
    const cd phi = b.phi0(t, u);
    const VectorXcd psi = b.psi0(t, u);
    const cd prefactor = std::exp(phi + (psi.transpose() * x.cast<cd>())(0));
    std::vector<cd> dvals;
    if (kind == SeriesKind::Difference) {
        auto cs = SeriesCache::global().compiled(kind, target.dimension, differencePatterns(target, b.generator), K);
        const SymbolTable T = symbolTableAt(target, x, psi, K - 1);
        const SymbolTable B = symbolTableAt(b.generator, x, psi, K - 1);
        dvals = evaluateSeries(*cs, K, [&](const AtomKey& a) -> cd {
            const AtomKey plain = a.isBase() ? AtomKey::base(a.eps()) : AtomKey::slope(a.slope(), a.eps());
            if (a.family() == Family::DeltaSigma) return T.atom(plain) - B.atom(plain);
            if (a.family() == Family::BaselineSigma) return B.atom(plain);
            throw std::logic_error("unexpected atom family in difference series");
        });
    } else {
        auto cs = SeriesCache::global().compiled(kind, target.dimension, bruteForcePatterns(target), K);
        const SymbolTable T = symbolTableAt(target, x, psi, K - 1);
        const cd phiDot = b.phiDot(t, u);
        const VectorXcd psiDot = b.psiDot(t, u);
        dvals = evaluateSeries(*cs, K, [&](const AtomKey& a) -> cd {
            if (a.family() == Family::Sigma) return T.atom(a);
            if (a.family() == Family::TimeDrift)
                return a.isBase() ? -phiDot - (psiDot.transpose() * x.cast<cd>())(0) : -psiDot(a.slope() - 1);
            throw std::logic_error("unexpected atom family in brute-force series");
        });
    }
    CFResult r = assembleResult(dvals, t, prefactor, EvalMode::Generalized);
    return r;
}

}  // namespace affinecf
