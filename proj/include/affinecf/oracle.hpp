#pragma once

// Reference characteristic functions: generalized Riccati integration and
// closed forms (Levy-Khintchine, Vasicek, CIR, Heston).

#include "errors.hpp"
#include "model.hpp"
#include "symbol.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace affinecf {

struct IntegratorConfig {
    int steps = 2000;  // h = t / steps
};

struct RiccatiSolution {
    cd phi;
    VectorXcd psi;
};

struct OracleValue {
    cd value;
    double errorEstimate = 0.0;  // |v_h - v_{2h}|
};

/// phi' = sigma_0(psi), psi_l' = sigma_l(psi), phi(0) = 0, psi(0) = xi0; fixed-step RK4.
inline RiccatiSolution riccatiSolve(const AffineModel& m, const VectorXcd& xi0, double t, int steps) {
    const int d = m.dimension;
    if (steps < 1) throw std::invalid_argument("riccatiSolve: steps must be >= 1");
    auto rhs = [&](const VectorXcd& psi) {
        VectorXcd f(d + 1);
        for (int c = 0; c <= d; ++c) f(c) = componentValue(m, c, psi);
        return f;
    };
    VectorXcd y = VectorXcd::Zero(d + 1);
    y.tail(d) = xi0;
    if (t == 0.0) return {y(0), y.tail(d)};
    const double h = t / steps;
    for (int n = 0; n < steps; ++n) {
        const VectorXcd k1 = rhs(y.tail(d));
        const VectorXcd k2 = rhs(y.tail(d) + 0.5 * h * k1.tail(d));
        const VectorXcd k3 = rhs(y.tail(d) + 0.5 * h * k2.tail(d));
        const VectorXcd k4 = rhs(y.tail(d) + h * k3.tail(d));
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double mag = y.tail(d).cwiseAbs().maxCoeff();
        if (!std::isfinite(mag) || mag > 1e8 || !std::isfinite(std::abs(y(0))))
            throw OracleError("moment explosion: |psi| exceeds 1e8 at t = " + std::to_string((n + 1) * h));
    }
    return {y(0), y.tail(d)};
}

/// exp(phi(t,u) + psi(t,u).x) by RK4, with the step-halving error estimate.
inline OracleValue riccatiCF(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t, const IntegratorConfig& cfg = {}) {
    if (x.size() != m.dimension || u.size() != m.dimension) throw std::invalid_argument("riccatiCF: dimension mismatch");
    const VectorXcd xi0 = u.cast<cd>() * cd(0.0, 1.0);
    auto value = [&](int steps) {
        const auto s = riccatiSolve(m, xi0, t, steps);
        return std::exp(s.phi + (s.psi.transpose() * x.cast<cd>())(0));
    };
    const cd fine = value(cfg.steps);
    const cd coarse = value(std::max(1, cfg.steps / 2));
    return {fine, std::abs(fine - coarse)};
}

/// exp(iux + t sigma(iu)) for models without slope coefficients.
inline cd levyKhintchineCF(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t) {
    if (!m.isLevy()) throw std::invalid_argument("levyKhintchineCF: model has nonzero slope coefficients");
    const cd s = componentValue(m, 0, u.cast<cd>() * cd(0.0, 1.0));
    return std::exp(cd(0.0, u.dot(x)) + t * s);
}

// ------------------------------------------------------------- Vasicek

/// dX = (b0 + b1 X) dt + sqrt(a0) dW.
struct VasicekParams {
    double a0 = 0.0;
    double b0 = 0.0;
    double b1 = 0.0;
};

inline AffineModel vasicekModel(const VasicekParams& p) {
    AffineModel m = AffineModel::zero(1);
    m.name = "vasicek";
    m.a0(0, 0) = p.a0;
    m.b0(0) = p.b0;
    m.bSlope(0, 0) = p.b1;
    return m;
}

/// psi = iu e^{b1 t}, phi = iu b0 (e^{b1 t} - 1)/b1 - u^2 a0 (e^{2 b1 t} - 1)/(4 b1);
/// b1 = 0 uses the limit iu b0 t - u^2 a0 t / 2.
inline void vasicekExponent(const VasicekParams& p, double u, double t, cd& phi, cd& psi) {
    const cd iu(0.0, u);
    if (p.b1 == 0.0) {
        psi = iu;
        phi = iu * p.b0 * t - 0.5 * u * u * p.a0 * t;
        return;
    }
    const double e1 = std::expm1(p.b1 * t), e2 = std::expm1(2.0 * p.b1 * t);
    psi = iu * std::exp(p.b1 * t);
    phi = iu * p.b0 * e1 / p.b1 - u * u * p.a0 * e2 / (4.0 * p.b1);
}

inline cd vasicekCF(const VasicekParams& p, double x, double u, double t) {
    cd phi, psi;
    vasicekExponent(p, u, t, phi, psi);
    return std::exp(phi + psi * x);
}

// ----------------------------------------------------------------- CIR

/// dX = (b0 + b1 X) dt + sqrt(a1 X) dW on [0, inf).
struct CirParams {
    double a1 = 0.0;
    double b0 = 0.0;
    double b1 = 0.0;
};

inline AffineModel cirModel(const CirParams& p) {
    AffineModel m = AffineModel::zero(1);
    m.name = "cir";
    m.aSlope[0](0, 0) = p.a1;
    m.b0(0) = p.b0;
    m.bSlope(0, 0) = p.b1;
    m.stateDomain[0] = Interval{0.0, std::numeric_limits<double>::infinity()};
    return m;
}

/// psi = iu e^{b1 t} / D, phi = -(2 b0 / a1) ln D, D = 1 - (a1 iu / (2 b1)) (e^{b1 t} - 1).
inline cd cirCF(const CirParams& p, double x, double u, double t) {
    if (p.a1 <= 0.0 || p.b1 == 0.0) throw std::invalid_argument("cirCF: requires a1 > 0 and b1 != 0");
    const cd iu(0.0, u);
    const cd D = 1.0 - p.a1 * iu / (2.0 * p.b1) * std::expm1(p.b1 * t);
    const cd psi = iu * std::exp(p.b1 * t) / D;
    const cd phi = -(2.0 * p.b0 / p.a1) * std::log(D);
    return std::exp(phi + psi * x);
}

// -------------------------------------------------------------- Heston

/// State (v, x):
///   dv = (b20 - b21 v) dt + sigma sqrt(v) dW_1
///   dx = (b10 + b11 v) dt + sqrt(v) dW_2,   d<W_1, W_2> = rho dt.
/// Conventional names: kappa = b21, theta = b20 / b21, vol-of-vol = sigma,
/// log-price drift r - v/2 <-> b10 = r, b11 = -1/2.
struct HestonParams {
    double b10 = 0.0;
    double b11 = -0.5;
    double b20 = 0.0;
    double b21 = 0.0;
    double sigma = 0.0;
    double rho = 0.0;
};

inline AffineModel hestonModel(const HestonParams& p) {
    AffineModel m = AffineModel::zero(2);
    m.name = "heston";
    m.aSlope[0] << p.sigma * p.sigma, p.rho * p.sigma, p.rho * p.sigma, 1.0;
    m.b0 << p.b20, p.b10;
    m.bSlope << -p.b21, 0.0, p.b11, 0.0;
    m.stateDomain[0] = Interval{0.0, std::numeric_limits<double>::infinity()};
    return m;
}

/// phi and psi_01 of the Heston exponent for frequency u on x (none on v):
///   d = sqrt((rho sigma iu - b21)^2 - sigma^2 (2 b11 iu - u^2)),
///   g = (b + d) / (b - d), b = b21 - rho sigma iu,
///   psi_01 = (b + d)/sigma^2 (1 - e^{dt}) / (1 - g e^{dt}),
///   phi = b10 iu t + b20/sigma^2 [(b + d) t - 2 ln((1 - g e^{dt}) / (1 - g))].
/// The root with Re d <= 0 keeps |g e^{dt}| bounded (continuity in t).
inline void hestonExponent(const HestonParams& p, double u, double t, cd& phi, cd& psi01) {
    if (!(p.sigma > 0.0)) throw std::invalid_argument("hestonCF: sigma must be > 0");
    const cd iu(0.0, u);
    const double s2 = p.sigma * p.sigma;
    const cd b = p.b21 - p.rho * p.sigma * iu;
    cd d = std::sqrt(b * b - s2 * (2.0 * p.b11 * iu - u * u));
    if (d.real() > 0.0) d = -d;
    if (std::abs(b - d) < 1e-300) {
        // b = d = 0: degenerate Riccati, psi' = sigma^2/2 psi^2 + ... with zero rate
        throw OracleError("hestonCF: b - d vanishes at u = " + std::to_string(u));
    }
    const cd g = (b + d) / (b - d);
    const cd edt = std::exp(d * t);
    const cd den = 1.0 - g * edt;
    if (std::abs(den) < 1e-14) throw OracleError("hestonCF: log singularity (g e^{dt} = 1) at t = " + std::to_string(t) + ", u = " + std::to_string(u));
    psi01 = (b + d) / s2 * (1.0 - edt) / den;
    phi = p.b10 * iu * t + p.b20 / s2 * ((b + d) * t - 2.0 * std::log(den / (1.0 - g)));
}

inline cd hestonCF(const HestonParams& p, double x, double v, double u, double t) {
    cd phi, psi01;
    hestonExponent(p, u, t, phi, psi01);
    return std::exp(phi + psi01 * v + cd(0.0, u * x));
}

}  // namespace affinecf
