#pragma once

// Symbol evaluation. Convention: the symbol variable is xi = iu, and every
// derivative D^eps is the complex derivative in xi, so that
//
//   sigma_c(xi) = 1/2 xi^T Q_c xi + L_c . xi + J_c(xi),
//   J_c(xi)     = int (e^{xi.z} - 1 [- xi.z 1_D(z)]) nu_c(dz),
//   sigma(x, xi) = sigma_0(xi) + sum_l x_l sigma_l(xi).
//
// Component c = 0 is the constant part (Q = a0, L = b0, nu_0); c = l >= 1 is
// the slope symbol sigma_l (Q = aSlope[l-1], L = column l of bSlope, nu_l).
// At xi = iu this gives -1/2 u.a u + i b.u + jump integral.

#include "errors.hpp"
#include "model.hpp"
#include "multiindex.hpp"
#include "symalg.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <complex>
#include <string>
#include <unordered_map>
#include <vector>

namespace affinecf {

using DerivativeMap = std::unordered_map<MultiIndex, cd, MultiIndexHash>;

/// Largest xi-derivative order a jump specification can deliver.
inline int jumpCapability(const JumpSpec& j) {
    if (auto u = std::get_if<UserJump>(&j)) return u->maxOrder;
    return INT_MAX;
}

inline int modelCapability(const AffineModel& m) {
    int cap = INT_MAX;
    for (const auto& j : m.jumps) cap = std::min(cap, jumpCapability(j));
    return cap;
}

namespace detail {

/// D^eps of J for all |eps| <= K.
inline DerivativeMap jumpDerivatives(const JumpSpec& spec, int d, const VectorXcd& xi, int K) {
    DerivativeMap out;
    std::vector<MultiIndex> all;
    for (int k = 0; k <= K; ++k)
        for (auto& e : enumerate(d, k).indices) all.push_back(std::move(e));

    if (!hasJumps(spec)) {
        for (const auto& e : all) out.emplace(e, cd(0.0));
        return out;
    }
    if (auto g = std::get_if<GaussianJumps>(&spec)) {
        // M(xi) = exp(xi.m + 1/2 xi^T C xi); with g_r = m_r + (C xi)_r,
        // D^{eps+e_r} M = g_r D^eps M + sum_s eps_s C_rs D^{eps-e_s} M.
        const VectorXcd grad = g->mean.cast<cd>() + g->covariance.cast<cd>() * xi;
        const cd expo = (xi.transpose() * g->mean.cast<cd>())(0) + 0.5 * (xi.transpose() * g->covariance.cast<cd>() * xi)(0);
        DerivativeMap M;
        M.emplace(MultiIndex::zero(d), std::exp(expo));
        for (const auto& e : all) {
            if (e.order() == 0) continue;
            int r = 0;
            while (e[r] == 0) ++r;
            const MultiIndex prev = e - MultiIndex::unit(d, r);
            cd v = grad(r) * M.at(prev);
            for (int s = 0; s < d; ++s) {
                if (prev[s] == 0 || g->covariance(r, s) == 0.0) continue;
                v += static_cast<double>(prev[s]) * g->covariance(r, s) * M.at(prev - MultiIndex::unit(d, s));
            }
            M.emplace(e, v);
        }
        for (const auto& e : all) out.emplace(e, g->intensity * (M.at(e) - (e.order() == 0 ? 1.0 : 0.0)));
        return out;
    }
    if (auto x = std::get_if<ExponentialJumps>(&spec)) {
        // prod_r eps_r! eta_r / (eta_r - xi_r)^{eps_r + 1} over jumping coordinates.
        for (const auto& e : all) {
            cd v = 1.0;
            for (int r = 0; r < d; ++r) {
                const double eta = x->rates(r);
                if (eta == 0.0) {
                    if (e[r] > 0) v = 0.0;
                    continue;
                }
                const cd q = eta / (eta - xi(r));
                cd f = q;
                for (int i = 1; i <= e[r]; ++i) f *= static_cast<double>(i) * q / eta;
                v *= f;
            }
            out.emplace(e, x->intensity * (v - (e.order() == 0 ? 1.0 : 0.0)));
        }
        return out;
    }
    const auto& u = std::get<UserJump>(spec);
    for (const auto& e : all) {
        if (e.order() > u.maxOrder)
            throw CapabilityError("jump part '" + u.label + "' supports derivatives up to order " +
                                  std::to_string(u.maxOrder) + ", requested eps = " + e.str());
        out.emplace(e, u.derivative(e, xi));
    }
    return out;
}

inline const MatrixXd& quadraticOf(const AffineModel& m, int c) {
    return c == 0 ? m.a0 : m.aSlope[static_cast<std::size_t>(c - 1)];
}

inline VectorXd linearOf(const AffineModel& m, int c) { return c == 0 ? m.b0 : VectorXd(m.bSlope.col(c - 1)); }

}  // namespace detail

/// D^eps sigma_c(xi) for all |eps| <= K (component c = 0 constant part,
/// c = l slope symbol).
inline DerivativeMap componentDerivatives(const AffineModel& m, int c, const VectorXcd& xi, int K) {
    const int d = m.dimension;
    if (xi.size() != d) throw std::invalid_argument("componentDerivatives: xi has wrong dimension");
    if (c < 0 || c > d) throw std::invalid_argument("componentDerivatives: component out of range");
    DerivativeMap out = detail::jumpDerivatives(m.jumps[static_cast<std::size_t>(c)], d, xi, K);
    const MatrixXd& Q = detail::quadraticOf(m, c);
    const VectorXd L = detail::linearOf(m, c);
    const VectorXcd Qxi = Q.cast<cd>() * xi;
    for (auto& [e, v] : out) {
        const int o = e.order();
        if (o == 0) {
            v += 0.5 * (xi.transpose() * Qxi)(0) + (xi.transpose() * L.cast<cd>())(0);
        } else if (o == 1) {
            int r = 0;
            while (e[r] == 0) ++r;
            v += Qxi(r) + L(r);
        } else if (o == 2) {
            int r = 0;
            while (e[r] == 0) ++r;
            int s = r;
            if (e[r] == 1) {
                ++s;
                while (e[s] == 0) ++s;
            }
            v += Q(r, s);
        }
    }
    return out;
}

inline cd componentValue(const AffineModel& m, int c, const VectorXcd& xi) {
    return componentDerivatives(m, c, xi, 0).at(MultiIndex::zero(m.dimension));
}

/// sigma(x, xi) at complex xi.
inline cd symbolAt(const AffineModel& m, const VectorXd& x, const VectorXcd& xi) {
    cd s = componentValue(m, 0, xi);
    for (int l = 1; l <= m.dimension; ++l)
        if (x(l - 1) != 0.0) s += x(l - 1) * componentValue(m, l, xi);
    return s;
}

/// sigma(x, iu).
inline cd evalSymbol(const AffineModel& m, const VectorXd& x, const VectorXd& u) {
    return symbolAt(m, x, u.cast<cd>() * cd(0.0, 1.0));
}

/// Derivative values D^eps sigma(x, xi) and D^eps sigma_l(xi), |eps| <= maxOrder.
struct SymbolTable {
    int dimension = 1;
    int maxOrder = 0;
    DerivativeMap base;
    std::vector<DerivativeMap> slope;  // slope[l-1]

    cd baseAt(const MultiIndex& e) const { return lookup(base, e); }
    cd slopeAt(int l, const MultiIndex& e) const { return lookup(slope.at(static_cast<std::size_t>(l - 1)), e); }

    /// Value of a plain (Family::Sigma) atom.
    cd atom(const AtomKey& a) const { return a.isBase() ? baseAt(a.eps()) : slopeAt(a.slope(), a.eps()); }

private:
    static cd lookup(const DerivativeMap& m, const MultiIndex& e) {
        auto it = m.find(e);
        if (it == m.end()) throw CapabilityError("symbol table does not contain eps = " + e.str());
        return it->second;
    }
};

/// Table at state x and complex xi.
inline SymbolTable symbolTableAt(const AffineModel& m, const VectorXd& x, const VectorXcd& xi, int K) {
    const int d = m.dimension;
    SymbolTable t;
    t.dimension = d;
    t.maxOrder = K;
    t.base = componentDerivatives(m, 0, xi, K);
    for (int l = 1; l <= d; ++l) {
        t.slope.push_back(componentDerivatives(m, l, xi, K));
        if (x(l - 1) != 0.0)
            for (auto& [e, v] : t.base) v += x(l - 1) * t.slope.back().at(e);
    }
    return t;
}

inline SymbolTable evalSymbolTable(const AffineModel& m, const VectorXd& x, const VectorXd& u, int K) {
    return symbolTableAt(m, x, u.cast<cd>() * cd(0.0, 1.0), K);
}

enum class Boundedness { Bounded, BoundedOnlyOnBoundedDomain };

struct BoundednessReport {
    Boundedness classification = Boundedness::Bounded;
    std::vector<std::string> reasons;
};

/// sigma is bounded in x iff the state domain is bounded or every slope
/// coefficient (diffusion, drift, slope jump measures) vanishes.
inline BoundednessReport classifyBoundedness(const AffineModel& m) {
    BoundednessReport r;
    const int d = m.dimension;
    if (m.domainBounded()) {
        r.reasons.push_back("state domain is bounded");
        return r;
    }
    for (int l = 1; l <= d; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                if (m.aSlope[static_cast<std::size_t>(l - 1)](i, j) != 0.0)
                    r.reasons.push_back("a_" + std::to_string(i + 1) + std::to_string(j + 1) + std::to_string(l) + " != 0");
    for (int i = 0; i < d; ++i)
        for (int l = 1; l <= d; ++l)
            if (m.bSlope(i, l - 1) != 0.0) r.reasons.push_back("b_" + std::to_string(i + 1) + std::to_string(l) + " != 0");
    for (int l = 1; l <= d; ++l)
        if (hasJumps(m.jumps[static_cast<std::size_t>(l)])) r.reasons.push_back("nu_" + std::to_string(l) + " != 0");
    if (!r.reasons.empty()) r.classification = Boundedness::BoundedOnlyOnBoundedDomain;
    return r;
}

/// Upper estimate of sup |sigma(x, iu)| over finite boxes: dense grid sample
/// times a safety factor 1.5.
inline double supBound(const AffineModel& m, const std::vector<Interval>& omega, const std::vector<Interval>& ubox,
                       int totalPoints = 20000) {
    const int d = m.dimension;
    if (static_cast<int>(omega.size()) != d || static_cast<int>(ubox.size()) != d)
        throw std::invalid_argument("supBound: boxes must have one interval per dimension");
    for (const auto& iv : omega)
        if (!iv.bounded()) throw std::invalid_argument("supBound: state box must be finite");
    for (const auto& iv : ubox)
        if (!iv.bounded()) throw std::invalid_argument("supBound: frequency box must be finite");
    const int n = std::max(3, static_cast<int>(std::floor(std::pow(static_cast<double>(totalPoints), 1.0 / (2.0 * d)))));
    auto node = [n](const Interval& iv, int i) { return iv.lo + (iv.hi - iv.lo) * i / (n - 1); };
    std::vector<int> idx(static_cast<std::size_t>(2 * d), 0);
    double best = 0.0;
    VectorXd x(d), u(d);
    while (true) {
        for (int i = 0; i < d; ++i) {
            x(i) = node(omega[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
            u(i) = node(ubox[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d + i)]);
        }
        best = std::max(best, std::abs(evalSymbol(m, x, u)));
        int p = 0;
        while (p < 2 * d && ++idx[static_cast<std::size_t>(p)] == n) idx[static_cast<std::size_t>(p++)] = 0;
        if (p == 2 * d) break;
    }
    return 1.5 * best;
}

}  // namespace affinecf
