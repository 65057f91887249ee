#pragma once

// Structural zeros of symbol atoms. Each symbol component is a sum of a
// quadratic, a linear and a jump part; which xi-derivatives of it vanish
// identically is decided by the coefficient sparsity pattern alone. Atoms
// that vanish identically are masked out of the series so that d_k stays
// small for sparse models.

#include "model.hpp"
#include "symalg.hpp"

#include <string>
#include <vector>

namespace affinecf {

struct ComponentPattern {
    enum class Jump { None, Closed, Generic };

    int d = 1;
    std::vector<bool> quadratic;  // d*d, nonzero pattern of Q
    std::vector<bool> linear;     // d
    Jump jump = Jump::None;
    std::vector<bool> deadCoordinate;  // closed-form jumps: xi_r does not enter

    /// True if D^eps of this component vanishes for every xi.
    bool zero(const MultiIndex& eps) const {
        const int o = eps.order();
        bool jumpZero = jump == Jump::None;
        if (jump == Jump::Closed && o >= 1) {
            for (int r = 0; r < d; ++r)
                if (eps[r] > 0 && deadCoordinate[static_cast<std::size_t>(r)]) jumpZero = true;
        }
        if (!jumpZero) return false;
        if (o == 0) {
            for (bool b : quadratic)
                if (b) return false;
            for (bool b : linear)
                if (b) return false;
            return true;
        }
        if (o == 1) {
            int r = 0;
            while (eps[r] == 0) ++r;
            if (linear[static_cast<std::size_t>(r)]) return false;
            for (int s = 0; s < d; ++s)
                if (quadratic[static_cast<std::size_t>(r * d + s)]) return false;
            return true;
        }
        if (o == 2) {
            int r = 0;
            while (eps[r] == 0) ++r;
            int s = r;
            if (eps[r] == 1) {
                ++s;
                while (eps[s] == 0) ++s;
            }
            return !quadratic[static_cast<std::size_t>(r * d + s)];
        }
        return true;
    }

    std::string signature() const {
        std::string s;
        for (bool b : quadratic) s += b ? '1' : '0';
        s += '|';
        for (bool b : linear) s += b ? '1' : '0';
        s += '|';
        s += static_cast<char>('0' + static_cast<int>(jump));
        for (bool b : deadCoordinate) s += b ? '1' : '0';
        return s;
    }
};

namespace detail {

inline ComponentPattern::Jump jumpPattern(const JumpSpec& j, int d, std::vector<bool>& dead) {
    dead.assign(static_cast<std::size_t>(d), false);
    if (!hasJumps(j)) return ComponentPattern::Jump::None;
    if (auto g = std::get_if<GaussianJumps>(&j)) {
        for (int r = 0; r < d; ++r)
            dead[static_cast<std::size_t>(r)] = g->mean(r) == 0.0 && g->covariance.row(r).isZero(0.0);
        return ComponentPattern::Jump::Closed;
    }
    if (auto e = std::get_if<ExponentialJumps>(&j)) {
        for (int r = 0; r < d; ++r) dead[static_cast<std::size_t>(r)] = e->rates(r) == 0.0;
        return ComponentPattern::Jump::Closed;
    }
    return ComponentPattern::Jump::Generic;
}

inline bool sameJumps(const JumpSpec& a, const JumpSpec& b) {
    if (!hasJumps(a) && !hasJumps(b)) return true;
    if (std::holds_alternative<UserJump>(a) || std::holds_alternative<UserJump>(b)) return false;
    return sameDistribution(a, b) && intensityOf(a) == intensityOf(b);
}

}  // namespace detail

/// Patterns for components 0..d of one model.
struct ModelPattern {
    std::vector<ComponentPattern> components;

    static ModelPattern of(const AffineModel& m) {
        ModelPattern p;
        const int d = m.dimension;
        for (int c = 0; c <= d; ++c) {
            ComponentPattern cp;
            cp.d = d;
            const MatrixXd& Q = c == 0 ? m.a0 : m.aSlope[static_cast<std::size_t>(c - 1)];
            const VectorXd L = c == 0 ? m.b0 : VectorXd(m.bSlope.col(c - 1));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) cp.quadratic.push_back(Q(i, j) != 0.0);
            for (int i = 0; i < d; ++i) cp.linear.push_back(L(i) != 0.0);
            cp.jump = detail::jumpPattern(m.jumps[static_cast<std::size_t>(c)], d, cp.deadCoordinate);
            p.components.push_back(std::move(cp));
        }
        return p;
    }

    /// Pattern of the difference symbol sigma - sigma_0.
    static ModelPattern difference(const AffineModel& target, const AffineModel& baseline) {
        if (target.dimension != baseline.dimension) throw std::invalid_argument("difference: dimension mismatch");
        ModelPattern p;
        const int d = target.dimension;
        for (int c = 0; c <= d; ++c) {
            ComponentPattern cp;
            cp.d = d;
            const MatrixXd Q = c == 0 ? MatrixXd(target.a0 - baseline.a0)
                                      : MatrixXd(target.aSlope[static_cast<std::size_t>(c - 1)] - baseline.aSlope[static_cast<std::size_t>(c - 1)]);
            const VectorXd L = c == 0 ? VectorXd(target.b0 - baseline.b0) : VectorXd(target.bSlope.col(c - 1) - baseline.bSlope.col(c - 1));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) cp.quadratic.push_back(Q(i, j) != 0.0);
            for (int i = 0; i < d; ++i) cp.linear.push_back(L(i) != 0.0);
            const auto& jt = target.jumps[static_cast<std::size_t>(c)];
            const auto& jb = baseline.jumps[static_cast<std::size_t>(c)];
            if (detail::sameJumps(jt, jb)) {
                cp.jump = ComponentPattern::Jump::None;
                cp.deadCoordinate.assign(static_cast<std::size_t>(d), false);
            } else if (!hasJumps(jb)) {
                cp.jump = detail::jumpPattern(jt, d, cp.deadCoordinate);
            } else if (!hasJumps(jt)) {
                cp.jump = detail::jumpPattern(jb, d, cp.deadCoordinate);
            } else {
                std::vector<bool> da, db;
                const auto pa = detail::jumpPattern(jt, d, da);
                const auto pb = detail::jumpPattern(jb, d, db);
                cp.deadCoordinate.assign(static_cast<std::size_t>(d), false);
                if (pa == ComponentPattern::Jump::Closed && pb == ComponentPattern::Jump::Closed) {
                    cp.jump = ComponentPattern::Jump::Closed;
                    for (int r = 0; r < d; ++r) cp.deadCoordinate[static_cast<std::size_t>(r)] = da[static_cast<std::size_t>(r)] && db[static_cast<std::size_t>(r)];
                } else {
                    cp.jump = ComponentPattern::Jump::Generic;
                }
            }
            p.components.push_back(std::move(cp));
        }
        return p;
    }

    int dimension() const { return components.front().d; }

    /// Base atom D^eps sigma(x, .) vanishes iff every component does.
    bool baseZero(const MultiIndex& eps) const {
        for (const auto& c : components)
            if (!c.zero(eps)) return false;
        return true;
    }
    bool slopeZero(int l, const MultiIndex& eps) const { return components[static_cast<std::size_t>(l)].zero(eps); }

    bool atomZero(const AtomKey& a) const {
        const MultiIndex eps = a.eps();
        return a.isBase() ? baseZero(eps) : slopeZero(a.slope(), eps);
    }

    std::string signature() const {
        std::string s;
        for (const auto& c : components) s += c.signature() + ";";
        return s;
    }
};

/// Mask for a series over the given family patterns (TimeDrift atoms never masked).
struct FamilyPatterns {
    std::optional<ModelPattern> sigma, delta, baseline;

    AtomMask mask() const {
        auto self = *this;
        return AtomMask{[self](const AtomKey& a) {
            switch (a.family()) {
                case Family::Sigma: return self.sigma && self.sigma->atomZero(a);
                case Family::DeltaSigma: return self.delta && self.delta->atomZero(a);
                case Family::BaselineSigma: return self.baseline && self.baseline->atomZero(a);
                case Family::TimeDrift: return false;
            }
            return false;
        }};
    }

    std::string signature() const {
        return "S" + (sigma ? sigma->signature() : std::string("*")) + "D" + (delta ? delta->signature() : std::string("*")) +
               "B" + (baseline ? baseline->signature() : std::string("*"));
    }
};

}  // namespace affinecf
