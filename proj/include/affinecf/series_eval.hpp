#pragma once

// Numeric evaluation of the characteristic-function series.
//
//   local:       p(t,x,u) = e^{iux} (1 + sum_k d_k(x,iu) t^k)
//   globalized:  p(t(tau),x,u) = e^{iux} (1 + sum_k e_k(x,iu) tau^k),
//                t(tau) = beta ln tan(pi/4 + pi tau/4)
//
// The tau-coefficients satisfy (k+1) e_{k+1} = sum_m r_m L[e_{k-m}] with
// r_m the Taylor coefficients of dt/dtau and L the series operator, for
// which L[d_i] = (i+1) d_{i+1}. Hence e_k = sum_i E_{k,i} d_i with
// (k+1) E_{k+1,i+1} = (i+1) sum_m r_m E_{k-m,i}.
//
// Near tau = 1 the single expansion about 0 converges slowly; there the
// solution is continued segment by segment with a numeric state that is a
// polynomial in (x - x0).

#include "errors.hpp"
#include "jet.hpp"
#include "model.hpp"
#include "structure.hpp"
#include "symalg.hpp"
#include "symbol.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace affinecf {

enum class EvalMode { Local, Globalized, Generalized };

inline const char* modeName(EvalMode m) {
    switch (m) {
        case EvalMode::Local: return "local";
        case EvalMode::Globalized: return "global";
        case EvalMode::Generalized: return "generalized";
    }
    return "?";
}

struct CFResult {
    cd value{1.0, 0.0};
    std::vector<cd> contributions;  // contributions[k-1] = term of order k
    int truncationOrder = 0;
    double tailEstimate = 0.0;
    EvalMode mode = EvalMode::Local;
    double beta = 0.0;  // globalized only
    double tau = 0.0;   // globalized only
    int segments = 1;   // > 1 when the iterated continuation was used
    std::vector<std::string> warnings;

    cd term(int k) const { return contributions.at(static_cast<std::size_t>(k - 1)); }
};

/// |last| / (1 - r), r = |last| / |previous| clipped to [0, 0.9].
inline double tailEstimate(const std::vector<cd>& terms) {
    if (terms.empty()) return 0.0;
    const double last = std::abs(terms.back());
    if (last == 0.0) return 0.0;
    double r = 0.9;
    if (terms.size() >= 2) {
        const double prev = std::abs(terms[terms.size() - 2]);
        r = prev == 0.0 ? 0.9 : std::clamp(last / prev, 0.0, 0.9);
    }
    return last / (1.0 - r);
}

/// t(tau) = beta ln tan(pi/4 + pi tau/4) and its inverse.
class TimeTransform {
public:
    explicit TimeTransform(double beta = 1.0) : beta_(beta) {
        if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("TimeTransform: beta must be positive");
    }
    double beta() const { return beta_; }

    double forward(double tau) const {
        if (!(tau >= 0.0) || tau >= 1.0) throw DomainError("timeForward: tau must lie in [0, 1), got " + std::to_string(tau));
        // ln tan(pi/4 + a) = 2 artanh(tan a), accurate near tau = 0
        return 2.0 * beta_ * std::atanh(std::tan(std::numbers::pi / 4 * tau));
    }

    double inverse(double t) const {
        if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("timeInverse: t must be finite and >= 0");
        return 4.0 / std::numbers::pi * std::atan(std::tanh(t / (2.0 * beta_)));
    }

    /// rho(tau) = (pi beta / 4) / sin(pi/2 + pi tau / 2) = (pi beta / 4) / cos(pi tau / 2), about tau0.
    Jet rhoJet(double tau0, int K) const {
        if (!(tau0 >= 0.0) || tau0 >= 1.0) throw DomainError("rhoJet: tau0 must lie in [0, 1)");
        return cosJet(std::numbers::pi / 2, tau0, K).reciprocal() * (std::numbers::pi * beta_ / 4);
    }

    /// dt/dtau = 2 rho(tau).
    Jet timeDerivativeJet(double tau0, int K) const { return rhoJet(tau0, K) * 2.0; }

private:
    double beta_;
};

inline double timeForward(const TimeTransform& tt, double tau) { return tt.forward(tau); }
inline double timeInverse(const TimeTransform& tt, double t) { return tt.inverse(t); }
inline Jet rhoJet(const TimeTransform& tt, double tau0, int K) { return tt.rhoJet(tau0, K); }

// ------------------------------------------------------------ series cache

enum class SeriesKind { Plain, Difference, BruteForce };

struct CompiledSeries {
    AtomIndex atoms;
    std::vector<CompiledPoly> terms;  // d_0 .. d_K
    std::vector<int> maxExponent;     // per atom slot
    std::vector<int> firstTerm;       // per atom slot: lowest k whose d_k contains it
    std::vector<std::size_t> termCounts;
};

/// Process-wide memo of generated and compiled series, keyed by recursion
/// kind, dimension and structural-zero signature.
class SeriesCache {
public:
    static SeriesCache& global() {
        static SeriesCache c;
        return c;
    }

    std::shared_ptr<const CompiledSeries> compiled(SeriesKind kind, int d, const FamilyPatterns& pats, int K) {
        std::lock_guard<std::mutex> lock(mu_);
        Entry& e = entry(kind, d, pats);
        if (!e.compiled || static_cast<int>(e.compiled->terms.size()) <= K) {
            const auto& polys = e.gen->upTo(K);
            auto cs = std::make_shared<CompiledSeries>();
            for (int k = 0; k <= K; ++k) {
                cs->terms.push_back(compile(polys[static_cast<std::size_t>(k)], cs->atoms));
                cs->termCounts.push_back(polys[static_cast<std::size_t>(k)].size());
            }
            cs->maxExponent.assign(cs->atoms.atoms().size(), 0);
            cs->firstTerm.assign(cs->atoms.atoms().size(), K + 1);
            for (int k = 0; k <= K; ++k)
                for (const auto& t : cs->terms[static_cast<std::size_t>(k)].terms)
                    for (const auto& [slot, ex] : t.powers) {
                        cs->maxExponent[slot] = std::max(cs->maxExponent[slot], ex);
                        cs->firstTerm[slot] = std::min(cs->firstTerm[slot], k);
                    }
            e.compiled = std::move(cs);
        }
        return e.compiled;
    }

    std::vector<SymPoly> symbolic(SeriesKind kind, int d, const FamilyPatterns& pats, int K) {
        std::lock_guard<std::mutex> lock(mu_);
        return entry(kind, d, pats).gen->upTo(K);
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        entries_.clear();
    }

private:
    struct Entry {
        std::unique_ptr<SeriesGenerator> gen;
        std::shared_ptr<const CompiledSeries> compiled;
    };

    Entry& entry(SeriesKind kind, int d, const FamilyPatterns& pats) {
        const std::string key = std::to_string(static_cast<int>(kind)) + "/" + std::to_string(d) + "/" + pats.signature();
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
        RecursionOperator op = kind == SeriesKind::Plain        ? RecursionOperator::plain(d)
                               : kind == SeriesKind::Difference ? RecursionOperator::difference(d)
                                                                : RecursionOperator::bruteForce(d);
        Entry e;
        e.gen = std::make_unique<SeriesGenerator>(std::move(op), pats.mask());
        return entries_.emplace(key, std::move(e)).first->second;
    }

    std::mutex mu_;
    std::map<std::string, Entry> entries_;
};

/// Numeric values d_0..d_K given atom values.
template <class AtomValue>
std::vector<cd> evaluateSeries(const CompiledSeries& cs, int K, AtomValue&& atomValue) {
    const auto& atoms = cs.atoms.atoms();
    std::vector<std::vector<cd>> powers(atoms.size());
    for (std::size_t s = 0; s < atoms.size(); ++s) {
        if (cs.firstTerm[s] > K) continue;
        const cd v = atomValue(atoms[s]);
        auto& pw = powers[s];
        pw.resize(static_cast<std::size_t>(cs.maxExponent[s]) + 1);
        pw[0] = 1.0;
        for (std::size_t e = 1; e < pw.size(); ++e) pw[e] = pw[e - 1] * v;
    }
    std::vector<cd> out;
    out.reserve(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        cd s = 0.0;
        for (const auto& t : cs.terms[static_cast<std::size_t>(k)].terms) {
            cd v = t.coefficient;
            for (const auto& [slot, e] : t.powers) v *= powers[slot][static_cast<std::size_t>(e)];
            s += v;
        }
        out.push_back(s);
    }
    return out;
}

/// value = prefactor * (1 + sum_k c_k s^k), summed in Horner form.
inline CFResult assembleResult(const std::vector<cd>& coeffs, double s, cd prefactor, EvalMode mode) {
    const int K = static_cast<int>(coeffs.size()) - 1;
    CFResult r;
    r.mode = mode;
    r.truncationOrder = K;
    double sk = 1.0;
    for (int k = 1; k <= K; ++k) {
        sk *= s;
        r.contributions.push_back(coeffs[static_cast<std::size_t>(k)] * sk);
    }
    cd h = 0.0;
    for (int k = K; k >= 1; --k) h = (h + coeffs[static_cast<std::size_t>(k)]) * s;
    r.value = prefactor * (1.0 + h);
    r.tailEstimate = std::abs(prefactor) * tailEstimate(r.contributions);
    return r;
}

inline cd plane(const VectorXd& u, const VectorXd& x) { return std::exp(cd(0.0, u.dot(x))); }

namespace detail {
inline void checkPoint(const AffineModel& m, const VectorXd& x, const VectorXd& u, int K) {
    if (x.size() != m.dimension || u.size() != m.dimension)
        throw std::invalid_argument("evaluation point has wrong dimension (model dimension " + std::to_string(m.dimension) + ")");
    if (K < 1) throw std::invalid_argument("truncation order K must be >= 1");
    if (!m.inDomain(x)) throw DomainError("state point outside the model's state domain");
}
}  // namespace detail

/// d_0..d_K of the plain series at (x, iu).
inline std::vector<cd> localSeriesValues(const AffineModel& m, const VectorXd& x, const VectorXd& u, int K) {
    FamilyPatterns pats;
    pats.sigma = ModelPattern::of(m);
    auto cs = SeriesCache::global().compiled(SeriesKind::Plain, m.dimension, pats, K);
    const SymbolTable table = evalSymbolTable(m, x, u, K - 1);
    return evaluateSeries(*cs, K, [&](const AtomKey& a) { return table.atom(a); });
}

/// e^{iux} (1 + sum_{k=1}^K d_k(x, iu) t^k).
inline CFResult evalLocal(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t, int K) {
    detail::checkPoint(m, x, u, K);
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    return assembleResult(localSeriesValues(m, x, u, K), t, plane(u, x), EvalMode::Local);
}

// ------------------------------------------------- polynomial-state engine

/// Polynomials in y = x - x0 of total degree <= cap, complex coefficients.
class PolyBasis {
public:
    PolyBasis(int d, int cap) : d_(d), set_(d, cap) {}
    int dimension() const { return d_; }
    int cap() const { return set_.maxOrder(); }
    std::size_t size() const { return set_.size(); }
    const MultiIndex& at(std::size_t i) const { return set_.at(i); }
    std::size_t indexOf(const MultiIndex& m) const { return set_.indexOf(m); }
    bool contains(const MultiIndex& m) const { return m.order() <= cap(); }

private:
    int d_;
    GradedIndexSet set_;
};

/// The operator q -> sum_eps D^eps sigma(x, iu)/eps! D^eps_x q on polynomial
/// states, with sigma's x-dependence expanded about x0.
class PolyOperator {
public:
    PolyOperator(const AffineModel& m, const VectorXd& x0, const VectorXd& u, const PolyBasis& basis) : basis_(basis) {
        const int d = m.dimension;
        const int maxEps = basis.cap();
        const SymbolTable tab = evalSymbolTable(m, x0, u, maxEps);
        for (int o = 0; o <= maxEps; ++o) {
            for (const auto& eps : enumerate(d, o).indices) {
                Term t;
                t.eps = eps;
                t.base = tab.baseAt(eps);
                for (int l = 1; l <= d; ++l) t.slope.push_back(tab.slopeAt(l, eps));
                bool zero = t.base == 0.0;
                for (const auto& s : t.slope) zero = zero && s == 0.0;
                if (!zero) terms_.push_back(std::move(t));
            }
        }
        for (std::size_t i = 0; i < basis.size(); ++i) {
            std::vector<std::size_t> up;
            for (int l = 0; l < d; ++l) {
                const MultiIndex n = basis.at(i) + MultiIndex::unit(d, l);
                up.push_back(basis.contains(n) ? basis.indexOf(n) : SIZE_MAX);
            }
            raise_.push_back(std::move(up));
        }
    }

    std::vector<cd> apply(const std::vector<cd>& q) const {
        const int d = basis_.dimension();
        std::vector<cd> out(q.size(), 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i] == 0.0) continue;
            const MultiIndex& alpha = basis_.at(i);
            for (const auto& t : terms_) {
                if (!alpha.dominates(t.eps)) continue;
                double w = 1.0;  // D^eps y^alpha / eps! = prod C(alpha_r, eps_r) y^{alpha - eps}
                for (int r = 0; r < d; ++r) w *= static_cast<double>(binomial(alpha[r], t.eps[r]));
                const std::size_t j = basis_.indexOf(alpha - t.eps);
                const cd c = q[i] * w;
                out[j] += c * t.base;
                for (int l = 0; l < d; ++l) {
                    const cd s = t.slope[static_cast<std::size_t>(l)];
                    if (s == 0.0) continue;
                    const std::size_t up = raise_[j][static_cast<std::size_t>(l)];
                    if (up != SIZE_MAX) out[up] += c * s;
                }
            }
        }
        return out;
    }

private:
    struct Term {
        MultiIndex eps;
        cd base;
        std::vector<cd> slope;
    };
    const PolyBasis& basis_;
    std::vector<Term> terms_;
    std::vector<std::vector<std::size_t>> raise_;
};

/// One Taylor segment: q(s0 + h) from q(s0) for ds/ds' = jet r.
/// Returns the new state and the order terms of the value at y = 0.
inline std::vector<cd> taylorSegment(const PolyOperator& op, const std::vector<cd>& q0, const Jet& r, double h,
                                     std::vector<cd>* valueTerms) {
    const int K = r.order();
    std::vector<std::vector<cd>> q{q0}, Aq;
    for (int k = 0; k < K; ++k) {
        Aq.push_back(op.apply(q.back()));
        std::vector<cd> next(q0.size(), 0.0);
        for (int m = 0; m <= k; ++m) {
            const double rm = r[m];
            if (rm == 0.0) continue;
            const auto& a = Aq[static_cast<std::size_t>(k - m)];
            for (std::size_t i = 0; i < next.size(); ++i) next[i] += rm * a[i];
        }
        for (auto& v : next) v /= static_cast<double>(k + 1);
        q.push_back(std::move(next));
    }
    if (valueTerms) {
        valueTerms->clear();
        double hk = 1.0;
        for (int k = 1; k <= K; ++k) {
            hk *= h;
            valueTerms->push_back(q[static_cast<std::size_t>(k)][0] * hk);
        }
    }
    std::vector<cd> state(q0.size(), 0.0);
    for (int k = K; k >= 0; --k)
        for (std::size_t i = 0; i < state.size(); ++i) state[i] = state[i] * h + q[static_cast<std::size_t>(k)][i];
    return state;
}

/// Local series through the polynomial engine (single segment in t).
inline CFResult evalLocalPoly(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t, int K, int degreeCap = 0) {
    detail::checkPoint(m, x, u, K);
    const PolyBasis basis(m.dimension, degreeCap > 0 ? degreeCap : K);
    const PolyOperator op(m, x, u, basis);
    std::vector<cd> q(basis.size(), 0.0);
    q[0] = 1.0;
    Jet r(K, 1.0);
    std::vector<cd> terms;
    const auto state = taylorSegment(op, q, r, t, &terms);
    CFResult res;
    res.mode = EvalMode::Local;
    res.truncationOrder = K;
    res.contributions = terms;
    res.value = plane(u, x) * state[0];
    res.tailEstimate = tailEstimate(terms);
    return res;
}

// ----------------------------------------------------------- globalized

struct GlobalOptions {
    double iterateAbove = 0.7;  // tau beyond which the segmented continuation is used
    double maxStep = 0.3;
    bool forceIterated = false;
    int degreeCapFactor = 3;  // polynomial state degree cap = factor * K
    double segmentTol = 1e-13;  // per-segment tail relative to the value; segments are halved until met
};

/// E_{k,i} for k, i <= K from the jet of dt/dtau.
inline std::vector<std::vector<double>> globalizationMatrix(const Jet& r) {
    const int K = r.order();
    std::vector<std::vector<double>> E(static_cast<std::size_t>(K) + 1, std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
    E[0][0] = 1.0;
    for (int k = 0; k < K; ++k)
        for (int i = 0; i <= k; ++i) {
            double s = 0.0;
            for (int m = 0; m <= k; ++m) s += r[m] * E[static_cast<std::size_t>(k - m)][static_cast<std::size_t>(i)];
            E[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(i) + 1] = (i + 1) * s / (k + 1);
        }
    return E;
}

inline CFResult evalGlobalized(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t, int K,
                               const TimeTransform& tt, const GlobalOptions& opt = {}) {
    detail::checkPoint(m, x, u, K);
    const double tau = tt.inverse(t);
    if (tau >= 1.0) throw DomainError("t maps to tau >= 1 in floating point; increase beta");
    CFResult res;
    if (tau <= opt.iterateAbove && !opt.forceIterated) {
        const auto dvals = localSeriesValues(m, x, u, K);
        const auto E = globalizationMatrix(tt.timeDerivativeJet(0.0, K));
        std::vector<cd> e(static_cast<std::size_t>(K) + 1, 0.0);
        for (int k = 0; k <= K; ++k)
            for (int i = 0; i <= k; ++i) e[static_cast<std::size_t>(k)] += E[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] * dvals[static_cast<std::size_t>(i)];
        res = assembleResult(e, tau, plane(u, x), EvalMode::Globalized);
    } else {
        const PolyBasis basis(m.dimension, std::max(1, opt.degreeCapFactor) * K);
        const PolyOperator op(m, x, u, basis);
        std::vector<cd> q(basis.size(), 0.0);
        q[0] = 1.0;
        double tau0 = 0.0, tail = 0.0;
        int segments = 0;
        std::vector<cd> terms;
        while (tau0 < tau) {
            double h = std::min({opt.maxStep, 0.5 * (1.0 - tau0), tau - tau0});
            if (tau - (tau0 + h) < 1e-15) h = tau - tau0;
            const Jet r = tt.timeDerivativeJet(tau0, K);
            std::vector<cd> next = taylorSegment(op, q, r, h, &terms);
            for (int halvings = 0; halvings < 60; ++halvings) {
                const double scale = std::max(std::abs(next[0]), 1e-300);
                if (!(tailEstimate(terms) > opt.segmentTol * scale)) break;
                h *= 0.5;
                next = taylorSegment(op, q, r, h, &terms);
            }
            q = std::move(next);
            tail += tailEstimate(terms);
            tau0 += h;
            ++segments;
            if (segments > 100000) throw DomainError("iterated continuation did not reach tau");
        }
        res.mode = EvalMode::Globalized;
        res.truncationOrder = K;
        res.contributions = terms;
        res.segments = std::max(segments, 1);
        res.value = plane(u, x) * q[0];
        res.tailEstimate = tail;
    }
    res.beta = tt.beta();
    res.tau = tau;
    return res;
}

struct BetaChoice {
    double beta = 1.0;
    double tauAtHorizon = 0.0;
    double supBound = 0.0;
    bool contraction = true;  // beta * supBound <= 1/2
};

/// beta = min(1, 1 / (2 supBound)), shrunk in time scale if needed so that
/// tau(T) <= 0.9; supBound = 0 gives beta = 1.
inline BetaChoice chooseBeta(const AffineModel& m, const std::vector<Interval>& omega, const std::vector<Interval>& ubox, double T) {
    if (!(T > 0.0)) throw DomainError("chooseBeta: horizon must be > 0");
    BetaChoice c;
    c.supBound = supBound(m, omega, ubox);
    c.beta = c.supBound == 0.0 ? 1.0 : std::min(1.0, 1.0 / (2.0 * c.supBound));
    if (TimeTransform(c.beta).inverse(T) > 0.9) c.beta = T / std::log(std::tan(0.475 * std::numbers::pi));
    c.tauAtHorizon = TimeTransform(c.beta).inverse(T);
    c.contraction = c.beta * c.supBound <= 0.5 + 1e-12;
    return c;
}

/// Default evaluation boxes: x +- 1 clipped to the state domain, and the
/// symmetric frequency box spanned by u.
inline std::pair<std::vector<Interval>, std::vector<Interval>> defaultBoxes(const AffineModel& m, const VectorXd& x, const VectorXd& u) {
    std::vector<Interval> om, ub;
    for (int i = 0; i < m.dimension; ++i) {
        const auto& dom = m.stateDomain[static_cast<std::size_t>(i)];
        om.push_back(Interval{std::max(dom.lo, x(i) - 1.0), std::min(dom.hi, x(i) + 1.0)});
        ub.push_back(Interval{-std::abs(u(i)), std::abs(u(i))});
    }
    return {om, ub};
}

/// Globalized evaluation with beta from the heuristic on the default boxes.
inline CFResult evalGlobalizedAuto(const AffineModel& m, const VectorXd& x, const VectorXd& u, double t, int K,
                                   std::optional<double> beta = std::nullopt, const GlobalOptions& opt = {}) {
    if (t == 0.0) {
        CFResult r = evalGlobalized(m, x, u, 0.0, K, TimeTransform(beta.value_or(1.0)), opt);
        return r;
    }
    std::vector<std::string> warnings;
    double b;
    if (beta) {
        b = *beta;
    } else {
        const auto [om, ub] = defaultBoxes(m, x, u);
        const auto choice = chooseBeta(m, om, ub, t);
        b = choice.beta;
        if (!choice.contraction)
            warnings.push_back("convergence risk: beta * supBound = " + std::to_string(choice.beta * choice.supBound) + " > 0.5");
    }
    CFResult r = evalGlobalized(m, x, u, t, K, TimeTransform(b), opt);
    r.warnings.insert(r.warnings.end(), warnings.begin(), warnings.end());
    return r;
}

}  // namespace affinecf
