#pragma once

// Exact-rational polynomial algebra over symbol atoms and the series
// recursions built on it.
//
// An atom is a formal xi-derivative of one of the symbol functions. Base
// atoms (D^eps sigma(x, xi)) are affine in x; x-differentiation in direction
// l maps a base atom to the matching slope atom (D^eps sigma_l(xi)), which is
// constant in x. With this rule the series terms
//
//   d_0 = 1,  d_{k+1} = 1/(k+1) sum_eps D^eps_xi sigma / eps! * D^eps_x d_k
//
// are polynomials in the atoms with rational coefficients.

#include "multiindex.hpp"
#include "rational.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace affinecf {

/// Which symbol function an atom differentiates.
enum class Family : std::uint8_t {
    Sigma = 0,          ///< target symbol sigma
    DeltaSigma = 1,     ///< sigma - sigma_0 along the baseline trajectory
    BaselineSigma = 2,  ///< baseline symbol sigma_0
    TimeDrift = 3,      ///< -d/dt phi_0 - x . d/dt psi_0 (brute-force generalized recursion)
};

inline const char* familyName(Family f) {
    switch (f) {
        case Family::Sigma: return "sigma";
        case Family::DeltaSigma: return "dsigma";
        case Family::BaselineSigma: return "sigma0";
        case Family::TimeDrift: return "g";
    }
    return "?";
}

/// D^eps_xi of a base symbol (slope == 0) or of its l-th slope symbol.
///
/// Packed into 64 bits: family (4), slope (4), dimension (4), then 6 bits per
/// derivative entry. Limits: dimension <= 8, entries <= 63.
class AtomKey {
public:
    static constexpr int kMaxDim = 8;
    static constexpr int kMaxEntry = 63;

    AtomKey() = default;

    static AtomKey base(const MultiIndex& eps, Family f = Family::Sigma) { return AtomKey(f, 0, eps); }
    static AtomKey slope(int l, const MultiIndex& eps, Family f = Family::Sigma) {
        if (l < 1 || l > eps.dim()) throw std::invalid_argument("AtomKey: slope index out of range");
        return AtomKey(f, l, eps);
    }

    Family family() const { return static_cast<Family>(code_ & 0xF); }
    int slope() const { return static_cast<int>((code_ >> 4) & 0xF); }
    int dim() const { return static_cast<int>((code_ >> 8) & 0xF); }
    bool isBase() const { return slope() == 0; }
    int entry(int r) const { return static_cast<int>((code_ >> (12 + 6 * r)) & 0x3F); }
    int order() const {
        int s = 0;
        for (int r = 0; r < dim(); ++r) s += entry(r);
        return s;
    }
    MultiIndex eps() const {
        std::vector<int> e(static_cast<std::size_t>(dim()));
        for (int r = 0; r < dim(); ++r) e[static_cast<std::size_t>(r)] = entry(r);
        return MultiIndex(std::move(e));
    }

    /// The slope atom obtained by differentiating this base atom in x_l.
    AtomKey derived(int l) const {
        if (!isBase()) throw std::logic_error("AtomKey: slope atoms are constant in x");
        return AtomKey((code_ & ~std::uint64_t{0xF0}) | (static_cast<std::uint64_t>(l) << 4));
    }

    std::uint64_t code() const { return code_; }

    std::string str() const {
        std::string s = familyName(family());
        if (!isBase()) s += "_" + std::to_string(slope());
        if (family() == Family::TimeDrift) return s;
        return "D" + eps().str() + s;
    }

    auto operator<=>(const AtomKey&) const = default;

private:
    explicit AtomKey(std::uint64_t code) : code_(code) {}
    AtomKey(Family f, int l, const MultiIndex& eps) {
        const int d = eps.dim();
        if (d < 1 || d > kMaxDim) throw std::invalid_argument("AtomKey: dimension must be in [1, 8]");
        code_ = static_cast<std::uint64_t>(f) | (static_cast<std::uint64_t>(l) << 4) |
                (static_cast<std::uint64_t>(d) << 8);
        for (int r = 0; r < d; ++r) {
            if (eps[r] > kMaxEntry) throw std::invalid_argument("AtomKey: derivative order exceeds 63");
            code_ |= static_cast<std::uint64_t>(eps[r]) << (12 + 6 * r);
        }
    }

    std::uint64_t code_ = 0;
};

/// Product of atom powers, kept sorted by atom code with positive exponents.
class Monomial {
public:
    using Factor = std::pair<AtomKey, int>;

    Monomial() = default;
    explicit Monomial(std::vector<Factor> factors) {
        for (auto& [a, e] : factors) multiplyBy(a, e);
    }

    const std::vector<Factor>& factors() const { return f_; }
    bool isOne() const { return f_.empty(); }

    void multiplyBy(const AtomKey& a, int e) {
        if (e == 0) return;
        auto it = std::lower_bound(f_.begin(), f_.end(), a,
                                   [](const Factor& x, const AtomKey& k) { return x.first < k; });
        if (it != f_.end() && it->first == a) {
            it->second += e;
            if (it->second < 0) throw std::logic_error("Monomial: negative exponent");
            if (it->second == 0) f_.erase(it);
        } else {
            if (e < 0) throw std::logic_error("Monomial: negative exponent");
            f_.insert(it, {a, e});
        }
    }

    Monomial times(const AtomKey& a, int e = 1) const {
        Monomial m(*this);
        m.multiplyBy(a, e);
        return m;
    }

    int exponentOf(const AtomKey& a) const {
        for (const auto& [k, e] : f_)
            if (k == a) return e;
        return 0;
    }

    int totalDegree() const {
        int s = 0;
        for (const auto& [k, e] : f_) s += e;
        return s;
    }
    int baseCount() const {
        int s = 0;
        for (const auto& [k, e] : f_)
            if (k.isBase()) s += e;
        return s;
    }
    int slopeCount() const { return totalDegree() - baseCount(); }
    int derivedBaseCount() const {
        int s = 0;
        for (const auto& [k, e] : f_)
            if (k.isBase() && k.order() >= 1) s += e;
        return s;
    }

    std::string str() const {
        if (f_.empty()) return "1";
        std::string s;
        for (std::size_t i = 0; i < f_.size(); ++i) {
            if (i) s += "*";
            s += f_[i].first.str();
            if (f_[i].second != 1) s += "^" + std::to_string(f_[i].second);
        }
        return s;
    }

    bool operator==(const Monomial& o) const { return f_ == o.f_; }
    bool operator<(const Monomial& o) const { return f_ < o.f_; }

private:
    std::vector<Factor> f_;
};

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const noexcept {
        std::size_t h = 0xcbf29ce484222325ull;
        for (const auto& [a, e] : m.factors()) {
            h ^= a.code() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h ^= static_cast<std::size_t>(e) * 0x100000001b3ull;
        }
        return h;
    }
};

/// Sparse polynomial: monomial -> nonzero exact rational.
class SymPoly {
public:
    using Map = std::unordered_map<Monomial, Rational, MonomialHash>;

    SymPoly() = default;
    static SymPoly one() {
        SymPoly p;
        p.add(Monomial{}, Rational(1));
        return p;
    }

    void add(const Monomial& m, const Rational& c) {
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Rational coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    std::size_t size() const { return terms_.size(); }
    bool isZero() const { return terms_.empty(); }
    const Map& terms() const { return terms_; }

    SymPoly& operator*=(const Rational& s) {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    SymPoly& operator+=(const SymPoly& o) {
        for (const auto& [m, c] : o.terms_) add(m, c);
        return *this;
    }

    SymPoly operator-(const SymPoly& o) const {
        SymPoly r(*this);
        for (const auto& [m, c] : o.terms_) r.add(m, -c);
        return r;
    }

    bool operator==(const SymPoly& o) const { return (*this - o).isZero(); }

    /// Terms in canonical (monomial) order.
    std::vector<std::pair<Monomial, Rational>> sorted() const {
        std::vector<std::pair<Monomial, Rational>> v(terms_.begin(), terms_.end());
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return v;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string s;
        bool first = true;
        for (const auto& [m, c] : sorted()) {
            if (!first) s += " + ";
            first = false;
            s += toString(c) + "*" + m.str();
        }
        return s;
    }

private:
    Map terms_;
};

/// Product of two polynomials.
inline SymPoly operator*(const SymPoly& a, const SymPoly& b) {
    SymPoly r;
    for (const auto& [ma, ca] : a.terms())
        for (const auto& [mb, cb] : b.terms()) {
            Monomial m = ma;
            for (const auto& [k, e] : mb.factors()) m.multiplyBy(k, e);
            r.add(m, ca * cb);
        }
    return r;
}

/// Atoms known to vanish identically; terms containing them are never formed.
struct AtomMask {
    std::function<bool(const AtomKey&)> isZero;

    bool zero(const AtomKey& a) const { return isZero && isZero(a); }
    static AtomMask none() { return AtomMask{}; }
};

/// x-derivative in direction l (1-based) as a derivation on atom polynomials.
inline SymPoly differentiate(const SymPoly& p, int l, const AtomMask& mask = AtomMask::none()) {
    SymPoly r;
    for (const auto& [m, c] : p.terms()) {
        for (const auto& [a, e] : m.factors()) {
            if (!a.isBase()) continue;
            const AtomKey s = a.derived(l);
            if (mask.zero(s)) continue;
            Monomial mm = m;
            mm.multiplyBy(a, -1);
            mm.multiplyBy(s, 1);
            r.add(mm, c * e);
        }
    }
    return r;
}

/// The operator L[f] = sum_eps M_eps * D^eps_x f / eps!, with M_eps a
/// weighted sum of atoms. Exactly one multiplier list is attached to each
/// derivative index; the three recursions used by the library differ only in
/// these lists.
class RecursionOperator {
public:
    struct Multiplier {
        AtomKey atom;
        Rational weight;
    };
    using MultiplierFn = std::function<std::vector<Multiplier>(const MultiIndex&)>;

    RecursionOperator(int d, MultiplierFn fn) : d_(d), fn_(std::move(fn)) {
        if (d < 1 || d > AtomKey::kMaxDim) throw std::invalid_argument("RecursionOperator: dimension out of range");
    }

    /// sum_eps D^eps sigma / eps! D^eps_x f  (plain symbol series).
    static RecursionOperator plain(int d) {
        return RecursionOperator(d, [](const MultiIndex& eps) {
            return std::vector<Multiplier>{{AtomKey::base(eps, Family::Sigma), Rational(1)}};
        });
    }

    /// Difference-symbol recursion: Delta sigma f + sum_{|eps|>=1} (D^eps Delta sigma + D^eps sigma_0)/eps! D^eps_x f.
    static RecursionOperator difference(int d) {
        return RecursionOperator(d, [](const MultiIndex& eps) {
            if (eps.order() == 0) return std::vector<Multiplier>{{AtomKey::base(eps, Family::DeltaSigma), Rational(1)}};
            return std::vector<Multiplier>{{AtomKey::base(eps, Family::DeltaSigma), Rational(1)},
                                           {AtomKey::base(eps, Family::BaselineSigma), Rational(1)}};
        });
    }

    /// Brute-force recursion: (-d_t phi_0 - x d_t psi_0) f + sum_eps D^eps sigma(x, psi_0)/eps! D^eps_x f.
    static RecursionOperator bruteForce(int d) {
        return RecursionOperator(d, [d](const MultiIndex& eps) {
            if (eps.order() == 0)
                return std::vector<Multiplier>{{AtomKey::base(eps, Family::Sigma), Rational(1)},
                                               {AtomKey::base(MultiIndex::zero(d), Family::TimeDrift), Rational(1)}};
            return std::vector<Multiplier>{{AtomKey::base(eps, Family::Sigma), Rational(1)}};
        });
    }

    int dimension() const { return d_; }
    std::vector<Multiplier> multipliers(const MultiIndex& eps) const { return fn_(eps); }

private:
    int d_;
    MultiplierFn fn_;
};

namespace detail {

/// One way to split the x-derivatives among the copies of a base atom:
/// lambda[l] copies differentiated in direction l, with multinomial count.
struct Split {
    std::vector<int> lambda;
    int used = 0;
    std::uint64_t count = 1;
};

inline std::vector<Split> splitsFor(int exponent, int d) {
    std::vector<Split> out;
    std::vector<int> lam(static_cast<std::size_t>(d), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == d) {
            Split s;
            s.lambda = lam;
            s.used = exponent - left;
            // exponent! / ((exponent - used)! prod lambda_l!)
            std::uint64_t c = 1;
            int rem = exponent;
            for (int l = 0; l < d; ++l) {
                c *= binomial(rem, lam[static_cast<std::size_t>(l)]);
                rem -= lam[static_cast<std::size_t>(l)];
            }
            s.count = c;
            out.push_back(std::move(s));
            return;
        }
        for (int v = 0; v <= left; ++v) {
            lam[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, left - v);
        }
        lam[static_cast<std::size_t>(pos)] = 0;
    };
    rec(0, exponent);
    return out;
}

}  // namespace detail

/// Enumerates D^eps_x m / eps! for every eps with a nonzero result:
/// callback(eps, count, resultMonomial). Each base atom is affine in x, so
/// each of its copies is differentiated at most once.
template <class Callback>
void forEachLeibnizTerm(const Monomial& m, int d, const AtomMask& mask, Callback&& cb) {
    struct Slot {
        AtomKey atom;
        int exponent;
        std::vector<detail::Split> splits;
    };
    std::vector<Slot> slots;
    for (const auto& [a, e] : m.factors()) {
        if (!a.isBase()) continue;
        auto all = detail::splitsFor(e, d);
        std::vector<detail::Split> ok;
        for (auto& s : all) {
            bool allowed = true;
            for (int l = 1; l <= d && allowed; ++l)
                if (s.lambda[static_cast<std::size_t>(l - 1)] > 0 && mask.zero(a.derived(l))) allowed = false;
            if (allowed) ok.push_back(std::move(s));
        }
        slots.push_back(Slot{a, e, std::move(ok)});
    }

    std::vector<int> eps(static_cast<std::size_t>(d), 0);
    std::vector<const detail::Split*> chosen(slots.size(), nullptr);
    std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t count) {
        if (i == slots.size()) {
            Monomial r = m;
            for (std::size_t j = 0; j < slots.size(); ++j) {
                const auto* s = chosen[j];
                if (s->used == 0) continue;
                r.multiplyBy(slots[j].atom, -s->used);
                for (int l = 1; l <= d; ++l) {
                    const int lam = s->lambda[static_cast<std::size_t>(l - 1)];
                    if (lam) r.multiplyBy(slots[j].atom.derived(l), lam);
                }
            }
            cb(MultiIndex(eps), count, r);
            return;
        }
        for (const auto& s : slots[i].splits) {
            chosen[i] = &s;
            for (int l = 0; l < d; ++l) eps[static_cast<std::size_t>(l)] += s.lambda[static_cast<std::size_t>(l)];
            rec(i + 1, count * s.count);
            for (int l = 0; l < d; ++l) eps[static_cast<std::size_t>(l)] -= s.lambda[static_cast<std::size_t>(l)];
        }
    };
    rec(0, 1);
}

/// D^eps_x p / eps! computed by the Leibniz enumeration.
inline SymPoly leibnizTerm(const SymPoly& p, const MultiIndex& eps, const AtomMask& mask = AtomMask::none()) {
    SymPoly r;
    for (const auto& [m, c] : p.terms()) {
        forEachLeibnizTerm(m, eps.dim(), mask, [&](const MultiIndex& e, std::uint64_t count, const Monomial& res) {
            if (e == eps) r.add(res, c * Rational(count));
        });
    }
    return r;
}

/// Generates d_0, d_1, ... for one recursion operator and atom mask,
/// memoized across orders.
class SeriesGenerator {
public:
    explicit SeriesGenerator(RecursionOperator op, AtomMask mask = AtomMask::none())
        : op_(std::move(op)), mask_(std::move(mask)) {
        terms_.push_back(SymPoly::one());
    }

    int dimension() const { return op_.dimension(); }

    /// L[f] for the configured operator.
    SymPoly apply(const SymPoly& f) const {
        const int d = op_.dimension();
        std::map<MultiIndex, std::vector<RecursionOperator::Multiplier>> cache;
        SymPoly out;
        for (const auto& [m, c] : f.terms()) {
            forEachLeibnizTerm(m, d, mask_, [&](const MultiIndex& eps, std::uint64_t count, const Monomial& res) {
                auto it = cache.find(eps);
                if (it == cache.end()) {
                    auto mult = op_.multipliers(eps);
                    std::erase_if(mult, [&](const auto& mu) { return mask_.zero(mu.atom); });
                    it = cache.emplace(eps, std::move(mult)).first;
                }
                if (it->second.empty()) return;
                const Rational base = c * Rational(count);
                for (const auto& mu : it->second) out.add(res.times(mu.atom), base * mu.weight);
            });
        }
        return out;
    }

    /// d_0 ... d_K.
    const std::vector<SymPoly>& upTo(int K) {
        if (K < 0) throw std::invalid_argument("SeriesGenerator: negative order");
        while (static_cast<int>(terms_.size()) <= K) {
            const int k = static_cast<int>(terms_.size()) - 1;
            SymPoly next = apply(terms_.back());
            next *= Rational(1, k + 1);
            terms_.push_back(std::move(next));
        }
        return terms_;
    }

    const SymPoly& term(int k) { return upTo(k)[static_cast<std::size_t>(k)]; }

private:
    RecursionOperator op_;
    AtomMask mask_;
    std::vector<SymPoly> terms_;
};

/// d_0 ... d_K of the plain symbol series in dimension d.
inline std::vector<SymPoly> dSeries(int d, int K) {
    SeriesGenerator g(RecursionOperator::plain(d));
    return g.upTo(K);
}

/// Checks the M_k constraints on every monomial of d_k: total degree k and
/// slope count >= count of derived base atoms. Returns offending monomials.
inline std::vector<Monomial> membershipViolations(const SymPoly& dk, int k) {
    std::vector<Monomial> bad;
    for (const auto& [m, c] : dk.terms())
        if (m.totalDegree() != k || m.slopeCount() < m.derivedBaseCount()) bad.push_back(m);
    return bad;
}

/// Layout mapping monomial (plain sigma atoms) -> exponent pair of order k.
/// Returns nullopt if the monomial has no image (foreign atoms, derivative
/// order >= k).
inline std::optional<ExponentPair> toExponentPair(const Monomial& m, int d, int k, const GradedIndexSet& slots) {
    ExponentPair p = ExponentPair::zeros(d, k);
    for (const auto& [a, e] : m.factors()) {
        if (a.family() != Family::Sigma || a.dim() != d || a.order() >= k) return std::nullopt;
        const auto slot = slots.indexOf(a.eps());
        if (a.isBase())
            p.alpha[slot] += e;
        else
            p.betaAt(slot, a.slope()) += e;
    }
    return p;
}

/// Inverse of toExponentPair.
inline Monomial fromExponentPair(const ExponentPair& p, const GradedIndexSet& slots) {
    Monomial m;
    for (std::size_t s = 0; s < p.alpha.size(); ++s) {
        const MultiIndex& eps = slots.at(s);
        if (p.alpha[s]) m.multiplyBy(AtomKey::base(eps), p.alpha[s]);
        for (int l = 1; l <= p.d; ++l)
            if (p.betaAt(s, l)) m.multiplyBy(AtomKey::slope(l, eps), p.betaAt(s, l));
    }
    return m;
}

using CoefficientTable = std::unordered_map<ExponentPair, Rational, ExponentPairHash>;

/// c_(alpha, beta) for k = 1..K by the closed-form pull recursion on exponent
/// pairs: for a target pair of order k+1, every slot n with alpha_n >= 1 may
/// host the newest base atom D^{eps_n} sigma; lambda redistributes eps_n's
/// derivatives over the slope exponents and
///
///   c_target = 1/(k+1) sum_n sum_lambda prod_j multinomial(a_j; lambda_j) c_source,
///   a = Pi(alpha - 1_n) + |lambda|,  source beta = Pi(beta - lambda).
///
/// Candidate targets are those reachable from members of row k; every value
/// is then computed by the pull formula from row k alone.
inline std::vector<CoefficientTable> coefficientRecursion(int d, int K) {
    if (d < 1) throw std::invalid_argument("coefficientRecursion: d >= 1 required");
    if (K < 1) throw std::invalid_argument("coefficientRecursion: K >= 1 required");
    const GradedIndexSet slots(d, K);
    std::vector<CoefficientTable> rows(static_cast<std::size_t>(K) + 1);
    {
        ExponentPair p = ExponentPair::zeros(d, 1);
        p.alpha[0] = 1;
        rows[1].emplace(p, Rational(1));
    }

    for (int k = 1; k < K; ++k) {
        const auto& prev = rows[static_cast<std::size_t>(k)];
        const std::size_t nPrev = slots.slotsBelow(k);
        const std::size_t nNext = slots.slotsBelow(k + 1);

        // Reachable targets.
        std::vector<ExponentPair> targets;
        {
            std::unordered_map<ExponentPair, bool, ExponentPairHash> seen;
            for (const auto& [src, c] : prev) {
                Monomial m = fromExponentPair(src, slots);
                forEachLeibnizTerm(m, d, AtomMask::none(), [&](const MultiIndex& eps, std::uint64_t, const Monomial& r) {
                    auto p = toExponentPair(r.times(AtomKey::base(eps)), d, k + 1, slots);
                    if (p && !seen.count(*p)) {
                        seen.emplace(*p, true);
                        targets.push_back(*p);
                    }
                });
            }
        }

        auto& next = rows[static_cast<std::size_t>(k) + 1];
        for (const auto& tgt : targets) {
            Rational sum = 0;
            for (std::size_t n = 0; n < nNext; ++n) {
                if (tgt.alpha[n] < 1) continue;
                const MultiIndex& epsN = slots.at(n);
                ExponentPair reduced = shift(tgt, n, -1);
                // Source must vanish on the order-k slots after removing the new atom.
                bool tailOk = true;
                for (std::size_t s = nPrev; s < nNext && tailOk; ++s) {
                    if (reduced.alpha[s] != 0) tailOk = false;
                    for (int l = 1; l <= d; ++l)
                        if (reduced.betaAt(s, l) != 0) tailOk = false;
                }
                if (!tailOk) continue;
                ExponentPair base = project(reduced, k);

                // lambda[s][l] <= beta[s][l], sum_s lambda[s][l] = epsN[l].
                std::vector<int> lam(nPrev * static_cast<std::size_t>(d), 0);
                std::function<void(int, std::size_t, int)> rec = [&](int l, std::size_t s, int left) {
                    if (l > d) {
                        ExponentPair src = base;
                        Rational w = 1;
                        for (std::size_t j = 0; j < nPrev; ++j) {
                            int lamSum = 0;
                            for (int ll = 1; ll <= d; ++ll) {
                                const int v = lam[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(ll - 1)];
                                lamSum += v;
                                src.betaAt(j, ll) -= v;
                            }
                            src.alpha[j] += lamSum;
                            // multinomial(a_j; lambda_j1..lambda_jd, a_j - |lambda_j|)
                            int rem = src.alpha[j];
                            for (int ll = 1; ll <= d; ++ll) {
                                const int v = lam[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(ll - 1)];
                                w *= Rational(binomial(rem, v));
                                rem -= v;
                            }
                        }
                        auto it = prev.find(src);
                        if (it != prev.end()) sum += w * it->second;
                        return;
                    }
                    if (s == nPrev) {
                        if (left == 0) rec(l + 1, 0, l + 1 <= d ? epsN[l] : 0);
                        return;
                    }
                    const int cap = std::min(left, base.betaAt(s, l));
                    for (int v = 0; v <= cap; ++v) {
                        lam[s * static_cast<std::size_t>(d) + static_cast<std::size_t>(l - 1)] = v;
                        rec(l, s + 1, left - v);
                    }
                    lam[s * static_cast<std::size_t>(d) + static_cast<std::size_t>(l - 1)] = 0;
                };
                rec(1, 0, epsN[0]);
            }
            sum /= Rational(k + 1);
            if (sum != 0) next.emplace(tgt, sum);
        }
    }
    return rows;
}

struct CrossCheckReport {
    bool ok = true;
    std::vector<std::string> mismatches;
    std::vector<std::string> structuralErrors;
};

/// Compares the monomial coefficients of d_k with c_(alpha, beta) row k.
inline CrossCheckReport crossCheck(const std::vector<SymPoly>& d, const std::vector<CoefficientTable>& c, int k,
                                   int dim) {
    if (k < 1 || k >= static_cast<int>(d.size()) || k >= static_cast<int>(c.size()))
        throw std::invalid_argument("crossCheck: order " + std::to_string(k) + " not computed on both sides");
    CrossCheckReport rep;
    const GradedIndexSet slots(dim, k);
    const auto& row = c[static_cast<std::size_t>(k)];
    std::size_t matched = 0;
    for (const auto& [m, coef] : d[static_cast<std::size_t>(k)].terms()) {
        auto p = toExponentPair(m, dim, k, slots);
        if (!p) {
            rep.ok = false;
            rep.structuralErrors.push_back("monomial " + m.str() + " has no exponent-pair image");
            continue;
        }
        auto it = row.find(*p);
        const Rational other = it == row.end() ? Rational(0) : it->second;
        if (it != row.end()) ++matched;
        if (other != coef) {
            rep.ok = false;
            rep.mismatches.push_back(p->str() + ": series " + toString(coef) + " vs recursion " + toString(other));
        }
    }
    if (matched != row.size()) {
        for (const auto& [p, coef] : row) {
            if (d[static_cast<std::size_t>(k)].coefficient(fromExponentPair(p, slots)) == 0) {
                rep.ok = false;
                rep.mismatches.push_back(p.str() + ": series 0 vs recursion " + toString(coef));
            }
        }
    }
    return rep;
}

/// Rows Pi^n_m of the counting triangle, m = n down to the lowest spatial
/// order present, with row sums R_n.
struct CountingTriangle {
    std::vector<std::vector<BigInt>> rows;  // rows[n-1]
    std::vector<BigInt> rowSums;

    const std::vector<BigInt>& row(int n) const { return rows.at(static_cast<std::size_t>(n - 1)); }
};

/// Counts the terms of d_n by spatial order: each base atom contributes
/// spatial order 1, each slope atom 0, and a monomial with coefficient c
/// stands for n! c Leibniz terms.
inline CountingTriangle countingTriangle(int maxRow) {
    if (maxRow < 1) throw std::invalid_argument("countingTriangle: maxRow >= 1 required");
    SeriesGenerator g(RecursionOperator::plain(1));
    const auto& d = g.upTo(maxRow);
    CountingTriangle t;
    for (int n = 1; n <= maxRow; ++n) {
        std::map<int, Rational, std::greater<>> bySpatial;
        for (const auto& [m, c] : d[static_cast<std::size_t>(n)].terms()) bySpatial[m.baseCount()] += c;
        const Rational nf(factorialBig(n));
        std::vector<BigInt> row;
        BigInt sum = 0;
        for (auto& [order, c] : bySpatial) {
            const Rational v = c * nf;
            if (boost::multiprecision::denominator(v) != 1)
                throw std::logic_error("countingTriangle: non-integer term count");
            row.push_back(boost::multiprecision::numerator(v));
            sum += row.back();
        }
        t.rows.push_back(std::move(row));
        t.rowSums.push_back(sum);
    }
    return t;
}

/// The two-index recursion Pi^n_n = 1,
/// Pi^n_{n-k} = sum_{l=0}^{k} C(n-1-l, k-l) Pi^{n-1}_{k-1-l},
/// evaluated literally with undefined entries (column index outside 1..n-1)
/// read as 0. Rows listed from column n down to 1.
inline std::vector<std::vector<BigInt>> countingRecursionLiteral(int maxRow) {
    std::vector<std::vector<BigInt>> pi;  // pi[n][m], m in 0..n
    pi.push_back({BigInt(0)});
    for (int n = 1; n <= maxRow; ++n) {
        std::vector<BigInt> row(static_cast<std::size_t>(n) + 1, 0);
        row[static_cast<std::size_t>(n)] = 1;
        for (int k = 1; k < n; ++k) {
            BigInt s = 0;
            for (int l = 0; l <= k; ++l) {
                const int col = k - 1 - l;
                if (col < 1 || col > n - 1) continue;
                s += BigInt(binomial(n - 1 - l, k - l)) * pi[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(col)];
            }
            row[static_cast<std::size_t>(n - k)] = s;
        }
        pi.push_back(std::move(row));
    }
    std::vector<std::vector<BigInt>> out;
    for (int n = 1; n <= maxRow; ++n) {
        std::vector<BigInt> r;
        for (int m = n; m >= 1; --m) r.push_back(pi[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)]);
        out.push_back(std::move(r));
    }
    return out;
}

/// Row-by-row differences between the grouped triangle and the literal
/// recursion, one line per differing row.
inline std::vector<std::string> countingDiscrepancies(int maxRow) {
    const auto grouped = countingTriangle(maxRow);
    const auto literal = countingRecursionLiteral(maxRow);
    auto fmt = [](const std::vector<BigInt>& r) {
        std::string s = "[";
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i].str();
        return s + "]";
    };
    std::vector<std::string> out;
    for (int n = 1; n <= maxRow; ++n) {
        const auto& g = grouped.row(n);
        const auto& l = literal[static_cast<std::size_t>(n - 1)];
        if (g != l) out.push_back("row " + std::to_string(n) + ": grouped " + fmt(g) + " vs recursion " + fmt(l));
    }
    return out;
}

struct CardinalityBound {
    BigInt termCount;
    BigInt bound;
    bool holds() const { return termCount <= bound; }
};

/// R_k (row sum of the counting triangle) against k!.
inline CardinalityBound cardinalityBound(int k) {
    if (k < 1) throw std::invalid_argument("cardinalityBound: k >= 1 required");
    const auto t = countingTriangle(k);
    return {t.rowSums.back(), factorialBig(k)};
}

/// Number of k-tuples of nonnegative integers with sum j, by enumeration.
inline std::uint64_t lambdaSumCardinality(int j, int k) {
    if (k < 1 || j < 0) throw std::invalid_argument("lambdaSumCardinality: need k >= 1, j >= 0");
    std::uint64_t n = 0;
    std::function<void(int, int)> rec = [&](int slot, int left) {
        if (slot == k - 1) {
            ++n;
            return;
        }
        for (int v = 0; v <= left; ++v) rec(slot + 1, left - v);
    };
    rec(0, j);
    return n;
}

/// Floating-point form of a polynomial for repeated numeric substitution.
struct CompiledPoly {
    struct Term {
        double coefficient;
        std::vector<std::pair<std::uint32_t, int>> powers;  // (atom slot, exponent)
    };
    std::vector<Term> terms;
};

/// Atom list shared by several compiled polynomials.
class AtomIndex {
public:
    std::uint32_t slotOf(const AtomKey& a) {
        auto [it, inserted] = idx_.try_emplace(a.code(), static_cast<std::uint32_t>(atoms_.size()));
        if (inserted) atoms_.push_back(a);
        return it->second;
    }
    const std::vector<AtomKey>& atoms() const { return atoms_; }

private:
    std::unordered_map<std::uint64_t, std::uint32_t> idx_;
    std::vector<AtomKey> atoms_;
};

inline CompiledPoly compile(const SymPoly& p, AtomIndex& index) {
    CompiledPoly cp;
    for (const auto& [m, c] : p.sorted()) {
        CompiledPoly::Term t{toDouble(c), {}};
        for (const auto& [a, e] : m.factors()) t.powers.emplace_back(index.slotOf(a), e);
        cp.terms.push_back(std::move(t));
    }
    return cp;
}

inline std::complex<double> evaluate(const CompiledPoly& p, const std::vector<std::complex<double>>& atomValues) {
    std::complex<double> s = 0.0;
    for (const auto& t : p.terms) {
        std::complex<double> v = t.coefficient;
        for (const auto& [slot, e] : t.powers) {
            const std::complex<double> a = atomValues[slot];
            for (int i = 0; i < e; ++i) v *= a;
        }
        s += v;
    }
    return s;
}

/// JSON dump of d_0..d_K: [{"k":k,"terms":[{"monomial":..,"num":..,"den":..}]}].
inline nlohmann::json seriesToJson(const std::vector<SymPoly>& d) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t k = 0; k < d.size(); ++k) {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& [m, c] : d[k].sorted())
            terms.push_back({{"monomial", m.str()},
                             {"num", boost::multiprecision::numerator(c).str()},
                             {"den", boost::multiprecision::denominator(c).str()}});
        out.push_back({{"k", k}, {"terms", std::move(terms)}});
    }
    return out;
}

/// Row k of a coefficient table sorted for stable output.
inline std::vector<std::pair<ExponentPair, Rational>> sortedRow(const CoefficientTable& row) {
    std::vector<std::pair<ExponentPair, Rational>> v(row.begin(), row.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    return v;
}

}  // namespace affinecf
