#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace affinecf {

/// Binomial coefficient C(n, k) in 64-bit arithmetic; zero outside 0 <= k <= n.
inline std::uint64_t binomial(long n, long k) {
    if (n < 0 || k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (long i = 1; i <= k; ++i) {
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return r;
}

/// A d-dimensional multi-index (eps_1, ..., eps_d) with nonnegative entries.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {
        for (int v : e_) {
            if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
        }
    }

    static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(static_cast<std::size_t>(d), 0)); }
    static MultiIndex unit(int d, int r) {
        std::vector<int> e(static_cast<std::size_t>(d), 0);
        e.at(static_cast<std::size_t>(r)) = 1;
        return MultiIndex(std::move(e));
    }

    int dim() const { return static_cast<int>(e_.size()); }
    int order() const { return std::accumulate(e_.begin(), e_.end(), 0); }
    int operator[](int r) const { return e_[static_cast<std::size_t>(r)]; }
    const std::vector<int>& entries() const { return e_; }

    /// eps! = prod_r eps_r!
    double factorial() const {
        double f = 1.0;
        for (int v : e_)
            for (int i = 2; i <= v; ++i) f *= i;
        return f;
    }

    MultiIndex operator+(const MultiIndex& o) const {
        check_dim(o);
        std::vector<int> e(e_);
        for (std::size_t r = 0; r < e.size(); ++r) e[r] += o.e_[r];
        return MultiIndex(std::move(e));
    }

    /// Componentwise difference; throws if any entry would become negative.
    MultiIndex operator-(const MultiIndex& o) const {
        check_dim(o);
        std::vector<int> e(e_);
        for (std::size_t r = 0; r < e.size(); ++r) e[r] -= o.e_[r];
        return MultiIndex(std::move(e));
    }

    bool dominates(const MultiIndex& o) const {
        check_dim(o);
        for (std::size_t r = 0; r < e_.size(); ++r)
            if (e_[r] < o.e_[r]) return false;
        return true;
    }

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;

    std::string str() const {
        std::string s = "(";
        for (std::size_t r = 0; r < e_.size(); ++r) {
            if (r) s += ",";
            s += std::to_string(e_[r]);
        }
        return s + ")";
    }

private:
    void check_dim(const MultiIndex& o) const {
        if (o.e_.size() != e_.size()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    }
    std::vector<int> e_;
};

inline std::ostream& operator<<(std::ostream& os, const MultiIndex& m) { return os << m.str(); }

struct MultiIndexHash {
    std::size_t operator()(const MultiIndex& m) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ull;
        for (int v : m.entries()) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ull;
        return h;
    }
};

/// All multi-indices of one dimension and one order, in descending
/// lexicographic order within the degree: (2,0), (1,1), (0,2).
struct Enumeration {
    int dimension = 1;
    int order = 0;
    std::vector<MultiIndex> indices;

    std::size_t size() const { return indices.size(); }
};

namespace detail {
inline void enumerate_into(int d, int remaining, std::size_t pos, std::vector<int>& cur,
                           std::vector<MultiIndex>& out) {
    if (pos + 1 == static_cast<std::size_t>(d)) {
        cur[pos] = remaining;
        out.emplace_back(cur);
        return;
    }
    for (int v = remaining; v >= 0; --v) {
        cur[pos] = v;
        enumerate_into(d, remaining - v, pos + 1, cur, out);
    }
}
}  // namespace detail

inline Enumeration enumerate(int d, int k) {
    if (d < 1) throw std::invalid_argument("enumerate: dimension must be >= 1");
    if (k < 0) throw std::invalid_argument("enumerate: order must be >= 0");
    Enumeration en{d, k, {}};
    en.indices.reserve(binomial(k + d - 1, d - 1));
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    detail::enumerate_into(d, k, 0, cur, en.indices);
    return en;
}

/// Multi-indices of all orders 0..maxOrder, concatenated by order. Flat
/// positions are the "slots" of the exponent-pair layout.
class GradedIndexSet {
public:
    GradedIndexSet(int d, int maxOrder) : d_(d) {
        offsets_.push_back(0);
        for (int k = 0; k <= maxOrder; ++k) {
            auto en = enumerate(d, k);
            for (auto& m : en.indices) {
                lookup_.emplace(m, all_.size());
                all_.push_back(std::move(m));
            }
            offsets_.push_back(all_.size());
        }
    }

    int dimension() const { return d_; }
    int maxOrder() const { return static_cast<int>(offsets_.size()) - 2; }
    std::size_t size() const { return all_.size(); }
    const MultiIndex& at(std::size_t slot) const { return all_.at(slot); }
    const std::vector<MultiIndex>& all() const { return all_; }

    /// Number of slots with order < k.
    std::size_t slotsBelow(int k) const { return offsets_.at(static_cast<std::size_t>(k)); }

    std::size_t indexOf(const MultiIndex& m) const {
        auto it = lookup_.find(m);
        if (it == lookup_.end()) throw std::out_of_range("GradedIndexSet: index " + m.str() + " not present");
        return it->second;
    }
    bool contains(const MultiIndex& m) const { return lookup_.count(m) != 0; }

private:
    int d_;
    std::vector<MultiIndex> all_;
    std::vector<std::size_t> offsets_;
    std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> lookup_;
};

/// Exponent data (alpha, beta) of one series monomial of time order k.
///
/// alpha has one entry per multi-index of order < k (univariate: slots
/// 0..k-1 are derivative orders); beta stores d entries per slot, slot-major
/// (beta[slot * d + (l - 1)] is the exponent of the l-th slope atom). Negative
/// entries are representable; such pairs are never members of M_k.
struct ExponentPair {
    int k = 0;
    int d = 1;
    std::vector<int> alpha;
    std::vector<int> beta;

    static std::size_t slotCount(int d, int k) {
        std::size_t n = 0;
        for (int o = 0; o < k; ++o) n += binomial(o + d - 1, d - 1);
        return n;
    }

    static ExponentPair zeros(int d, int k) {
        const auto n = slotCount(d, k);
        return ExponentPair{k, d, std::vector<int>(n, 0), std::vector<int>(n * static_cast<std::size_t>(d), 0)};
    }

    /// Univariate convenience constructor: alpha and beta both of length k.
    static ExponentPair univariate(std::vector<int> alpha, std::vector<int> beta) {
        if (alpha.size() != beta.size()) throw std::invalid_argument("ExponentPair: alpha/beta length mismatch");
        const int k = static_cast<int>(alpha.size());
        return ExponentPair{k, 1, std::move(alpha), std::move(beta)};
    }

    bool wellFormed() const {
        const auto n = slotCount(d, k);
        return alpha.size() == n && beta.size() == n * static_cast<std::size_t>(d);
    }

    bool hasNegative() const {
        return std::any_of(alpha.begin(), alpha.end(), [](int v) { return v < 0; }) ||
               std::any_of(beta.begin(), beta.end(), [](int v) { return v < 0; });
    }

    int& betaAt(std::size_t slot, int l) { return beta[slot * static_cast<std::size_t>(d) + static_cast<std::size_t>(l - 1)]; }
    int betaAt(std::size_t slot, int l) const {
        return beta[slot * static_cast<std::size_t>(d) + static_cast<std::size_t>(l - 1)];
    }

    auto operator<=>(const ExponentPair&) const = default;
    bool operator==(const ExponentPair&) const = default;

    std::string str() const {
        auto tup = [](const std::vector<int>& v) {
            std::string s = "(";
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
            return s + ")";
        };
        return "(" + tup(alpha) + "," + tup(beta) + ")";
    }
};

struct ExponentPairHash {
    std::size_t operator()(const ExponentPair& p) const noexcept {
        std::size_t h = static_cast<std::size_t>(p.k) * 1315423911u + static_cast<std::size_t>(p.d);
        for (int v : p.alpha) h = (h ^ static_cast<std::size_t>(v + 7)) * 0x100000001b3ull;
        for (int v : p.beta) h = (h ^ static_cast<std::size_t>(v + 13)) * 0x100000001b3ull;
        return h;
    }
};

/// Truncates alpha/beta to the slots of derivative order < targetOrder.
inline ExponentPair project(const ExponentPair& pair, int targetOrder) {
    if (targetOrder > pair.k || targetOrder < 0)
        throw std::invalid_argument("project: targetOrder " + std::to_string(targetOrder) + " outside [0, " +
                                    std::to_string(pair.k) + "]");
    const auto n = ExponentPair::slotCount(pair.d, targetOrder);
    ExponentPair out{targetOrder, pair.d, {}, {}};
    out.alpha.assign(pair.alpha.begin(), pair.alpha.begin() + static_cast<std::ptrdiff_t>(n));
    out.beta.assign(pair.beta.begin(), pair.beta.begin() + static_cast<std::ptrdiff_t>(n * static_cast<std::size_t>(pair.d)));
    return out;
}

/// alpha + delta * 1_position.
inline ExponentPair shift(ExponentPair pair, std::size_t position, int delta) {
    pair.alpha.at(position) += delta;
    return pair;
}

/// beta + delta * 1_(position, l).
inline ExponentPair shiftBeta(ExponentPair pair, std::size_t position, int l, int delta) {
    if (l < 1 || l > pair.d) throw std::out_of_range("shiftBeta: slope index out of range");
    pair.betaAt(position, l) += delta;
    return pair;
}

/// Membership in M_k (univariate) / M^k_d (multivariate).
///
/// Besides nonnegativity, total degree k and the beta-dominance inequality,
/// every monomial produced by the series recursion balances derivative
/// weight against slope count in each direction r:
///   sum_j eps_{j,r} (alpha_j + sum_l beta_{j,l}) = sum_j beta_{j,r}.
inline bool isMember(const ExponentPair& pair) {
    if (!pair.wellFormed() || pair.k < 1 || pair.hasNegative()) return false;
    const int d = pair.d;
    long total = 0, betaSum = 0, derivedAlpha = 0;
    std::vector<long> weight(static_cast<std::size_t>(d), 0), slopes(static_cast<std::size_t>(d), 0);
    std::size_t slot = 0;
    for (int o = 0; o < pair.k; ++o) {
        for (const auto& eps : enumerate(d, o).indices) {
            long atoms = pair.alpha[slot];
            total += pair.alpha[slot];
            if (o >= 1) derivedAlpha += pair.alpha[slot];
            for (int l = 1; l <= d; ++l) {
                const int b = pair.betaAt(slot, l);
                total += b;
                betaSum += b;
                atoms += b;
                slopes[static_cast<std::size_t>(l - 1)] += b;
            }
            for (int r = 0; r < d; ++r) weight[static_cast<std::size_t>(r)] += static_cast<long>(eps[r]) * atoms;
            ++slot;
        }
    }
    return total == pair.k && betaSum >= derivedAlpha && weight == slopes;
}

}  // namespace affinecf
