#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace affinecf {

/// Truncated Taylor expansion c_0 + c_1 h + ... + c_K h^K of a real scalar
/// function about a base point. Arithmetic stays at the fixed order K.
class Jet {
public:
    explicit Jet(int order = 0) : c_(static_cast<std::size_t>(order) + 1, 0.0) {}
    Jet(int order, double constant) : Jet(order) { c_[0] = constant; }
    explicit Jet(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) throw std::invalid_argument("Jet: need at least one coefficient");
    }

    /// The identity function about `at`: at + h.
    static Jet variable(int order, double at) {
        Jet j(order, at);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& coefficients() const { return c_; }

    /// Value of the truncated polynomial at offset h.
    double eval(double h) const {
        double s = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * h + *it;
        return s;
    }

    Jet operator+(const Jet& o) const {
        check(o);
        Jet r(*this);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
        return r;
    }
    Jet operator-(const Jet& o) const {
        check(o);
        Jet r(*this);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
        return r;
    }
    Jet operator*(double s) const {
        Jet r(*this);
        for (auto& v : r.c_) v *= s;
        return r;
    }
    Jet operator*(const Jet& o) const {
        check(o);
        Jet r(order());
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; i + j < c_.size(); ++j) r.c_[i + j] += c_[i] * o.c_[j];
        return r;
    }

    /// 1/f, requires f(0) != 0.
    Jet reciprocal() const {
        if (c_[0] == 0.0) throw std::domain_error("Jet: reciprocal of a jet with zero constant term");
        Jet r(order());
        r.c_[0] = 1.0 / c_[0];
        for (std::size_t n = 1; n < c_.size(); ++n) {
            double s = 0.0;
            for (std::size_t k = 1; k <= n; ++k) s += c_[k] * r.c_[n - k];
            r.c_[n] = -s / c_[0];
        }
        return r;
    }

    Jet pow(int m) const {
        if (m < 0) return reciprocal().pow(-m);
        Jet r(order(), 1.0), b(*this);
        while (m) {
            if (m & 1) r = r * b;
            b = b * b;
            m >>= 1;
        }
        return r;
    }

    /// Antiderivative vanishing at the base point (order preserved, top term dropped).
    Jet integral() const {
        Jet r(order());
        for (std::size_t i = 1; i < c_.size(); ++i) r.c_[i] = c_[i - 1] / static_cast<double>(i);
        return r;
    }

private:
    void check(const Jet& o) const {
        if (o.c_.size() != c_.size()) throw std::invalid_argument("Jet: order mismatch");
    }
    std::vector<double> c_;
};

/// Jets of cos(w (tau0 + h)) and sin(w (tau0 + h)) in h.
inline Jet cosJet(double w, double tau0, int order) {
    Jet j(order);
    double f = 1.0;
    for (int n = 0; n <= order; ++n) {
        if (n) f *= w / n;
        // n-th derivative of cos(w tau) is w^n cos(w tau + n pi/2)
        j[n] = f * std::cos(w * tau0 + n * std::numbers::pi / 2);
    }
    return j;
}

inline Jet sinJet(double w, double tau0, int order) {
    Jet j(order);
    double f = 1.0;
    for (int n = 0; n <= order; ++n) {
        if (n) f *= w / n;
        j[n] = f * std::sin(w * tau0 + n * std::numbers::pi / 2);
    }
    return j;
}

}  // namespace affinecf
