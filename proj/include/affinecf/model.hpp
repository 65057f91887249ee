#pragma once

// Affine model data: diffusion, drift and jump coefficients that are affine in
// the state, plus the JSON model-file format.
//
//   a(x) = a0 + sum_l x_l aSlope[l-1]
//   b(x) = b0 + bSlope x            (bSlope(i, l-1) = b_il)
//   nu(x, dz) = nu_0(dz) + sum_l x_l nu_l(dz)   (jumps[0], jumps[l])

#include "errors.hpp"
#include "multiindex.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace affinecf {

using cd = std::complex<double>;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// How the small-jump compensator -iu.z 1_D(z) is handled.
enum class Truncation {
    NoCompensation,  ///< finite activity; no compensator term
    UnitBall,        ///< D = {|z| <= 1}; only for user-supplied jump parts
};

struct NoJumps {};

/// Compound Poisson with N(mean, covariance) jump sizes.
struct GaussianJumps {
    double intensity = 0.0;
    VectorXd mean;
    MatrixXd covariance;
};

/// Compound Poisson with independent one-sided exponential jump sizes per
/// coordinate; rate 0 means the coordinate does not jump.
struct ExponentialJumps {
    double intensity = 0.0;
    VectorXd rates;
};

/// User-supplied jump part: derivative(eps, xi) must return D^eps_xi of the
/// jump term of the symbol (compensator included, per the model truncation)
/// at complex xi, for |eps| <= maxOrder. Not serializable.
struct UserJump {
    int maxOrder = 0;
    std::function<cd(const MultiIndex&, const VectorXcd&)> derivative;
    std::string label = "user";
};

using JumpSpec = std::variant<NoJumps, GaussianJumps, ExponentialJumps, UserJump>;

inline bool hasJumps(const JumpSpec& j) {
    if (std::holds_alternative<NoJumps>(j)) return false;
    if (auto g = std::get_if<GaussianJumps>(&j)) return g->intensity != 0.0;
    if (auto e = std::get_if<ExponentialJumps>(&j)) return e->intensity != 0.0;
    return true;
}

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct AffineModel {
    int dimension = 1;
    MatrixXd a0;
    std::vector<MatrixXd> aSlope;
    VectorXd b0;
    MatrixXd bSlope;
    std::vector<JumpSpec> jumps;  // d + 1 entries
    Truncation truncation = Truncation::NoCompensation;
    std::vector<Interval> stateDomain;
    std::string name;

    /// All-zero model of dimension d on R^d.
    static AffineModel zero(int d) {
        AffineModel m;
        m.dimension = d;
        m.a0 = MatrixXd::Zero(d, d);
        m.aSlope.assign(static_cast<std::size_t>(d), MatrixXd::Zero(d, d));
        m.b0 = VectorXd::Zero(d);
        m.bSlope = MatrixXd::Zero(d, d);
        m.jumps.assign(static_cast<std::size_t>(d) + 1, NoJumps{});
        m.stateDomain.assign(static_cast<std::size_t>(d), Interval{});
        return m;
    }

    bool domainBounded() const {
        for (const auto& iv : stateDomain)
            if (!iv.bounded()) return false;
        return true;
    }

    bool inDomain(const VectorXd& x) const {
        for (int i = 0; i < dimension; ++i)
            if (!stateDomain[static_cast<std::size_t>(i)].contains(x(i))) return false;
        return true;
    }

    /// All slope coefficients (diffusion, drift, jumps) vanish.
    bool isLevy() const {
        for (const auto& s : aSlope)
            if (!s.isZero(0.0)) return false;
        if (!bSlope.isZero(0.0)) return false;
        for (std::size_t l = 1; l < jumps.size(); ++l)
            if (hasJumps(jumps[l])) return false;
        return true;
    }

    /// Shape checks, symmetry, jump-family constraints, sampled
    /// semiellipticity and jump-intensity nonnegativity on the state domain.
    void validate() const;
};

namespace detail {

inline void checkShape(const MatrixXd& m, int rows, int cols, const std::string& path) {
    if (m.rows() != rows || m.cols() != cols)
        throw ModelError(path, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    if (!m.allFinite()) throw ModelError(path, "non-finite entry");
}

inline void checkSymmetric(const MatrixXd& m, const std::string& path) {
    if (!m.isApprox(m.transpose(), 1e-12) && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ModelError(path, "matrix must be symmetric");
}

/// Sample points of the state domain: box corners (infinite sides replaced by
/// +-1e6 or a finite bound +-1e6) and pseudo-random interior points.
inline std::vector<VectorXd> domainSamples(const AffineModel& m, int interior = 64) {
    const int d = m.dimension;
    std::vector<std::pair<double, double>> box;
    for (const auto& iv : m.stateDomain) {
        double lo = std::isfinite(iv.lo) ? iv.lo : (std::isfinite(iv.hi) ? iv.hi - 1e6 : -1e6);
        double hi = std::isfinite(iv.hi) ? iv.hi : (std::isfinite(iv.lo) ? iv.lo + 1e6 : 1e6);
        box.emplace_back(lo, hi);
    }
    std::vector<VectorXd> pts;
    if (d <= 10) {
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            VectorXd x(d);
            for (int i = 0; i < d; ++i) x(i) = (mask >> i) & 1u ? box[static_cast<std::size_t>(i)].second : box[static_cast<std::size_t>(i)].first;
            pts.push_back(x);
        }
    }
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < interior; ++s) {
        VectorXd x(d);
        for (int i = 0; i < d; ++i) {
            const auto [lo, hi] = box[static_cast<std::size_t>(i)];
            x(i) = lo + (hi - lo) * U(rng);
        }
        pts.push_back(x);
    }
    return pts;
}

inline bool sameDistribution(const JumpSpec& a, const JumpSpec& b) {
    if (a.index() != b.index()) return false;
    if (auto ga = std::get_if<GaussianJumps>(&a)) {
        const auto& gb = std::get<GaussianJumps>(b);
        return ga->mean == gb.mean && ga->covariance == gb.covariance;
    }
    if (auto ea = std::get_if<ExponentialJumps>(&a)) return ea->rates == std::get<ExponentialJumps>(b).rates;
    return false;
}

inline double intensityOf(const JumpSpec& j) {
    if (auto g = std::get_if<GaussianJumps>(&j)) return g->intensity;
    if (auto e = std::get_if<ExponentialJumps>(&j)) return e->intensity;
    return 0.0;
}

}  // namespace detail

inline void AffineModel::validate() const {
    const int d = dimension;
    if (d < 1 || d > 8) throw ModelError("dimension", "must be in [1, 8]");
    detail::checkShape(a0, d, d, "a0");
    detail::checkSymmetric(a0, "a0");
    if (static_cast<int>(aSlope.size()) != d) throw ModelError("a_slope", "expected " + std::to_string(d) + " matrices");
    for (int l = 0; l < d; ++l) {
        const std::string p = "a_slope[" + std::to_string(l) + "]";
        detail::checkShape(aSlope[static_cast<std::size_t>(l)], d, d, p);
        detail::checkSymmetric(aSlope[static_cast<std::size_t>(l)], p);
    }
    if (b0.size() != d || !b0.allFinite()) throw ModelError("b0", "expected finite vector of length " + std::to_string(d));
    detail::checkShape(bSlope, d, d, "b_slope");
    if (static_cast<int>(jumps.size()) != d + 1) throw ModelError("jumps", "expected " + std::to_string(d + 1) + " entries");
    for (int c = 0; c <= d; ++c) {
        const std::string p = "jumps[" + std::to_string(c) + "]";
        const auto& j = jumps[static_cast<std::size_t>(c)];
        if (auto g = std::get_if<GaussianJumps>(&j)) {
            if (!std::isfinite(g->intensity)) throw ModelError(p + ".intensity", "non-finite");
            if (g->mean.size() != d || !g->mean.allFinite()) throw ModelError(p + ".mean", "expected finite vector of length " + std::to_string(d));
            detail::checkShape(g->covariance, d, d, p + ".covariance");
            detail::checkSymmetric(g->covariance, p + ".covariance");
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(g->covariance, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-12) throw ModelError(p + ".covariance", "must be positive semidefinite");
            if (truncation != Truncation::NoCompensation)
                throw ModelError("truncation", "closed-form jump families require truncation \"none\"");
        } else if (auto e = std::get_if<ExponentialJumps>(&j)) {
            if (!std::isfinite(e->intensity)) throw ModelError(p + ".intensity", "non-finite");
            if (e->rates.size() != d) throw ModelError(p + ".rates", "expected vector of length " + std::to_string(d));
            for (int r = 0; r < d; ++r)
                if (!(e->rates(r) >= 0.0) || !std::isfinite(e->rates(r)))
                    throw ModelError(p + ".rates[" + std::to_string(r) + "]", "rate must be finite and >= 0 (0 = no jumps)");
            if (truncation != Truncation::NoCompensation)
                throw ModelError("truncation", "closed-form jump families require truncation \"none\"");
        } else if (auto u = std::get_if<UserJump>(&j)) {
            if (!u->derivative) throw ModelError(p, "user jump without callback");
            if (u->maxOrder < 0) throw ModelError(p + ".maxOrder", "must be >= 0");
        }
    }
    if (static_cast<int>(stateDomain.size()) != d) throw ModelError("state_domain", "expected " + std::to_string(d) + " intervals");
    for (int i = 0; i < d; ++i) {
        const auto& iv = stateDomain[static_cast<std::size_t>(i)];
        if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
            throw ModelError("state_domain[" + std::to_string(i) + "]", "empty or invalid interval");
    }

    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(a0, Eigen::EigenvaluesOnly);
        bool noSlopes = true;
        for (const auto& s : aSlope) noSlopes = noSlopes && s.isZero();
        if (noSlopes && es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, a0.cwiseAbs().maxCoeff()))
            throw ModelError("a0", "not positive semidefinite");
    }
    // Semiellipticity and jump nonnegativity, sampled.
    for (const auto& x : detail::domainSamples(*this)) {
        MatrixXd a = a0;
        for (int l = 0; l < d; ++l) a += x(l) * aSlope[static_cast<std::size_t>(l)];
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
            std::ostringstream os;
            os << "a(x) is not positive semidefinite at x = (" << x.transpose() << ")";
            throw ModelError("a_slope", os.str());
        }
        // Sum intensities of components sharing a jump distribution.
        std::vector<bool> done(jumps.size(), false);
        for (std::size_t c = 0; c < jumps.size(); ++c) {
            if (done[c] || !hasJumps(jumps[c]) || std::holds_alternative<UserJump>(jumps[c])) continue;
            double lam = 0.0;
            for (std::size_t c2 = c; c2 < jumps.size(); ++c2) {
                if (!detail::sameDistribution(jumps[c], jumps[c2])) continue;
                done[c2] = true;
                lam += (c2 == 0 ? 1.0 : x(static_cast<int>(c2) - 1)) * detail::intensityOf(jumps[c2]);
            }
            if (lam < -1e-10) {
                std::ostringstream os;
                os << "jump intensity negative at x = (" << x.transpose() << ")";
                throw ModelError("jumps[" + std::to_string(c) + "].intensity", os.str());
            }
        }
    }
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline double num(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ModelError(path, "expected number");
    return j.get<double>();
}

inline VectorXd vec(const nlohmann::json& j, int d, const std::string& path) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw ModelError(path, "expected array of length " + std::to_string(d));
    VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = num(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    return v;
}

inline MatrixXd mat(const nlohmann::json& j, int d, const std::string& path) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw ModelError(path, "expected " + std::to_string(d) + "x" + std::to_string(d) + " array");
    MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) m.row(i) = vec(j[static_cast<std::size_t>(i)], d, path + "[" + std::to_string(i) + "]").transpose();
    return m;
}

inline nlohmann::json toJson(const VectorXd& v) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline nlohmann::json toJson(const MatrixXd& m) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back(toJson(VectorXd(m.row(i).transpose())));
    return a;
}

inline double bound(const nlohmann::json& j, double inf, const std::string& path) {
    if (j.is_null()) return inf;
    return num(j, path);
}

}  // namespace detail

/// Parses and validates a model; errors carry the JSON field path.
inline AffineModel modelFromJson(const nlohmann::json& j) {
    using detail::mat;
    using detail::vec;
    if (!j.is_object()) throw ModelError("$", "model must be a JSON object");
    if (!j.contains("dimension") || !j["dimension"].is_number_integer()) throw ModelError("dimension", "required integer");
    const int d = j["dimension"].get<int>();
    if (d < 1 || d > 8) throw ModelError("dimension", "must be in [1, 8]");
    AffineModel m = AffineModel::zero(d);
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ModelError("name", "expected string");
        m.name = j["name"].get<std::string>();
    }
    if (j.contains("a0")) m.a0 = mat(j["a0"], d, "a0");
    if (j.contains("a_slope")) {
        const auto& s = j["a_slope"];
        if (!s.is_array() || static_cast<int>(s.size()) != d) throw ModelError("a_slope", "expected " + std::to_string(d) + " matrices");
        for (int l = 0; l < d; ++l) m.aSlope[static_cast<std::size_t>(l)] = mat(s[static_cast<std::size_t>(l)], d, "a_slope[" + std::to_string(l) + "]");
    }
    if (j.contains("b0")) m.b0 = vec(j["b0"], d, "b0");
    if (j.contains("b_slope")) m.bSlope = mat(j["b_slope"], d, "b_slope");
    if (j.contains("truncation")) {
        const auto& t = j["truncation"];
        if (t == "none") m.truncation = Truncation::NoCompensation;
        else if (t == "unit_ball") m.truncation = Truncation::UnitBall;
        else throw ModelError("truncation", "expected \"none\" or \"unit_ball\"");
    }
    if (j.contains("jumps")) {
        const auto& js = j["jumps"];
        if (!js.is_array() || static_cast<int>(js.size()) != d + 1)
            throw ModelError("jumps", "expected array of " + std::to_string(d + 1) + " entries");
        for (int c = 0; c <= d; ++c) {
            const std::string p = "jumps[" + std::to_string(c) + "]";
            const auto& e = js[static_cast<std::size_t>(c)];
            if (!e.is_object() || !e.contains("type") || !e["type"].is_string()) throw ModelError(p + ".type", "required string");
            const std::string type = e["type"];
            auto need = [&](const char* f) -> const nlohmann::json& {
                if (!e.contains(f)) throw ModelError(p + "." + f, "required");
                return e[f];
            };
            if (type == "none") {
                m.jumps[static_cast<std::size_t>(c)] = NoJumps{};
            } else if (type == "gaussian") {
                GaussianJumps g;
                g.intensity = detail::num(need("intensity"), p + ".intensity");
                g.mean = vec(need("mean"), d, p + ".mean");
                g.covariance = mat(need("covariance"), d, p + ".covariance");
                m.jumps[static_cast<std::size_t>(c)] = g;
            } else if (type == "exponential") {
                ExponentialJumps x;
                x.intensity = detail::num(need("intensity"), p + ".intensity");
                x.rates = vec(need("rates"), d, p + ".rates");
                m.jumps[static_cast<std::size_t>(c)] = x;
            } else {
                throw ModelError(p + ".type", "unknown jump type \"" + type + "\"");
            }
        }
    }
    if (j.contains("state_domain")) {
        const auto& sd = j["state_domain"];
        if (!sd.is_array() || static_cast<int>(sd.size()) != d)
            throw ModelError("state_domain", "expected " + std::to_string(d) + " intervals");
        for (int i = 0; i < d; ++i) {
            const std::string p = "state_domain[" + std::to_string(i) + "]";
            const auto& iv = sd[static_cast<std::size_t>(i)];
            if (!iv.is_array() || iv.size() != 2) throw ModelError(p, "expected [lo, hi] (null = unbounded)");
            const double inf = std::numeric_limits<double>::infinity();
            m.stateDomain[static_cast<std::size_t>(i)] = Interval{detail::bound(iv[0], -inf, p + "[0]"), detail::bound(iv[1], inf, p + "[1]")};
        }
    }
    m.validate();
    return m;
}

inline nlohmann::json modelToJson(const AffineModel& m) {
    nlohmann::json j;
    j["dimension"] = m.dimension;
    if (!m.name.empty()) j["name"] = m.name;
    j["a0"] = detail::toJson(m.a0);
    j["a_slope"] = nlohmann::json::array();
    for (const auto& s : m.aSlope) j["a_slope"].push_back(detail::toJson(s));
    j["b0"] = detail::toJson(m.b0);
    j["b_slope"] = detail::toJson(m.bSlope);
    j["jumps"] = nlohmann::json::array();
    for (std::size_t c = 0; c < m.jumps.size(); ++c) {
        const auto& js = m.jumps[c];
        if (std::holds_alternative<NoJumps>(js)) {
            j["jumps"].push_back({{"type", "none"}});
        } else if (auto g = std::get_if<GaussianJumps>(&js)) {
            j["jumps"].push_back({{"type", "gaussian"}, {"intensity", g->intensity}, {"mean", detail::toJson(g->mean)},
                                  {"covariance", detail::toJson(g->covariance)}});
        } else if (auto e = std::get_if<ExponentialJumps>(&js)) {
            j["jumps"].push_back({{"type", "exponential"}, {"intensity", e->intensity}, {"rates", detail::toJson(e->rates)}});
        } else {
            throw ModelError("jumps[" + std::to_string(c) + "]", "user jump parts cannot be serialized");
        }
    }
    j["truncation"] = m.truncation == Truncation::NoCompensation ? "none" : "unit_ball";
    j["state_domain"] = nlohmann::json::array();
    for (const auto& iv : m.stateDomain) {
        nlohmann::json lo = std::isfinite(iv.lo) ? nlohmann::json(iv.lo) : nlohmann::json(nullptr);
        nlohmann::json hi = std::isfinite(iv.hi) ? nlohmann::json(iv.hi) : nlohmann::json(nullptr);
        j["state_domain"].push_back({lo, hi});
    }
    return j;
}

inline AffineModel loadModel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("$", "cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("$", std::string("invalid JSON: ") + e.what());
    }
    return modelFromJson(j);
}

}  // namespace affinecf
