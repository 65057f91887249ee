#pragma once

// Command-line front end (affine-cf): eval | compare | tables | triangle.
// Kept in a header so the test suite can drive it in-process.

#include "errors.hpp"
#include "gensym.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "series_eval.hpp"
#include "symalg.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace affinecf::cli {

inline constexpr const char* kSchema = "affine-cf v1";

struct RunConfig {
    std::string command;
    std::string modelPath;
    int K = 16;
    std::string tSpec, uSpec, xSpec;
    std::string mode = "local";
    std::string baseline;
    std::string baselineConfig;
    std::string series = "exp1";
    std::optional<double> beta;
    std::string oracle = "auto";
    std::string outPath;
    std::string format = "csv";
    int dimension = 1;
    int jobs = 0;
    bool timings = true;
};

/// Fixed 17-significant-digit scientific formatting.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

/// One axis: "v" or "min:max:count" (count >= 1; count 1 gives min).
inline std::vector<double> parseAxis(const std::string& spec, const std::string& what) {
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(s, &used);
        } catch (...) {
            throw ModelError("--" + what, "bad number '" + s + "'");
        }
        if (used != s.size() || !std::isfinite(v)) throw ModelError("--" + what, "bad number '" + s + "'");
        return v;
    };
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() == 1) return {num(parts[0])};
    if (parts.size() != 3) throw ModelError("--" + what, "expected 'value' or 'min:max:count', got '" + spec + "'");
    const double lo = num(parts[0]), hi = num(parts[1]);
    const double c = num(parts[2]);
    if (c < 1 || c != std::floor(c)) throw ModelError("--" + what, "grid count must be an integer >= 1");
    const int n = static_cast<int>(c);
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
}

/// Comma-separated axes (one per dimension; a single axis is broadcast),
/// expanded to the Cartesian product in row-major order.
inline std::vector<VectorXd> parseGrid(const std::string& spec, int d, const std::string& what) {
    std::vector<std::vector<double>> axes;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) axes.push_back(parseAxis(p, what));
    if (axes.empty()) throw ModelError("--" + what, "empty grid");
    if (axes.size() == 1 && d > 1) axes.assign(static_cast<std::size_t>(d), axes[0]);
    if (static_cast<int>(axes.size()) != d)
        throw ModelError("--" + what, "expected " + std::to_string(d) + " comma-separated axes");
    std::vector<VectorXd> out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        VectorXd v(d);
        for (int i = 0; i < d; ++i) v(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        out.push_back(v);
        int p = d - 1;
        while (p >= 0 && ++idx[static_cast<std::size_t>(p)] == axes[static_cast<std::size_t>(p)].size()) idx[static_cast<std::size_t>(p--)] = 0;
        if (p < 0) break;
    }
    return out;
}

struct Point {
    double t;
    VectorXd x, u;
};

/// Runs f(i) for i in [0, n) on `jobs` workers; results are indexed, so the
/// output order does not depend on scheduling.
template <class F>
void parallelFor(std::size_t n, int jobs, F&& f) {
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    for (auto& th : pool) th.join();
}

struct SeriesOutcome {
    cd value{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double tail = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

class Runner {
public:
    explicit Runner(RunConfig cfg) : cfg_(std::move(cfg)) {}

    int run(std::ostream& out) {
        if (cfg_.command == "tables") return tables(out);
        if (cfg_.command == "triangle") return triangle(out);
        if (cfg_.K < 1) throw ModelError("--k", "must be >= 1");
        model_ = loadModel(cfg_.modelPath);
        if (cfg_.mode != "local" && cfg_.mode != "global" && cfg_.mode != "generalized")
            throw ModelError("--mode", "expected local, global or generalized");
        if (cfg_.mode == "generalized") setupBaseline();
        buildPoints();
        if (cfg_.command == "eval") return eval(out);
        if (cfg_.command == "compare") return compare(out);
        throw ModelError("command", "unknown command '" + cfg_.command + "'");
    }

private:
    void setupBaseline() {
        if (!cfg_.baselineConfig.empty()) {
            std::ifstream in(cfg_.baselineConfig);
            if (!in) throw ModelError("--baseline-config", "cannot open '" + cfg_.baselineConfig + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::parse_error& e) {
                throw ModelError("--baseline-config", std::string("invalid JSON: ") + e.what());
            }
            baseline_ = baselineFromJson(j);
            if (baseline_->name != "heston" && baseline_->name != "vasicek" && baseline_->name != "zero") {
                // user closed forms are certified, not trusted
                VectorXd x = VectorXd::Zero(model_.dimension);
                for (int i = 0; i < model_.dimension; ++i) x(i) = std::clamp(0.0, baseline_->generator.stateDomain[static_cast<std::size_t>(i)].lo, baseline_->generator.stateDomain[static_cast<std::size_t>(i)].hi);
                std::vector<VectorXd> us{VectorXd::Constant(model_.dimension, 0.5), VectorXd::Constant(model_.dimension, 1.0)};
                certifyBaseline(*baseline_, us, x);
            }
        } else if (!cfg_.baseline.empty()) {
            baseline_ = namedBaseline(cfg_.baseline, model_);
        } else {
            throw ModelError("--baseline", "generalized mode needs --baseline or --baseline-config");
        }
        if (baseline_->generator.dimension != model_.dimension) throw ModelError("--baseline", "baseline dimension differs from the model");
        if (cfg_.series != "exp1" && cfg_.series != "exp2") throw ModelError("--series", "expected exp1 or exp2");
    }

    void buildPoints() {
        const int d = model_.dimension;
        if (cfg_.tSpec.empty()) throw ModelError("--t", "required");
        if (cfg_.uSpec.empty()) throw ModelError("--u", "required");
        const auto ts = parseAxis(cfg_.tSpec, "t");
        for (double t : ts)
            if (t < 0) throw ModelError("--t", "times must be >= 0");
        std::vector<VectorXd> xs;
        if (cfg_.xSpec.empty()) {
            VectorXd x(d);
            for (int i = 0; i < d; ++i) {
                const auto& iv = model_.stateDomain[static_cast<std::size_t>(i)];
                x(i) = std::clamp(0.0, iv.lo, iv.hi);
            }
            xs.push_back(x);
        } else {
            xs = parseGrid(cfg_.xSpec, d, "x");
        }
        const auto us = parseGrid(cfg_.uSpec, d, "u");
        for (double t : ts)
            for (const auto& x : xs)
                for (const auto& u : us) points_.push_back({t, x, u});
    }

    int jobs() const {
        if (cfg_.jobs > 0) return cfg_.jobs;
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }

    SeriesOutcome seriesAt(const Point& p) const {
        SeriesOutcome o;
        try {
            CFResult r;
            if (cfg_.mode == "local") {
                r = evalLocal(model_, p.x, p.u, p.t, cfg_.K);
            } else if (cfg_.mode == "global") {
                r = evalGlobalizedAuto(model_, p.x, p.u, p.t, cfg_.K, cfg_.beta);
                if (!r.warnings.empty()) o.status = "warning: " + r.warnings.front();
            } else {
                r = evalGeneralized(model_, *baseline_, p.x, p.u, p.t, cfg_.K,
                                    cfg_.series == "exp2" ? SeriesKind::BruteForce : SeriesKind::Difference);
            }
            o.value = r.value;
            o.tail = r.tailEstimate;
        } catch (const Error& e) {
            o.status = e.kind() + ": " + e.what();
        } catch (const std::exception& e) {
            o.status = std::string("error: ") + e.what();
        }
        return o;
    }

    void warmCache() const {
        // Generate the symbolic tables once before the workers start.
        if (points_.empty()) return;
        seriesAt(points_.front());
    }

    std::string csvEscape(const std::string& s) const {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string r = "\"";
        for (char c : s) r += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
        return r + "\"";
    }

    void writeHeader(std::ostream& out, const std::vector<std::string>& tail) const {
        const int d = model_.dimension;
        out << "# " << kSchema << "\n";
        out << "t";
        for (int i = 1; i <= d; ++i) out << ",x" << i;
        for (int i = 1; i <= d; ++i) out << ",u" << i;
        for (const auto& c : tail) out << "," << c;
        out << "\n";
    }

    void writePointCsv(std::ostream& out, const Point& p) const {
        out << fmt(p.t);
        for (int i = 0; i < p.x.size(); ++i) out << "," << fmt(p.x(i));
        for (int i = 0; i < p.u.size(); ++i) out << "," << fmt(p.u(i));
    }

    nlohmann::json pointJson(const Point& p) const {
        nlohmann::json j;
        j["t"] = p.t;
        j["x"] = nlohmann::json::array();
        j["u"] = nlohmann::json::array();
        for (int i = 0; i < p.x.size(); ++i) j["x"].push_back(p.x(i));
        for (int i = 0; i < p.u.size(); ++i) j["u"].push_back(p.u(i));
        return j;
    }

    nlohmann::json header(const std::string& command) const {
        nlohmann::json j;
        j["schema"] = kSchema;
        j["command"] = command;
        j["model"] = model_.name;
        j["mode"] = cfg_.mode;
        j["K"] = cfg_.K;
        if (baseline_) j["baseline"] = baseline_->name;
        return j;
    }

    int eval(std::ostream& out) {
        warmCache();
        std::vector<SeriesOutcome> res(points_.size());
        parallelFor(points_.size(), jobs(), [&](std::size_t i) { res[i] = seriesAt(points_[i]); });
        if (cfg_.format == "json") {
            auto j = header("eval");
            j["rows"] = nlohmann::json::array();
            for (std::size_t i = 0; i < points_.size(); ++i) {
                auto r = pointJson(points_[i]);
                r["re"] = jnum(res[i].value.real());
                r["im"] = jnum(res[i].value.imag());
                r["tail"] = jnum(res[i].tail);
                r["K"] = cfg_.K;
                r["status"] = res[i].status;
                j["rows"].push_back(std::move(r));
            }
            out << j.dump(2) << "\n";
        } else {
            writeHeader(out, {"re", "im", "tail", "K", "status"});
            for (std::size_t i = 0; i < points_.size(); ++i) {
                writePointCsv(out, points_[i]);
                out << "," << fmt(res[i].value.real()) << "," << fmt(res[i].value.imag()) << "," << fmt(res[i].tail) << ","
                    << cfg_.K << "," << csvEscape(res[i].status) << "\n";
            }
        }
        return 0;
    }

    /// Oracle name for the model/mode, or "none".
    std::string pickOracle() const {
        if (cfg_.oracle != "auto") return cfg_.oracle;
        if (model_.isLevy()) return "levy";
        for (const auto& j : model_.jumps)
            if (std::holds_alternative<UserJump>(j)) return "none";
        if (baseline_ && baseline_->name == "heston") {
            bool jumpFree = true;
            for (const auto& j : model_.jumps) jumpFree = jumpFree && !hasJumps(j);
            if (jumpFree) return "heston";
        }
        return "riccati";
    }

    OracleValue oracleAt(const std::string& which, const Point& p) const {
        if (which == "levy") return {levyKhintchineCF(model_, p.x, p.u, p.t), 0.0};
        if (which == "riccati") return riccatiCF(model_, p.x, p.u, p.t);
        if (which == "vasicek") {
            const auto v = vasicekParamsOf(model_);
            return {vasicekCF(v, p.x(0), p.u(0), p.t), 0.0};
        }
        if (which == "cir") {
            if (model_.dimension != 1 || model_.a0(0, 0) != 0.0) throw ModelError("--oracle", "cir oracle needs a one-dimensional model with a0 = 0");
            return {cirCF(CirParams{model_.aSlope[0](0, 0), model_.b0(0), model_.bSlope(0, 0)}, p.x(0), p.u(0), p.t), 0.0};
        }
        if (which == "heston") {
            const auto h = hestonParamsOf(model_);
            if (p.u(0) != 0.0) throw DomainError("heston oracle: frequency on the variance coordinate must be 0");
            return {hestonCF(h, p.x(1), p.x(0), p.u(1), p.t), 0.0};
        }
        throw ModelError("--oracle", "unknown oracle '" + which + "'");
    }

    int compare(std::ostream& out) {
        const std::string which = pickOracle();
        warmCache();
        std::vector<SeriesOutcome> ser(points_.size());
        std::vector<SeriesOutcome> ora(points_.size());
        const auto t0 = std::chrono::steady_clock::now();
        parallelFor(points_.size(), jobs(), [&](std::size_t i) { ser[i] = seriesAt(points_[i]); });
        const auto t1 = std::chrono::steady_clock::now();
        if (which == "none") {
            for (auto& o : ora) o.status = "no oracle";
        } else {
            parallelFor(points_.size(), jobs(), [&](std::size_t i) {
                try {
                    const auto v = oracleAt(which, points_[i]);
                    ora[i].value = v.value;
                    ora[i].tail = v.errorEstimate;
                } catch (const Error& e) {
                    ora[i].status = e.kind() + ": " + e.what();
                } catch (const std::exception& e) {
                    ora[i].status = std::string("error: ") + e.what();
                }
            });
        }
        const auto t2 = std::chrono::steady_clock::now();

        std::vector<double> absErr(points_.size()), relErr(points_.size());
        std::vector<double> okAbs, okRel;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            absErr[i] = std::abs(ser[i].value - ora[i].value);
            relErr[i] = absErr[i] / std::max(std::abs(ora[i].value), 1e-300);
            if (std::isfinite(absErr[i])) {
                okAbs.push_back(absErr[i]);
                okRel.push_back(relErr[i]);
            }
        }
        auto median = [](std::vector<double> v) {
            if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        auto maxOf = [](const std::vector<double>& v) {
            return v.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(v.begin(), v.end());
        };
        const double seriesSec = std::chrono::duration<double>(t1 - t0).count();
        const double oracleSec = std::chrono::duration<double>(t2 - t1).count();
        // "no oracle" when nothing could be compared, so a missing reference is never silent
        const std::string status = which == "none" || okAbs.empty() ? "no oracle" : (okAbs.size() == points_.size() ? "ok" : "partial");

        if (cfg_.format == "json") {
            auto j = header("compare");
            j["oracle"] = which;
            j["rows"] = nlohmann::json::array();
            for (std::size_t i = 0; i < points_.size(); ++i) {
                auto r = pointJson(points_[i]);
                r["series_re"] = jnum(ser[i].value.real());
                r["series_im"] = jnum(ser[i].value.imag());
                r["oracle_re"] = jnum(ora[i].value.real());
                r["oracle_im"] = jnum(ora[i].value.imag());
                r["abs_err"] = jnum(absErr[i]);
                r["rel_err"] = jnum(relErr[i]);
                r["tail"] = jnum(ser[i].tail);
                r["oracle_err"] = jnum(ora[i].tail);
                r["status"] = ser[i].status == "ok" ? ora[i].status : ser[i].status;
                j["rows"].push_back(std::move(r));
            }
            nlohmann::json s;
            s["status"] = status;
            s["points"] = points_.size();
            s["compared"] = okAbs.size();
            s["max_abs_err"] = jnum(maxOf(okAbs));
            s["median_abs_err"] = jnum(median(okAbs));
            s["max_rel_err"] = jnum(maxOf(okRel));
            s["median_rel_err"] = jnum(median(okRel));
            if (cfg_.timings) {
                s["series_seconds"] = seriesSec;
                s["oracle_seconds"] = oracleSec;
            }
            j["summary"] = s;
            out << j.dump(2) << "\n";
        } else {
            writeHeader(out, {"series_re", "series_im", "oracle_re", "oracle_im", "abs_err", "rel_err", "tail", "oracle_err", "K", "status"});
            for (std::size_t i = 0; i < points_.size(); ++i) {
                writePointCsv(out, points_[i]);
                out << "," << fmt(ser[i].value.real()) << "," << fmt(ser[i].value.imag()) << "," << fmt(ora[i].value.real()) << ","
                    << fmt(ora[i].value.imag()) << "," << fmt(absErr[i]) << "," << fmt(relErr[i]) << "," << fmt(ser[i].tail) << ","
                    << fmt(ora[i].tail) << "," << cfg_.K << "," << csvEscape(ser[i].status == "ok" ? ora[i].status : ser[i].status) << "\n";
            }
            out << "# summary oracle=" << which << " status=" << csvEscape(status) << " points=" << points_.size()
                << " compared=" << okAbs.size() << "\n";
            out << "# summary max_abs_err=" << fmt(maxOf(okAbs)) << " median_abs_err=" << fmt(median(okAbs)) << "\n";
            out << "# summary max_rel_err=" << fmt(maxOf(okRel)) << " median_rel_err=" << fmt(median(okRel)) << "\n";
            if (cfg_.timings) out << "# summary series_seconds=" << fmt(seriesSec) << " oracle_seconds=" << fmt(oracleSec) << "\n";
        }
        return 0;
    }

    int tables(std::ostream& out) {
        const int K = cfg_.K;
        if (K < 1 || K > 20) throw ModelError("--k", "tables support 1 <= K <= 20");
        const int d = cfg_.dimension;
        if (d < 1 || d > 8) throw ModelError("--dimension", "must be in [1, 8]");
        const auto rows = coefficientRecursion(d, K);
        if (cfg_.format == "json") {
            nlohmann::json j;
            j["schema"] = kSchema;
            j["command"] = "tables";
            j["dimension"] = d;
            j["rows"] = nlohmann::json::array();
            for (int k = 1; k <= K; ++k) {
                nlohmann::json r;
                r["k"] = k;
                r["entries"] = nlohmann::json::array();
                for (const auto& [p, c] : sortedRow(rows[static_cast<std::size_t>(k)]))
                    r["entries"].push_back({{"alpha", p.alpha}, {"beta", p.beta}, {"value", toString(c)},
                                            {"num", boost::multiprecision::numerator(c).str()},
                                            {"den", boost::multiprecision::denominator(c).str()}});
                j["rows"].push_back(std::move(r));
            }
            out << j.dump(2) << "\n";
        } else {
            out << "# " << kSchema << "\n";
            out << "k,alpha,beta,num,den\n";
            auto tup = [](const std::vector<int>& v) {
                std::string s = "(";
                for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
                return s + ")";
            };
            for (int k = 1; k <= K; ++k)
                for (const auto& [p, c] : sortedRow(rows[static_cast<std::size_t>(k)]))
                    out << k << "," << tup(p.alpha) << "," << tup(p.beta) << "," << boost::multiprecision::numerator(c).str() << ","
                        << boost::multiprecision::denominator(c).str() << "\n";
        }
        return 0;
    }

    int triangle(std::ostream& out) {
        const int n = cfg_.K;
        if (n < 1 || n > 20) throw ModelError("--k", "triangle supports 1 <= rows <= 20");
        const auto tri = countingTriangle(n);
        auto ratio = [](const BigInt& r, int k) {
            return Rational(r, factorialBig(k)).convert_to<double>();
        };
        if (cfg_.format == "json") {
            nlohmann::json j;
            j["schema"] = kSchema;
            j["command"] = "triangle";
            j["rows"] = nlohmann::json::array();
            for (int k = 1; k <= n; ++k) {
                nlohmann::json r;
                r["n"] = k;
                r["entries"] = nlohmann::json::array();
                for (const auto& v : tri.row(k)) r["entries"].push_back(v.str());
                r["R"] = tri.rowSums[static_cast<std::size_t>(k - 1)].str();
                r["R_over_factorial"] = ratio(tri.rowSums[static_cast<std::size_t>(k - 1)], k);
                r["bound_ok"] = tri.rowSums[static_cast<std::size_t>(k - 1)] <= factorialBig(k);
                j["rows"].push_back(std::move(r));
            }
            j["recursion_discrepancies"] = countingDiscrepancies(std::min(n, 12));
            out << j.dump(2) << "\n";
        } else {
            out << "# " << kSchema << "\n";
            out << "n,entries,R,R_over_factorial,bound_ok\n";
            for (int k = 1; k <= n; ++k) {
                std::string e;
                for (const auto& v : tri.row(k)) e += (e.empty() ? "" : " ") + v.str();
                const auto& R = tri.rowSums[static_cast<std::size_t>(k - 1)];
                out << k << "," << e << "," << R.str() << "," << fmt(ratio(R, k)) << "," << (R <= factorialBig(k) ? "true" : "false") << "\n";
            }
        }
        return 0;
    }

    RunConfig cfg_;
    AffineModel model_;
    std::optional<BaselineSolution> baseline_;
    std::vector<Point> points_;
};

inline void writeError(std::ostream& err, const std::string& kind, const std::string& message, const std::string& path = "") {
    nlohmann::json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    if (!path.empty()) j["error"]["path"] = path;
    err << j.dump() << "\n";
}

/// Entry point; returns the process exit code.
inline int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"affine-cf: characteristic functions of affine processes as symbol power series"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto addEval = [&cfg](CLI::App* s) {
        s->add_option("--model", cfg.modelPath, "model JSON file")->required();
        s->add_option("--k", cfg.K, "truncation order K (default 16)");
        s->add_option("--t", cfg.tSpec, "time grid: value or min:max:count")->required();
        s->add_option("--u", cfg.uSpec, "frequency grid per axis, axes comma-separated")->required();
        s->add_option("--x", cfg.xSpec, "state grid per axis (default: 0 clipped to the domain)");
        s->add_option("--mode", cfg.mode, "local | global | generalized");
        s->add_option("--baseline", cfg.baseline, "heston | vasicek | zero (parameters from the model)");
        s->add_option("--baseline-config", cfg.baselineConfig, "baseline JSON config (named with params, or custom expressions)");
        s->add_option("--series", cfg.series, "generalized recursion: exp1 (difference symbol) | exp2 (brute force)");
        s->add_option("--beta", cfg.beta, "time-transform parameter (global mode)");
        s->add_option("--out", cfg.outPath, "output file (default stdout)");
        s->add_option("--format", cfg.format, "csv | json");
        s->add_option("--jobs", cfg.jobs, "worker threads (default: available parallelism)");
    };
    auto* ev = app.add_subcommand("eval", "evaluate the series on a grid");
    addEval(ev);
    auto* cmp = app.add_subcommand("compare", "series vs oracle on a grid");
    addEval(cmp);
    cmp->add_option("--oracle", cfg.oracle, "auto | levy | riccati | vasicek | cir | heston");
    cmp->add_flag("--no-timings{false}", cfg.timings, "omit wall-clock timings from the summary");
    auto* tab = app.add_subcommand("tables", "dump coefficient rows c_(alpha,beta)");
    int tableRows = 3, triangleRows = 5;
    tab->add_option("--k", tableRows, "number of rows (<= 20, default 3)");
    tab->add_option("--dimension", cfg.dimension, "dimension d (default 1)");
    tab->add_option("--out", cfg.outPath, "output file");
    tab->add_option("--format", cfg.format, "csv | json");
    auto* tri = app.add_subcommand("triangle", "dump the counting triangle");
    tri->add_option("--k", triangleRows, "number of rows (<= 20, default 5)");
    tri->add_option("--out", cfg.outPath, "output file");
    tri->add_option("--format", cfg.format, "csv | json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        writeError(err, "usage", e.what());
        return 2;
    }
    for (auto* s : {ev, cmp, tab, tri})
        if (s->parsed()) cfg.command = s->get_name();
    if (cfg.command == "tables") cfg.K = tableRows;
    if (cfg.command == "triangle") cfg.K = triangleRows;
    if (cfg.format != "csv" && cfg.format != "json") {
        writeError(err, "usage", "--format must be csv or json");
        return 2;
    }

    try {
        std::ostringstream buf;
        const int rc = Runner(cfg).run(buf);
        if (cfg.outPath.empty()) {
            out << buf.str();
        } else {
            std::ofstream f(cfg.outPath, std::ios::binary);
            if (!f) throw ModelError("--out", "cannot write '" + cfg.outPath + "'");
            f << buf.str();
        }
        return rc;
    } catch (const ModelError& e) {
        writeError(err, e.kind(), e.what(), e.path());
    } catch (const Error& e) {
        writeError(err, e.kind(), e.what());
    } catch (const std::exception& e) {
        writeError(err, "internal", e.what());
    }
    return 1;
}

}  // namespace affinecf::cli
