#pragma once

// Small complex-valued arithmetic expression interpreter for user baselines.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Constants i, pi, e; functions exp log sqrt sin cos tan sinh cosh tanh
// atan abs re im conj pow(a, b). Variables are bound at evaluation time.

#include "errors.hpp"

#include <cctype>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace affinecf {

class ExprError : public Error {
public:
    explicit ExprError(const std::string& msg) : Error("expression", msg) {}
};

class Expression {
public:
    using Value = std::complex<double>;
    using Env = std::map<std::string, Value>;

    static Expression parse(const std::string& text) {
        Parser p{text, 0};
        Expression e;
        e.text_ = text;
        e.root_ = p.expr();
        p.skip();
        if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        return e;
    }

    Value eval(const Env& env) const { return root_(env); }
    const std::string& text() const { return text_; }

private:
    using Node = std::function<Value(const Env&)>;

    struct Parser {
        const std::string& s;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& msg) const {
            throw ExprError("in \"" + s + "\" at position " + std::to_string(pos) + ": " + msg);
        }
        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        Node expr() {
            Node lhs = term();
            while (true) {
                if (accept('+')) {
                    Node r = term();
                    lhs = [lhs, r](const Env& e) { return lhs(e) + r(e); };
                } else if (accept('-')) {
                    Node r = term();
                    lhs = [lhs, r](const Env& e) { return lhs(e) - r(e); };
                } else {
                    return lhs;
                }
            }
        }

        Node term() {
            Node lhs = unary();
            while (true) {
                if (accept('*')) {
                    Node r = unary();
                    lhs = [lhs, r](const Env& e) { return lhs(e) * r(e); };
                } else if (accept('/')) {
                    Node r = unary();
                    lhs = [lhs, r](const Env& e) { return lhs(e) / r(e); };
                } else {
                    return lhs;
                }
            }
        }

        Node unary() {
            if (accept('-')) {
                Node a = unary();
                return [a](const Env& e) { return -a(e); };
            }
            if (accept('+')) return unary();
            return power();
        }

        Node power() {
            Node base = primary();
            if (accept('^')) {
                Node ex = unary();
                return [base, ex](const Env& e) {
                    const Value b = base(e), x = ex(e);
                    if (x.imag() == 0.0 && x.real() == std::round(x.real()) && std::abs(x.real()) <= 64) {
                        int n = static_cast<int>(x.real());
                        Value r = 1.0, p = b;
                        for (unsigned m = static_cast<unsigned>(std::abs(n)); m; m >>= 1, p *= p)
                            if (m & 1u) r *= p;
                        return n < 0 ? 1.0 / r : r;
                    }
                    return std::pow(b, x);
                };
            }
            return base;
        }

        Node primary() {
            skip();
            if (pos >= s.size()) fail("unexpected end of expression");
            if (accept('(')) {
                Node e = expr();
                if (!accept(')')) fail("expected ')'");
                return e;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (...) {
                    fail("bad number");
                }
                pos += used;
                return [v](const Env&) { return Value(v); };
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                const std::string name = s.substr(start, pos - start);
                if (accept('(')) {
                    std::vector<Node> args{expr()};
                    while (accept(',')) args.push_back(expr());
                    if (!accept(')')) fail("expected ')' after arguments of " + name);
                    return function(name, std::move(args));
                }
                if (name == "i") return [](const Env&) { return Value(0.0, 1.0); };
                if (name == "pi") return [](const Env&) { return Value(std::numbers::pi); };
                if (name == "e") return [](const Env&) { return Value(std::numbers::e); };
                return [name, text = s](const Env& env) {
                    auto it = env.find(name);
                    if (it == env.end()) throw ExprError("in \"" + text + "\": unbound variable '" + name + "'");
                    return it->second;
                };
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }

        Node function(const std::string& name, std::vector<Node> args) {
            using F = Value (*)(const Value&);
            static const std::map<std::string, F> unaryFns = {
                {"exp", [](const Value& z) { return std::exp(z); }},   {"log", [](const Value& z) { return std::log(z); }},
                {"sqrt", [](const Value& z) { return std::sqrt(z); }}, {"sin", [](const Value& z) { return std::sin(z); }},
                {"cos", [](const Value& z) { return std::cos(z); }},   {"tan", [](const Value& z) { return std::tan(z); }},
                {"sinh", [](const Value& z) { return std::sinh(z); }}, {"cosh", [](const Value& z) { return std::cosh(z); }},
                {"tanh", [](const Value& z) { return std::tanh(z); }}, {"atan", [](const Value& z) { return std::atan(z); }},
                {"abs", [](const Value& z) { return Value(std::abs(z)); }},
                {"re", [](const Value& z) { return Value(z.real()); }}, {"im", [](const Value& z) { return Value(z.imag()); }},
                {"conj", [](const Value& z) { return std::conj(z); }},
            };
            if (name == "pow") {
                if (args.size() != 2) fail("pow expects 2 arguments");
                Node a = args[0], b = args[1];
                return [a, b](const Env& e) { return std::pow(a(e), b(e)); };
            }
            auto it = unaryFns.find(name);
            if (it == unaryFns.end()) fail("unknown function '" + name + "'");
            if (args.size() != 1) fail(name + " expects 1 argument");
            F f = it->second;
            Node a = args[0];
            return [f, a](const Env& e) { return f(a(e)); };
        }
    };

    std::string text_;
    Node root_;
};

}  // namespace affinecf
