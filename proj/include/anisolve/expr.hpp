#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anisolve/errors.hpp"

namespace anisolve {

/// The closed set of variables an expression may reference.
enum class Var : int { X = 0, Y = 1, T = 2, U = 3, S = 4 };

inline const char* var_name(Var v) {
    static constexpr const char* names[] = {"x", "y", "t", "u", "s"};
    return names[static_cast<int>(v)];
}

/// Variable bindings for evaluation. Unbound variables raise EvalError.
class EvalEnv {
public:
    EvalEnv& set(Var v, double value) {
        values_[static_cast<int>(v)] = value;
        bound_[static_cast<int>(v)] = true;
        return *this;
    }

    bool bound(Var v) const { return bound_[static_cast<int>(v)]; }

    double get(Var v) const {
        if (!bound(v))
            throw EvalError(std::string("unbound variable '") + var_name(v) + "'");
        return values_[static_cast<int>(v)];
    }

private:
    std::array<double, 5> values_{};
    std::array<bool, 5> bound_{};
};

/// Immutable arithmetic expression tree.
///
/// Grammar (precedence low to high): '+'/'-' < '*'/'/' < unary '-' < '^',
/// with '^' right-associative, so "-x^2" parses as -(x^2) and "2^3^2" as
/// 2^(3^2). Function calls use name(arg, ...).
class Expr {
public:
    static Expr parse(std::string_view source) {
        Parser p{source, 0};
        Expr e;
        e.root_ = p.parseExpr(e.nodes_);
        p.skipSpace();
        if (p.pos != source.size())
            throw ParseError("unexpected trailing input, expected end of expression",
                             p.pos);
        return e;
    }

    double eval(const EvalEnv& env) const { return evalNode(root_, env); }

    /// Fully parenthesized form; parsing it again yields an identical tree.
    std::string str() const {
        std::string out;
        printNode(root_, out);
        return out;
    }

    bool sameTree(const Expr& other) const {
        return sameNode(root_, other, other.root_);
    }

    bool usesVar(Var v) const { return usesVarNode(root_, v); }

private:
    enum class Kind { Number, Variable, Unary, Binary, Call };
    enum class Fn { Sin, Cos, Exp, Tanh, Abs, Min, Max, Clamp };

    struct Node {
        Kind kind;
        double number = 0.0;
        Var var = Var::X;
        char op = 0; // '+', '-', '*', '/', '^', or 'n' for unary negate
        Fn fn = Fn::Sin;
        int args[3] = {-1, -1, -1};
        int argCount = 0;
    };

    std::vector<Node> nodes_;
    int root_ = -1;

    static int fn_arity(Fn f) {
        switch (f) {
        case Fn::Min:
        case Fn::Max: return 2;
        case Fn::Clamp: return 3;
        default: return 1;
        }
    }

    static std::optional<Fn> fn_by_name(std::string_view name) {
        if (name == "sin") return Fn::Sin;
        if (name == "cos") return Fn::Cos;
        if (name == "exp") return Fn::Exp;
        if (name == "tanh") return Fn::Tanh;
        if (name == "abs") return Fn::Abs;
        if (name == "min") return Fn::Min;
        if (name == "max") return Fn::Max;
        if (name == "clamp") return Fn::Clamp;
        return std::nullopt;
    }

    static const char* fn_name(Fn f) {
        static constexpr const char* names[] = {"sin", "cos", "exp", "tanh",
                                                "abs", "min", "max", "clamp"};
        return names[static_cast<int>(f)];
    }

    static std::optional<Var> var_by_name(std::string_view name) {
        if (name == "x") return Var::X;
        if (name == "y") return Var::Y;
        if (name == "t") return Var::T;
        if (name == "u") return Var::U;
        if (name == "s") return Var::S;
        return std::nullopt;
    }

    struct Parser {
        std::string_view src;
        std::size_t pos;

        void skipSpace() {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
                ++pos;
        }

        char peek() {
            skipSpace();
            return pos < src.size() ? src[pos] : '\0';
        }

        bool consume(char c) {
            if (peek() == c) {
                ++pos;
                return true;
            }
            return false;
        }

        void expect(char c, const char* what) {
            if (!consume(c))
                throw ParseError(std::string("expected ") + what, pos);
        }

        int parseExpr(std::vector<Node>& ns) {
            int lhs = parseTerm(ns);
            for (;;) {
                char c = peek();
                if (c != '+' && c != '-') return lhs;
                ++pos;
                int rhs = parseTerm(ns);
                lhs = makeBinary(ns, c, lhs, rhs);
            }
        }

        int parseTerm(std::vector<Node>& ns) {
            int lhs = parseFactor(ns);
            for (;;) {
                char c = peek();
                if (c != '*' && c != '/') return lhs;
                ++pos;
                int rhs = parseFactor(ns);
                lhs = makeBinary(ns, c, lhs, rhs);
            }
        }

        // factor handles unary minus; '^' binds tighter and lives below it.
        int parseFactor(std::vector<Node>& ns) {
            if (peek() == '-') {
                ++pos;
                int operand = parseFactor(ns);
                Node n;
                n.kind = Kind::Unary;
                n.op = 'n';
                n.args[0] = operand;
                n.argCount = 1;
                ns.push_back(n);
                return static_cast<int>(ns.size()) - 1;
            }
            return parsePower(ns);
        }

        int parsePower(std::vector<Node>& ns) {
            int base = parsePrimary(ns);
            if (peek() == '^') {
                ++pos;
                int expo = parseFactor(ns); // right-assoc; exponent may be negated
                return makeBinary(ns, '^', base, expo);
            }
            return base;
        }

        int parsePrimary(std::vector<Node>& ns) {
            char c = peek();
            if (c == '(') {
                ++pos;
                int inner = parseExpr(ns);
                expect(')', "')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
                return parseNumber(ns);
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
                return parseIdent(ns);
            throw ParseError("expected a number, variable, function call or '('", pos);
        }

        int parseNumber(std::vector<Node>& ns) {
            std::size_t start = pos;
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
                ++pos;
            if (pos < src.size() && src[pos] == '.') {
                ++pos;
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
                    ++pos;
            }
            if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
                std::size_t expStart = pos;
                ++pos;
                if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
                if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos])))
                    pos = expStart; // 'e' belonged to something else; not a valid exponent
                else
                    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
                        ++pos;
            }
            std::string text(src.substr(start, pos - start));
            if (text == "." )
                throw ParseError("malformed number literal", start);
            char* end = nullptr;
            double value = std::strtod(text.c_str(), &end);
            if (end != text.c_str() + text.size())
                throw ParseError("malformed number literal", start);
            Node n;
            n.kind = Kind::Number;
            n.number = value;
            ns.push_back(n);
            return static_cast<int>(ns.size()) - 1;
        }

        int parseIdent(std::vector<Node>& ns) {
            std::size_t start = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            std::string_view name = src.substr(start, pos - start);
            if (auto f = fn_by_name(name)) {
                expect('(', "'(' after function name");
                std::vector<int> args;
                if (peek() != ')') {
                    args.push_back(parseExpr(ns));
                    while (consume(','))
                        args.push_back(parseExpr(ns));
                }
                expect(')', "')' closing argument list");
                int want = fn_arity(*f);
                if (static_cast<int>(args.size()) != want)
                    throw ParseError(std::string(name) + " expects " +
                                         std::to_string(want) + " argument(s), got " +
                                         std::to_string(args.size()),
                                     start);
                Node n;
                n.kind = Kind::Call;
                n.fn = *f;
                n.argCount = want;
                for (int i = 0; i < want; ++i) n.args[i] = args[static_cast<std::size_t>(i)];
                ns.push_back(n);
                return static_cast<int>(ns.size()) - 1;
            }
            if (auto v = var_by_name(name)) {
                Node n;
                n.kind = Kind::Variable;
                n.var = *v;
                ns.push_back(n);
                return static_cast<int>(ns.size()) - 1;
            }
            throw ParseError("unknown identifier '" + std::string(name) +
                                 "' (variables: x y t u s)",
                             start);
        }

        int makeBinary(std::vector<Node>& ns, char op, int lhs, int rhs) {
            Node n;
            n.kind = Kind::Binary;
            n.op = op;
            n.args[0] = lhs;
            n.args[1] = rhs;
            n.argCount = 2;
            ns.push_back(n);
            return static_cast<int>(ns.size()) - 1;
        }
    };

    double evalNode(int idx, const EvalEnv& env) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.kind) {
        case Kind::Number: return n.number;
        case Kind::Variable: return env.get(n.var);
        case Kind::Unary: return -evalNode(n.args[0], env);
        case Kind::Binary: {
            double a = evalNode(n.args[0], env);
            double b = evalNode(n.args[1], env);
            switch (n.op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            case '/':
                if (b == 0.0) throw EvalError("division by zero");
                return a / b;
            case '^': {
                if (a == 0.0 && b < 0.0)
                    throw EvalError("zero raised to a negative power");
                double r = std::pow(a, b);
                if (std::isnan(r))
                    throw EvalError("domain error in power (negative base, fractional exponent)");
                return r;
            }
            }
            throw EvalError("corrupt expression node");
        }
        case Kind::Call: {
            double a = evalNode(n.args[0], env);
            switch (n.fn) {
            case Fn::Sin: return std::sin(a);
            case Fn::Cos: return std::cos(a);
            case Fn::Exp: return std::exp(a);
            case Fn::Tanh: return std::tanh(a);
            case Fn::Abs: return std::abs(a);
            case Fn::Min: return std::min(a, evalNode(n.args[1], env));
            case Fn::Max: return std::max(a, evalNode(n.args[1], env));
            case Fn::Clamp: {
                double lo = evalNode(n.args[1], env);
                double hi = evalNode(n.args[2], env);
                if (lo > hi) throw EvalError("clamp bounds out of order (lo > hi)");
                return std::min(std::max(a, lo), hi);
            }
            }
            throw EvalError("corrupt expression node");
        }
        }
        throw EvalError("corrupt expression node");
    }

    void printNode(int idx, std::string& out) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.kind) {
        case Kind::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        }
        case Kind::Variable: out += var_name(n.var); return;
        case Kind::Unary:
            out += "(-";
            printNode(n.args[0], out);
            out += ')';
            return;
        case Kind::Binary:
            out += '(';
            printNode(n.args[0], out);
            out += n.op;
            printNode(n.args[1], out);
            out += ')';
            return;
        case Kind::Call:
            out += fn_name(n.fn);
            out += '(';
            for (int i = 0; i < n.argCount; ++i) {
                if (i) out += ", ";
                printNode(n.args[i], out);
            }
            out += ')';
            return;
        }
    }

    bool sameNode(int idx, const Expr& other, int oidx) const {
        const Node& a = nodes_[static_cast<std::size_t>(idx)];
        const Node& b = other.nodes_[static_cast<std::size_t>(oidx)];
        if (a.kind != b.kind || a.argCount != b.argCount) return false;
        switch (a.kind) {
        case Kind::Number:
            // bit-compare so 0.0 vs -0.0 count as different literals
            return a.number == b.number && std::signbit(a.number) == std::signbit(b.number);
        case Kind::Variable: return a.var == b.var;
        case Kind::Unary: break;
        case Kind::Binary:
            if (a.op != b.op) return false;
            break;
        case Kind::Call:
            if (a.fn != b.fn) return false;
            break;
        }
        for (int i = 0; i < a.argCount; ++i)
            if (!sameNode(a.args[i], other, b.args[i])) return false;
        return true;
    }

    bool usesVarNode(int idx, Var v) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        if (n.kind == Kind::Variable) return n.var == v;
        for (int i = 0; i < n.argCount; ++i)
            if (usesVarNode(n.args[i], v)) return true;
        return false;
    }
};

} // namespace anisolve
