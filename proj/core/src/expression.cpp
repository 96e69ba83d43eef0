#include "fbsde/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

#include "fbsde/errors.hpp"

namespace fbsde {

class ExpressionParser {
public:
    ExpressionParser(const std::string& text, int n, int d) : s_(text), n_(n), d_(d) {}

    Expression run() {
        Expression e;
        e.text_ = s_;
        e.n_ = n_;
        e.d_ = d_;
        skip_ws();
        if (pos_ >= s_.size()) fail("empty expression");
        expr();
        skip_ws();
        if (pos_ < s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
        e.code_ = std::move(code_);
        int depth = 0, max_depth = 0;
        for (const auto& in : e.code_) {
            switch (in.op) {
                case Expression::Op::push:
                case Expression::Op::var_t:
                case Expression::Op::var_x:
                case Expression::Op::var_y:
                case Expression::Op::var_z: ++depth; break;
                case Expression::Op::add:
                case Expression::Op::sub:
                case Expression::Op::mul:
                case Expression::Op::div:
                case Expression::Op::min:
                case Expression::Op::max: --depth; break;
                default: break;
            }
            if (in.op == Expression::Op::var_z) e.uses_z_ = true;
            if (in.op == Expression::Op::var_x) e.uses_x_ = true;
            if (in.op == Expression::Op::var_y) e.uses_y_ = true;
            if (in.op >= Expression::Op::var_t && in.op <= Expression::Op::var_z) e.constant_ = false;
            max_depth = std::max(max_depth, depth);
        }
        if (max_depth > kExpressionMaxDepth) fail("expression nests too deeply");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }

    [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < s_.size(); ++i) {
            if (s_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error("expression_syntax",
                    "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    void emit(Expression::Op op, int index = 0, double value = 0.0) { code_.push_back({op, index, value}); }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(Expression::Op::add);
            } else if (accept('-')) {
                term();
                emit(Expression::Op::sub);
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) {
                unary();
                emit(Expression::Op::mul);
            } else if (accept('/')) {
                unary();
                emit(Expression::Op::div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(Expression::Op::neg);
            return;
        }
        if (accept('+')) {
            unary();
            return;
        }
        primary();
    }

    void primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            identifier();
            return;
        }
        fail(std::string("unexpected '") + c + "'");
    }

    void number() {
        const std::size_t start = pos_;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
        if (ec != std::errc() || ptr == s_.data() + pos_) fail_at(start, "malformed number");
        pos_ = static_cast<std::size_t>(ptr - s_.data());
        if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
            fail("malformed number");
        }
        emit(Expression::Op::push, 0, v);
    }

    static std::optional<Expression::Op> function(const std::string& name) {
        using O = Expression::Op;
        if (name == "exp") return O::exp;
        if (name == "log") return O::log;
        if (name == "sqrt") return O::sqrt;
        if (name == "abs") return O::abs;
        if (name == "tanh") return O::tanh;
        if (name == "sin") return O::sin;
        if (name == "cos") return O::cos;
        if (name == "min") return O::min;
        if (name == "max") return O::max;
        return std::nullopt;
    }

    // Digits after a variable prefix: "1", "_1", "12", "1_2", "_1_2".
    static std::optional<std::vector<int>> indices(const std::string& rest, bool pairs) {
        std::vector<int> out;
        std::string cur;
        bool separated = false;
        for (const char ch : rest) {
            if (ch == '_') {
                if (!cur.empty()) {
                    out.push_back(std::stoi(cur));
                    cur.clear();
                }
                separated = true;
            } else if (std::isdigit(static_cast<unsigned char>(ch))) {
                cur += ch;
            } else {
                return std::nullopt;
            }
        }
        if (!cur.empty()) out.push_back(std::stoi(cur));
        if (pairs && !separated && out.size() == 1 && rest.size() == 2) {
            // z11 style: one digit per index.
            return std::vector<int>{rest[0] - '0', rest[1] - '0'};
        }
        return out;
    }

    void identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (const auto f = function(name)) {
            expect('(');
            expr();
            if (*f == Expression::Op::min || *f == Expression::Op::max) {
                expect(',');
                expr();
            }
            expect(')');
            emit(*f);
            return;
        }
        if (name == "pi") {
            emit(Expression::Op::push, 0, std::numbers::pi);
            return;
        }
        if (name == "t") {
            emit(Expression::Op::var_t);
            return;
        }
        if (name == "x") {
            emit(Expression::Op::var_x);
            return;
        }
        if (name.size() > 1 && (name[0] == 'y' || name[0] == 'z')) {
            const auto idx = indices(name.substr(1), name[0] == 'z');
            if (idx) {
                if (name[0] == 'y' && idx->size() == 1) {
                    const int i = (*idx)[0];
                    if (i < 1 || i > n_) fail_at(start, "'" + name + "' is outside y1..y" + std::to_string(n_));
                    emit(Expression::Op::var_y, i - 1);
                    return;
                }
                if (name[0] == 'z' && idx->size() == 2) {
                    const int i = (*idx)[0], k = (*idx)[1];
                    if (i < 1 || i > n_ || k < 1 || k > d_) {
                        fail_at(start, "'" + name + "' is outside the " + std::to_string(n_) + " x " +
                                           std::to_string(d_) + " z block");
                    }
                    emit(Expression::Op::var_z, (i - 1) * d_ + (k - 1));
                    return;
                }
                if (name[0] == 'z' && idx->size() == 1 && d_ == 1) {
                    const int i = (*idx)[0];
                    if (i < 1 || i > n_) fail_at(start, "'" + name + "' is outside z1..z" + std::to_string(n_));
                    emit(Expression::Op::var_z, i - 1);
                    return;
                }
            }
        }
        if (name == "y" && n_ == 1) {
            emit(Expression::Op::var_y, 0);
            return;
        }
        if (name == "z" && n_ == 1 && d_ == 1) {
            emit(Expression::Op::var_z, 0);
            return;
        }
        fail_at(start, "unknown identifier '" + name + "'");
    }

    const std::string& s_;
    int n_;
    int d_;
    std::size_t pos_ = 0;
    std::vector<Expression::Instr> code_;
};

Expression Expression::compile(const std::string& text, int n, int d) {
    if (n < 1 || d < 1) throw PreconditionError("expression: dimensions must be positive");
    return ExpressionParser(text, n, d).run();
}

double Expression::operator()(double t, double x, std::span<const double> y, std::span<const double> z) const {
    std::array<double, kExpressionMaxDepth> st{};
    int sp = 0;
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::push: st[sp++] = in.value; break;
            case Op::var_t: st[sp++] = t; break;
            case Op::var_x: st[sp++] = x; break;
            case Op::var_y: st[sp++] = y[static_cast<std::size_t>(in.index)]; break;
            case Op::var_z: st[sp++] = z[static_cast<std::size_t>(in.index)]; break;
            case Op::neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::add: --sp; st[sp - 1] = st[sp - 1] + st[sp]; break;
            case Op::sub: --sp; st[sp - 1] = st[sp - 1] - st[sp]; break;
            case Op::mul: --sp; st[sp - 1] = st[sp - 1] * st[sp]; break;
            case Op::div: --sp; st[sp - 1] = st[sp - 1] / st[sp]; break;
            case Op::min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
            case Op::max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
            case Op::exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Op::log: st[sp - 1] = std::log(st[sp - 1]); break;
            case Op::sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
            case Op::abs: st[sp - 1] = std::abs(st[sp - 1]); break;
            case Op::tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
            case Op::sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Op::cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        }
    }
    return st[0];
}

}  // namespace fbsde
