#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fbsde {

/// Compiled arithmetic expression over (t, x, y, z).
///
/// Grammar: numbers, the constant `pi`, variables `t`, `x`, `y<i>`, `z<i><k>`
/// (also `y_<i>`, `z<i>_<k>`, `z_<i>_<k>`, 1-based), binary + - * /, unary
/// minus, parentheses, and the functions exp, log, sqrt, abs, tanh, sin, cos
/// (one argument) and min, max (two arguments). Binary operators are
/// left-associative, so `x - y1 - z11` evaluates as `(x - y1) - z11`.
class Expression {
public:
    /// Throws Error("expression_syntax") with line and column on malformed
    /// input or on identifiers outside the given dimensions.
    static Expression compile(const std::string& text, int n = 1, int d = 1);

    [[nodiscard]] double operator()(double t, double x, std::span<const double> y, std::span<const double> z) const;

    [[nodiscard]] const std::string& text() const { return text_; }
    /// True when the expression references z.
    [[nodiscard]] bool uses_z() const { return uses_z_; }
    /// True when the expression references y.
    [[nodiscard]] bool uses_y() const { return uses_y_; }
    /// True when the expression references x.
    [[nodiscard]] bool uses_x() const { return uses_x_; }
    /// True when the output does not depend on any variable.
    [[nodiscard]] bool is_constant() const { return constant_; }

    enum class Op : std::uint8_t { push, var_t, var_x, var_y, var_z, neg, add, sub, mul, div, exp, log, sqrt, abs, tanh, sin, cos, min, max };
    struct Instr {
        Op op;
        int index = 0;
        double value = 0.0;
    };

private:
    std::string text_;
    std::vector<Instr> code_;
    int n_ = 1;
    int d_ = 1;
    bool uses_z_ = false;
    bool uses_x_ = false;
    bool uses_y_ = false;
    bool constant_ = true;
    friend class ExpressionParser;
};

/// Maximum evaluation stack depth accepted by Expression::compile.
inline constexpr int kExpressionMaxDepth = 64;

}  // namespace fbsde
