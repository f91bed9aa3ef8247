#pragma once

// Tiny arithmetic grammar for positive weight functions given in config files.
// Supported: numbers, `pi`, coordinates `x` and `y` (aliases x1/x2), + - * /,
// `^` powers, exp(...), parentheses, unary minus.

#include <memory>
#include <string>

#include "mfl/common.hpp"

namespace mfl {

class Expr {
public:
    /// Parses the expression; throws ConfigError with position info on bad input.
    static Expr parse(const std::string& text);

    double eval(const Vec2& p) const;
    const std::string& text() const { return text_; }

    Expr() = default;

    struct Node;  // exposed for the parser implementation

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

/// Parses strings like "6pi", "4 pi", "12.5", "2pi/3" into a double.
/// Used for resonance targets in config files.
double parse_pi_literal(const std::string& text);

}  // namespace mfl
