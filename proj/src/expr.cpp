#include "mfl/expr.hpp"

#include <cctype>
#include <cmath>

namespace mfl {

struct Expr::Node {
    enum class Op { Const, CoordX, CoordY, Add, Sub, Mul, Div, Pow, Exp, Neg };
    Op op = Op::Const;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;

    double eval(const Vec2& p) const {
        switch (op) {
            case Op::Const: return value;
            case Op::CoordX: return p.x;
            case Op::CoordY: return p.y;
            case Op::Add: return a->eval(p) + b->eval(p);
            case Op::Sub: return a->eval(p) - b->eval(p);
            case Op::Mul: return a->eval(p) * b->eval(p);
            case Op::Div: return a->eval(p) / b->eval(p);
            case Op::Pow: return std::pow(a->eval(p), b->eval(p));
            case Op::Exp: return std::exp(a->eval(p));
            case Op::Neg: return -a->eval(p);
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression parse error at position " +
                          std::to_string(pos_) + ": " + what + " in \"" + s_ + "\"");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    static NodePtr make(Expr::Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr,
                        double v = 0.0) {
        auto n = std::make_shared<Expr::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        n->value = v;
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (eat('+')) lhs = make(Expr::Node::Op::Add, lhs, term());
            else if (eat('-')) lhs = make(Expr::Node::Op::Sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (eat('*')) lhs = make(Expr::Node::Op::Mul, lhs, factor());
            else if (eat('/')) lhs = make(Expr::Node::Op::Div, lhs, factor());
            else return lhs;
        }
    }

    NodePtr factor() {
        NodePtr base = atom();
        if (eat('^'))  // right-associative
            return make(Expr::Node::Op::Pow, base, factor());
        return base;
    }

    bool try_word(const char* w) {
        skip_ws();
        std::size_t n = std::string(w).size();
        if (s_.compare(pos_, n, w) != 0) return false;
        // must not be a prefix of a longer identifier
        if (pos_ + n < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_ + n])))
            return false;
        pos_ += n;
        return true;
    }

    NodePtr atom() {
        skip_ws();
        if (eat('-')) return make(Expr::Node::Op::Neg, atom());
        if (eat('(')) {
            NodePtr e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (try_word("exp")) {
            if (!eat('(')) fail("expected '(' after exp");
            NodePtr e = expr();
            if (!eat(')')) fail("expected ')'");
            return make(Expr::Node::Op::Exp, e);
        }
        if (try_word("pi")) return make(Expr::Node::Op::Const, nullptr, nullptr, kPi);
        if (try_word("x1") || try_word("x")) return make(Expr::Node::Op::CoordX);
        if (try_word("x2") || try_word("y")) return make(Expr::Node::Op::CoordY);
        if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
            std::size_t used = 0;
            double v = std::stod(s_.substr(pos_), &used);
            pos_ += used;
            // allow "2pi" style literals
            if (try_word("pi")) v *= kPi;
            return make(Expr::Node::Op::Const, nullptr, nullptr, v);
        }
        fail("expected number, coordinate, or function");
    }
};

}  // namespace

Expr Expr::parse(const std::string& text) {
    Expr e;
    e.root_ = Parser(text).parse();
    e.text_ = text;
    return e;
}

double Expr::eval(const Vec2& p) const {
    if (!root_) throw ConfigError("evaluating an empty expression");
    double v = root_->eval(p);
    if (!std::isfinite(v))
        throw NumericError("expression \"" + text_ + "\" evaluated to a non-finite value");
    return v;
}

double parse_pi_literal(const std::string& text) {
    Expr e = Expr::parse(text);
    return e.eval(Vec2{0.0, 0.0});
}

}  // namespace mfl
