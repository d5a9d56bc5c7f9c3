#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "cma/fields.hpp"

namespace cma {

/**
 * Restricted expression language for smooth data on the torus.
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('+' | '-') unary | primary
 *   primary := number | 'pi' | x<k> | y<k> | fn '(' expr ')' | '(' expr ')'
 *   fn      := 'sin' | 'cos' | 'exp'
 *
 * with k in 1..n. Function arguments must be affine in the coordinates and
 * divisors must be constant, so every accepted expression is a sum of
 * products of sin/cos/exp of affine combinations of the x^k, y^k.
 * Use integer multiples of 2 pi for frequencies to stay periodic.
 */
class Expression {
public:
    static Expression parse(const std::string& text, int n)
    {
        Parser p{text, n, 0};
        Expression e;
        auto [node, kind] = p.expr();
        p.skip_space();
        if (p.pos != text.size())
            p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        e.root_ = std::move(node);
        e.text_ = text;
        return e;
    }

    const std::string& text() const { return text_; }

    double operator()(const Coords& c) const { return eval(*root_, c); }

    RealField evaluate(const GridPtr& grid) const
    {
        return RealField::from_function(grid, [this](const Coords& c) { return (*this)(c); });
    }

private:
    enum class Kind { constant, affine, general };

    struct Node {
        char op = 0; // 'n' number, 'x'/'y' coordinate, '+', '-', '*', '/', 'm' negate, 's' sin, 'c' cos, 'e' exp
        double value = 0.0;
        int axis = 0;
        std::unique_ptr<Node> a, b;
    };
    using Ptr = std::unique_ptr<Node>;
    struct Typed {
        Ptr node;
        Kind kind;
    };

    static Ptr make(char op, Ptr a = nullptr, Ptr b = nullptr)
    {
        auto node = std::make_unique<Node>();
        node->op = op;
        node->a = std::move(a);
        node->b = std::move(b);
        return node;
    }

    struct Parser {
        const std::string& s;
        int n;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& what) const
        {
            throw Error(ErrorCode::config_error,
                        "expression \"" + s + "\" at column " + std::to_string(pos + 1) + ": " + what);
        }

        void skip_space()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
                ++pos;
        }

        bool accept(char c)
        {
            skip_space();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        Typed expr()
        {
            Typed left = term();
            for (;;) {
                char op = 0;
                if (accept('+'))
                    op = '+';
                else if (accept('-'))
                    op = '-';
                else
                    return left;
                Typed right = term();
                left = {make(op, std::move(left.node), std::move(right.node)), std::max(left.kind, right.kind)};
            }
        }

        Typed term()
        {
            Typed left = unary();
            for (;;) {
                if (accept('*')) {
                    Typed right = unary();
                    Kind k;
                    if (left.kind == Kind::constant)
                        k = right.kind;
                    else if (right.kind == Kind::constant)
                        k = left.kind;
                    else
                        k = Kind::general;
                    left = {make('*', std::move(left.node), std::move(right.node)), k};
                } else if (accept('/')) {
                    const std::size_t at = pos;
                    Typed right = unary();
                    if (right.kind != Kind::constant) {
                        pos = at;
                        fail("divisor must be constant");
                    }
                    if (eval(*right.node, Coords{}) == 0.0) {
                        pos = at;
                        fail("division by zero");
                    }
                    left = {make('/', std::move(left.node), std::move(right.node)), left.kind};
                } else {
                    return left;
                }
            }
        }

        Typed unary()
        {
            if (accept('+'))
                return unary();
            if (accept('-')) {
                Typed t = unary();
                return {make('m', std::move(t.node)), t.kind};
            }
            return primary();
        }

        Typed primary()
        {
            skip_space();
            if (pos >= s.size())
                fail("unexpected end of expression");
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                Typed t = expr();
                if (!accept(')'))
                    fail("expected ')'");
                return t;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (const std::exception&) {
                    fail("malformed number");
                }
                pos += used;
                auto node = make('n');
                node->value = v;
                return {std::move(node), Kind::constant};
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                const std::size_t start = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos])))
                    ++pos;
                const std::string word = s.substr(start, pos - start);
                if (word == "pi") {
                    auto node = make('n');
                    node->value = std::numbers::pi;
                    return {std::move(node), Kind::constant};
                }
                if (word == "sin" || word == "cos" || word == "exp") {
                    if (!accept('('))
                        fail("expected '(' after " + word);
                    const std::size_t arg_at = pos;
                    Typed arg = expr();
                    if (!accept(')'))
                        fail("expected ')'");
                    if (arg.kind == Kind::general) {
                        pos = arg_at;
                        fail("argument of " + word + " must be affine in the coordinates");
                    }
                    const char op = word == "sin" ? 's' : word == "cos" ? 'c' : 'e';
                    return {make(op, std::move(arg.node)),
                            arg.kind == Kind::constant ? Kind::constant : Kind::general};
                }
                if ((word[0] == 'x' || word[0] == 'y') && word.size() == 2 && word[1] >= '1' && word[1] - '0' <= n) {
                    auto node = make(word[0]);
                    node->axis = word[1] - '1';
                    return {std::move(node), Kind::affine};
                }
                pos = start;
                fail("unknown identifier '" + word + "'");
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }
    };

    static double eval(const Node& e, const Coords& c)
    {
        switch (e.op) {
        case 'n': return e.value;
        case 'x': return c.x(e.axis);
        case 'y': return c.y(e.axis);
        case '+': return eval(*e.a, c) + eval(*e.b, c);
        case '-': return eval(*e.a, c) - eval(*e.b, c);
        case '*': return eval(*e.a, c) * eval(*e.b, c);
        case '/': return eval(*e.a, c) / eval(*e.b, c);
        case 'm': return -eval(*e.a, c);
        case 's': return std::sin(eval(*e.a, c));
        case 'c': return std::cos(eval(*e.a, c));
        case 'e': return std::exp(eval(*e.a, c));
        }
        return 0.0;
    }

    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace cma
