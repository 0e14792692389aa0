#pragma once

#include "fglab/expr.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

namespace fglab {

struct ParseError : std::runtime_error {
    size_t offset;  // byte offset into the input
    ParseError(const std::string& m, size_t off)
        : std::runtime_error(m + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' signed-integer)?
//   base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
//   number := integer | integer '/' integer | decimal
// Quotients of integer literals fold to rational constants at parse time, so
// "1/2" is the number one-half while "x/2" stays a quotient node.
namespace detail {

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& m) const { throw ParseError(m, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (eat('+')) e = Expr::add(e, term());
            else if (eat('-')) e = Expr::add(e, negate(term()));
            else return e;
        }
    }

    Expr term() {
        Expr e = factor();
        for (;;) {
            if (eat('*')) e = combine_mul(e, factor());
            else if (eat('/')) e = combine_div(e, factor());
            else return e;
        }
    }

    // integer literal quotients fold immediately
    static Expr combine_div(const Expr& a, const Expr& b) {
        if (a.is_num() && b.is_num() && denominator(a.value()) == 1 && denominator(b.value()) == 1 &&
            b.value() != 0)
            return Expr::num(a.value() / b.value());
        return Expr::div(a, b);
    }

    static Expr combine_mul(const Expr& a, const Expr& b) { return Expr::mul(a, b); }

    Expr factor() {
        Expr b = base();
        skip_ws();
        if (eat('^')) return Expr::pow(b, exponent());
        return b;
    }

    long long exponent() {
        skip_ws();
        size_t start = pos_;
        bool neg = false;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
            neg = s_[pos_] == '-';
            ++pos_;
        }
        if (pos_ >= s_.size() || !std::isdigit((unsigned char)s_[pos_])) fail("expected integer exponent");
        unsigned long long v = 0;
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) {
            v = v * 10 + (unsigned long long)(s_[pos_] - '0');
            if (v > (1ull << 62)) {
                pos_ = start;
                fail("exponent out of range");
            }
            ++pos_;
        }
        return neg ? -(long long)v : (long long)v;
    }

    Expr base() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (c == '-') {
            ++pos_;
            return negate(base());
        }
        if (std::isdigit((unsigned char)c)) return number();
        if (std::isalpha((unsigned char)c) || c == '_') return ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr number() {
        size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
        std::string intpart = s_.substr(start, pos_ - start);
        if (pos_ + 1 < s_.size() && s_[pos_] == '.' && std::isdigit((unsigned char)s_[pos_ + 1])) {
            ++pos_;
            size_t fs = pos_;
            while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
            return Expr::num(rational_from_decimal(intpart, s_.substr(fs, pos_ - fs)));
        }
        return Expr::num(Rational(Integer(intpart)));
    }

    Expr ident() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '_'))
            ++pos_;
        std::string name = s_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            auto f = fn_from_name(name);
            if (!f) {
                pos_ = start;
                fail("unknown function name '" + name + "'");
            }
            ++pos_;
            Expr arg = expr();
            if (!eat(')')) fail("expected ')' closing " + name);
            return Expr::apply(*f, arg);
        }
        return Expr::var(name);
    }
};

} // namespace detail

/// Parse an expression in the toolkit grammar; throws ParseError with a byte offset.
inline Expr parse_expr(const std::string& s) { return detail::Parser(s).parse(); }

} // namespace fglab
