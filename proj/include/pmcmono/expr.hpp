#pragma once

// Exact sparse multivariate polynomials and rational functions over Q.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmcmono/error.hpp"

namespace pmcmono {

using Rational = mpq_class;
using Exponents = std::vector<std::uint32_t>;

/// Default cap on the number of terms of any intermediate polynomial.
inline constexpr std::size_t kDefaultTermCap = 1'000'000;

// ---------------------------------------------------------------------------
// Rational helpers
// ---------------------------------------------------------------------------

inline Rational make_rational(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// Parses "3", "-0.25", "1/3" or "2.5e-1" into an exact rational.
inline std::optional<Rational> parse_rational(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t end = text.size();
    while (end > i && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    text = text.substr(i, end - i);
    if (text.empty()) return std::nullopt;

    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    if (text.empty()) return std::nullopt;

    auto all_digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c)) != 0;
        });
    };

    Rational value;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = text.substr(0, slash);
        auto den = text.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) return std::nullopt;
        mpz_class d(std::string(den), 10);
        if (d == 0) return std::nullopt;
        value = Rational(mpz_class(std::string(num), 10), d);
        value.canonicalize();
    } else {
        std::string_view mantissa = text;
        long exponent = 0;
        if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
            mantissa = text.substr(0, e);
            auto exp_text = text.substr(e + 1);
            bool exp_negative = false;
            if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
                exp_negative = exp_text.front() == '-';
                exp_text.remove_prefix(1);
            }
            if (!all_digits(exp_text) || exp_text.size() > 6) return std::nullopt;
            exponent = std::stol(std::string(exp_text));
            if (exp_negative) exponent = -exponent;
        }
        std::string digits;
        long scale = 0;
        if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
            auto whole = mantissa.substr(0, dot);
            auto frac = mantissa.substr(dot + 1);
            if (whole.empty() && frac.empty()) return std::nullopt;
            if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)))
                return std::nullopt;
            digits = std::string(whole) + std::string(frac);
            scale = static_cast<long>(frac.size());
        } else {
            if (!all_digits(mantissa)) return std::nullopt;
            digits = std::string(mantissa);
        }
        scale -= exponent;
        mpz_class num(digits, 10);
        mpz_class pow10;
        mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
        if (scale >= 0) {
            value = Rational(num, pow10);
        } else {
            value = Rational(num * pow10, 1);
        }
        value.canonicalize();
    }
    if (negative) value = -value;
    return value;
}

/// Renders "n" or "n/d".
inline std::string to_string(const Rational& r) { return r.get_str(); }

/// Renders a rational as a finite decimal when possible, else as "n/d".
inline std::string to_decimal_string(const Rational& r) {
    mpz_class den = r.get_den();
    int twos = 0;
    int fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
    if (den != 1) return r.get_str();
    int digits = std::max(twos, fives);
    if (digits == 0) return r.get_num().get_str();
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    mpz_class scaled = r.get_num() * scale / r.get_den();
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string s = scaled.get_str();
    if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    return negative ? "-" + s : s;
}

inline Rational pow(const Rational& base, std::uint32_t exponent) {
    Rational result(1);
    Rational b = base;
    while (exponent > 0) {
        if (exponent & 1u) result *= b;
        exponent >>= 1;
        if (exponent > 0) b *= b;
    }
    return result;
}

inline int sign(const Rational& r) { return sgn(r); }

// ---------------------------------------------------------------------------
// Polynomial
// ---------------------------------------------------------------------------

/// Sparse multivariate polynomial with rational coefficients in canonical form:
/// no stored coefficient is zero and every exponent vector has length arity().
class Polynomial {
public:
    using Terms = std::map<Exponents, Rational>;

    Polynomial() = default;
    explicit Polynomial(std::size_t arity) : arity_(arity) {}

    static Polynomial constant(std::size_t arity, const Rational& c) {
        Polynomial p(arity);
        p.add_term(Exponents(arity, 0), c);
        return p;
    }

    static Polynomial variable(std::size_t arity, std::size_t index) {
        if (index >= arity) throw std::out_of_range("Polynomial::variable: index out of range");
        Polynomial p(arity);
        Exponents e(arity, 0);
        e[index] = 1;
        p.terms_.emplace(std::move(e), Rational(1));
        return p;
    }

    static Polynomial monomial(Exponents exps, const Rational& c) {
        Polynomial p(exps.size());
        p.add_term(exps, c);
        return p;
    }

    std::size_t arity() const noexcept { return arity_; }
    const Terms& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    bool is_constant() const {
        return terms_.empty() ||
               (terms_.size() == 1 && std::all_of(terms_.begin()->first.begin(), terms_.begin()->first.end(),
                                                  [](std::uint32_t e) { return e == 0; }));
    }

    /// Value of a constant polynomial; nullopt when it depends on a parameter.
    std::optional<Rational> constant_value() const {
        if (!is_constant()) return std::nullopt;
        return terms_.empty() ? Rational(0) : terms_.begin()->second;
    }

    std::uint32_t degree_in(std::size_t var) const {
        std::uint32_t d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, e.at(var));
        return d;
    }

    std::uint32_t total_degree() const {
        std::uint32_t d = 0;
        for (const auto& [e, c] : terms_) {
            std::uint32_t s = 0;
            for (auto x : e) s += x;
            d = std::max(d, s);
        }
        return d;
    }

    bool depends_on(std::size_t var) const { return var < arity_ && degree_in(var) > 0; }

    /// Indices of the parameters that occur in the polynomial.
    std::vector<std::size_t> variables() const {
        std::vector<std::size_t> vars;
        for (std::size_t v = 0; v < arity_; ++v)
            if (degree_in(v) > 0) vars.push_back(v);
        return vars;
    }

    /// Degree at most one in every parameter.
    bool is_multi_affine() const {
        for (const auto& [e, c] : terms_)
            for (auto x : e)
                if (x > 1) return false;
        return true;
    }

    /// Terms ordered by descending total degree, then descending exponents.
    std::vector<std::pair<Exponents, Rational>> sorted_terms() const {
        std::vector<std::pair<Exponents, Rational>> out(terms_.begin(), terms_.end());
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            std::uint32_t da = 0, db = 0;
            for (auto x : a.first) da += x;
            for (auto x : b.first) db += x;
            if (da != db) return da > db;
            return a.first > b.first;
        });
        return out;
    }

    /// Coefficient of the first term in sorted_terms() order.
    Rational leading_coefficient() const {
        if (terms_.empty()) return 0;
        return sorted_terms().front().second;
    }

    Rational coefficient(const Exponents& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    Polynomial with_arity(std::size_t arity) const {
        if (arity == arity_) return *this;
        if (arity_ != 0 && !is_zero()) {
            if (arity < arity_) throw std::invalid_argument("Polynomial: cannot shrink arity");
        }
        Polynomial p(arity);
        for (const auto& [e, c] : terms_) {
            Exponents ne(arity, 0);
            std::copy(e.begin(), e.end(), ne.begin());
            p.terms_.emplace(std::move(ne), c);
        }
        return p;
    }

    Polynomial& operator+=(const Polynomial& o) {
        unify(o);
        if (o.arity_ != arity_) return *this += o.with_arity(arity_);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }

    Polynomial& operator-=(const Polynomial& o) {
        unify(o);
        if (o.arity_ != arity_) return *this -= o.with_arity(arity_);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }

    Polynomial& operator*=(const Rational& k) {
        if (k == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= k;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, const Rational& k) { return a *= k; }
    friend Polynomial operator*(const Rational& k, Polynomial a) { return a *= k; }

    friend Polynomial operator-(Polynomial a) {
        for (auto& [e, c] : a.terms_) c = -c;
        return a;
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::size_t arity = std::max(a.arity_, b.arity_);
        if (a.arity_ != arity) return a.with_arity(arity) * b;
        if (b.arity_ != arity) return a * b.with_arity(arity);
        Polynomial out(arity);
        Exponents e(arity);
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                for (std::size_t i = 0; i < arity; ++i) e[i] = ea[i] + eb[i];
                out.add_term(e, ca * cb);
            }
        }
        return out;
    }

    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

    friend bool operator==(const Polynomial& a, const Polynomial& b) {
        if (a.arity_ == b.arity_) return a.terms_ == b.terms_;
        std::size_t arity = std::max(a.arity_, b.arity_);
        return a.with_arity(arity).terms_ == b.with_arity(arity).terms_;
    }

    Polynomial pow(std::uint32_t k) const {
        Polynomial result = constant(arity_, 1);
        Polynomial base = *this;
        while (k > 0) {
            if (k & 1u) result *= base;
            k >>= 1;
            if (k > 0) base *= base;
        }
        return result;
    }

    /// Formal partial derivative with respect to parameter `var`.
    Polynomial derivative(std::size_t var) const {
        if (var >= arity_ && arity_ != 0) throw std::out_of_range("Polynomial::derivative: parameter out of range");
        Polynomial out(arity_);
        if (var >= arity_) return out;
        for (const auto& [e, c] : terms_) {
            if (e[var] == 0) continue;
            Exponents ne = e;
            ne[var] -= 1;
            out.add_term(ne, c * e[var]);
        }
        return out;
    }

    /// Exact evaluation; u must assign every parameter.
    Rational evaluate(std::span<const Rational> u) const {
        if (u.size() < arity_) throw std::invalid_argument("Polynomial::evaluate: instantiation too short");
        std::vector<std::vector<Rational>> powers(arity_);
        for (std::size_t v = 0; v < arity_; ++v) {
            std::uint32_t d = degree_in(v);
            powers[v].reserve(d + 1);
            powers[v].emplace_back(1);
            for (std::uint32_t k = 1; k <= d; ++k) powers[v].push_back(powers[v].back() * u[v]);
        }
        Rational sum(0);
        Rational term;
        for (const auto& [e, c] : terms_) {
            term = c;
            for (std::size_t v = 0; v < arity_; ++v)
                if (e[v] != 0) term *= powers[v][e[v]];
            sum += term;
        }
        return sum;
    }

    double evaluate_double(std::span<const double> u) const {
        double sum = 0.0;
        for (const auto& [e, c] : terms_) {
            double term = c.get_d();
            for (std::size_t v = 0; v < arity_; ++v)
                for (std::uint32_t k = 0; k < e[v]; ++k) term *= u[v];
            sum += term;
        }
        return sum;
    }

    /// Substitutes value for parameter var (arity is preserved).
    Polynomial substitute(std::size_t var, const Rational& value) const {
        Polynomial out(arity_);
        for (const auto& [e, c] : terms_) {
            Exponents ne = e;
            ne[var] = 0;
            out.add_term(ne, c * pmcmono::pow(value, e[var]));
        }
        return out;
    }

    /// Positive rational c such that this / c has coprime integer coefficients.
    Rational content() const {
        if (terms_.empty()) return 1;
        mpz_class num_gcd = 0;
        mpz_class den_lcm = 1;
        for (const auto& [e, c] : terms_) {
            mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), c.get_num_mpz_t());
            mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), c.get_den_mpz_t());
        }
        Rational r(num_gcd, den_lcm);
        r.canonicalize();
        return r;
    }

    /// Componentwise minimum exponent over all terms (the monomial gcd).
    Exponents min_exponents() const {
        Exponents m(arity_, 0);
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (first) {
                m = e;
                first = false;
            } else {
                for (std::size_t i = 0; i < arity_; ++i) m[i] = std::min(m[i], e[i]);
            }
        }
        return m;
    }

    /// Divides every term by the monomial x^m (m must divide each term).
    Polynomial divide_monomial(const Exponents& m) const {
        Polynomial out(arity_);
        for (const auto& [e, c] : terms_) {
            Exponents ne = e;
            for (std::size_t i = 0; i < arity_; ++i) ne[i] -= m[i];
            out.terms_.emplace(std::move(ne), c);
        }
        return out;
    }

    /// Renders the polynomial in the expression grammar, e.g. "-p^3 + p^2 + p".
    std::string to_string(std::span<const std::string> names) const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [e, c] : sorted_terms()) {
            bool is_const = std::all_of(e.begin(), e.end(), [](std::uint32_t x) { return x == 0; });
            Rational mag = abs(c);
            if (first) {
                if (c < 0) out += "-";
            } else {
                out += c < 0 ? " - " : " + ";
            }
            first = false;
            bool need_star = false;
            if (is_const || mag != 1) {
                out += mag.get_str();
                need_star = true;
            }
            for (std::size_t v = 0; v < arity_; ++v) {
                if (e[v] == 0) continue;
                if (need_star) out += "*";
                out += v < names.size() ? names[v] : "x" + std::to_string(v);
                if (e[v] > 1) out += "^" + std::to_string(e[v]);
                need_star = true;
            }
        }
        return out;
    }

    void add_term(const Exponents& e, const Rational& c) {
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (inserted) {
            it->second.canonicalize();
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

private:
    void unify(const Polynomial& o) {
        if (arity_ < o.arity_) *this = with_arity(o.arity_);
    }

    std::size_t arity_ = 0;
    Terms terms_;
};

/// Exact division a / b when b divides a; nullopt otherwise.
inline std::optional<Polynomial> divide_exact(const Polynomial& a, const Polynomial& b) {
    if (b.is_zero()) throw MathError("division by the zero polynomial");
    std::size_t arity = std::max(a.arity(), b.arity());
    Polynomial r = a.with_arity(arity);
    Polynomial d = b.with_arity(arity);
    Polynomial q(arity);
    if (r.is_zero()) return q;
    // Lexicographic leading terms: std::map orders exponent vectors ascending.
    const auto& [lead_e, lead_c] = *d.terms().rbegin();
    while (!r.is_zero()) {
        const auto& [re, rc] = *r.terms().rbegin();
        Exponents qe(arity);
        for (std::size_t i = 0; i < arity; ++i) {
            if (re[i] < lead_e[i]) return std::nullopt;
            qe[i] = re[i] - lead_e[i];
        }
        Polynomial t = Polynomial::monomial(qe, rc / lead_c);
        q += t;
        r -= t * d;
    }
    return q;
}

namespace detail {

// Dense univariate representation (index = degree) used by the gcd below.
using Dense = std::vector<Rational>;

inline void trim(Dense& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline Dense to_dense(const Polynomial& p, std::size_t var) {
    Dense d(p.degree_in(var) + 1, Rational(0));
    for (const auto& [e, c] : p.terms()) d[e[var]] += c;
    trim(d);
    return d;
}

inline Polynomial from_dense(const Dense& d, std::size_t arity, std::size_t var) {
    Polynomial p(arity);
    for (std::size_t k = 0; k < d.size(); ++k) {
        Exponents e(arity, 0);
        e[var] = static_cast<std::uint32_t>(k);
        p.add_term(e, d[k]);
    }
    return p;
}

inline Dense dense_mod(Dense a, const Dense& b) {
    while (a.size() >= b.size() && !a.empty()) {
        Rational f = a.back() / b.back();
        std::size_t shift = a.size() - b.size();
        for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
        trim(a);
    }
    return a;
}

inline Dense dense_gcd(Dense a, Dense b) {
    while (!b.empty()) {
        Dense r = dense_mod(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty()) {
        Rational lead = a.back();
        for (auto& c : a) c /= lead;
    }
    return a;
}

} // namespace detail

/// Monic gcd of two polynomials that depend on at most the single parameter var.
inline Polynomial univariate_gcd(const Polynomial& a, const Polynomial& b, std::size_t var) {
    std::size_t arity = std::max(a.arity(), b.arity());
    auto g = detail::dense_gcd(detail::to_dense(a.with_arity(arity), var), detail::to_dense(b.with_arity(arity), var));
    return detail::from_dense(g, arity, var);
}

// ---------------------------------------------------------------------------
// Expression parsing
// ---------------------------------------------------------------------------

namespace detail {

class ExprParser {
public:
    ExprParser(std::string_view text, std::span<const std::string> params, std::size_t line)
        : text_(text), params_(params), line_(line) {}

    Polynomial parse_polynomial() {
        Polynomial p = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return p;
    }

    /// numerator ['/' denominator]; both sides are full expressions.
    std::pair<Polynomial, Polynomial> parse_fraction() {
        Polynomial num = expr();
        skip_ws();
        Polynomial den = Polynomial::constant(params_.size(), 1);
        if (pos_ < text_.size() && text_[pos_] == '/') {
            ++pos_;
            den = expr();
            skip_ws();
        }
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return {std::move(num), std::move(den)};
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, pos_ + 1); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Polynomial expr() {
        Polynomial acc = term();
        while (true) {
            if (accept('+')) {
                acc += term();
            } else if (accept('-')) {
                acc -= term();
            } else {
                return acc;
            }
        }
    }

    Polynomial term() {
        bool negate = false;
        while (true) {
            if (accept('-')) {
                negate = !negate;
            } else if (!accept('+')) {
                break;
            }
        }
        Polynomial acc = factor();
        while (accept('*')) acc *= factor();
        return negate ? -acc : acc;
    }

    Polynomial factor() {
        Polynomial b = base();
        if (accept('^')) {
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '-') fail("negative exponent");
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("expected natural exponent after '^'");
            auto digits = text_.substr(start, pos_ - start);
            if (digits.size() > 6) fail("exponent too large");
            b = b.pow(static_cast<std::uint32_t>(std::stoul(std::string(digits))));
        }
        return b;
    }

    Polynomial base() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Polynomial inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Polynomial::constant(params_.size(), number());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            for (std::size_t i = 0; i < params_.size(); ++i)
                if (params_[i] == name) return Polynomial::variable(params_.size(), i);
            pos_ = start;
            fail("unknown parameter '" + name + "'");
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    // decimal | integer '/' integer (no whitespace inside a fraction literal)
    Rational number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ + 1 < text_.size() && text_[pos_] == '/' && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) &&
            text_.substr(start, pos_ - start).find('.') == std::string_view::npos) {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        auto value = parse_rational(text_.substr(start, pos_ - start));
        if (!value) {
            pos_ = start;
            fail("malformed number");
        }
        return *value;
    }

    std::string_view text_;
    std::span<const std::string> params_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses an expression (constants, parameters, + - * ^k, parentheses) into its
/// expanded canonical polynomial. `line` is only used for error locations.
inline Polynomial parse_expr(std::string_view text, std::span<const std::string> params, std::size_t line = 0) {
    return detail::ExprParser(text, params, line).parse_polynomial();
}

// ---------------------------------------------------------------------------
// RationalFunction
// ---------------------------------------------------------------------------

/// num / den with den != 0. The denominator is kept primitive (coprime integer
/// coefficients, positive leading coefficient); common factors are cancelled
/// when cheap: monomial factors, exact divisibility, and univariate gcds.
class RationalFunction {
public:
    RationalFunction() : num_(), den_(Polynomial::constant(0, 1)) {}

    RationalFunction(Polynomial num) // NOLINT(google-explicit-constructor)
        : num_(std::move(num)), den_(Polynomial::constant(num_.arity(), 1)) {}

    RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw MathError("rational function with zero denominator");
        std::size_t arity = std::max(num_.arity(), den_.arity());
        num_ = num_.with_arity(arity);
        den_ = den_.with_arity(arity);
        normalize();
    }

    static RationalFunction constant(std::size_t arity, const Rational& c) {
        return RationalFunction(Polynomial::constant(arity, c));
    }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }
    std::size_t arity() const noexcept { return std::max(num_.arity(), den_.arity()); }
    bool is_zero() const noexcept { return num_.is_zero(); }
    bool is_polynomial() const { return den_.is_constant(); }
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
    std::size_t term_count() const { return num_.size() + den_.size(); }

    std::optional<Rational> constant_value() const {
        if (!is_constant()) return std::nullopt;
        return *num_.constant_value() / *den_.constant_value();
    }

    bool depends_on(std::size_t var) const { return num_.depends_on(var) || den_.depends_on(var); }

    /// The numerator polynomial when the denominator is the constant 1.
    std::optional<Polynomial> as_polynomial() const {
        if (!den_.is_constant()) return std::nullopt;
        return num_ * (Rational(1) / *den_.constant_value());
    }

    Rational evaluate(std::span<const Rational> u) const {
        Rational d = den_.evaluate(u);
        if (d == 0) throw MathError("denominator evaluates to zero");
        return num_.evaluate(u) / d;
    }

    double evaluate_double(std::span<const double> u) const { return num_.evaluate_double(u) / den_.evaluate_double(u); }

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.den_ == b.den_) return RationalFunction(a.num_ + b.num_, a.den_);
        if (b.den_.is_constant()) return RationalFunction(a.num_ * *b.den_.constant_value() + b.num_ * a.den_, a.den_ * b.den_);
        return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }

    friend RationalFunction operator-(const RationalFunction& a) {
        RationalFunction r = a;
        r.num_ = -r.num_;
        return r;
    }

    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) { return a + (-b); }

    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
        if (a.is_zero() || b.is_zero()) return RationalFunction(Polynomial(std::max(a.arity(), b.arity())));
        return RationalFunction(a.num_ * b.num_, a.den_ * b.den_);
    }

    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
        if (b.is_zero()) throw MathError("division by the zero rational function");
        return RationalFunction(a.num_ * b.den_, a.den_ * b.num_);
    }

    RationalFunction& operator+=(const RationalFunction& o) { return *this = *this + o; }
    RationalFunction& operator-=(const RationalFunction& o) { return *this = *this - o; }
    RationalFunction& operator*=(const RationalFunction& o) { return *this = *this * o; }

    /// Structural equality of the normalized representation.
    friend bool operator==(const RationalFunction& a, const RationalFunction& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    /// Mathematical equality by cross-multiplication.
    bool equivalent(const RationalFunction& o) const { return (num_ * o.den_ - o.num_ * den_).is_zero(); }

    /// Numerator of the partial derivative: num' * den - num * den'. The full
    /// derivative is this divided by den^2, so its sign equals the sign of the
    /// returned polynomial wherever den is nonzero.
    Polynomial derivative_numerator(std::size_t var) const {
        if (den_.is_constant()) {
            return num_.derivative(var) * (Rational(1) / *den_.constant_value());
        }
        return num_.derivative(var) * den_ - num_ * den_.derivative(var);
    }

    RationalFunction derivative(std::size_t var) const {
        if (den_.is_constant()) return RationalFunction(derivative_numerator(var));
        return RationalFunction(derivative_numerator(var), den_ * den_);
    }

    std::string to_string(std::span<const std::string> names) const {
        if (den_.is_constant()) {
            Rational d = *den_.constant_value();
            return (num_ * (Rational(1) / d)).to_string(names);
        }
        std::string n = num_.to_string(names);
        if (num_.size() > 1) n = "(" + n + ")";
        std::string d = den_.to_string(names);
        if (den_.size() > 1) d = "(" + d + ")";
        return n + " / " + d;
    }

private:
    void normalize() {
        std::size_t arity = std::max(num_.arity(), den_.arity());
        num_ = num_.with_arity(arity);
        den_ = den_.with_arity(arity);
        if (num_.is_zero()) {
            den_ = Polynomial::constant(arity, 1);
            return;
        }
        if (den_.is_constant()) {
            num_ *= Rational(1) / *den_.constant_value();
            den_ = Polynomial::constant(arity, 1);
            return;
        }
        // Common monomial factor.
        Exponents mn = num_.min_exponents();
        Exponents md = den_.min_exponents();
        bool shared = false;
        for (std::size_t i = 0; i < arity; ++i) {
            md[i] = std::min(mn[i], md[i]);
            shared = shared || md[i] > 0;
        }
        if (shared) {
            num_ = num_.divide_monomial(md);
            den_ = den_.divide_monomial(md);
        }
        cancel_common_factor();
        if (den_.is_constant()) {
            num_ *= Rational(1) / *den_.constant_value();
            den_ = Polynomial::constant(arity, 1);
            return;
        }
        Rational scale = den_.content();
        if (den_.leading_coefficient() < 0) scale = -scale;
        if (scale != 1) {
            Rational inv = Rational(1) / scale;
            num_ *= inv;
            den_ *= inv;
        }
    }

    void cancel_common_factor() {
        // Univariate in the same parameter: full gcd.
        auto nv = num_.variables();
        auto dv = den_.variables();
        if (dv.size() == 1 && (nv.empty() || (nv.size() == 1 && nv[0] == dv[0]))) {
            if (nv.empty()) return;
            Polynomial g = univariate_gcd(num_, den_, dv[0]);
            if (!g.is_constant()) {
                num_ = *divide_exact(num_, g);
                den_ = *divide_exact(den_, g);
            }
            return;
        }
        if (auto q = divide_exact(num_, den_)) {
            num_ = std::move(*q);
            den_ = Polynomial::constant(num_.arity(), 1);
            return;
        }
        if (!num_.is_constant() && num_.size() <= den_.size()) {
            if (auto q = divide_exact(den_, num_)) {
                den_ = std::move(*q);
                num_ = Polynomial::constant(den_.arity(), 1);
            }
        }
    }

    Polynomial num_;
    Polynomial den_;
};

/// Parses "expr" or "expr / expr" into a rational function.
inline RationalFunction parse_rational_function(std::string_view text, std::span<const std::string> params,
                                                std::size_t line = 0) {
    auto [num, den] = detail::ExprParser(text, params, line).parse_fraction();
    if (den.is_zero()) throw ParseError("division by zero", line, 0);
    return RationalFunction(std::move(num), std::move(den));
}

} // namespace pmcmono
