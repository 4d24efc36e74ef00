#pragma once

// Sign analysis of polynomials on boxes.
//
// Multi-affine polynomials attain their extrema at the box corners, so their
// sign is decided exactly from the 2^k corner values. Other polynomials are
// first sampled on a grid (a sign change is a proof of Mixed) and then, if no
// sign change shows up, certified through their Bernstein coefficients on the
// box, bisecting the box a bounded number of times.

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "pmcmono/expr.hpp"
#include "pmcmono/region.hpp"

namespace pmcmono {

enum class SignVerdict { NonNegative, NonPositive, IdenticallyZero, Mixed, Unknown };

inline const char* to_string(SignVerdict v) {
    switch (v) {
    case SignVerdict::NonNegative: return "non-negative";
    case SignVerdict::NonPositive: return "non-positive";
    case SignVerdict::IdenticallyZero: return "zero";
    case SignVerdict::Mixed: return "mixed";
    case SignVerdict::Unknown: return "unknown";
    }
    return "?";
}

struct SignWitness {
    Instantiation point;
    Rational value;
};

struct SignResult {
    SignVerdict verdict = SignVerdict::Unknown;
    std::optional<SignWitness> negative; ///< point with value < 0 (Mixed only)
    std::optional<SignWitness> positive; ///< point with value > 0 (Mixed only)
};

struct SignOptions {
    std::size_t grid_points = 5;          ///< per dimension, endpoints included
    std::size_t max_boxes = 256;          ///< Bernstein subdivision budget
    std::size_t max_coefficients = 20000; ///< dense Bernstein tensor size cap
};

namespace detail {

inline mpz_class binomial(unsigned long n, unsigned long k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

/// Min and max Bernstein coefficient of f on the box (over the parameters f
/// depends on). nullopt when the dense tensor would exceed the cap.
inline std::optional<std::pair<Rational, Rational>> bernstein_range(const Polynomial& f, const Region& box,
                                                                     std::size_t max_coefficients) {
    auto vars = f.variables();
    if (vars.empty()) {
        Rational c = f.constant_value().value_or(0);
        return std::make_pair(c, c);
    }
    std::vector<std::size_t> degree;
    std::vector<std::size_t> stride;
    std::size_t total = 1;
    for (auto v : vars) {
        degree.push_back(f.degree_in(v));
        stride.push_back(total);
        total *= degree.back() + 1;
        if (total > max_coefficients) return std::nullopt;
    }
    const std::size_t k = vars.size();

    // Coefficients of f(lo + w*t) in the monomial basis of t.
    std::vector<Rational> coeff(total, Rational(0));
    std::vector<std::vector<Rational>> factors(k);
    for (const auto& [e, c] : f.terms()) {
        for (std::size_t j = 0; j < k; ++j) {
            const auto& iv = box[vars[j]];
            std::uint32_t ej = e[vars[j]];
            factors[j].assign(ej + 1, Rational(0));
            for (std::uint32_t i = 0; i <= ej; ++i)
                factors[j][i] = Rational(binomial(ej, i)) * pow(iv.lo, ej - i) * pow(iv.width(), i);
        }
        std::vector<std::uint32_t> idx(k, 0);
        while (true) {
            Rational prod = c;
            std::size_t flat = 0;
            for (std::size_t j = 0; j < k; ++j) {
                prod *= factors[j][idx[j]];
                flat += idx[j] * stride[j];
            }
            coeff[flat] += prod;
            std::size_t j = 0;
            while (j < k && ++idx[j] == factors[j].size()) idx[j++] = 0;
            if (j == k) break;
        }
    }

    // Monomial to Bernstein basis, one axis at a time.
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t n = degree[j];
        if (n == 0) continue;
        std::vector<Rational> fiber(n + 1);
        std::vector<Rational> out(n + 1);
        for (std::size_t base = 0; base < total; ++base) {
            if ((base / stride[j]) % (n + 1) != 0) continue;
            for (std::size_t i = 0; i <= n; ++i) fiber[i] = coeff[base + i * stride[j]];
            for (std::size_t i = 0; i <= n; ++i) {
                Rational acc(0);
                for (std::size_t m = 0; m <= i; ++m) {
                    if (fiber[m] == 0) continue;
                    acc += fiber[m] * Rational(binomial(i, m), binomial(n, m));
                }
                out[i] = acc;
            }
            for (std::size_t i = 0; i <= n; ++i) coeff[base + i * stride[j]] = out[i];
        }
    }
    auto [mn, mx] = std::minmax_element(coeff.begin(), coeff.end());
    return std::make_pair(*mn, *mx);
}

enum class Certificate { NonNegative, NonPositive, Positive };

/// Bernstein certificate with bounded bisection.
inline bool certify(const Polynomial& f, const Region& box, Certificate goal, const SignOptions& opts) {
    std::deque<Region> work{box};
    std::size_t boxes = 0;
    while (!work.empty()) {
        if (++boxes > opts.max_boxes) return false;
        Region r = std::move(work.front());
        work.pop_front();
        auto range = bernstein_range(f, r, opts.max_coefficients);
        if (!range) return false;
        const auto& [lo, hi] = *range;
        bool ok = false;
        bool hopeless = false;
        switch (goal) {
        case Certificate::NonNegative: ok = lo >= 0; hopeless = hi < 0; break;
        case Certificate::NonPositive: ok = hi <= 0; hopeless = lo > 0; break;
        case Certificate::Positive: ok = lo > 0; hopeless = hi <= 0; break;
        }
        if (ok) continue;
        if (hopeless) return false;
        auto halves = r.split_longest();
        if (halves.first[0].width() == 0 && r.arity() == 1) return false;
        work.push_back(std::move(halves.first));
        work.push_back(std::move(halves.second));
    }
    return true;
}

} // namespace detail

/// Sign of f on the closed box R.
inline SignResult sign_on_box(const Polynomial& f, const Region& R, const SignOptions& opts = {}) {
    if (R.arity() < f.arity() && !f.is_constant())
        throw Error("sign_on_box: region does not cover all parameters");
    SignResult result;
    if (f.is_zero()) {
        result.verdict = SignVerdict::IdenticallyZero;
        return result;
    }
    if (auto c = f.constant_value()) {
        result.verdict = *c > 0 ? SignVerdict::NonNegative : SignVerdict::NonPositive;
        return result;
    }
    auto vars = f.variables();
    std::vector<Instantiation> points;
    if (f.is_multi_affine()) {
        points = R.corners(vars);
    } else {
        Region sub = R;
        points = sub.inclusive_grid(std::max<std::size_t>(opts.grid_points, 2));
    }
    bool any_pos = false;
    bool any_neg = false;
    for (auto& u : points) {
        Rational v = f.evaluate(u);
        if (v > 0 && !result.positive) result.positive = SignWitness{u, v};
        if (v < 0 && !result.negative) result.negative = SignWitness{u, v};
        any_pos = any_pos || v > 0;
        any_neg = any_neg || v < 0;
    }
    if (any_pos && any_neg) {
        result.verdict = SignVerdict::Mixed;
        return result;
    }
    result.positive.reset();
    result.negative.reset();
    if (f.is_multi_affine()) {
        result.verdict = any_neg ? SignVerdict::NonPositive : SignVerdict::NonNegative;
        return result;
    }
    if (!any_neg && detail::certify(f, R, detail::Certificate::NonNegative, opts)) {
        result.verdict = SignVerdict::NonNegative;
    } else if (!any_pos && detail::certify(f, R, detail::Certificate::NonPositive, opts)) {
        result.verdict = SignVerdict::NonPositive;
    } else {
        result.verdict = SignVerdict::Unknown;
    }
    return result;
}

enum class Positivity { Positive, Violated, Unknown };

struct PositivityResult {
    Positivity status = Positivity::Unknown;
    std::optional<SignWitness> witness; ///< point with value <= 0 when Violated
};

/// Whether f > 0 everywhere on the closed box R.
inline PositivityResult strict_positivity_on_box(const Polynomial& f, const Region& R, const SignOptions& opts = {}) {
    PositivityResult result;
    if (auto c = f.constant_value()) {
        if (*c > 0) {
            result.status = Positivity::Positive;
        } else {
            result.status = Positivity::Violated;
            result.witness = SignWitness{R.lower_corner(), *c};
        }
        return result;
    }
    auto vars = f.variables();
    std::vector<Instantiation> points =
        f.is_multi_affine() ? R.corners(vars) : R.inclusive_grid(std::max<std::size_t>(opts.grid_points, 2));
    for (auto& u : points) {
        Rational v = f.evaluate(u);
        if (v <= 0) {
            result.status = Positivity::Violated;
            result.witness = SignWitness{u, v};
            return result;
        }
    }
    if (f.is_multi_affine() || detail::certify(f, R, detail::Certificate::Positive, opts)) {
        result.status = Positivity::Positive;
    }
    return result;
}

} // namespace pmcmono
