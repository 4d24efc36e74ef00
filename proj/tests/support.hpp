#pragma once

// Test helpers: model loading, random model generators and an independent
// reachability oracle (plain Gauss-Jordan on exact rationals, written without
// the library's solver).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pmcmono/expr.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/region.hpp"

namespace pmcmono {

// Readable gtest failure messages.
inline std::vector<std::string> print_names(std::size_t arity) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arity; ++i) out.push_back(i < 3 ? std::string(1, "pqr"[i]) : "x" + std::to_string(i));
    return out;
}
inline void PrintTo(const Polynomial& p, std::ostream* os) { *os << p.to_string(print_names(p.arity())); }
inline void PrintTo(const RationalFunction& f, std::ostream* os) { *os << f.to_string(print_names(f.num().arity())); }

} // namespace pmcmono

namespace testing_support {

using namespace pmcmono;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline Pmc load_model(const std::string& name) { return parse_model(read_text(std::string(PMCMONO_MODELS_DIR) + "/" + name)); }

inline Rational q(const char* text) { return *parse_rational(text); }

inline Rational q(int n, int d = 1) { return make_rational(n, d); }

/// Reachability probabilities of every state at u. States that cannot reach
/// the target get 0; the rest solve x = A x + b exactly.
inline std::vector<Rational> oracle_reachability(const Pmc& pmc, const Instantiation& u) {
    std::size_t n = pmc.num_states();
    std::vector<std::vector<std::pair<std::size_t, Rational>>> P(n);
    for (std::size_t s = 0; s < n; ++s)
        for (const auto& t : pmc.rows[s]) P[s].push_back({t.to, t.f.num().evaluate(u) / t.f.den().evaluate(u)});
    std::vector<bool> tgt(n, false);
    for (auto t : pmc.target) tgt[t] = true;
    // can reach target through positive edges (backwards fixpoint)
    std::vector<bool> reach = tgt;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (reach[s]) continue;
            for (auto& [t, p] : P[s])
                if (p != 0 && reach[t]) {
                    reach[s] = true;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<std::size_t> idx(n, SIZE_MAX);
    std::vector<std::size_t> unknowns;
    for (std::size_t s = 0; s < n; ++s)
        if (reach[s] && !tgt[s]) {
            idx[s] = unknowns.size();
            unknowns.push_back(s);
        }
    std::size_t m = unknowns.size();
    std::vector<std::vector<Rational>> A(m, std::vector<Rational>(m + 1, Rational(0)));
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t s = unknowns[i];
        A[i][i] = 1;
        for (auto& [t, p] : P[s]) {
            if (tgt[t]) A[i][m] += p;
            else if (idx[t] != SIZE_MAX) A[i][idx[t]] -= p;
        }
    }
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        while (A[piv][c] == 0) ++piv;
        std::swap(A[piv], A[c]);
        Rational inv = 1 / A[c][c];
        for (auto& x : A[c]) x *= inv;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == c || A[r][c] == 0) continue;
            Rational f = A[r][c];
            for (std::size_t k = c; k <= m; ++k) A[r][k] -= f * A[c][k];
        }
    }
    std::vector<Rational> x(n, Rational(0));
    for (std::size_t s = 0; s < n; ++s)
        if (tgt[s]) x[s] = 1;
    for (std::size_t i = 0; i < m; ++i) x[unknowns[i]] = A[i][m];
    return x;
}

/// n evenly spaced exact points per dimension including the endpoints.
inline std::vector<Instantiation> exact_grid(const Region& R, std::size_t total) {
    std::size_t d = std::max<std::size_t>(R.arity(), 1);
    auto per = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(total), 1.0 / static_cast<double>(d)) - 1e-9));
    return R.inclusive_grid(std::max<std::size_t>(per, 2));
}

inline Rational random_fraction(std::mt19937& rng, long lo_num, long hi_num, long den) {
    std::uniform_int_distribution<long> d(lo_num, hi_num);
    return make_rational(d(rng), den);
}

/// A random box strictly inside (0,1) in every dimension.
inline Region random_interior_box(std::mt19937& rng, std::size_t arity) {
    std::vector<Interval> ivs;
    for (std::size_t i = 0; i < arity; ++i) {
        Rational a = random_fraction(rng, 1, 19, 20);
        Rational b = random_fraction(rng, 1, 19, 20);
        if (a > b) std::swap(a, b);
        if (a == b) b = a + Rational(1, 40);
        ivs.push_back(Interval{a, b});
    }
    return Region(ivs);
}

inline std::string pname(std::size_t i) { return i == 0 ? "p" : "q"; }

/// Random simple acyclic pMC text: transient states 0..n-1 only go to
/// higher ids or to top/bottom; rows are p/1-p or constants.
inline std::string random_simple_acyclic_text(std::mt19937& rng, std::size_t max_states, std::size_t max_params) {
    std::uniform_int_distribution<std::size_t> nd(2, max_states - 2);
    std::uniform_int_distribution<std::size_t> ad(1, max_params);
    std::size_t n = nd(rng);
    std::size_t arity = ad(rng);
    std::ostringstream out;
    out << "params:";
    for (std::size_t i = 0; i < arity; ++i) out << ' ' << pname(i);
    out << "\nstates: " << n << "\ninitial: 0\ntarget: top\n";
    std::uniform_int_distribution<int> coin(0, 99);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::string> succ;
        for (std::size_t t = s + 1; t < n; ++t) succ.push_back(std::to_string(t));
        succ.push_back("top");
        succ.push_back("bottom");
        std::shuffle(succ.begin(), succ.end(), rng);
        bool three = succ.size() >= 3 && coin(rng) < 25;
        out << "trans: ";
        if (three) {
            Rational a = random_fraction(rng, 1, 4, 10);
            Rational b = random_fraction(rng, 1, 4, 10);
            out << s << " -> " << succ[0] << " : " << a.get_str() << " ; " << s << " -> " << succ[1] << " : " << b.get_str() << " ; "
                << s << " -> " << succ[2] << " : " << Rational(1 - a - b).get_str() << "\n";
        } else if (coin(rng) < 75) {
            std::string p = pname(std::uniform_int_distribution<std::size_t>(0, arity - 1)(rng));
            out << s << " -> " << succ[0] << " : " << p << " ; " << s << " -> " << succ[1] << " : 1-" << p << "\n";
        } else {
            Rational a = random_fraction(rng, 1, 9, 10);
            out << s << " -> " << succ[0] << " : " << a.get_str() << " ; " << s << " -> " << succ[1] << " : " << Rational(1 - a).get_str()
                << "\n";
        }
    }
    return out.str();
}

/// Random pMC with cycles allowed: every transient state picks 1-3 arbitrary
/// successors; functions mix p, 1-p, p*q style products and constants.
inline std::string random_cyclic_text(std::mt19937& rng, std::size_t max_states) {
    std::uniform_int_distribution<std::size_t> nd(2, max_states - 2);
    std::size_t n = nd(rng);
    std::ostringstream out;
    out << "params: p q\nstates: " << n << "\ninitial: 0\ntarget: top\n";
    std::uniform_int_distribution<int> coin(0, 99);
    std::uniform_int_distribution<std::size_t> any(0, n + 1);
    auto name = [&](std::size_t t) { return t == n ? std::string("top") : t == n + 1 ? std::string("bottom") : std::to_string(t); };
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> succ;
        std::size_t k = 1 + static_cast<std::size_t>(coin(rng) % 3);
        while (succ.size() < k) {
            std::size_t t = any(rng);
            if (std::find(succ.begin(), succ.end(), t) == succ.end()) succ.push_back(t);
        }
        std::vector<std::string> fs;
        if (k == 1) {
            fs = {"1"};
        } else if (k == 2) {
            int c = coin(rng);
            if (c < 40) fs = {"p", "1-p"};
            else if (c < 70) fs = {"q", "1 - q"};
            else if (c < 85) fs = {"p*q", "1 - p*q"};
            else {
                Rational a = random_fraction(rng, 1, 9, 10);
                fs = {a.get_str(), Rational(1 - a).get_str()};
            }
        } else {
            int c = coin(rng);
            if (c < 50) fs = {"p*q", "p*(1-q)", "1-p"};
            else fs = {"1/4", "1/2*q", "3/4 - 1/2*q"};
        }
        out << "trans: ";
        for (std::size_t i = 0; i < k; ++i) out << (i ? " ; " : "") << s << " -> " << name(succ[i]) << " : " << fs[i];
        out << "\n";
    }
    return out.str();
}

} // namespace testing_support
