#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmcmono/error.hpp"
#include "pmcmono/expr.hpp"

namespace pmcmono {

/// Total assignment of a value to every parameter, indexed like Pmc::params.
using Instantiation = std::vector<Rational>;

/// Closed rational interval. The open flags only record how the interval was
/// written; every analysis works on the closure, and SMT export uses them to
/// choose strict or non-strict bounds.
struct Interval {
    Rational lo;
    Rational hi;
    bool open_lo = false;
    bool open_hi = false;

    Rational width() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
};

/// Box of per-parameter intervals.
class Region {
public:
    Region() = default;
    explicit Region(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
        for (const auto& iv : intervals_)
            if (iv.lo > iv.hi) throw Error("region interval with lo > hi");
    }

    /// Every parameter ranging over the same interval [lo, hi].
    static Region uniform(std::size_t arity, const Rational& lo, const Rational& hi) {
        return Region(std::vector<Interval>(arity, Interval{lo, hi}));
    }

    std::size_t arity() const noexcept { return intervals_.size(); }
    const Interval& operator[](std::size_t i) const { return intervals_.at(i); }
    const std::vector<Interval>& intervals() const noexcept { return intervals_; }

    Rational volume() const {
        Rational v(1);
        for (const auto& iv : intervals_) v *= iv.width();
        return v;
    }

    Instantiation lower_corner() const {
        Instantiation u;
        for (const auto& iv : intervals_) u.push_back(iv.lo);
        return u;
    }

    Instantiation upper_corner() const {
        Instantiation u;
        for (const auto& iv : intervals_) u.push_back(iv.hi);
        return u;
    }

    Instantiation midpoint() const {
        Instantiation u;
        for (const auto& iv : intervals_) u.push_back(iv.midpoint());
        return u;
    }

    bool contains(std::span<const Rational> u) const {
        if (u.size() != intervals_.size()) return false;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (!intervals_[i].contains(u[i])) return false;
        return true;
    }

    /// All 2^k corners where only `vars` vary; other parameters sit at lo.
    std::vector<Instantiation> corners(std::span<const std::size_t> vars) const {
        std::vector<Instantiation> out;
        std::size_t k = vars.size();
        for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
            Instantiation u = lower_corner();
            for (std::size_t b = 0; b < k; ++b)
                if (mask & (std::size_t{1} << b)) u[vars[b]] = intervals_[vars[b]].hi;
            out.push_back(std::move(u));
        }
        return out;
    }

    std::vector<Instantiation> corners() const {
        std::vector<std::size_t> vars(arity());
        for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = i;
        return corners(vars);
    }

    /// Tensor grid with n points per dimension at lo + (i+1)(hi-lo)/(n+1),
    /// i = 0..n-1 (strictly interior for non-degenerate intervals).
    std::vector<Instantiation> interior_grid(std::size_t n) const { return grid(n, false); }

    /// Tensor grid with n >= 2 points per dimension including both endpoints.
    std::vector<Instantiation> inclusive_grid(std::size_t n) const { return grid(n, true); }

    /// Splits at the midpoint of the longest edge (ties: first parameter).
    std::pair<Region, Region> split_longest() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < intervals_.size(); ++i)
            if (intervals_[i].width() > intervals_[best].width()) best = i;
        Region a = *this;
        Region b = *this;
        Rational mid = intervals_[best].midpoint();
        a.intervals_[best].hi = mid;
        a.intervals_[best].open_hi = false;
        b.intervals_[best].lo = mid;
        b.intervals_[best].open_lo = false;
        return {std::move(a), std::move(b)};
    }

    std::string to_string(std::span<const std::string> names) const {
        std::string out;
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            if (i > 0) out += "; ";
            out += (i < names.size() ? names[i] : "x" + std::to_string(i)) + " in " +
                   (intervals_[i].open_lo ? "(" : "[") + intervals_[i].lo.get_str() + "," +
                   intervals_[i].hi.get_str() + (intervals_[i].open_hi ? ")" : "]");
        }
        return out;
    }

    friend bool operator==(const Region& a, const Region& b) {
        if (a.arity() != b.arity()) return false;
        for (std::size_t i = 0; i < a.arity(); ++i)
            if (a[i].lo != b[i].lo || a[i].hi != b[i].hi) return false;
        return true;
    }

private:
    std::vector<Instantiation> grid(std::size_t n, bool inclusive) const {
        std::vector<Instantiation> out;
        if (n == 0) return out;
        std::vector<std::vector<Rational>> axes;
        for (const auto& iv : intervals_) {
            std::vector<Rational> axis;
            for (std::size_t i = 0; i < n; ++i) {
                if (inclusive) {
                    axis.push_back(n == 1 ? iv.midpoint() : iv.lo + iv.width() * make_rational(static_cast<long>(i), static_cast<long>(n - 1)));
                } else {
                    axis.push_back(iv.lo + iv.width() * make_rational(static_cast<long>(i + 1), static_cast<long>(n + 1)));
                }
            }
            axes.push_back(std::move(axis));
        }
        std::vector<std::size_t> idx(intervals_.size(), 0);
        while (true) {
            Instantiation u;
            for (std::size_t d = 0; d < idx.size(); ++d) u.push_back(axes[d][idx[d]]);
            out.push_back(std::move(u));
            std::size_t d = 0;
            while (d < idx.size() && ++idx[d] == n) idx[d++] = 0;
            if (d == idx.size()) break;
        }
        return out;
    }

    std::vector<Interval> intervals_;
};

/// Parses "p in [0.1,0.9]; q in (1/5,4/5)". Every name in `params` must be
/// given exactly once.
inline Region parse_region(std::string_view text, std::span<const std::string> params) {
    std::vector<std::optional<Interval>> slots(params.size());
    std::size_t start = 0;
    std::size_t clause_no = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(';', start);
        if (end == std::string_view::npos) end = text.size();
        std::string clause(text.substr(start, end - start));
        start = end + 1;
        ++clause_no;
        auto first = clause.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) {
            if (end == text.size()) break;
            continue;
        }
        clause = clause.substr(first, clause.find_last_not_of(" \t\r\n") - first + 1);
        auto in_pos = clause.find(" in ");
        if (in_pos == std::string::npos) throw ParseError("region clause must read '<param> in [lo,hi]'", 0, clause_no);
        std::string name = clause.substr(0, in_pos);
        name.erase(name.find_last_not_of(" \t") + 1);
        std::string range = clause.substr(in_pos + 4);
        range.erase(0, range.find_first_not_of(" \t"));
        if (range.size() < 5) throw ParseError("malformed interval '" + range + "'", 0, clause_no);
        char open = range.front();
        char close = range.back();
        if ((open != '[' && open != '(') || (close != ']' && close != ')'))
            throw ParseError("interval must be bracketed: '" + range + "'", 0, clause_no);
        auto comma = range.find(',');
        if (comma == std::string::npos) throw ParseError("interval needs a comma: '" + range + "'", 0, clause_no);
        auto lo = parse_rational(range.substr(1, comma - 1));
        auto hi = parse_rational(range.substr(comma + 1, range.size() - comma - 2));
        if (!lo || !hi) throw ParseError("malformed interval bound in '" + range + "'", 0, clause_no);
        if (*lo > *hi) throw ParseError("interval lower bound exceeds upper bound for '" + name + "'", 0, clause_no);
        auto it = std::find(params.begin(), params.end(), name);
        if (it == params.end()) throw ParseError("unknown parameter '" + name + "' in region", 0, clause_no);
        auto& slot = slots[static_cast<std::size_t>(it - params.begin())];
        if (slot) throw ParseError("parameter '" + name + "' bounded twice", 0, clause_no);
        slot = Interval{*lo, *hi, open == '(', close == ')'};
        if (end == text.size()) break;
    }
    std::vector<Interval> intervals;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!slots[i]) throw ParseError("region does not bound parameter '" + params[i] + "'", 0, 0);
        intervals.push_back(*slots[i]);
    }
    return Region(std::move(intervals));
}

} // namespace pmcmono
