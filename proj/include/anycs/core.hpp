// core.hpp
//
// Shared types for anytime-valid mean estimation: confidence-set algebra,
// run configuration, observations, and the streaming accumulator every
// estimator is built on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anycs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter outside its documented domain.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Observation index does not follow the stream position.
class SequencingError : public Error {
public:
    using Error::Error;
};

/// A coefficient schedule cannot produce a valid value.
class ScheduleError : public Error {
public:
    using Error::Error;
};

/// Root finding or another numeric procedure failed.
class NumericError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Compensated summation

/// Neumaier-compensated running sum. Folding the same sequence in the same
/// order always yields the same bits.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

template <class Range>
double compensated_total(const Range& values) {
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

// ---------------------------------------------------------------------------
// Intervals and confidence sets

/// Closed interval [lo, hi]; either endpoint may be infinite.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    bool contains(double m) const noexcept { return lo <= m && m <= hi; }
    bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const noexcept { return bounded() ? hi - lo : kInf; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Ordered union of pairwise-disjoint closed intervals. Touching or
/// overlapping pieces are merged on construction, so two sets are equal iff
/// their interval lists are equal.
class ConfidenceSet {
public:
    ConfidenceSet() = default;  // empty set

    explicit ConfidenceSet(std::vector<Interval> pieces) : pieces_(std::move(pieces)) { normalize(); }

    ConfidenceSet(double lo, double hi) : ConfidenceSet(std::vector<Interval>{{lo, hi}}) {}

    static ConfidenceSet empty() { return {}; }
    static ConfidenceSet real_line() { return ConfidenceSet(-kInf, kInf); }

    const std::vector<Interval>& intervals() const noexcept { return pieces_; }
    std::size_t components() const noexcept { return pieces_.size(); }
    bool is_empty() const noexcept { return pieces_.empty(); }

    bool contains(double m) const noexcept {
        return std::any_of(pieces_.begin(), pieces_.end(),
                           [m](const Interval& i) { return i.contains(m); });
    }

    /// Lebesgue measure; infinite if any endpoint is infinite, 0 when empty.
    double width() const noexcept {
        double w = 0.0;
        for (const auto& i : pieces_) {
            if (!i.bounded()) return kInf;
            w += i.hi - i.lo;
        }
        return w;
    }

    /// Lowest endpoint (+inf for the empty set).
    double lower() const noexcept { return pieces_.empty() ? kInf : pieces_.front().lo; }
    /// Highest endpoint (-inf for the empty set).
    double upper() const noexcept { return pieces_.empty() ? -kInf : pieces_.back().hi; }

    /// Closure of the complement in the extended real line.
    ConfidenceSet complement() const {
        std::vector<Interval> out;
        double cursor = -kInf;
        bool open_left = true;
        for (const auto& i : pieces_) {
            if (open_left || cursor < i.lo) {
                if (i.lo > -kInf) out.push_back({cursor, i.lo});
            }
            cursor = i.hi;
            open_left = false;
        }
        if (open_left)
            out.push_back({-kInf, kInf});
        else if (cursor < kInf)
            out.push_back({cursor, kInf});
        return ConfidenceSet(std::move(out));
    }

    ConfidenceSet shifted(double c) const {
        auto out = pieces_;
        for (auto& i : out) {
            i.lo += c;
            i.hi += c;
        }
        return ConfidenceSet(std::move(out));
    }

    /// Multiplies every point by c > 0.
    ConfidenceSet scaled(double c) const {
        auto out = pieces_;
        for (auto& i : out) {
            i.lo *= c;
            i.hi *= c;
        }
        return ConfidenceSet(std::move(out));
    }

    /// Reflection m -> -m.
    ConfidenceSet negated() const {
        std::vector<Interval> out;
        out.reserve(pieces_.size());
        for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) out.push_back({-it->hi, -it->lo});
        return ConfidenceSet(std::move(out));
    }

    friend bool operator==(const ConfidenceSet&, const ConfidenceSet&) = default;

private:
    void normalize() {
        std::erase_if(pieces_, [](const Interval& i) { return std::isnan(i.lo) || std::isnan(i.hi) || i.lo > i.hi; });
        std::sort(pieces_.begin(), pieces_.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
        std::vector<Interval> merged;
        for (const auto& i : pieces_) {
            if (!merged.empty() && i.lo <= merged.back().hi)
                merged.back().hi = std::max(merged.back().hi, i.hi);
            else
                merged.push_back(i);
        }
        pieces_ = std::move(merged);
    }

    std::vector<Interval> pieces_;
};

/// Exact intersection of two normalized sets.
inline ConfidenceSet intersect(const ConfidenceSet& a, const ConfidenceSet& b) {
    std::vector<Interval> out;
    const auto& x = a.intervals();
    const auto& y = b.intervals();
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double lo = std::max(x[i].lo, y[j].lo);
        const double hi = std::min(x[i].hi, y[j].hi);
        if (lo <= hi) out.push_back({lo, hi});
        if (x[i].hi < y[j].hi)
            ++i;
        else
            ++j;
    }
    return ConfidenceSet(std::move(out));
}

/// Running intersection of a confidence sequence; starts as the real line.
class RunningIntersection {
public:
    const ConfidenceSet& push(const ConfidenceSet& next) {
        current_ = intersect(current_, next);
        return current_;
    }
    const ConfidenceSet& current() const noexcept { return current_; }

private:
    ConfidenceSet current_ = ConfidenceSet::real_line();
};

// ---------------------------------------------------------------------------
// Configuration and observations

struct CsConfig {
    double alpha = 0.05;
    double p = 2.0;         // moment order, 1 < p <= 2
    double sigma2 = 1.0;    // variance bound (p == 2, homoscedastic)
    double v = 0.0;         // p-th central moment bound (p < 2)
    bool heteroscedastic = false;
    std::optional<std::pair<double, double>> alpha_split;  // (alpha', alpha'') for SN
    bool intersect = false;

    /// Throws ConfigError when the fields are inconsistent. `needs_v` selects
    /// the p-th moment bound instead of the variance bound.
    void validate(bool needs_v = false) const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
        if (!(p > 1.0 && p <= 2.0)) throw ConfigError("p must lie in (1,2]");
        if (needs_v || p < 2.0) {
            if (!(v > 0.0) && !heteroscedastic) throw ConfigError("p < 2 requires a moment bound v > 0");
        } else if (!(sigma2 > 0.0) && !heteroscedastic) {
            throw ConfigError("sigma2 must be positive");
        }
        if (alpha_split) {
            const auto [a1, a2] = *alpha_split;
            if (!(a1 > 0.0 && a2 > 0.0)) throw ConfigError("alpha_split parts must be positive");
            if (std::abs(a1 + a2 - alpha) > 1e-12 * alpha) throw ConfigError("alpha_split must sum to alpha");
        }
    }
};

struct Observation {
    std::size_t t = 0;
    double x = 0.0;
    std::optional<double> sigma_t;  // conditional sd bound, known before x
    std::optional<double> v_t;      // conditional p-th moment bound, known before x
};

// ---------------------------------------------------------------------------
// Stream state

struct StreamOptions {
    double p = 2.0;
    double sigma2 = 1.0;  // used for rows without sigma_t
    double v = 0.0;       // used for rows without v_t
    bool retain_history = false;
};

/// Running sums over (lambda_i, X_i, sigma_i, v_i) plus optional history.
class StreamState {
public:
    struct Entry {
        double lambda;
        double x;
        friend bool operator==(const Entry&, const Entry&) = default;
    };

    StreamState() = default;
    explicit StreamState(StreamOptions opts) : opts_(opts) {}

    /// Advances every sum by one term. `lambda` must have been computed from
    /// observations 1..t-1 only.
    void update(double lambda, const Observation& obs) {
        if (obs.t != t_ + 1)
            throw SequencingError("observation index " + std::to_string(obs.t) + " does not follow " +
                                  std::to_string(t_));
        if (!std::isfinite(obs.x)) throw ConfigError("non-finite observation at t=" + std::to_string(obs.t));
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ScheduleError("coefficient must be positive and finite at t=" + std::to_string(obs.t));
        const double sig2 = obs.sigma_t ? *obs.sigma_t * *obs.sigma_t : opts_.sigma2;
        const double v = obs.v_t ? *obs.v_t : opts_.v;
        const double l2 = lambda * lambda;
        const double x = obs.x;

        ++t_;
        sum_lam_.add(lambda);
        sum_lam2_.add(l2);
        sum_lam_x_.add(lambda * x);
        sum_lam2_x_.add(l2 * x);
        sum_lam2_x2_.add(l2 * x * x);
        sum_x_.add(x);
        sum_x2_.add(x * x);
        sum_lam2_sig2_.add(l2 * sig2);
        sum_v_lamp_.add(v * std::pow(lambda, opts_.p));
        if (opts_.retain_history) history_.push_back({lambda, x});
    }

    std::size_t t() const noexcept { return t_; }
    double sum_lam() const noexcept { return sum_lam_.value(); }
    double sum_lam2() const noexcept { return sum_lam2_.value(); }
    double sum_lam_x() const noexcept { return sum_lam_x_.value(); }
    double sum_lam2_x() const noexcept { return sum_lam2_x_.value(); }
    double sum_lam2_x2() const noexcept { return sum_lam2_x2_.value(); }
    double sum_x() const noexcept { return sum_x_.value(); }
    double sum_x2() const noexcept { return sum_x2_.value(); }
    double sum_lam2_sig2() const noexcept { return sum_lam2_sig2_.value(); }
    double sum_v_lamp() const noexcept { return sum_v_lamp_.value(); }

    bool retains_history() const noexcept { return opts_.retain_history; }
    std::span<const Entry> history() const noexcept { return history_; }
    const StreamOptions& options() const noexcept { return opts_; }

private:
    StreamOptions opts_;
    std::size_t t_ = 0;
    CompensatedSum sum_lam_, sum_lam2_, sum_lam_x_, sum_lam2_x_, sum_lam2_x2_;
    CompensatedSum sum_x_, sum_x2_, sum_lam2_sig2_, sum_v_lamp_;
    std::vector<Entry> history_;
};

}  // namespace anycs
