// ds_sn.hpp
//
// Closed-form confidence sequences: the Dubins-Savage interval and the
// self-normalized set (complement of two quadratic anti-intervals).
#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "anycs/core.hpp"
#include "anycs/schedules.hpp"

namespace anycs {

namespace detail {

inline void require_sigma(const CsConfig& cfg, const Observation& obs) {
    if (cfg.heteroscedastic && !obs.sigma_t)
        throw ConfigError("heteroscedastic mode requires sigma_t at t=" + std::to_string(obs.t));
}

/// Roots of a*m^2 - b*m + c = 0 with a > 0, or nullopt when the discriminant
/// is negative. Uses the cancellation-free form.
inline std::optional<std::pair<double, double>> stable_quadratic_roots(double a, double b, double c) {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || !std::isfinite(disc)) return std::nullopt;
    const double q = 0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) return std::pair{0.0, 0.0};
    double r1 = q / a;
    double r2 = c / q;
    if (r1 > r2) std::swap(r1, r2);
    return std::pair{r1, r2};
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Dubins-Savage sequence: center sum(lambda X)/sum(lambda), half-width
/// (2/alpha - 1 + sum lambda^2 sigma^2)/sum(lambda).
class DsEstimator {
public:
    DsEstimator(CsConfig cfg, LambdaSchedule schedule) : cfg_(std::move(cfg)), schedule_(std::move(schedule)) {
        cfg_.validate();
        state_ = StreamState(StreamOptions{2.0, cfg_.sigma2, 0.0, false});
    }

    /// Consumes one observation and returns the coefficient it was weighted by.
    double update(const Observation& obs) {
        detail::require_sigma(cfg_, obs);
        if (obs.t != state_.t() + 1)
            throw SequencingError("observation index " + std::to_string(obs.t) + " does not follow " +
                                  std::to_string(state_.t()));
        const double lambda = schedule_.next();
        state_.update(lambda, obs);
        schedule_.observe(obs.x);
        return lambda;
    }

    double center() const { return state_.sum_lam_x() / state_.sum_lam(); }

    double half_width() const {
        return (2.0 / cfg_.alpha - 1.0 + state_.sum_lam2_sig2()) / state_.sum_lam();
    }

    ConfidenceSet set() const {
        if (state_.t() == 0) return ConfidenceSet::real_line();
        const double c = center();
        const double h = half_width();
        return ConfidenceSet(c - h, c + h);
    }

    ConfidenceSet step(const Observation& obs) {
        update(obs);
        return set();
    }

    std::size_t next_index() const noexcept { return state_.t() + 1; }
    const StreamState& state() const noexcept { return state_; }
    const CsConfig& config() const noexcept { return cfg_; }

private:
    CsConfig cfg_;
    LambdaSchedule schedule_;
    StreamState state_;
};

inline ConfidenceSet ds_step(DsEstimator& est, const Observation& obs) { return est.step(obs); }

// ---------------------------------------------------------------------------

/// Self-normalized sequence. With an alpha split (alpha', alpha'') the SN
/// set runs at alpha' and is intersected with a Dubins-Savage companion at
/// alpha'', which removes the two unbounded spurious components.
class SnEstimator {
public:
    SnEstimator(CsConfig cfg, LambdaSchedule schedule, std::optional<LambdaSchedule> companion_schedule = {})
        : cfg_(std::move(cfg)), schedule_(std::move(schedule)) {
        cfg_.validate();
        level_ = cfg_.alpha;
        if (cfg_.alpha_split) {
            level_ = cfg_.alpha_split->first;
            CsConfig ds_cfg = cfg_;
            ds_cfg.alpha = cfg_.alpha_split->second;
            ds_cfg.alpha_split.reset();
            auto sched = companion_schedule ? std::move(*companion_schedule)
                                            : LambdaSchedule::ds_tuned(ds_cfg.alpha, cfg_.sigma2);
            companion_.emplace(ds_cfg, std::move(sched));
        }
        state_ = StreamState(StreamOptions{2.0, cfg_.sigma2, 0.0, false});
    }

    double update(const Observation& obs) {
        detail::require_sigma(cfg_, obs);
        if (obs.t != state_.t() + 1)
            throw SequencingError("observation index " + std::to_string(obs.t) + " does not follow " +
                                  std::to_string(state_.t()));
        const double lambda = schedule_.next();
        state_.update(lambda, obs);
        schedule_.observe(obs.x);
        if (companion_) companion_->update(obs);
        return lambda;
    }

    /// Coefficients (a, U, C) of a*m^2 - U*m + C for the "+" (sign = +1) or
    /// "-" (sign = -1) anti-interval. The anti-interval is where it is < 0.
    struct Quadratic {
        double a, u, c;
        double operator()(double m) const { return a * m * m - u * m + c; }
    };

    Quadratic quadratic(int sign) const {
        const double s = sign >= 0 ? 1.0 : -1.0;
        const double l2 = state_.sum_lam2();
        const double log_term = std::log(2.0 / level_);
        Quadratic q;
        q.a = l2 / 6.0;
        q.u = state_.sum_lam2_x() / 3.0 - s * state_.sum_lam();
        q.c = log_term - s * state_.sum_lam_x() + (state_.sum_lam2_x2() + 2.0 * state_.sum_lam2_sig2()) / 6.0;
        return q;
    }

    /// (aCI+, aCI-); each is a single closed interval or empty.
    std::pair<ConfidenceSet, ConfidenceSet> anti_intervals() const {
        if (state_.t() == 0) return {ConfidenceSet::empty(), ConfidenceSet::empty()};
        auto build = [&](int sign) {
            const auto q = quadratic(sign);
            const auto roots = detail::stable_quadratic_roots(q.a, q.u, q.c);
            if (!roots) return ConfidenceSet::empty();
            return ConfidenceSet(roots->first, roots->second);
        };
        return {build(+1), build(-1)};
    }

    /// The SN set alone: R minus both anti-intervals (endpoints kept).
    ConfidenceSet raw_set() const {
        auto [plus, minus] = anti_intervals();
        std::vector<Interval> removed;
        // A degenerate anti-interval is a single point and removes nothing
        // under the closed-endpoint convention.
        for (const auto* s : {&plus, &minus})
            for (const auto& i : s->intervals())
                if (i.lo < i.hi) removed.push_back(i);
        return ConfidenceSet(std::move(removed)).complement();
    }

    ConfidenceSet set() const {
        auto sn = raw_set();
        if (companion_) return intersect(sn, companion_->set());
        return sn;
    }

    ConfidenceSet step(const Observation& obs) {
        update(obs);
        return set();
    }

    /// Width of the bounded middle component when the raw set has the
    /// three-piece topology; +inf otherwise.
    double middle_width() const {
        const auto s = raw_set();
        if (s.components() != 3) return kInf;
        return s.intervals()[1].width();
    }

    double level() const noexcept { return level_; }
    std::size_t next_index() const noexcept { return state_.t() + 1; }
    const StreamState& state() const noexcept { return state_; }
    const CsConfig& config() const noexcept { return cfg_; }
    const std::optional<DsEstimator>& companion() const noexcept { return companion_; }

private:
    CsConfig cfg_;
    LambdaSchedule schedule_;
    StreamState state_;
    double level_ = 0.05;
    std::optional<DsEstimator> companion_;
};

inline std::pair<ConfidenceSet, ConfidenceSet> sn_anti_intervals(const SnEstimator& est) {
    return est.anti_intervals();
}
inline ConfidenceSet sn_step(SnEstimator& est, const Observation& obs) { return est.step(obs); }
inline double sn_middle_width(const SnEstimator& est) { return est.middle_width(); }

}  // namespace anycs
