// catoni.hpp
//
// Catoni-style confidence sequences. The set at time t is
//
//   { m : -c_t <= sum_i phi(lambda_i (X_i - m)) <= c_t },
//
// with c_t = sum lambda_i^2 sigma_i^2 / 2 + log(2/alpha) for p = 2, or
// sum v_i lambda_i^p / p + log(2/alpha) for the p-th moment variant. The
// defining sum is strictly decreasing in m, so the endpoints are found by
// bracketed bisection.
#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "anycs/core.hpp"
#include "anycs/schedules.hpp"

namespace anycs {

/// The simple (p-)Catoni influence function
///   phi(x) =  log(1 + x + |x|^p / p)   for x >= 0
///   phi(x) = -log(1 - x + |x|^p / p)   for x <  0
class InfluenceFn {
public:
    explicit InfluenceFn(double p = 2.0) : p_(p) {
        if (!(p > 1.0 && p <= 2.0)) throw ConfigError("influence function requires 1 < p <= 2");
    }

    double p() const noexcept { return p_; }

    double operator()(double x) const noexcept {
        return x >= 0.0 ? std::log1p(x + power_term(x)) : -std::log1p(-x + power_term(x));
    }

    /// log(1 + x + |x|^p/p)
    double upper_envelope(double x) const noexcept { return std::log1p(x + power_term(x)); }
    /// -log(1 - x + |x|^p/p)
    double lower_envelope(double x) const noexcept { return -std::log1p(-x + power_term(x)); }

private:
    double power_term(double x) const noexcept {
        const double a = std::abs(x);
        return p_ == 2.0 ? 0.5 * a * a : std::pow(a, p_) / p_;
    }

    double p_;
};

inline double phi(const InfluenceFn& inf, double x) { return inf(x); }

// ---------------------------------------------------------------------------
// Root finding

namespace detail {

inline constexpr int kMaxDoublings = 64;
inline constexpr int kMaxBisections = 400;

/// For a strictly decreasing f, returns a bracket [a, b] with
/// f(a) >= target >= f(b), refined by bisection to 1e-9 (1 + |m|).
template <class F>
std::pair<double, double> bracket_root(const F& f, double target, double center, double h0) {
    double a = center, b = center;
    double fa = f(a), fb = fa;
    double h = h0;
    int k = 0;
    while (fa < target && k < kMaxDoublings) {
        a = center - h;
        fa = f(a);
        h *= 2.0;
        ++k;
    }
    h = h0;
    k = 0;
    while (fb > target && k < kMaxDoublings) {
        b = center + h;
        fb = f(b);
        h *= 2.0;
        ++k;
    }
    if (!(fa >= target) || !(fb <= target)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "catoni root not bracketed: target=" << target << " center=" << center << " h0=" << h0
            << " f(" << a << ")=" << fa << " f(" << b << ")=" << fb;
        throw NumericError(msg.str());
    }
    for (int it = 0; it < kMaxBisections; ++it) {
        const double mid = 0.5 * (a + b);
        if (b - a <= 1e-9 * (1.0 + std::abs(mid)) || mid == a || mid == b) break;
        if (f(mid) >= target)
            a = mid;
        else
            b = mid;
    }
    return {a, b};
}

}  // namespace detail

/// Solves the Catoni set for a decreasing defining sum f. Endpoints are
/// rounded outward, so the returned set contains every exact member.
template <class F>
ConfidenceSet solve_catoni_set(const F& f, double threshold, double center, double scale_hint, bool one_sided) {
    const double h0 = std::max(scale_hint, 1e-6 * (1.0 + std::abs(center)));
    const double lo = detail::bracket_root(f, threshold, center, h0).first;
    if (one_sided) return ConfidenceSet(lo, kInf);
    const double hi = detail::bracket_root(f, -threshold, center, h0).second;
    return ConfidenceSet(lo, hi);
}

// ---------------------------------------------------------------------------

enum class CatoniSides { two_sided, one_sided };

/// Streaming Catoni-style sequence (homoscedastic, heteroscedastic, p-th
/// moment, and one-sided variants). Retains the (lambda, X) history.
class CatoniEstimator {
public:
    CatoniEstimator(CsConfig cfg, LambdaSchedule schedule, CatoniSides sides = CatoniSides::two_sided)
        : cfg_(std::move(cfg)), schedule_(std::move(schedule)), influence_(cfg_.p), sides_(sides) {
        cfg_.validate();
        state_ = StreamState(StreamOptions{cfg_.p, cfg_.sigma2, cfg_.v, true});
    }

    double update(const Observation& obs) {
        if (cfg_.heteroscedastic) {
            if (!moment_mode() && !obs.sigma_t)
                throw ConfigError("heteroscedastic mode requires sigma_t at t=" + std::to_string(obs.t));
            if (moment_mode() && !obs.v_t)
                throw ConfigError("heteroscedastic p-mode requires v_t at t=" + std::to_string(obs.t));
        }
        if (obs.t != state_.t() + 1)
            throw SequencingError("observation index " + std::to_string(obs.t) + " does not follow " +
                                  std::to_string(state_.t()));
        const double lambda = schedule_.next();
        state_.update(lambda, obs);
        schedule_.observe(obs.x);
        last_lambda_ = lambda;
        return lambda;
    }

    /// Variance (or p-th moment) penalty: sum lambda^2 sigma^2 / 2 or sum v lambda^p / p.
    double penalty() const noexcept {
        return moment_mode() ? state_.sum_v_lamp() / cfg_.p : 0.5 * state_.sum_lam2_sig2();
    }

    /// True when the p-th moment bound v drives the penalty (p < 2, or v given).
    bool moment_mode() const noexcept { return cfg_.p < 2.0 || cfg_.v > 0.0; }

    /// c_t; the one-sided variant spends log(1/alpha) instead of log(2/alpha).
    double threshold() const noexcept {
        const double log_term = sides_ == CatoniSides::one_sided ? std::log(1.0 / cfg_.alpha)
                                                                 : std::log(2.0 / cfg_.alpha);
        return penalty() + log_term;
    }

    /// sum_i phi(lambda_i (X_i - m)).
    double defining_sum(double m) const noexcept {
        double s = 0.0;
        for (const auto& e : state_.history()) s += influence_(e.lambda * (e.x - m));
        return s;
    }

    bool contains(double m) const noexcept {
        const double f = defining_sum(m);
        const double c = threshold();
        return sides_ == CatoniSides::one_sided ? f <= c : (-c <= f && f <= c);
    }

    ConfidenceSet set() const {
        if (state_.t() == 0) return ConfidenceSet::real_line();
        const double c = threshold();
        const double center = state_.sum_lam_x() / state_.sum_lam();
        return solve_catoni_set([this](double m) { return defining_sum(m); }, c, center, c / state_.sum_lam(),
                                sides_ == CatoniSides::one_sided);
    }

    ConfidenceSet step(const Observation& obs) {
        update(obs);
        return set();
    }

    /// Membership in the set built from the polynomial supermartingales
    ///   prod (1 +/- y_i + |y_i|^p/p) exp(-penalty_i),  y_i = lambda_i (X_i - m),
    /// both compared with 2/alpha in log space.
    bool tighter_membership(double m) const noexcept {
        double log_plus = 0.0, log_minus = 0.0;
        for (const auto& e : state_.history()) {
            const double y = e.lambda * (e.x - m);
            const double up = influence_.upper_envelope(y);
            const double dn = -influence_.lower_envelope(y);  // log(1 - y + |y|^p/p)
            log_plus += up;
            log_minus += dn;
        }
        const double bound = std::log(2.0 / cfg_.alpha) + penalty();
        return log_plus <= bound && log_minus <= bound;
    }

    const InfluenceFn& influence() const noexcept { return influence_; }
    CatoniSides sides() const noexcept { return sides_; }
    double last_lambda() const noexcept { return last_lambda_; }
    std::size_t next_index() const noexcept { return state_.t() + 1; }
    const StreamState& state() const noexcept { return state_; }
    const CsConfig& config() const noexcept { return cfg_; }

private:
    CsConfig cfg_;
    LambdaSchedule schedule_;
    InfluenceFn influence_;
    CatoniSides sides_;
    StreamState state_;
    double last_lambda_ = 0.0;
};

inline ConfidenceSet catoni_set(const CatoniEstimator& est) { return est.set(); }
inline bool tighter_membership(const CatoniEstimator& est, double m) { return est.tighter_membership(m); }

/// Incremental defining sum at a fixed point m, fed with the same
/// (lambda, X) pairs as an estimator. Used for O(1) membership scoring.
class PointScore {
public:
    PointScore(InfluenceFn inf, double m) : inf_(inf), m_(m) {}
    void add(double lambda, double x) noexcept { sum_ += inf_(lambda * (x - m_)); }
    double value() const noexcept { return sum_; }
    double point() const noexcept { return m_; }

private:
    InfluenceFn inf_;
    double m_;
    double sum_ = 0.0;
};

// ---------------------------------------------------------------------------
// Width concentration

/// Left side of the width-bound condition:
///   (sum lambda)^2 - 2 (sum lambda^2)(sigma2 sum lambda^2 + log(2/eps) + log(2/alpha)).
inline double width_bound_condition(std::span<const double> lambdas, double sigma2, double alpha, double eps) {
    CompensatedSum s1, s2;
    for (double l : lambdas) {
        s1.add(l);
        s2.add(l * l);
    }
    const double a = s1.value(), b = s2.value();
    return a * a - 2.0 * b * (sigma2 * b + std::log(2.0 / eps) + std::log(2.0 / alpha));
}

/// With probability >= 1 - eps the Catoni set built from the non-random
/// prefix `lambdas` is no wider than the returned value. nullopt when the
/// condition does not hold.
inline std::optional<double> width_bound(std::span<const double> lambdas, double sigma2, double alpha, double eps) {
    if (lambdas.empty() || width_bound_condition(lambdas, sigma2, alpha, eps) < 0.0) return std::nullopt;
    CompensatedSum s1, s2;
    for (double l : lambdas) {
        s1.add(l);
        s2.add(l * l);
    }
    return 4.0 * (sigma2 * s2.value() + std::log(2.0 / eps) + std::log(2.0 / alpha)) / s1.value();
}

// ---------------------------------------------------------------------------
// Stitching

/// sum_{m>=1} m^-s for s > 1: 64 explicit terms plus an Euler-Maclaurin tail
/// (error far below 1e-12 for s >= 1.1).
inline double zeta_series(double s) {
    constexpr int n = 64;
    double head = 0.0;
    for (int m = n - 1; m >= 1; --m) head += std::pow(m, -s);
    const double N = n;
    const double tail = std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s) +
                        s / 12.0 * std::pow(N, -s - 1.0) -
                        s * (s + 1) * (s + 2) / 720.0 * std::pow(N, -s - 3.0) +
                        s * (s + 1) * (s + 2) * (s + 3) * (s + 4) / 30240.0 * std::pow(N, -s - 5.0);
    return head + tail;
}

struct StitchPlan {
    double alpha = 0.05;
    double zeta = 0.0;                 // sum_{m>=1} m^-1.4
    std::vector<std::size_t> epochs;   // t_j = 2^j
    std::vector<double> alphas;        // alpha_j = alpha / ((j+1)^1.4 zeta)
    std::vector<double> lambdas;       // Lambda_j = sqrt(log(2/alpha_j) 2^(1/2 - j))

    std::size_t max_epoch() const noexcept { return epochs.empty() ? 0 : epochs.size() - 1; }
};

inline constexpr double kStitchExponent = 1.4;

inline StitchPlan stitch_plan(double alpha, std::size_t max_epoch) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("stitch_plan: alpha must lie in (0,1)");
    if (max_epoch > 62) throw ConfigError("stitch_plan: max_epoch must be <= 62");
    StitchPlan plan;
    plan.alpha = alpha;
    plan.zeta = zeta_series(kStitchExponent);
    for (std::size_t j = 0; j <= max_epoch; ++j) {
        const double aj = alpha / (std::pow(static_cast<double>(j + 1), kStitchExponent) * plan.zeta);
        plan.epochs.push_back(std::size_t{1} << j);
        plan.alphas.push_back(aj);
        plan.lambdas.push_back(std::sqrt(std::log(2.0 / aj) * std::pow(2.0, 0.5 - static_cast<double>(j))));
    }
    return plan;
}

/// j with 2^j <= t < 2^(j+1).
inline std::size_t stitch_epoch(std::size_t t) {
    if (t == 0) throw ConfigError("stitch_epoch: t must be >= 1");
    return static_cast<std::size_t>(std::bit_width(t)) - 1;
}

/// 6.8 sqrt((log log 2t + 0.72 log(10.4/alpha)) / t), for unit variance.
inline double stitched_boundary(std::size_t t, double alpha) {
    const double td = static_cast<double>(t);
    return 6.8 * std::sqrt((std::log(std::log(2.0 * td)) + 0.72 * std::log(10.4 / alpha)) / td);
}

struct StitchedResult {
    ConfidenceSet set;
    std::size_t epoch = 0;
    std::optional<double> boundary;  // reported once the epoch's width condition holds
};

/// Constant-Lambda_j Catoni set at level alpha_j for the epoch containing t,
/// computed on x / sigma and mapped back to the original scale.
inline StitchedResult stitched_catoni_set(const StitchPlan& plan, std::span<const double> xs, std::size_t t,
                                          double sigma2 = 1.0) {
    if (t == 0 || t > xs.size()) throw ConfigError("stitched_catoni_set: need 1 <= t <= history length");
    const std::size_t j = stitch_epoch(t);
    if (j > plan.max_epoch()) throw ConfigError("stitched_catoni_set: t beyond the plan's last epoch");
    const double sigma = std::sqrt(sigma2);
    const double lam = plan.lambdas[j];
    const double aj = plan.alphas[j];
    const double td = static_cast<double>(t);
    const InfluenceFn inf(2.0);
    const auto prefix = xs.first(t);

    CompensatedSum mean;
    for (double x : prefix) mean.add(x / sigma);
    const double center = mean.value() / td;
    const double c = 0.5 * lam * lam * td + std::log(2.0 / aj);
    auto f = [&](double m) {
        double s = 0.0;
        for (double x : prefix) s += inf(lam * (x / sigma - m));
        return s;
    };
    StitchedResult out;
    out.epoch = j;
    out.set = solve_catoni_set(f, c, center, c / (lam * td), false).scaled(sigma);
    const double eps = plan.alphas.front();
    if ((0.5 - lam * lam) * td >= std::log(2.0 / eps) + std::log(2.0 / aj))
        out.boundary = sigma * stitched_boundary(t, plan.alpha);
    return out;
}

}  // namespace anycs
