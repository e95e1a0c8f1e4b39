// baselines.hpp
//
// Reference intervals and sequences used for comparison: fixed-time CIs
// (Chebyshev, Chernoff, Catoni), sub-Gaussian sequences (normal mixture,
// predictably mixed Hoeffding, stitched envelope) and the union-bound
// "trivial" Catoni sequence.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

#include "anycs/catoni.hpp"
#include "anycs/core.hpp"
#include "anycs/schedules.hpp"

namespace anycs {

enum class BaselineKind {
    chebyshev_ci,
    chernoff_ci,
    normal_mixture_cs,
    pm_hoeffding_cs,
    stitched_subgaussian_cs,
    trivial_catoni_cs,
    catoni_ci,
};

enum class Assumption { finite_variance, subgaussian };

struct BaselineInfo {
    std::string_view name;
    Assumption assumption;
    bool sequential;  // valid uniformly over time
};

inline constexpr BaselineInfo baseline_info(BaselineKind k) {
    switch (k) {
        case BaselineKind::chebyshev_ci: return {"chebyshev-ci", Assumption::finite_variance, false};
        case BaselineKind::chernoff_ci: return {"chernoff-ci", Assumption::subgaussian, false};
        case BaselineKind::normal_mixture_cs: return {"normal-mixture-cs", Assumption::subgaussian, true};
        case BaselineKind::pm_hoeffding_cs: return {"pm-hoeffding-cs", Assumption::subgaussian, true};
        case BaselineKind::stitched_subgaussian_cs:
            return {"stitched-subgaussian-cs", Assumption::subgaussian, true};
        case BaselineKind::trivial_catoni_cs: return {"trivial-catoni-cs", Assumption::finite_variance, true};
        case BaselineKind::catoni_ci: return {"catoni-ci", Assumption::finite_variance, false};
    }
    return {"?", Assumption::finite_variance, false};
}

inline void require_positive_t(std::size_t t) {
    if (t == 0) throw ConfigError("baseline requires t >= 1");
}

/// [mean +/- sigma / sqrt(alpha t)]
inline Interval chebyshev_ci(std::size_t t, double mean_hat, double sigma2, double alpha) {
    require_positive_t(t);
    const double h = std::sqrt(sigma2 / (alpha * static_cast<double>(t)));
    return {mean_hat - h, mean_hat + h};
}

/// [mean +/- sigma sqrt(2 log(2/alpha) / t)]
inline Interval chernoff_ci(std::size_t t, double mean_hat, double sigma2, double alpha) {
    require_positive_t(t);
    const double h = std::sqrt(sigma2 * 2.0 * std::log(2.0 / alpha) / static_cast<double>(t));
    return {mean_hat - h, mean_hat + h};
}

/// Two-sided normal mixture: [mean +/- sigma sqrt((t+1) log(4(t+1)/alpha^2)) / t]
inline Interval normal_mixture_cs(std::size_t t, double mean_hat, double sigma2, double alpha) {
    require_positive_t(t);
    const double td = static_cast<double>(t);
    const double h = std::sqrt(sigma2 * (td + 1.0) * std::log(4.0 * (td + 1.0) / (alpha * alpha))) / td;
    return {mean_hat - h, mean_hat + h};
}

/// [(sum lambda X +/- (sigma^2 sum lambda^2 / 2 + log(2/alpha))) / sum lambda]
inline Interval pm_hoeffding_cs(const StreamState& state, double sigma2, double alpha) {
    if (!(state.sum_lam() > 0.0)) throw ConfigError("pm_hoeffding_cs requires sum lambda > 0");
    const double center = state.sum_lam_x() / state.sum_lam();
    const double h = (0.5 * sigma2 * state.sum_lam2() + std::log(2.0 / alpha)) / state.sum_lam();
    return {center - h, center + h};
}

/// Closed-form envelope of the stitched sub-Gaussian sequence:
/// [mean +/- 1.7 sigma sqrt((log log 2t + 0.72 log(10.4/alpha)) / t)]
inline Interval stitched_subgaussian_cs(std::size_t t, double mean_hat, double alpha, double sigma = 1.0) {
    require_positive_t(t);
    const double td = static_cast<double>(t);
    const double h = 1.7 * sigma * std::sqrt((std::log(std::log(2.0 * td)) + 0.72 * std::log(10.4 / alpha)) / td);
    return {mean_hat - h, mean_hat + h};
}

/// Fixed-time Catoni interval at time t: the tuned coefficient for index t
/// applied to every observation, threshold sigma^2 t lambda^2 / 2 + log(2/alpha).
/// Requires t > 2 log(2/alpha).
inline ConfidenceSet catoni_ci(std::span<const double> xs, std::size_t t, double sigma2, double alpha) {
    require_positive_t(t);
    if (t > xs.size()) throw ConfigError("catoni_ci: t exceeds history length");
    const double td = static_cast<double>(t);
    if (!(td > 2.0 * std::log(2.0 / alpha)))
        throw ConfigError("catoni_ci: level too small for t=" + std::to_string(t) + " (needs t > 2 log(2/alpha))");
    const double lam = catoni_lambda(t, alpha, sigma2, 1);
    const double c = 0.5 * sigma2 * td * lam * lam + std::log(2.0 / alpha);
    const InfluenceFn inf(2.0);
    const auto prefix = xs.first(t);
    const double center = compensated_total(prefix) / td;
    auto f = [&](double m) {
        double s = 0.0;
        for (double x : prefix) s += inf(lam * (x - m));
        return s;
    };
    return solve_catoni_set(f, c, center, c / (lam * td), false);
}

/// Per-time level of the union-bound construction: alpha / (t (t+1)).
inline double trivial_catoni_level(std::size_t t, double alpha) {
    const double td = static_cast<double>(t);
    return alpha / (td * (td + 1.0));
}

/// Catoni CI at level alpha / (t(t+1)). While t <= 2 log(2/alpha_t) the
/// fixed-time tuning is undefined and the whole line is returned.
inline ConfidenceSet trivial_catoni_cs(std::span<const double> xs, std::size_t t, double sigma2, double alpha) {
    require_positive_t(t);
    const double at = trivial_catoni_level(t, alpha);
    if (!(static_cast<double>(t) > 2.0 * std::log(2.0 / at))) return ConfidenceSet::real_line();
    return catoni_ci(xs, t, sigma2, at);
}

}  // namespace anycs
