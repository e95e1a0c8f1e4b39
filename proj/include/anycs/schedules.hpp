// schedules.hpp
//
// Predictable coefficient generators. Every schedule emits lambda_t using only
// t, its parameters, and observations 1..t-1.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "anycs/core.hpp"

namespace anycs {

/// Width-optimal coefficient for the Dubins-Savage sequence at target time t.
inline double ds_lambda(std::size_t t, double alpha, double sigma2) {
    if (t == 0) throw ScheduleError("ds_lambda: t must be >= 1");
    return std::sqrt((2.0 / alpha - 1.0) / (sigma2 * static_cast<double>(t)));
}

/// Self-normalized tuning; the sums run over observations 1..t-1.
inline double sn_lambda(std::size_t t, double alpha, double sigma2, double prev_sum_x, double prev_sum_x2) {
    if (t == 0) throw ScheduleError("sn_lambda: t must be >= 1");
    const double td = static_cast<double>(t);
    const double denom = td * (prev_sum_x2 + 2.0 * sigma2 * td) - prev_sum_x * prev_sum_x;
    if (!(denom > 0.0)) throw ScheduleError("sn_lambda: non-positive denominator at t=" + std::to_string(t));
    return std::sqrt(6.0 * td * std::log(2.0 / alpha) / denom);
}

/// Smallest admissible floor index for the Catoni tuning at level alpha.
inline std::size_t catoni_min_floor(double alpha) {
    return static_cast<std::size_t>(std::ceil(2.0 * std::log(2.0 / alpha))) + 1;
}

/// Catoni tuning evaluated at s = max(t, floor_index). Requires s > 2 log(2/alpha).
inline double catoni_lambda(std::size_t t, double alpha, double sigma2, std::size_t floor_index = 9) {
    if (t == 0) throw ScheduleError("catoni_lambda: t must be >= 1");
    const double s = static_cast<double>(std::max(t, floor_index));
    const double log_term = std::log(2.0 / alpha);
    if (!(s > 2.0 * log_term))
        throw ScheduleError("catoni_lambda: index " + std::to_string(static_cast<std::size_t>(s)) +
                            " must exceed 2 log(2/alpha); use a floor index of at least " +
                            std::to_string(catoni_min_floor(alpha)));
    const double eta2 = 2.0 * sigma2 * log_term / (s - 2.0 * log_term);
    return std::sqrt(2.0 * log_term / (s * (sigma2 + eta2)));
}

/// Tuning for the p-th moment Catoni sequence.
inline double p_catoni_lambda(std::size_t t, double alpha, double p, double v) {
    if (t == 0) throw ScheduleError("p_catoni_lambda: t must be >= 1");
    return 0.5 * std::pow(2.0 * p * std::log(2.0 / alpha) / (static_cast<double>(t) * v), 1.0 / p);
}

inline double capped_inv_sqrt(std::size_t t, double cap) {
    if (t == 0) throw ScheduleError("capped_inv_sqrt: t must be >= 1");
    return std::min(1.0 / std::sqrt(static_cast<double>(t)), cap);
}

/// scale * t^(-1/2 - gamma), matched to sigma_t growing like t^gamma.
inline double het_matched_lambda(std::size_t t, double gamma, double scale) {
    if (t == 0) throw ScheduleError("het_matched_lambda: t must be >= 1");
    return scale * std::pow(static_cast<double>(t), -0.5 - gamma);
}

enum class ScheduleKind {
    constant,
    inv_sqrt_capped,
    ds_tuned,
    sn_tuned,
    catoni_tuned,
    p_catoni_tuned,
    het_matched,
    custom_table,
};

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::inv_sqrt_capped: return "inv-sqrt-capped";
        case ScheduleKind::ds_tuned: return "ds-tuned";
        case ScheduleKind::sn_tuned: return "sn-tuned";
        case ScheduleKind::catoni_tuned: return "catoni-tuned";
        case ScheduleKind::p_catoni_tuned: return "p-catoni-tuned";
        case ScheduleKind::het_matched: return "het-matched";
        case ScheduleKind::custom_table: return "custom-table";
    }
    return "?";
}

/// Stateful coefficient generator. Call next() for lambda_t, then observe(X_t).
class LambdaSchedule {
public:
    static LambdaSchedule constant(double lambda) {
        if (!(lambda > 0.0)) throw ConfigError("constant schedule requires lambda > 0");
        LambdaSchedule s(ScheduleKind::constant);
        s.value_ = lambda;
        return s;
    }

    static LambdaSchedule inv_sqrt_capped(double cap) {
        if (!(cap > 0.0)) throw ConfigError("capped schedule requires cap > 0");
        LambdaSchedule s(ScheduleKind::inv_sqrt_capped);
        s.value_ = cap;
        return s;
    }

    static LambdaSchedule ds_tuned(double alpha, double sigma2) {
        LambdaSchedule s(ScheduleKind::ds_tuned);
        s.alpha_ = alpha;
        s.sigma2_ = sigma2;
        return s;
    }

    static LambdaSchedule sn_tuned(double alpha, double sigma2) {
        LambdaSchedule s(ScheduleKind::sn_tuned);
        s.alpha_ = alpha;
        s.sigma2_ = sigma2;
        return s;
    }

    /// The floor is raised to catoni_min_floor(alpha) when it is too small.
    static LambdaSchedule catoni_tuned(double alpha, double sigma2, std::size_t floor_index = 9) {
        LambdaSchedule s(ScheduleKind::catoni_tuned);
        s.alpha_ = alpha;
        s.sigma2_ = sigma2;
        s.floor_ = floor_index;
        if (static_cast<double>(s.floor_) <= 2.0 * std::log(2.0 / alpha)) s.floor_ = catoni_min_floor(alpha);
        return s;
    }

    static LambdaSchedule p_catoni_tuned(double alpha, double p, double v) {
        if (!(p > 1.0 && p <= 2.0) || !(v > 0.0)) throw ConfigError("p-catoni schedule requires 1<p<=2 and v>0");
        LambdaSchedule s(ScheduleKind::p_catoni_tuned);
        s.alpha_ = alpha;
        s.p_ = p;
        s.v_ = v;
        return s;
    }

    static LambdaSchedule het_matched(double gamma, double scale) {
        if (!(gamma >= 0.0 && gamma < 0.5)) throw ConfigError("het-matched schedule requires 0 <= gamma < 1/2");
        if (!(scale > 0.0)) throw ConfigError("het-matched schedule requires scale > 0");
        LambdaSchedule s(ScheduleKind::het_matched);
        s.gamma_ = gamma;
        s.value_ = scale;
        return s;
    }

    /// Finite table; indices past the end reuse the last entry.
    static LambdaSchedule custom_table(std::vector<double> table) {
        if (table.empty()) throw ConfigError("custom table must be non-empty");
        if (std::any_of(table.begin(), table.end(), [](double l) { return !(l > 0.0) || !std::isfinite(l); }))
            throw ConfigError("custom table entries must be positive and finite");
        LambdaSchedule s(ScheduleKind::custom_table);
        s.table_ = std::move(table);
        return s;
    }

    ScheduleKind kind() const noexcept { return kind_; }
    std::size_t floor_index() const noexcept { return floor_; }
    /// Number of observations consumed so far.
    std::size_t observed() const noexcept { return n_; }

    /// lambda_t for t = observed() + 1.
    double next() const {
        const std::size_t t = n_ + 1;
        switch (kind_) {
            case ScheduleKind::constant: return value_;
            case ScheduleKind::inv_sqrt_capped: return capped_inv_sqrt(t, value_);
            case ScheduleKind::ds_tuned: return ds_lambda(t, alpha_, sigma2_);
            case ScheduleKind::sn_tuned: return sn_lambda(t, alpha_, sigma2_, sum_x_.value(), sum_x2_.value());
            case ScheduleKind::catoni_tuned: return catoni_lambda(t, alpha_, sigma2_, floor_);
            case ScheduleKind::p_catoni_tuned: return p_catoni_lambda(t, alpha_, p_, v_);
            case ScheduleKind::het_matched: return het_matched_lambda(t, gamma_, value_);
            case ScheduleKind::custom_table: return table_[std::min(t, table_.size()) - 1];
        }
        throw ScheduleError("unknown schedule kind");
    }

    void observe(double x) noexcept {
        ++n_;
        if (kind_ == ScheduleKind::sn_tuned) {
            sum_x_.add(x);
            sum_x2_.add(x * x);
        }
    }

    /// True when lambda_t does not depend on the data.
    bool data_independent() const noexcept { return kind_ != ScheduleKind::sn_tuned; }

private:
    explicit LambdaSchedule(ScheduleKind k) : kind_(k) {}

    ScheduleKind kind_;
    double value_ = 0.0;
    double alpha_ = 0.05;
    double sigma2_ = 1.0;
    double p_ = 2.0;
    double v_ = 1.0;
    double gamma_ = 0.0;
    std::size_t floor_ = 9;
    std::vector<double> table_;
    std::size_t n_ = 0;
    CompensatedSum sum_x_, sum_x2_;  // shadow sums for sn_tuned
};

}  // namespace anycs
