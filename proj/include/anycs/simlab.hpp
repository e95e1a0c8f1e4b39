// simlab.hpp
//
// Seeded data generators and the Monte-Carlo harness: time-uniform coverage,
// width profiles over (t, alpha) grids, and first-crossing times.
//
// Replication r of a run with seed s draws from an engine seeded with
// child_seed(s, r), so results do not depend on thread scheduling. The true
// mean is only ever used to score the sets a method produces.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "anycs/baselines.hpp"
#include "anycs/catoni.hpp"
#include "anycs/core.hpp"
#include "anycs/ds_sn.hpp"
#include "anycs/schedules.hpp"

namespace anycs {

// ---------------------------------------------------------------------------
// Generators

enum class Family { gaussian, student_t, pareto, sde_drift };

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::student_t: return "student-t";
        case Family::pareto: return "pareto";
        case Family::sde_drift: return "sde-drift";
    }
    return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
    for (auto f : {Family::gaussian, Family::student_t, Family::pareto, Family::sde_drift})
        if (family_name(f) == s) return f;
    return std::nullopt;
}

struct GeneratorSpec {
    Family family = Family::gaussian;
    std::optional<double> mean;      // unset: uniform on [-10, 10], drawn per replication
    std::optional<double> variance;  // target variance (gaussian, student-t, sde-drift)
    double df = 3.0;                 // student-t degrees of freedom
    double pareto_index = 1.8;       // Pareto shape a (scale 1)
    double sde_damping = 0.5;        // d in f(g) = 1 - d (1 - cos g) / 2
    std::uint64_t seed = 0;

    void validate() const {
        switch (family) {
            case Family::gaussian:
            case Family::sde_drift:
                if (variance && !(*variance >= 0.0)) throw ConfigError("variance must be non-negative");
                if (family == Family::sde_drift && !(sde_damping >= 0.0 && sde_damping <= 1.0))
                    throw ConfigError("sde damping must lie in [0,1]");
                break;
            case Family::student_t:
                if (!(df > 0.0)) throw ConfigError("student-t requires df > 0");
                if (variance && !(df > 2.0)) throw ConfigError("student-t variance target requires df > 2");
                break;
            case Family::pareto:
                if (!(pareto_index > 1.0)) throw ConfigError("pareto requires index > 1");
                if (variance) throw ConfigError("pareto does not accept a variance target");
                break;
        }
    }
};

/// SplitMix64 finalizer over (seed, rep).
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t rep) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (rep + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Scale that brings a t(df) variate to the target standard deviation.
inline double student_t_scale(double df, double target_sd) { return target_sd * std::sqrt((df - 2.0) / df); }

/// Sequential draws for one replication.
class DataStream {
public:
    DataStream(const GeneratorSpec& spec, std::uint64_t rep) : spec_(spec), rng_(child_seed(spec.seed, rep)) {
        spec_.validate();
        mean_ = spec_.mean ? *spec_.mean : std::uniform_real_distribution<double>(-10.0, 10.0)(rng_);
        if (spec_.family == Family::student_t) t_dist_ = std::student_t_distribution<double>(spec_.df);
    }

    double mean() const noexcept { return mean_; }

    double next() {
        switch (spec_.family) {
            case Family::gaussian: return mean_ + sd() * normal_(rng_);
            case Family::student_t: {
                const double z = t_dist_(rng_);
                const double scale = spec_.variance ? student_t_scale(spec_.df, std::sqrt(*spec_.variance)) : 1.0;
                return mean_ + scale * z;
            }
            case Family::pareto: {
                const double a = spec_.pareto_index;
                const double u = 1.0 - unit_(rng_);  // (0, 1]
                return mean_ + std::pow(u, -1.0 / a) - a / (a - 1.0);
            }
            case Family::sde_drift: {
                const double f = 1.0 - spec_.sde_damping * (1.0 - std::cos(g_)) / 2.0;
                const double x = mean_ + sd() * f * normal_(rng_);
                g_ += x;
                return x;
            }
        }
        return mean_;
    }

private:
    double sd() const { return std::sqrt(spec_.variance.value_or(1.0)); }

    GeneratorSpec spec_;
    std::mt19937_64 rng_;
    double mean_ = 0.0;
    double g_ = 0.0;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::student_t_distribution<double> t_dist_{3.0};
};

inline std::vector<double> generate(const GeneratorSpec& spec, std::size_t n, std::uint64_t rep = 0) {
    DataStream s(spec, rep);
    std::vector<double> out(n);
    for (auto& x : out) x = s.next();
    return out;
}

/// sigma sqrt(2 log log t / t); reference curve, t >= 3.
inline double lil_reference(double t, double sigma) {
    if (!(t >= 3.0)) throw ConfigError("lil_reference requires t >= 3");
    return sigma * std::sqrt(2.0 * std::log(std::log(t)) / t);
}

// ---------------------------------------------------------------------------
// Methods

enum class Method {
    ds,
    sn,
    catoni,
    catoni_stitched,
    catoni_onesided,
    p_catoni,
    chebyshev,
    chernoff,
    nmix,
    pm_hoeffding,
    stitched_subg,
    trivial_catoni,
    catoni_ci,
};

inline constexpr Method kAllMethods[] = {
    Method::ds,        Method::sn,           Method::catoni,        Method::catoni_stitched, Method::catoni_onesided,
    Method::p_catoni,  Method::chebyshev,    Method::chernoff,      Method::nmix,            Method::pm_hoeffding,
    Method::stitched_subg, Method::trivial_catoni, Method::catoni_ci,
};

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::ds: return "ds";
        case Method::sn: return "sn";
        case Method::catoni: return "catoni";
        case Method::catoni_stitched: return "catoni-stitched";
        case Method::catoni_onesided: return "catoni-onesided";
        case Method::p_catoni: return "p-catoni";
        case Method::chebyshev: return "chebyshev";
        case Method::chernoff: return "chernoff";
        case Method::nmix: return "nmix";
        case Method::pm_hoeffding: return "pm-hoeffding";
        case Method::stitched_subg: return "stitched-subg";
        case Method::trivial_catoni: return "trivial-catoni";
        case Method::catoni_ci: return "catoni-ci";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    for (auto m : kAllMethods)
        if (method_name(m) == s) return m;
    return std::nullopt;
}

struct MethodSpec {
    Method method = Method::catoni;
    CsConfig config;
    std::optional<LambdaSchedule> schedule;  // unset: the method's tuned default
    std::size_t floor_index = 9;
};

/// Tuned coefficient schedule for a method at its configured level.
inline LambdaSchedule default_schedule(const MethodSpec& spec) {
    const auto& c = spec.config;
    switch (spec.method) {
        case Method::ds: return LambdaSchedule::ds_tuned(c.alpha, c.sigma2);
        case Method::sn:
            return LambdaSchedule::sn_tuned(c.alpha_split ? c.alpha_split->first : c.alpha, c.sigma2);
        case Method::p_catoni: return LambdaSchedule::p_catoni_tuned(c.alpha, c.p, c.v);
        default: return LambdaSchedule::catoni_tuned(c.alpha, c.sigma2, spec.floor_index);
    }
}

/// Where a probe point sits relative to a set.
enum class ProbeStatus { inside, below_set, above_set, outside };

inline ProbeStatus locate(const ConfidenceSet& s, double m) {
    if (s.contains(m)) return ProbeStatus::inside;
    if (s.is_empty()) return ProbeStatus::outside;
    if (m < s.lower()) return ProbeStatus::below_set;
    if (m > s.upper()) return ProbeStatus::above_set;
    return ProbeStatus::outside;
}

/// Harness-side adapter: feeds a method one observation at a time and scores
/// a fixed probe point (the true mean, or a crossing threshold). The wrapped
/// estimator never sees the probe.
class Runner {
public:
    virtual ~Runner() = default;
    virtual void push(double x) = 0;
    virtual ConfidenceSet set() const = 0;
    virtual ProbeStatus probe() const { return locate(set(), probe_); }
    virtual double middle_width() const { return kInf; }
    std::size_t t() const noexcept { return t_; }

protected:
    explicit Runner(double probe) : probe_(probe) {}
    double probe_;
    std::size_t t_ = 0;
};

namespace detail {

class DsRunner final : public Runner {
public:
    DsRunner(const MethodSpec& s, double probe)
        : Runner(probe), est_(s.config, s.schedule ? *s.schedule : default_schedule(s)) {}
    void push(double x) override { est_.update({++t_, x}); }
    ConfidenceSet set() const override { return est_.set(); }

private:
    DsEstimator est_;
};

class SnRunner final : public Runner {
public:
    SnRunner(const MethodSpec& s, double probe)
        : Runner(probe), est_(s.config, s.schedule ? *s.schedule : default_schedule(s)) {}
    void push(double x) override { est_.update({++t_, x}); }
    ConfidenceSet set() const override { return est_.set(); }
    double middle_width() const override { return est_.middle_width(); }

private:
    SnEstimator est_;
};

class CatoniRunner final : public Runner {
public:
    CatoniRunner(const MethodSpec& s, double probe, CatoniSides sides)
        : Runner(probe), est_(s.config, s.schedule ? *s.schedule : default_schedule(s), sides),
          score_(est_.influence(), probe) {}
    void push(double x) override {
        const double lambda = est_.update({++t_, x});
        score_.add(lambda, x);
    }
    ConfidenceSet set() const override { return est_.set(); }
    ProbeStatus probe() const override {
        if (t_ == 0) return ProbeStatus::inside;
        const double f = score_.value();
        const double c = est_.threshold();
        if (f > c) return ProbeStatus::below_set;
        if (est_.sides() == CatoniSides::two_sided && f < -c) return ProbeStatus::above_set;
        return ProbeStatus::inside;
    }

private:
    CatoniEstimator est_;
    PointScore score_;
};

class StitchedRunner final : public Runner {
public:
    StitchedRunner(const MethodSpec& s, double probe)
        : Runner(probe), plan_(stitch_plan(s.config.alpha, 62)), sigma2_(s.config.sigma2),
          sigma_(std::sqrt(s.config.sigma2)) {}

    void push(double x) override {
        xs_.push_back(x);
        ++t_;
        const std::size_t j = stitch_epoch(t_);
        const double lam = plan_.lambdas[j];
        if (j != epoch_ || t_ == 1) {
            epoch_ = j;
            score_ = 0.0;
            for (double v : xs_) score_ += inf_(lam * (v - probe_) / sigma_);
        } else {
            score_ += inf_(lam * (x - probe_) / sigma_);
        }
    }

    ConfidenceSet set() const override {
        if (t_ == 0) return ConfidenceSet::real_line();
        return stitched_catoni_set(plan_, xs_, t_, sigma2_).set;
    }

    ProbeStatus probe() const override {
        if (t_ == 0) return ProbeStatus::inside;
        const double lam = plan_.lambdas[epoch_];
        const double c = 0.5 * lam * lam * static_cast<double>(t_) + std::log(2.0 / plan_.alphas[epoch_]);
        if (score_ > c) return ProbeStatus::below_set;
        if (score_ < -c) return ProbeStatus::above_set;
        return ProbeStatus::inside;
    }

private:
    StitchPlan plan_;
    double sigma2_, sigma_;
    InfluenceFn inf_{2.0};
    std::vector<double> xs_;
    std::size_t epoch_ = 0;
    double score_ = 0.0;
};

/// Fixed-time Catoni CI evaluated afresh at every t, optionally at the
/// union-bound level alpha / (t(t+1)).
class CatoniCiRunner final : public Runner {
public:
    CatoniCiRunner(const MethodSpec& s, double probe, bool trivial)
        : Runner(probe), sigma2_(s.config.sigma2), alpha_(s.config.alpha), trivial_(trivial) {}

    void push(double x) override {
        xs_.push_back(x);
        ++t_;
    }

    ConfidenceSet set() const override {
        if (t_ == 0 || !defined()) return ConfidenceSet::real_line();
        return catoni_ci(xs_, t_, sigma2_, level());
    }

    ProbeStatus probe() const override {
        if (t_ == 0 || !defined()) return ProbeStatus::inside;
        const double a = level();
        const double lam = catoni_lambda(t_, a, sigma2_, 1);
        const double c = 0.5 * sigma2_ * static_cast<double>(t_) * lam * lam + std::log(2.0 / a);
        double f = 0.0;
        for (double x : xs_) f += inf_(lam * (x - probe_));
        if (f > c) return ProbeStatus::below_set;
        if (f < -c) return ProbeStatus::above_set;
        return ProbeStatus::inside;
    }

private:
    double level() const { return trivial_ ? trivial_catoni_level(t_, alpha_) : alpha_; }
    bool defined() const { return static_cast<double>(t_) > 2.0 * std::log(2.0 / level()); }

    double sigma2_, alpha_;
    bool trivial_;
    InfluenceFn inf_{2.0};
    std::vector<double> xs_;
};

/// Closed-form intervals around the running sample mean.
class MeanIntervalRunner final : public Runner {
public:
    MeanIntervalRunner(const MethodSpec& s, double probe) : Runner(probe), method_(s.method), cfg_(s.config) {}
    void push(double x) override {
        sum_.add(x);
        ++t_;
    }
    ConfidenceSet set() const override {
        if (t_ == 0) return ConfidenceSet::real_line();
        const double mean = sum_.value() / static_cast<double>(t_);
        Interval i;
        switch (method_) {
            case Method::chebyshev: i = chebyshev_ci(t_, mean, cfg_.sigma2, cfg_.alpha); break;
            case Method::chernoff: i = chernoff_ci(t_, mean, cfg_.sigma2, cfg_.alpha); break;
            case Method::nmix: i = normal_mixture_cs(t_, mean, cfg_.sigma2, cfg_.alpha); break;
            default: i = stitched_subgaussian_cs(t_, mean, cfg_.alpha, std::sqrt(cfg_.sigma2)); break;
        }
        return ConfidenceSet(i.lo, i.hi);
    }

private:
    Method method_;
    CsConfig cfg_;
    CompensatedSum sum_;
};

class PmHoeffdingRunner final : public Runner {
public:
    PmHoeffdingRunner(const MethodSpec& s, double probe)
        : Runner(probe), cfg_(s.config), schedule_(s.schedule ? *s.schedule : default_schedule(s)),
          state_(StreamOptions{2.0, s.config.sigma2, 0.0, false}) {}
    void push(double x) override {
        const double lambda = schedule_.next();
        state_.update(lambda, {++t_, x});
        schedule_.observe(x);
    }
    ConfidenceSet set() const override {
        if (t_ == 0) return ConfidenceSet::real_line();
        const auto i = pm_hoeffding_cs(state_, cfg_.sigma2, cfg_.alpha);
        return ConfidenceSet(i.lo, i.hi);
    }

private:
    CsConfig cfg_;
    LambdaSchedule schedule_;
    StreamState state_;
};

/// Applies the running intersection on top of another runner.
class IntersectingRunner final : public Runner {
public:
    IntersectingRunner(std::unique_ptr<Runner> inner, double probe) : Runner(probe), inner_(std::move(inner)) {}
    void push(double x) override {
        inner_->push(x);
        ++t_;
        running_.push(inner_->set());
    }
    ConfidenceSet set() const override { return running_.current(); }
    double middle_width() const override { return inner_->middle_width(); }

private:
    std::unique_ptr<Runner> inner_;
    RunningIntersection running_;
};

}  // namespace detail

inline std::unique_ptr<Runner> make_runner(const MethodSpec& spec, double probe) {
    std::unique_ptr<Runner> r;
    switch (spec.method) {
        case Method::ds: r = std::make_unique<detail::DsRunner>(spec, probe); break;
        case Method::sn: r = std::make_unique<detail::SnRunner>(spec, probe); break;
        case Method::catoni:
        case Method::p_catoni:
            r = std::make_unique<detail::CatoniRunner>(spec, probe, CatoniSides::two_sided);
            break;
        case Method::catoni_onesided:
            r = std::make_unique<detail::CatoniRunner>(spec, probe, CatoniSides::one_sided);
            break;
        case Method::catoni_stitched: r = std::make_unique<detail::StitchedRunner>(spec, probe); break;
        case Method::trivial_catoni: r = std::make_unique<detail::CatoniCiRunner>(spec, probe, true); break;
        case Method::catoni_ci: r = std::make_unique<detail::CatoniCiRunner>(spec, probe, false); break;
        case Method::pm_hoeffding: r = std::make_unique<detail::PmHoeffdingRunner>(spec, probe); break;
        case Method::chebyshev:
        case Method::chernoff:
        case Method::nmix:
        case Method::stitched_subg: r = std::make_unique<detail::MeanIntervalRunner>(spec, probe); break;
    }
    if (spec.config.intersect) r = std::make_unique<detail::IntersectingRunner>(std::move(r), probe);
    return r;
}

/// Copy of `spec` at level alpha; an alpha split keeps its proportions.
inline MethodSpec at_level(MethodSpec spec, double alpha) {
    if (spec.config.alpha_split) {
        const double frac = spec.config.alpha_split->first / spec.config.alpha;
        spec.config.alpha_split = std::pair{frac * alpha, alpha - frac * alpha};
    }
    spec.config.alpha = alpha;
    spec.schedule.reset();
    return spec;
}

// ---------------------------------------------------------------------------
// Harness

/// Estimator failure inside an experiment, tagged with its position.
class ExperimentError : public Error {
public:
    ExperimentError(const std::string& what, std::size_t rep, std::size_t t)
        : Error("rep=" + std::to_string(rep) + " t=" + std::to_string(t) + ": " + what), rep_(rep), t_(t) {}
    std::size_t rep() const noexcept { return rep_; }
    std::size_t t() const noexcept { return t_; }

private:
    std::size_t rep_, t_;
};

namespace detail {

/// Runs body(rep) for rep in [0, reps) on `threads` workers. Each body writes
/// only its own slot, so merging is order-independent.
template <class Body>
void parallel_reps(std::size_t reps, std::size_t threads, const Body& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(reps, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= reps) return;
            try {
                body(rep);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(reps);
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

template <class F>
auto tagged(std::size_t rep, const std::size_t& t, const F& f) {
    try {
        return f();
    } catch (const ExperimentError&) {
        throw;
    } catch (const Error& e) {
        throw ExperimentError(e.what(), rep, t);
    }
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
    return v[lo] + frac * (v[hi] - v[lo]);
}

struct ExperimentMeta {
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
    std::size_t reps = 0;
    std::vector<std::uint64_t> rep_seeds;
    std::vector<double> centers;  // true mean of each replication
    double runtime_s = 0.0;
};

struct CoverageReport {
    std::string method;
    std::string family;
    double alpha = 0.0;
    std::size_t misses = 0;
    double rate = 0.0;
    double se = 0.0;          // binomial s.e. at the nominal level
    double band_upper = 0.0;  // alpha + 3 se
    std::vector<std::size_t> first_miss;  // 0 = covered through the horizon
    ExperimentMeta meta;
};

/// Fraction of replications in which the true mean leaves the set at some t <= horizon.
inline CoverageReport run_coverage(const MethodSpec& method, const GeneratorSpec& gen, std::size_t horizon,
                                   std::size_t reps, std::size_t threads = 0) {
    gen.validate();
    const auto start = std::chrono::steady_clock::now();
    CoverageReport rep_out;
    rep_out.method = method_name(method.method);
    rep_out.family = family_name(gen.family);
    rep_out.alpha = method.config.alpha;
    rep_out.first_miss.assign(reps, 0);
    rep_out.meta.centers.assign(reps, 0.0);
    detail::parallel_reps(reps, threads, [&](std::size_t r) {
        DataStream data(gen, r);
        rep_out.meta.centers[r] = data.mean();
        std::size_t t = 0;
        detail::tagged(r, t, [&] {
            auto runner = make_runner(method, data.mean());
            for (t = 1; t <= horizon; ++t) {
                runner->push(data.next());
                if (runner->probe() != ProbeStatus::inside) {
                    rep_out.first_miss[r] = t;
                    break;
                }
            }
            return 0;
        });
    });
    for (auto m : rep_out.first_miss) rep_out.misses += (m != 0);
    const double a = method.config.alpha;
    rep_out.rate = reps ? static_cast<double>(rep_out.misses) / static_cast<double>(reps) : 0.0;
    rep_out.se = reps ? std::sqrt(a * (1.0 - a) / static_cast<double>(reps)) : 0.0;
    rep_out.band_upper = a + 3.0 * rep_out.se;
    rep_out.meta.seed = gen.seed;
    rep_out.meta.horizon = horizon;
    rep_out.meta.reps = reps;
    for (std::size_t r = 0; r < reps; ++r) rep_out.meta.rep_seeds.push_back(child_seed(gen.seed, r));
    rep_out.meta.runtime_s = detail::seconds_since(start);
    return rep_out;
}

struct WidthCell {
    std::string method;
    double alpha = 0.0;
    std::size_t t = 0;
    std::vector<double> widths;  // one per replication; SN reports its middle component
    double mean = 0.0, q10 = 0.0, median = 0.0, q90 = 0.0;
    double three_piece_fraction = 0.0;  // SN only: share of reps with the L/M/U topology
};

struct WidthReport {
    std::vector<WidthCell> cells;  // ordered by method, then alpha, then t
    ExperimentMeta meta;

    const WidthCell* find(std::string_view method, double alpha, std::size_t t) const {
        for (const auto& c : cells)
            if (c.method == method && c.alpha == alpha && c.t == t) return &c;
        return nullptr;
    }
};

/// Width statistics on a (t, alpha) grid. All methods and levels see the same
/// data in each replication.
inline WidthReport run_width_profile(const std::vector<MethodSpec>& methods, const GeneratorSpec& gen,
                                     std::span<const std::size_t> times, std::size_t reps,
                                     std::span<const double> alphas, std::size_t threads = 0) {
    gen.validate();
    if (times.empty()) throw ConfigError("width profile needs at least one time");
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> grid(times.begin(), times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() == 0) throw ConfigError("width profile times must be >= 1");
    const std::size_t horizon = grid.back();

    WidthReport out;
    for (const auto& m : methods)
        for (double a : alphas)
            for (auto t : grid) {
                WidthCell c;
                c.method = method_name(m.method);
                c.alpha = a;
                c.t = t;
                c.widths.assign(reps, 0.0);
                out.cells.push_back(std::move(c));
            }
    std::vector<std::vector<char>> three(out.cells.size(), std::vector<char>(reps, 0));
    out.meta.centers.assign(reps, 0.0);

    detail::parallel_reps(reps, threads, [&](std::size_t r) {
        DataStream data(gen, r);
        out.meta.centers[r] = data.mean();
        std::vector<double> xs(horizon);
        for (auto& x : xs) x = data.next();
        std::size_t cell = 0;
        std::size_t t = 0;
        for (const auto& m : methods)
            for (double a : alphas) {
                detail::tagged(r, t, [&] {
                    auto runner = make_runner(at_level(m, a), data.mean());
                    std::size_t g = 0;
                    for (t = 1; t <= horizon; ++t) {
                        runner->push(xs[t - 1]);
                        if (t == grid[g]) {
                            double w;
                            if (m.method == Method::sn && !m.config.alpha_split) {
                                w = runner->middle_width();
                                three[cell + g][r] = std::isfinite(w);
                            } else {
                                w = runner->set().width();
                            }
                            out.cells[cell + g].widths[r] = w;
                            ++g;
                        }
                    }
                    return 0;
                });
                cell += grid.size();
            }
    });

    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        auto& c = out.cells[i];
        double s = 0.0;
        for (double w : c.widths) s += w;
        c.mean = reps ? s / static_cast<double>(reps) : 0.0;
        c.q10 = quantile(c.widths, 0.1);
        c.median = quantile(c.widths, 0.5);
        c.q90 = quantile(c.widths, 0.9);
        std::size_t n3 = 0;
        for (char b : three[i]) n3 += b;
        c.three_piece_fraction = reps ? static_cast<double>(n3) / static_cast<double>(reps) : 0.0;
    }
    out.meta.seed = gen.seed;
    out.meta.horizon = horizon;
    out.meta.reps = reps;
    for (std::size_t r = 0; r < reps; ++r) out.meta.rep_seeds.push_back(child_seed(gen.seed, r));
    out.meta.runtime_s = detail::seconds_since(start);
    return out;
}

struct CrossingReport {
    std::string method_a, method_b;
    double threshold = 0.0;
    std::vector<std::optional<std::size_t>> cross_a, cross_b;  // nullopt = censored at the horizon
    double median_a = kInf, median_b = kInf;                   // +inf when the median is censored
    double ratio = std::nan("");                               // median_a / median_b
    ExperimentMeta meta;
};

/// Median with censored values ordered above every observed value.
inline double censored_median(const std::vector<std::optional<std::size_t>>& v) {
    if (v.empty()) return std::nan("");
    std::vector<double> d;
    d.reserve(v.size());
    for (const auto& x : v) d.push_back(x ? static_cast<double>(*x) : kInf);
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    if (n % 2 == 1) return d[n / 2];
    return 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

/// First t at which each method's lower endpoint exceeds `threshold`.
inline CrossingReport run_crossing(const MethodSpec& a, const MethodSpec& b, const GeneratorSpec& gen,
                                   double threshold, std::size_t horizon, std::size_t reps,
                                   std::size_t threads = 0) {
    gen.validate();
    const auto start = std::chrono::steady_clock::now();
    CrossingReport out;
    out.method_a = method_name(a.method);
    out.method_b = method_name(b.method);
    out.threshold = threshold;
    out.cross_a.assign(reps, std::nullopt);
    out.cross_b.assign(reps, std::nullopt);
    out.meta.centers.assign(reps, 0.0);
    detail::parallel_reps(reps, threads, [&](std::size_t r) {
        DataStream data(gen, r);
        out.meta.centers[r] = data.mean();
        std::size_t t = 0;
        detail::tagged(r, t, [&] {
            auto ra = make_runner(a, threshold);
            auto rb = make_runner(b, threshold);
            for (t = 1; t <= horizon && !(out.cross_a[r] && out.cross_b[r]); ++t) {
                const double x = data.next();
                if (!out.cross_a[r]) {
                    ra->push(x);
                    if (ra->probe() == ProbeStatus::below_set) out.cross_a[r] = t;
                }
                if (!out.cross_b[r]) {
                    rb->push(x);
                    if (rb->probe() == ProbeStatus::below_set) out.cross_b[r] = t;
                }
            }
            return 0;
        });
    });
    out.median_a = censored_median(out.cross_a);
    out.median_b = censored_median(out.cross_b);
    out.ratio = out.median_a / out.median_b;
    out.meta.seed = gen.seed;
    out.meta.horizon = horizon;
    out.meta.reps = reps;
    for (std::size_t r = 0; r < reps; ++r) out.meta.rep_seeds.push_back(child_seed(gen.seed, r));
    out.meta.runtime_s = detail::seconds_since(start);
    return out;
}

}  // namespace anycs
