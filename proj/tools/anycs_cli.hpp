// anycs_cli.hpp - command implementations for the anycs tool.
#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anycs/anycs.hpp"

namespace anycs::cli {

enum Exit : int { ok = 0, usage = 1, parse_error = 2, numeric_error = 3 };

struct RunConfig {
    std::string method = "catoni";
    double alpha = 0.05;
    double sigma2 = 1.0;
    std::optional<double> p;
    std::optional<double> v;
    std::string schedule = "default";
    std::optional<double> lambda;
    double cap = 1.0;
    std::size_t floor_index = 9;
    double gamma = 0.0;
    double scale = 1.0;
    std::string lambda_table;
    bool intersect = false;
    bool heteroscedastic = false;
    std::string alpha_split;  // "", "auto" (alpha'' = alpha/10) or a number (alpha'')

    std::optional<std::uint64_t> seed;
    std::size_t horizon = 0;
    std::size_t reps = 0;
    std::size_t threads = 0;
    std::string input;
    std::string output;
    std::string format = "csv";

    std::string family = "gaussian";
    std::optional<double> mean;
    std::optional<double> variance;
    double df = 3.0;
    double pareto_index = 1.8;
    double damping = 0.5;

    std::vector<std::string> methods;  // widths
    std::string method_b;              // crossing
    double threshold = 0.0;
    std::vector<double> alphas;
    std::vector<std::size_t> times;
    std::size_t max_epoch = 20;
};

namespace detail {

inline std::vector<double> read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open lambda table '" + path + "'");
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_number(line));
    }
    return out;
}

inline Method method_or_throw(const std::string& name) {
    auto m = parse_method(name);
    if (!m) throw ConfigError("unknown method '" + name + "'");
    return *m;
}

/// Turns flags into a validated MethodSpec. Nothing is computed before this succeeds.
inline MethodSpec build_method(const RunConfig& rc, const std::string& name) {
    MethodSpec spec;
    spec.method = method_or_throw(name);
    auto& c = spec.config;
    c.alpha = rc.alpha;
    c.sigma2 = rc.sigma2;
    c.intersect = rc.intersect;
    c.heteroscedastic = rc.heteroscedastic;
    if (spec.method == Method::p_catoni) {
        c.p = rc.p.value_or(1.5);
        if (rc.v) c.v = *rc.v;
        if (c.p < 2.0 && !rc.v && !rc.heteroscedastic) throw ConfigError("p < 2 requires --v");
    } else if (rc.p && *rc.p != 2.0) {
        throw ConfigError("--p applies only to p-catoni");
    }
    spec.floor_index = rc.floor_index;
    if (!rc.alpha_split.empty()) {
        if (spec.method != Method::sn) throw ConfigError("--alpha-split applies only to sn");
        const double a2 = rc.alpha_split == "auto" ? rc.alpha / 10.0 : parse_number(rc.alpha_split);
        if (!(a2 > 0.0 && a2 < rc.alpha)) throw ConfigError("--alpha-split must lie in (0, alpha)");
        c.alpha_split = std::pair{rc.alpha - a2, a2};
    }
    if (rc.heteroscedastic) {
        switch (spec.method) {
            case Method::ds:
            case Method::sn:
            case Method::catoni:
            case Method::catoni_onesided:
            case Method::p_catoni: break;
            default: throw ConfigError("--heteroscedastic is supported only by ds, sn, catoni, catoni-onesided, p-catoni");
        }
    }
    c.validate(spec.method == Method::p_catoni && c.p < 2.0);

    const auto& s = rc.schedule;
    if (s == "default") {
    } else if (s == "constant") {
        if (!rc.lambda) throw ConfigError("--schedule constant requires --lambda");
        spec.schedule = LambdaSchedule::constant(*rc.lambda);
    } else if (s == "inv-sqrt-capped") {
        spec.schedule = LambdaSchedule::inv_sqrt_capped(rc.cap);
    } else if (s == "ds-tuned") {
        spec.schedule = LambdaSchedule::ds_tuned(c.alpha, c.sigma2);
    } else if (s == "sn-tuned") {
        spec.schedule = LambdaSchedule::sn_tuned(c.alpha_split ? c.alpha_split->first : c.alpha, c.sigma2);
    } else if (s == "catoni-tuned") {
        spec.schedule = LambdaSchedule::catoni_tuned(c.alpha, c.sigma2, rc.floor_index);
    } else if (s == "p-catoni-tuned") {
        spec.schedule = LambdaSchedule::p_catoni_tuned(c.alpha, c.p, c.v);
    } else if (s == "het-matched") {
        spec.schedule = LambdaSchedule::het_matched(rc.gamma, rc.scale);
    } else if (s == "custom-table") {
        if (rc.lambda_table.empty()) throw ConfigError("--schedule custom-table requires --lambda-table");
        spec.schedule = LambdaSchedule::custom_table(read_table(rc.lambda_table));
    } else {
        throw ConfigError("unknown schedule '" + s + "'");
    }
    if (spec.schedule) {
        switch (spec.method) {
            case Method::ds:
            case Method::sn:
            case Method::catoni:
            case Method::catoni_onesided:
            case Method::p_catoni:
            case Method::pm_hoeffding: break;
            default: throw ConfigError("method '" + name + "' does not take a schedule");
        }
    }
    return spec;
}

inline GeneratorSpec build_generator(const RunConfig& rc) {
    GeneratorSpec g;
    auto f = parse_family(rc.family);
    if (!f) throw ConfigError("unknown family '" + rc.family + "'");
    g.family = *f;
    g.mean = rc.mean;
    g.variance = rc.variance;
    g.df = rc.df;
    g.pareto_index = rc.pareto_index;
    g.sde_damping = rc.damping;
    if (!rc.seed) throw ConfigError("--seed is required for experiments");
    g.seed = *rc.seed;
    g.validate();
    return g;
}

/// Output sink: csv rows or one JSON object per line.
class Writer {
public:
    Writer(std::ostream& os, std::string format) : os_(os), jsonl_(format == "jsonl") {
        if (format != "csv" && format != "jsonl") throw ConfigError("--format must be csv or jsonl");
    }
    bool jsonl() const { return jsonl_; }
    void line(const std::string& s) { os_ << s << '\n'; }
    void record(const nlohmann::ordered_json& j) { os_ << j.dump() << '\n'; }
    std::ostream& stream() { return os_; }

private:
    std::ostream& os_;
    bool jsonl_;
};

/// JSON has no infinities; non-finite numbers are written as strings.
inline nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline std::string join(const std::vector<std::string>& xs, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += xs[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// stream

/// One method consuming observations with optional per-row bounds.
class StreamDriver {
public:
    explicit StreamDriver(const MethodSpec& spec) : spec_(spec) {
        const auto sched = [&] { return spec.schedule ? *spec.schedule : default_schedule(spec); };
        switch (spec.method) {
            case Method::ds: ds_.emplace(spec.config, sched()); break;
            case Method::sn: sn_.emplace(spec.config, sched()); break;
            case Method::catoni:
            case Method::p_catoni: catoni_.emplace(spec.config, sched(), CatoniSides::two_sided); break;
            case Method::catoni_onesided: catoni_.emplace(spec.config, sched(), CatoniSides::one_sided); break;
            default: {
                auto plain = spec;
                plain.config.intersect = false;
                runner_ = make_runner(plain, 0.0);
            }
        }
    }

    ConfidenceSet step(const Observation& obs) {
        ++t_;
        ConfidenceSet s;
        if (ds_) s = ds_->step(obs);
        else if (sn_) s = sn_->step(obs);
        else if (catoni_) s = catoni_->step(obs);
        else {
            runner_->push(obs.x);
            s = runner_->set();
        }
        if (spec_.config.intersect) return running_.push(s);
        return s;
    }

    /// Diagnostic dump of the running sums.
    std::string dump() const {
        const StreamState* st = ds_ ? &ds_->state() : sn_ ? &sn_->state() : catoni_ ? &catoni_->state() : nullptr;
        std::ostringstream os;
        os << "state: t=" << t_;
        if (st) {
            os << " sum_lambda=" << format_number(st->sum_lam()) << " sum_lambda2=" << format_number(st->sum_lam2())
               << " sum_lambda_x=" << format_number(st->sum_lam_x())
               << " sum_lambda2_sigma2=" << format_number(st->sum_lam2_sig2());
        }
        if (catoni_) os << " threshold=" << format_number(catoni_->threshold());
        return os.str();
    }

private:
    MethodSpec spec_;
    std::optional<DsEstimator> ds_;
    std::optional<SnEstimator> sn_;
    std::optional<CatoniEstimator> catoni_;
    std::unique_ptr<Runner> runner_;
    RunningIntersection running_;
    std::size_t t_ = 0;
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',' || line[i] == ';' || line[i] == '\t') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline int cmd_stream(const RunConfig& rc, std::istream& in, Writer& w, std::ostream& err) {
    const MethodSpec spec = build_method(rc, rc.method);
    StreamDriver driver(spec);
    const bool p_mode = spec.method == Method::p_catoni && spec.config.p < 2.0;

    if (!w.jsonl()) w.line("t,set,width,topology");
    std::string line;
    std::size_t row = 0;
    std::size_t t = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string_view sv(line);
        while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
        while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
        if (sv.empty() || sv.front() == '#') continue;

        Observation obs;
        try {
            const auto fields = split_fields(sv);
            if (fields.size() > 2) throw ConfigError("expected 1 or 2 fields, got " + std::to_string(fields.size()));
            obs.x = parse_number(fields[0]);
            if (!std::isfinite(obs.x)) throw ConfigError("observation is not finite");
            if (fields.size() == 2) {
                if (!rc.heteroscedastic) throw ConfigError("second column requires --heteroscedastic");
                const double b = parse_number(fields[1]);
                if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("bound column must be positive");
                if (p_mode) obs.v_t = b;
                else obs.sigma_t = b;
            } else if (rc.heteroscedastic) {
                throw ConfigError(std::string("heteroscedastic input requires a ") + (p_mode ? "v_t" : "sigma_t") +
                                  " column");
            }
        } catch (const ConfigError& e) {
            err << "error: row " << row << ": " << e.what() << '\n';
            return parse_error;
        }
        obs.t = ++t;

        ConfidenceSet s;
        try {
            s = driver.step(obs);
        } catch (const NumericError& e) {
            err << "error: row " << row << " (t=" << t << "): " << e.what() << '\n' << driver.dump() << '\n';
            return numeric_error;
        } catch (const Error& e) {
            err << "error: row " << row << " (t=" << t << "): " << e.what() << '\n' << driver.dump() << '\n';
            return numeric_error;
        }
        if (w.jsonl()) {
            nlohmann::ordered_json j;
            j["t"] = t;
            j["set"] = serialize_set(s);
            j["width"] = number(s.width());
            j["topology"] = topology_tag(s);
            w.record(j);
        } else {
            w.line(std::to_string(t) + "," + serialize_set(s) + "," + format_number(s.width()) + "," +
                   topology_tag(s));
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// experiments

inline nlohmann::ordered_json meta_json(const ExperimentMeta& m) {
    nlohmann::ordered_json j;
    j["seed"] = m.seed;
    j["horizon"] = m.horizon;
    j["reps"] = m.reps;
    j["runtime_s"] = m.runtime_s;
    j["rep_seeds"] = m.rep_seeds;
    j["centers"] = m.centers;
    return j;
}

inline int cmd_coverage(const RunConfig& rc, Writer& w) {
    const auto spec = build_method(rc, rc.method);
    const auto gen = build_generator(rc);
    const auto r = run_coverage(spec, gen, rc.horizon ? rc.horizon : 5000, rc.reps ? rc.reps : 2000, rc.threads);
    if (w.jsonl()) {
        nlohmann::ordered_json j;
        j["method"] = r.method;
        j["family"] = r.family;
        j["alpha"] = r.alpha;
        j["misses"] = r.misses;
        j["rate"] = r.rate;
        j["se"] = r.se;
        j["band_upper"] = r.band_upper;
        j["first_miss"] = r.first_miss;
        j["meta"] = meta_json(r.meta);
        w.record(j);
    } else {
        w.line("method,family,alpha,horizon,reps,seed,misses,rate,se,band_upper,runtime_s");
        w.line(r.method + "," + r.family + "," + format_number(r.alpha) + "," + std::to_string(r.meta.horizon) +
               "," + std::to_string(r.meta.reps) + "," + std::to_string(r.meta.seed) + "," +
               std::to_string(r.misses) + "," + format_number(r.rate) + "," + format_number(r.se) + "," +
               format_number(r.band_upper) + "," + format_number(r.meta.runtime_s));
    }
    return ok;
}

inline int cmd_widths(const RunConfig& rc, Writer& w) {
    std::vector<std::string> names = rc.methods.empty() ? std::vector<std::string>{rc.method} : rc.methods;
    std::vector<MethodSpec> specs;
    for (const auto& n : names) specs.push_back(build_method(rc, n));
    const auto gen = build_generator(rc);
    const std::vector<double> alphas = rc.alphas.empty() ? std::vector<double>{rc.alpha} : rc.alphas;
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("--alphas entries must lie in (0,1)");
    const std::vector<std::size_t> times =
        rc.times.empty() ? std::vector<std::size_t>{rc.horizon ? rc.horizon : 250} : rc.times;
    const auto r = run_width_profile(specs, gen, times, rc.reps ? rc.reps : 50, alphas, rc.threads);

    std::vector<std::size_t> grid(times);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (w.jsonl()) {
        for (const auto& c : r.cells) {
            nlohmann::ordered_json j;
            j["method"] = c.method;
            j["alpha"] = c.alpha;
            j["t"] = c.t;
            j["mean"] = number(c.mean);
            j["q10"] = number(c.q10);
            j["median"] = number(c.median);
            j["q90"] = number(c.q90);
            if (c.method == "sn") j["three_piece_fraction"] = c.three_piece_fraction;
            w.record(j);
        }
        nlohmann::ordered_json m;
        m["meta"] = meta_json(r.meta);
        w.record(m);
        return ok;
    }
    std::vector<std::string> header{"t", "alpha"};
    for (const auto& n : names) {
        header.push_back(n);
        if (n == "sn") header.push_back("sn_three_piece");
    }
    w.line(join(header));
    for (auto t : grid)
        for (double a : alphas) {
            std::vector<std::string> row{std::to_string(t), format_number(a)};
            for (const auto& n : names) {
                const auto* c = r.find(n, a, t);
                row.push_back(format_number(c->median));
                if (n == "sn") row.push_back(format_number(c->three_piece_fraction));
            }
            w.line(join(row));
        }
    return ok;
}

inline std::string crossing_cell(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : "censored";
}

inline int cmd_crossing(const RunConfig& rc, Writer& w) {
    const auto a = build_method(rc, rc.method);
    const auto b = build_method(rc, rc.method_b.empty() ? rc.method : rc.method_b);
    const auto gen = build_generator(rc);
    const auto r = run_crossing(a, b, gen, rc.threshold, rc.horizon ? rc.horizon : 20000, rc.reps ? rc.reps : 100,
                                rc.threads);
    if (w.jsonl()) {
        for (std::size_t i = 0; i < r.cross_a.size(); ++i) {
            nlohmann::ordered_json j;
            j["rep"] = i;
            j["a"] = r.cross_a[i] ? nlohmann::ordered_json(*r.cross_a[i]) : "censored";
            j["b"] = r.cross_b[i] ? nlohmann::ordered_json(*r.cross_b[i]) : "censored";
            w.record(j);
        }
        nlohmann::ordered_json s;
        s["method_a"] = r.method_a;
        s["method_b"] = r.method_b;
        s["median_a"] = number(r.median_a);
        s["median_b"] = number(r.median_b);
        s["ratio"] = number(r.ratio);
        s["meta"] = meta_json(r.meta);
        w.record(s);
        return ok;
    }
    w.line("rep,a:" + r.method_a + ",b:" + r.method_b);
    for (std::size_t i = 0; i < r.cross_a.size(); ++i)
        w.line(std::to_string(i) + "," + crossing_cell(r.cross_a[i]) + "," + crossing_cell(r.cross_b[i]));
    w.line("median," + format_number(r.median_a) + "," + format_number(r.median_b));
    w.line("ratio," + format_number(r.ratio) + ",");
    return ok;
}

inline int cmd_stitchplan(const RunConfig& rc, Writer& w) {
    const auto plan = stitch_plan(rc.alpha, rc.max_epoch);
    double cum = 0.0;
    if (!w.jsonl()) w.line("j,t_j,alpha_j,lambda_j,cumulative_alpha");
    for (std::size_t j = 0; j < plan.epochs.size(); ++j) {
        cum += plan.alphas[j];
        if (w.jsonl()) {
            nlohmann::ordered_json r;
            r["j"] = j;
            r["t_j"] = plan.epochs[j];
            r["alpha_j"] = plan.alphas[j];
            r["lambda_j"] = plan.lambdas[j];
            r["cumulative_alpha"] = cum;
            w.record(r);
        } else {
            w.line(std::to_string(j) + "," + std::to_string(plan.epochs[j]) + "," + format_number(plan.alphas[j]) +
                   "," + format_number(plan.lambdas[j]) + "," + format_number(cum));
        }
    }
    return ok;
}

inline void add_method_flags(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--alpha", rc.alpha, "Error level in (0,1)");
    sub->add_option("--sigma2", rc.sigma2, "Variance bound");
    sub->add_option("--p", rc.p, "Moment order for p-catoni, 1 < p <= 2");
    sub->add_option("--v", rc.v, "p-th central moment bound");
    sub->add_option("--schedule", rc.schedule,
                    "default|constant|inv-sqrt-capped|ds-tuned|sn-tuned|catoni-tuned|p-catoni-tuned|het-matched|"
                    "custom-table");
    sub->add_option("--lambda", rc.lambda, "Coefficient for the constant schedule");
    sub->add_option("--cap", rc.cap, "Cap for inv-sqrt-capped");
    sub->add_option("--floor-index", rc.floor_index, "Index floor for the Catoni tuning");
    sub->add_option("--gamma", rc.gamma, "Growth exponent for het-matched");
    sub->add_option("--scale", rc.scale, "Scale for het-matched");
    sub->add_option("--lambda-table", rc.lambda_table, "File with one coefficient per line");
    sub->add_flag("--intersect", rc.intersect, "Report the running intersection");
    sub->add_flag("--heteroscedastic", rc.heteroscedastic, "Read per-row sigma_t (or v_t) from column 2");
    sub->add_option("--alpha-split", rc.alpha_split, "SN spurious-interval removal: 'auto' or alpha''");
    sub->add_option("--output", rc.output, "Output path (default stdout)");
    sub->add_option("--format", rc.format, "csv|jsonl");
}

inline void add_experiment_flags(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--seed", rc.seed, "Base seed (required)");
    sub->add_option("--horizon", rc.horizon, "Stream length T");
    sub->add_option("--reps", rc.reps, "Replications R");
    sub->add_option("--threads", rc.threads, "Worker threads (0 = hardware)");
    sub->add_option("--family", rc.family, "gaussian|student-t|pareto|sde-drift");
    sub->add_option("--mean", rc.mean, "True mean (default: uniform on [-10,10] per replication)");
    sub->add_option("--variance", rc.variance, "Target variance of the data");
    sub->add_option("--df", rc.df, "Student-t degrees of freedom");
    sub->add_option("--pareto-index", rc.pareto_index, "Pareto shape");
    sub->add_option("--damping", rc.damping, "SDE damping in [0,1]");
}

}  // namespace detail

/// Entry point shared by main() and the tests.
inline int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anytime-valid confidence sequences for the mean"};
    app.require_subcommand(1);
    RunConfig rc;

    auto* stream = app.add_subcommand("stream", "Per-time sets for a data stream");
    stream->add_option("--method", rc.method, "Method id");
    stream->add_option("--input", rc.input, "Input path (default stdin)");
    detail::add_method_flags(stream, rc);

    auto* coverage = app.add_subcommand("coverage", "Time-uniform miscoverage rate");
    coverage->add_option("--method", rc.method, "Method id");
    detail::add_method_flags(coverage, rc);
    detail::add_experiment_flags(coverage, rc);

    auto* widths = app.add_subcommand("widths", "Median widths on a (t, alpha) grid");
    widths->add_option("--method", rc.methods, "Method id (repeatable)")->delimiter(',');
    widths->add_option("--alphas", rc.alphas, "Levels")->delimiter(',');
    widths->add_option("--times", rc.times, "Times")->delimiter(',');
    detail::add_method_flags(widths, rc);
    detail::add_experiment_flags(widths, rc);

    auto* crossing = app.add_subcommand("crossing", "First time the lower bound exceeds a threshold");
    crossing->add_option("--method", rc.method, "Method A");
    crossing->add_option("--method-b", rc.method_b, "Method B");
    crossing->add_option("--threshold", rc.threshold, "Threshold");
    detail::add_method_flags(crossing, rc);
    detail::add_experiment_flags(crossing, rc);

    auto* plan = app.add_subcommand("stitchplan", "Epoch table of the stitched Catoni sequence");
    plan->add_option("--alpha", rc.alpha, "Error level");
    plan->add_option("--max-epoch", rc.max_epoch, "Last epoch index (<= 62)");
    plan->add_option("--output", rc.output, "Output path");
    plan->add_option("--format", rc.format, "csv|jsonl");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }

    std::ofstream file_out;
    std::ostream* os = &out;
    if (!rc.output.empty()) {
        file_out.open(rc.output);
        if (!file_out) {
            err << "error: cannot open output '" << rc.output << "'\n";
            return usage;
        }
        os = &file_out;
    }

    try {
        detail::Writer w(*os, rc.format);
        if (*stream) {
            if (rc.input.empty() || rc.input == "-") return detail::cmd_stream(rc, in, w, err);
            std::ifstream fin(rc.input);
            if (!fin) {
                err << "error: cannot open input '" << rc.input << "'\n";
                return usage;
            }
            return detail::cmd_stream(rc, fin, w, err);
        }
        if (*coverage) return detail::cmd_coverage(rc, w);
        if (*widths) return detail::cmd_widths(rc, w);
        if (*crossing) return detail::cmd_crossing(rc, w);
        if (*plan) return detail::cmd_stitchplan(rc, w);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return numeric_error;
    }
    return usage;
}

}  // namespace anycs::cli
