#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wdro/coreset.hpp"
#include "wdro/dataset.hpp"
#include "wdro/errors.hpp"
#include "wdro/losses.hpp"
#include "wdro/parallel.hpp"
#include "wdro/random.hpp"
#include "wdro/wdro.hpp"

namespace wdro {

enum class Method { Whole, UniSamp, DualCore };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Whole: return "Whole";
        case Method::UniSamp: return "UniSamp";
        case Method::DualCore: return "DualCore";
    }
    return "Whole";
}

inline Method parse_method(std::string_view s) {
    if (s == "Whole" || s == "whole") return Method::Whole;
    if (s == "UniSamp" || s == "unisamp" || s == "uniform") return Method::UniSamp;
    if (s == "DualCore" || s == "dualcore") return Method::DualCore;
    throw DomainError("unknown method '" + std::string(s) + "' (expected Whole, UniSamp or DualCore)");
}

struct BenchConfig {
    // Data source: a file, or synthetic blobs when `input` is empty.
    std::string input;
    std::string format = "libsvm";  // libsvm | csv
    std::size_t label_col = 0;
    bool header = false;
    std::size_t synth_n = 2000;
    std::size_t synth_m = 5;
    double synth_separation = 3.0;
    double synth_label_noise = 0.0;
    bool normalize = true;

    double noise_std = 0.0;
    double flip_rate = 0.0;

    std::string loss = "logistic";
    double sigma = 0.3;
    double gamma = 7.0;
    Norm norm = Norm::L2;
    int p = 1;

    std::vector<double> rates{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    std::size_t trials = 50;
    std::vector<Method> methods{Method::Whole, Method::UniSamp, Method::DualCore};
    std::uint64_t seed = 1;

    // Parameter ball: centre "zero" or "pilot" (trained on a uniform pilot sample).
    std::string anchor = "pilot";
    double pilot_rate = 0.05;
    double lp = 10.0;

    Solver solver = Solver::Ellipsoid;
    std::size_t steps = 2000;
    double eta0 = 0.0;
    double tolerance = 1e-9;

    bool timings = true;
    std::size_t threads = 0;  // 0: WDRO_THREADS or hardware concurrency

    void validate() const {
        if (trials < 1) throw DomainError("bench needs at least one trial");
        if (rates.empty() && std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::Whole; }))
            throw DomainError("bench needs at least one compression rate");
        for (std::size_t k = 0; k < rates.size(); ++k) {
            if (!(rates[k] > 0.0 && rates[k] <= 1.0)) throw DomainError("compression rates must lie in (0, 1]");
            if (k > 0 && rates[k] < rates[k - 1]) throw DomainError("compression rates must be sorted ascending");
        }
        if (methods.empty()) throw DomainError("bench needs at least one method");
        if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
        if (anchor != "zero" && anchor != "pilot") throw DomainError("anchor must be 'zero' or 'pilot'");
    }
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto tok = trim(s.substr(0, comma));
        if (!tok.empty()) out.emplace_back(tok);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline double to_real(const std::string& key, std::string_view v) {
    double out = 0.0;
    if (!parse_double(v, out)) throw ParseError("config key '" + key + "' needs a number, got '" + std::string(v) + "'", 0);
    return out;
}

inline bool to_bool(const std::string& key, std::string_view v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParseError("config key '" + key + "' needs a boolean, got '" + std::string(v) + "'", 0);
}

}  // namespace detail

// Applies one key/value pair to the config.
inline void set_config_value(BenchConfig& c, const std::string& key, std::string_view value) {
    auto real = [&] { return detail::to_real(key, value); };
    auto count = [&] {
        const double v = real();
        if (v < 0.0 || v != std::floor(v)) throw ParseError("config key '" + key + "' needs a nonnegative integer", 0);
        return static_cast<std::size_t>(v);
    };
    if (key == "input") c.input = std::string(value);
    else if (key == "format") c.format = std::string(value);
    else if (key == "label_col") c.label_col = count();
    else if (key == "header") c.header = detail::to_bool(key, value);
    else if (key == "synth_n") c.synth_n = count();
    else if (key == "synth_m") c.synth_m = count();
    else if (key == "synth_separation") c.synth_separation = real();
    else if (key == "synth_label_noise") c.synth_label_noise = real();
    else if (key == "normalize") c.normalize = detail::to_bool(key, value);
    else if (key == "noise_std") c.noise_std = real();
    else if (key == "flip_rate") c.flip_rate = real();
    else if (key == "loss") c.loss = std::string(value);
    else if (key == "sigma") c.sigma = real();
    else if (key == "gamma") c.gamma = real();
    else if (key == "norm") c.norm = parse_norm(value);
    else if (key == "p") c.p = static_cast<int>(count());
    else if (key == "rates") {
        c.rates.clear();
        for (const auto& tok : detail::split_list(value)) c.rates.push_back(detail::to_real(key, tok));
    } else if (key == "trials") c.trials = count();
    else if (key == "methods") {
        c.methods.clear();
        for (const auto& tok : detail::split_list(value)) c.methods.push_back(parse_method(tok));
    } else if (key == "seed") c.seed = static_cast<std::uint64_t>(count());
    else if (key == "anchor") c.anchor = std::string(value);
    else if (key == "pilot_rate") c.pilot_rate = real();
    else if (key == "lp") c.lp = real();
    else if (key == "solver") c.solver = parse_solver(value);
    else if (key == "steps") c.steps = count();
    else if (key == "eta0") c.eta0 = real();
    else if (key == "tolerance") c.tolerance = real();
    else if (key == "timings") c.timings = detail::to_bool(key, value);
    else if (key == "threads") c.threads = count();
    else throw ParseError("unknown config key '" + key + "'", 0);
}

// Flat "key = value" document; '#' starts a comment.
inline BenchConfig parse_bench_config(std::string_view text, BenchConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key(detail::trim(view.substr(0, eq)));
        try {
            set_config_value(base, key, detail::trim(view.substr(eq + 1)));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return base;
}

struct BenchRow {
    Method method = Method::Whole;
    double c = 1.0;
    std::size_t trial = 0;
    double risk = 0.0;
    double wall_time_ms = 0.0;
    double coreset_build_ms = 0.0;
};

// Dataset after loading, perturbation and normalisation, as the bench sees it.
inline Dataset prepare_bench_data(const BenchConfig& cfg) {
    const LossModel model = parse_loss(cfg.loss, MetricSpec(cfg.norm, cfg.gamma, cfg.p));
    const Task task = model.task();
    std::optional<Dataset> ds;
    if (cfg.input.empty()) {
        if (task != Task::Classification) throw TaskError("synthetic blobs are a classification dataset");
        ds.emplace(synth_blobs(cfg.synth_n, cfg.synth_m, cfg.synth_separation, cfg.synth_label_noise,
                               substream(cfg.seed, {0x73796e7468ULL})));
    } else {
        const std::string text = read_file(cfg.input);
        ds.emplace(cfg.format == "csv" ? parse_csv(text, cfg.label_col, cfg.header, task) : parse_libsvm(text, task));
    }
    if (cfg.noise_std > 0.0) ds.emplace(perturb_gaussian(*ds, cfg.noise_std, substream(cfg.seed, {0x6e6f6973ULL})));
    if (cfg.flip_rate > 0.0) ds.emplace(flip_labels(*ds, cfg.flip_rate, substream(cfg.seed, {0x666c6970ULL})));
    if (cfg.normalize) ds.emplace(normalize(*ds).first);
    return std::move(*ds);
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline std::uint64_t method_tag(Method m) { return static_cast<std::uint64_t>(m) + 1; }

}  // namespace detail

// Runs every method x rate x trial: build the coreset, train on it, and score
// the trained theta by its worst-case risk on the full unweighted data.
// Whole contributes one row per trial at c = 1.
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const Dataset ds = prepare_bench_data(cfg);
    const LossModel model = parse_loss(cfg.loss, MetricSpec(cfg.norm, cfg.gamma, cfg.p));
    const std::size_t n = ds.size();

    TrainOptions opt;
    opt.solver = cfg.solver;
    opt.steps = cfg.steps;
    opt.eta0 = cfg.eta0;
    opt.tolerance = cfg.tolerance;

    Vector center(ds.dim(), 0.0);
    if (cfg.anchor == "pilot") {
        const std::size_t pilot = resolve_budget(cfg.pilot_rate, n);
        const Coreset sample = uniform_coreset(n, pilot, substream(cfg.seed, {0x70696c6f74ULL}));
        const Anchors zero = compute_anchors(ds, model, cfg.sigma, center, cfg.lp);
        center = train(WdroProblem(ds, model, cfg.sigma, zero, sample), center, opt).theta;
    }
    const Anchors anchors = compute_anchors(ds, model, cfg.sigma, center, cfg.lp);
    const WdroProblem full(ds, model, cfg.sigma, anchors);

    std::vector<BenchRow> rows;
    const bool want_whole = std::count(cfg.methods.begin(), cfg.methods.end(), Method::Whole) > 0;
    if (want_whole) {
        const auto t0 = clock::now();
        const TrainResult whole = train(full, anchors.theta_anc, opt);
        const double ms = detail::elapsed_ms(t0);
        for (std::size_t t = 0; t < cfg.trials; ++t) rows.push_back({Method::Whole, 1.0, t, whole.risk, ms, 0.0});
    }

    std::optional<GridPartition> grid;
    double grid_ms = 0.0;
    if (std::count(cfg.methods.begin(), cfg.methods.end(), Method::DualCore) > 0) {
        const auto t0 = clock::now();
        grid.emplace(build_grid(ds, model, anchors, resolve_threads(cfg.threads)));
        grid_ms = detail::elapsed_ms(t0);
    }
    const AllocationConstants constants{lipschitz_estimate(model, ds), r_bound(model, ds.dim()), anchors.l_p,
                                        anchors.l_d};

    struct Job {
        Method method;
        std::size_t rate_index;
        std::size_t trial;
    };
    std::vector<Job> jobs;
    std::vector<std::vector<std::size_t>> allocations(cfg.rates.size());
    for (Method m : cfg.methods) {
        if (m == Method::Whole) continue;
        for (std::size_t r = 0; r < cfg.rates.size(); ++r) {
            if (m == Method::DualCore && allocations[r].empty())
                allocations[r] = allocate_budget(*grid, resolve_budget(cfg.rates[r], n), constants);
            for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({m, r, t});
        }
    }

    std::vector<BenchRow> results(jobs.size());
    parallel_for(jobs.size(), resolve_threads(cfg.threads), [&](std::size_t k) {
        const Job& job = jobs[k];
        const std::uint64_t seed = substream(cfg.seed, {detail::method_tag(job.method), job.rate_index, job.trial});
        const std::size_t s = resolve_budget(cfg.rates[job.rate_index], n);
        auto t0 = clock::now();
        Coreset coreset = job.method == Method::DualCore ? sample_cells(*grid, allocations[job.rate_index], seed)
                                                         : uniform_coreset(n, s, seed);
        double build_ms = detail::elapsed_ms(t0) + (job.method == Method::DualCore ? grid_ms : 0.0);
        t0 = clock::now();
        const TrainResult trained = train(WdroProblem(ds, model, cfg.sigma, anchors, std::move(coreset)),
                                          anchors.theta_anc, opt);
        const double train_ms = detail::elapsed_ms(t0);
        results[k] = {job.method, cfg.rates[job.rate_index], job.trial, worst_case_risk(full, trained.theta).risk,
                      train_ms, build_ms};
    });
    rows.insert(rows.end(), results.begin(), results.end());
    if (!cfg.timings)
        for (auto& r : rows) r.wall_time_ms = r.coreset_build_ms = 0.0;
    return rows;
}

struct SummaryRow {
    Method method = Method::Whole;
    double c = 1.0;
    std::size_t count = 0;
    double risk_mean = 0.0;
    double risk_std = 0.0;  // sample standard deviation (n - 1)
    double time_mean_ms = 0.0;
    bool best = false;      // lowest mean risk among methods at this c
};

inline std::vector<SummaryRow> summarize(const std::vector<BenchRow>& rows) {
    std::map<std::pair<int, double>, std::vector<const BenchRow*>> groups;
    for (const auto& r : rows) groups[{static_cast<int>(r.method), r.c}].push_back(&r);
    std::vector<SummaryRow> out;
    for (const auto& [key, members] : groups) {
        SummaryRow s;
        s.method = static_cast<Method>(key.first);
        s.c = key.second;
        s.count = members.size();
        for (const auto* r : members) {
            s.risk_mean += r->risk;
            s.time_mean_ms += r->wall_time_ms;
        }
        s.risk_mean /= static_cast<double>(s.count);
        s.time_mean_ms /= static_cast<double>(s.count);
        if (s.count > 1) {
            double ss = 0.0;
            for (const auto* r : members) ss += (r->risk - s.risk_mean) * (r->risk - s.risk_mean);
            s.risk_std = std::sqrt(ss / static_cast<double>(s.count - 1));
        }
        out.push_back(s);
    }
    std::map<double, double> best_at;
    for (const auto& s : out) {
        auto [it, fresh] = best_at.emplace(s.c, s.risk_mean);
        if (!fresh) it->second = std::min(it->second, s.risk_mean);
    }
    for (auto& s : out) s.best = s.risk_mean == best_at[s.c];
    return out;
}

namespace detail {

inline std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

inline std::string emit_csv(const std::vector<BenchRow>& rows) {
    std::string out = "method,c,trial,risk,time_ms,coreset_ms\n";
    for (const auto& r : rows)
        out += to_string(r.method) + ',' + detail::g6(r.c) + ',' + std::to_string(r.trial) + ',' + detail::g6(r.risk) +
               ',' + detail::g6(r.wall_time_ms) + ',' + detail::g6(r.coreset_build_ms) + '\n';
    return out;
}

inline std::string emit_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "method,c,risk_mean,risk_std,time_mean_ms\n";
    for (const auto& s : rows)
        out += to_string(s.method) + ',' + detail::g6(s.c) + ',' + detail::g6(s.risk_mean) + ',' +
               detail::g6(s.risk_std) + ',' + detail::g6(s.time_mean_ms) + '\n';
    return out;
}

// One whitespace-separated "c risk_mean risk_std" block per method, blocks
// separated by a blank line.
inline std::string emit_plotdata(const std::vector<SummaryRow>& summary) {
    std::ostringstream os;
    std::optional<Method> current;
    for (const auto& s : summary) {
        if (current != s.method) {
            if (current) os << "\n\n";
            os << "# " << to_string(s.method) << '\n';
            current = s.method;
        }
        os << detail::g6(s.c) << ' ' << detail::g6(s.risk_mean) << ' ' << detail::g6(s.risk_std) << '\n';
    }
    return os.str();
}

}  // namespace wdro
