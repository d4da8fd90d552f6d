#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wdro/bench.hpp"
#include "wdro/coreset.hpp"
#include "wdro/dataset.hpp"
#include "wdro/errors.hpp"
#include "wdro/losses.hpp"
#include "wdro/parallel.hpp"
#include "wdro/selftest.hpp"
#include "wdro/wdro.hpp"

namespace wdro::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Raised for flag values that parse but make no sense (unknown loss name, ...).
struct UsageError : Error {
    using Error::Error;
};

struct DataFlags {
    std::string input;
    std::string format;  // libsvm | csv; empty picks by file extension
    std::size_t label_col = 0;
    bool header = false;
};

struct ModelFlags {
    std::string loss = "svm";
    double sigma = 0.0;
    double gamma = 7.0;
    std::string norm = "l2";
    int p = 1;
    std::string theta_anc;
    double lp = 10.0;
};

namespace detail {

inline void add_data_flags(CLI::App& app, DataFlags& f) {
    app.add_option("--input", f.input, "Dataset file (LIBSVM or CSV)")->required();
    app.add_option("--format", f.format, "libsvm | csv (default: by extension)");
    app.add_option("--label-col", f.label_col, "CSV label column, 0-based");
    app.add_flag("--header", f.header, "CSV has a header row");
}

inline void add_model_flags(CLI::App& app, ModelFlags& f, bool need_sigma) {
    app.add_option("--loss", f.loss, "svm | logistic | huber:<delta> | hypercube-svm:<l>");
    auto* sigma = app.add_option("--sigma", f.sigma, "Wasserstein radius");
    if (need_sigma) sigma->required();
    app.add_option("--gamma", f.gamma, "label-transport weight");
    app.add_option("--norm", f.norm, "feature norm: l1 | l2 | linf");
    app.add_option("--p", f.p, "Wasserstein order");
    app.add_option("--theta-anc", f.theta_anc, "ball centre: comma-separated values or a theta file");
    app.add_option("--lp", f.lp, "ball radius");
}

template <class Fn>
auto as_usage(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

inline LossModel model_from(const ModelFlags& f) {
    return as_usage([&] { return parse_loss(f.loss, MetricSpec(parse_norm(f.norm), f.gamma, f.p)); });
}

inline Dataset load_dataset(const DataFlags& f, Task task) {
    std::string format = f.format;
    if (format.empty()) format = f.input.size() >= 4 && f.input.substr(f.input.size() - 4) == ".csv" ? "csv" : "libsvm";
    if (format != "csv" && format != "libsvm") throw UsageError("unknown format '" + format + "'");
    const std::string text = read_file(f.input);
    return format == "csv" ? parse_csv(text, f.label_col, f.header, task) : parse_libsvm(text, task);
}

inline Vector parse_vector(const std::string& text) {
    Vector out;
    for (const auto& tok : wdro::detail::split_list(text)) {
        double v = 0.0;
        if (!wdro::detail::parse_double(tok, v)) throw UsageError("bad number '" + tok + "' in vector");
        out.push_back(v);
    }
    return out;
}

// A theta given inline ("0.5,-1") or as a file written by `train`.
inline Vector read_theta(const std::string& spec) {
    if (spec.empty()) return {};
    if (spec.find_first_not_of("0123456789+-.,eE ") == std::string::npos) return parse_vector(spec);
    return parse_train_result(read_file(spec)).theta;
}

inline Anchors anchors_from(const Dataset& ds, const LossModel& model, const ModelFlags& f) {
    return compute_anchors(ds, model, f.sigma, read_theta(f.theta_anc), f.lp);
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-")
        out << text;
    else
        write_file(path, text);
}

inline std::string summary_table(const std::vector<SummaryRow>& summary) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "method" << std::setw(8) << "c" << std::setw(14) << "risk_mean"
       << std::setw(14) << "risk_std" << "best\n";
    for (const auto& s : summary)
        os << std::setw(10) << to_string(s.method) << std::setw(8) << wdro::detail::g6(s.c) << std::setw(14) << wdro::detail::g6(s.risk_mean)
           << std::setw(14) << wdro::detail::g6(s.risk_std) << (s.best ? "*" : "") << '\n';
    return os.str();
}

}  // namespace detail

// Parses and executes one command line (program name excluded).
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual coresets for Wasserstein distributionally robust learning", "wdro"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker cap (default: WDRO_THREADS or all cores)");

    DataFlags data;
    ModelFlags model_flags;
    std::uint64_t seed = 0;

    auto* coreset_cmd = app.add_subcommand("coreset", "Build a dual coreset (or a uniform sample)");
    double budget = 0.0;
    std::string method = "dualcore";
    std::string out_path;
    detail::add_data_flags(*coreset_cmd, data);
    detail::add_model_flags(*coreset_cmd, model_flags, true);
    coreset_cmd->add_option("--budget", budget, "coreset size: fraction of n if <= 1, else a count")->required();
    coreset_cmd->add_option("--seed", seed, "random seed");
    coreset_cmd->add_option("--method", method, "dualcore | uniform");
    coreset_cmd->add_option("--out", out_path, "output file (default: stdout)");
    coreset_cmd->add_option("--threads", threads, "worker cap");

    auto* train_cmd = app.add_subcommand("train", "Minimise the worst-case risk over the parameter ball");
    std::string coreset_path;
    std::string theta0;
    TrainOptions topt;
    std::string solver = "subgradient";
    detail::add_data_flags(*train_cmd, data);
    detail::add_model_flags(*train_cmd, model_flags, true);
    train_cmd->add_option("--coreset", coreset_path, "weighted coreset file");
    train_cmd->add_option("--steps", topt.steps, "iteration budget");
    train_cmd->add_option("--eta0", topt.eta0, "initial step (default: l_p / L)");
    train_cmd->add_option("--solver", solver, "subgradient | ellipsoid");
    train_cmd->add_option("--tolerance", topt.tolerance, "ellipsoid stopping tolerance");
    train_cmd->add_option("--theta0", theta0, "starting point (default: ball centre)");
    train_cmd->add_option("--out", out_path, "output file (default: stdout)");

    auto* eval_cmd = app.add_subcommand("eval", "Print the worst-case risk of a theta");
    std::string theta_path;
    detail::add_data_flags(*eval_cmd, data);
    detail::add_model_flags(*eval_cmd, model_flags, true);
    eval_cmd->add_option("--theta", theta_path, "theta file or comma-separated values")->required();
    eval_cmd->add_option("--coreset", coreset_path, "evaluate on a weighted coreset");

    auto* perturb_cmd = app.add_subcommand("perturb", "Add Gaussian feature noise and/or flip labels");
    double noise = 0.0, flip = 0.0;
    std::string task_name = "classification";
    bool do_normalize = false;
    std::string scaling_out;
    detail::add_data_flags(*perturb_cmd, data);
    perturb_cmd->add_option("--noise", noise, "feature noise standard deviation");
    perturb_cmd->add_option("--flip", flip, "fraction of labels to negate");
    perturb_cmd->add_option("--task", task_name, "classification | regression");
    perturb_cmd->add_flag("--normalize", do_normalize, "min-max scale features to [0,1] afterwards");
    perturb_cmd->add_option("--scaling-out", scaling_out, "where to write the scaling record");
    perturb_cmd->add_option("--seed", seed, "random seed");
    perturb_cmd->add_option("--out", out_path, "output LIBSVM file (default: stdout)");

    auto* bench_cmd = app.add_subcommand("bench", "Run the Whole / UniSamp / DualCore benchmark");
    std::string config_path, csv_path, plot_path, summary_path, rates;
    std::vector<std::string> overrides;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> bench_seed;
    bool no_timings = false;
    bench_cmd->add_option("--config", config_path, "flat key = value config file");
    bench_cmd->add_option("--out-csv", csv_path, "per-trial CSV");
    bench_cmd->add_option("--out-plot", plot_path, "plot data (c risk_mean risk_std blocks)");
    bench_cmd->add_option("--out-summary", summary_path, "summary CSV");
    bench_cmd->add_option("--set", overrides, "override a config key: key=value (repeatable)");
    bench_cmd->add_option("--rates", rates, "comma-separated compression rates");
    bench_cmd->add_option("--trials", trials, "trials per rate");
    bench_cmd->add_option("--seed", bench_seed, "random seed");
    bench_cmd->add_flag("--no-timings", no_timings, "write zeros in the timing columns");
    bench_cmd->add_option("--threads", threads, "worker cap");

    auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in invariant checks");
    selftest_cmd->add_option("--seed", seed, "random seed");

    for (auto* sub : {train_cmd, eval_cmd, perturb_cmd, selftest_cmd}) sub->add_option("--threads", threads, "worker cap");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        out << sub->help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsage;
    }

    try {
        const std::size_t workers = resolve_threads(threads);
        if (*coreset_cmd) {
            const LossModel model = detail::model_from(model_flags);
            const Dataset ds = detail::load_dataset(data, model.task());
            const std::size_t s = resolve_budget(budget, ds.size());
            Coreset c;
            if (method == "uniform") {
                c = uniform_coreset(ds, s, seed);
                c.meta = make_meta("uniform", model, model_flags.sigma, seed, s, ds.size(), "");
            } else if (method == "dualcore") {
                const Anchors anc = detail::anchors_from(ds, model, model_flags);
                c = sample_coreset(ds, model, model_flags.sigma, anc, s, seed, workers);
            } else {
                throw UsageError("unknown coreset method '" + method + "'");
            }
            detail::emit(out_path, serialize(c), out);
        } else if (*train_cmd) {
            const LossModel model = detail::model_from(model_flags);
            topt.solver = detail::as_usage([&] { return parse_solver(solver); });
            const Dataset ds = detail::load_dataset(data, model.task());
            std::optional<Coreset> weights;
            if (!coreset_path.empty()) weights = parse_coreset(read_file(coreset_path));
            const WdroProblem problem(ds, model, model_flags.sigma, detail::anchors_from(ds, model, model_flags),
                                      std::move(weights));
            detail::emit(out_path, serialize(train(problem, detail::read_theta(theta0), topt)), out);
        } else if (*eval_cmd) {
            const LossModel model = detail::model_from(model_flags);
            const Dataset ds = detail::load_dataset(data, model.task());
            std::optional<Coreset> weights;
            if (!coreset_path.empty()) weights = parse_coreset(read_file(coreset_path));
            const WdroProblem problem(ds, model, model_flags.sigma, detail::anchors_from(ds, model, model_flags),
                                      std::move(weights));
            const RiskResult r = worst_case_risk(problem, detail::read_theta(theta_path));
            out << "risk " << wdro::detail::format_real(r.risk) << "\nlambda_star "
                << wdro::detail::format_real(r.lambda_star) << '\n';
        } else if (*perturb_cmd) {
            if (task_name != "classification" && task_name != "regression")
                throw UsageError("unknown task '" + task_name + "'");
            const Task task = task_name == "regression" ? Task::Regression : Task::Classification;
            Dataset ds = detail::load_dataset(data, task);
            if (noise > 0.0) ds = perturb_gaussian(ds, noise, substream(seed, {1}));
            if (flip > 0.0) ds = flip_labels(ds, flip, substream(seed, {2}));
            if (do_normalize) {
                auto [scaled, record] = normalize(ds);
                ds = std::move(scaled);
                if (!scaling_out.empty()) write_file(scaling_out, record.serialize());
            }
            detail::emit(out_path, write_libsvm(ds), out);
        } else if (*bench_cmd) {
            BenchConfig cfg;
            if (!config_path.empty()) cfg = parse_bench_config(read_file(config_path));
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
                set_config_value(cfg, std::string(wdro::detail::trim(kv.substr(0, eq))),
                                 wdro::detail::trim(std::string_view(kv).substr(eq + 1)));
            }
            if (!rates.empty()) set_config_value(cfg, "rates", rates);
            if (trials) cfg.trials = *trials;
            if (bench_seed) cfg.seed = *bench_seed;
            if (no_timings) cfg.timings = false;
            if (threads > 0) cfg.threads = threads;
            const auto rows = run_bench(cfg);
            const auto summary = summarize(rows);
            if (!csv_path.empty()) write_file(csv_path, emit_csv(rows));
            if (!summary_path.empty()) write_file(summary_path, emit_csv(summary));
            if (!plot_path.empty()) write_file(plot_path, emit_plotdata(summary));
            out << detail::summary_table(summary);
        } else if (*selftest_cmd) {
            bool all = true;
            for (const auto& c : run_selftest(seed == 0 ? 1 : seed)) {
                out << (c.passed ? "PASS  " : "FAIL  ") << c.name;
                if (!c.passed) out << ": " << c.detail;
                out << '\n';
                all = all && c.passed;
            }
            return all ? kOk : kNumerical;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const TaskError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const IoError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const Error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}

}  // namespace wdro::cli
