#include "sigmort/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sigmort/backtest.hpp"
#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"
#include "sigmort/io.hpp"
#include "sigmort/pipeline.hpp"

namespace sigmort {

namespace {

struct RunConfig {
    std::string command;
    std::vector<std::string> data;
    std::vector<std::string> exposures;
    std::string model = "hurs";
    std::size_t k = 100;
    std::size_t order = 3;
    std::size_t components = 6;
    std::string activation = "linear";
    std::string z0 = "normal";
    double kappa = 0.1;
    std::uint64_t seed = 20250101;
    std::string sex = "total";
    int max_age = 100;
    std::optional<int> start_year;
    std::optional<int> end_year;
    std::string horizons = "1-10";
    std::string window;
    std::string out = "out";
    int jobs = 0;
    std::size_t steps = 10;
    std::string config_file;
    // smoothing overrides
    std::string smooth = "on";
    std::size_t basis_size = 0;
    int penalty_order = 2;
    std::string lambda = "auto";
    std::string weights = "uniform";
    std::optional<double> monotone_from;
};

void add_shared(CLI::App& app, RunConfig& rc) {
    app.add_option("--data", rc.data, "mortality input(s): HMD Mx_1x1 text or surface CSV")->delimiter(',');
    app.add_option("--exposures", rc.exposures, "HMD Exposures_1x1 file(s), one per --data entry")->delimiter(',');
    app.add_option("--model", rc.model, "hurs, huts, hu or whu (backtest: comma list, may include naive)");
    app.add_option("--k", rc.k, "randomized signature dimension (hurs)");
    app.add_option("--order", rc.order, "truncated signature order (huts)");
    app.add_option("--components", rc.components, "number of basis functions K");
    app.add_option("--activation", rc.activation, "linear, tanh, identity or constant (hurs)");
    app.add_option("--z0", rc.z0, "initial reservoir state: normal or zero (hurs)");
    app.add_option("--kappa", rc.kappa, "geometric year-weight decay (whu)");
    app.add_option("--seed", rc.seed, "master seed");
    app.add_option("--sex", rc.sex, "total, female or male");
    app.add_option("--max-age", rc.max_age, "ages above are merged into the open group");
    app.add_option("--start-year", rc.start_year, "first year used");
    app.add_option("--end-year", rc.end_year, "last year used");
    app.add_option("--horizons", rc.horizons, "e.g. 1-10 or 1,5,10");
    app.add_option("--window", rc.window, "backtest test years FIRST:LAST (default: last 20 years)");
    app.add_option("--out", rc.out, "output directory");
    app.add_option("--jobs", rc.jobs, "worker threads (0: all cores)");
    app.add_option("--config", rc.config_file, "key=value config file; flags take precedence");
    app.add_option("--smooth", rc.smooth, "on or off");
    app.add_option("--basis-size", rc.basis_size, "B-spline basis size (0: auto)");
    app.add_option("--penalty-order", rc.penalty_order, "difference penalty order (1-3)");
    app.add_option("--lambda", rc.lambda, "smoothing parameter or auto (GCV)");
    app.add_option("--weights", rc.weights, "uniform or exposure");
    app.add_option("--monotone-from", rc.monotone_from, "force non-decreasing smoothed rates from this age");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

/// Applies key=value entries from the config file to options not given on
/// the command line.
void apply_config_file(CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config") throw UsageError(path + ":" + std::to_string(lineno) + ": nested config files");
        CLI::Option* opt = nullptr;
        try {
            opt = sub.get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (opt->count() > 0) continue;
        try {
            opt->add_result(value);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

PipelineConfig to_pipeline(const RunConfig& rc, ModelKind model) {
    PipelineConfig cfg;
    cfg.model = model;
    cfg.k = rc.k;
    cfg.order = rc.order;
    cfg.components = rc.components;
    cfg.activation = rc.activation;
    if (rc.z0 == "zero") cfg.initial_state = InitialState::zero;
    else if (rc.z0 != "normal") throw UsageError("--z0 must be normal or zero");
    cfg.kappa = rc.kappa;
    cfg.seed = rc.seed;
    if (rc.smooth != "on" && rc.smooth != "off") throw UsageError("--smooth must be on or off");
    cfg.smooth = rc.smooth == "on";
    cfg.smoothing.basis_size = rc.basis_size;
    cfg.smoothing.penalty_order = rc.penalty_order;
    if (rc.lambda != "auto") {
        try {
            cfg.smoothing.lambda = std::stod(rc.lambda);
        } catch (const std::exception&) {
            throw UsageError("--lambda must be a number or auto");
        }
    }
    if (rc.weights == "exposure") cfg.smoothing.weights_mode = WeightsMode::exposure;
    else if (rc.weights != "uniform") throw UsageError("--weights must be uniform or exposure");
    cfg.smoothing.monotone_from_age = rc.monotone_from;
    cfg.validate();
    return cfg;
}

/// Rejects model-specific flags that do not apply to any selected model.
void check_model_flags(CLI::App& sub, const std::vector<std::string>& models) {
    auto uses = [&](const char* m) { return std::find(models.begin(), models.end(), m) != models.end(); };
    auto given = [&](const char* flag) { return sub.get_option(flag)->count() > 0; };
    if ((given("--k") || given("--activation") || given("--z0")) && !uses("hurs"))
        throw UsageError("--k, --activation and --z0 apply to hurs only");
    if (given("--order") && !uses("huts")) throw UsageError("--order applies to huts only");
    if (given("--kappa") && !uses("whu")) throw UsageError("--kappa applies to whu only");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class Outputs {
public:
    Outputs(const RunConfig& rc, std::vector<std::string> header, std::ostream& echo)
        : dir_(rc.out), header_(std::move(header)) {
        for (const auto& h : header_) echo << "# " << h << '\n';
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw DataError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw DataError("cannot write '" + (dir_ / name).string() + "'");
        for (const auto& h : header_) f << "# " << h << '\n';
        return f;
    }

    const std::vector<std::string>& header() const { return header_; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
    std::vector<std::string> header_;
};

std::vector<std::string> run_header(const RunConfig& rc, const std::vector<std::string>& resolved,
                                    const std::vector<MortalitySurface>& surfaces) {
    std::vector<std::string> h;
    h.push_back(std::string("sigmort ") + SIGMORT_VERSION + " " + rc.command);
    for (const auto& r : resolved) h.push_back("config " + r);
    h.push_back("config sex=" + rc.sex + " max_age=" + std::to_string(rc.max_age) +
                " start_year=" + (rc.start_year ? std::to_string(*rc.start_year) : std::string("data")) +
                " end_year=" + (rc.end_year ? std::to_string(*rc.end_year) : std::string("data")));
    h.push_back("seed " + std::to_string(rc.seed));
    for (const auto& s : surfaces) {
        for (const auto& src : s.provenance.sources) h.push_back("input " + src);
        h.push_back("surface years=" + std::to_string(s.years.front()) + "-" + std::to_string(s.years.back()) +
                    " ages=" + std::to_string(s.age_count()) + " repairs=" + std::to_string(s.provenance.repairs) +
                    " fnv1a=" + hex64(s.fingerprint()));
    }
    return h;
}

std::vector<MortalitySurface> load_all(const RunConfig& rc) {
    if (!rc.exposures.empty() && rc.exposures.size() != rc.data.size())
        throw UsageError("--exposures must list one file per --data entry");
    SurfaceOptions opts;
    opts.max_age = rc.max_age;
    opts.start_year = rc.start_year;
    opts.end_year = rc.end_year;
    opts.column = parse_sex(rc.sex);
    std::vector<MortalitySurface> out;
    for (std::size_t i = 0; i < rc.data.size(); ++i) {
        std::optional<std::string> ex;
        if (!rc.exposures.empty()) ex = rc.exposures[i];
        MortalitySurface s = load_surface(rc.data[i], ex, opts);
        if (s.provenance.country.empty()) s.provenance.country = std::filesystem::path(rc.data[i]).stem().string();
        out.push_back(std::move(s));
    }
    return out;
}

void write_long(std::ostream& f, const MortalitySurface& s, const Eigen::MatrixXd& values, const char* column) {
    f << "year,age," << column << '\n';
    for (std::size_t t = 0; t < s.years.size(); ++t)
        for (std::size_t i = 0; i < s.ages.size(); ++i)
            f << s.years[t] << ',' << s.age_labels[i] << ','
              << format_double(values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i))) << '\n';
}

int cmd_fit(const RunConfig& rc, CLI::App& sub, std::ostream& out) {
    const ModelKind model = parse_model(rc.model);
    check_model_flags(sub, {rc.model});
    const PipelineConfig cfg = to_pipeline(rc, model);
    const auto surfaces = load_all(rc);
    const MortalitySurface& s = surfaces.front();
    const PipelineFit fit = fit_pipeline(s, cfg);
    const Outputs o(rc, run_header(rc, cfg.describe(), surfaces), out);
    const Decomposition& dec = fit.decomposition;
    const auto K = dec.basis.cols();

    {
        auto f = o.open("mu.csv");
        f << "age,mu\n";
        for (std::size_t i = 0; i < s.ages.size(); ++i)
            f << s.age_labels[i] << ',' << format_double(dec.mu(static_cast<Eigen::Index>(i))) << '\n';
    }
    {
        auto f = o.open("basis.csv");
        f << "age";
        for (Eigen::Index k = 0; k < K; ++k) f << ",Z" << k + 1;
        f << '\n';
        for (std::size_t i = 0; i < s.ages.size(); ++i) {
            f << s.age_labels[i];
            for (Eigen::Index k = 0; k < K; ++k) f << ',' << format_double(dec.basis(static_cast<Eigen::Index>(i), k));
            f << '\n';
        }
    }
    {
        auto f = o.open("scores.csv");
        f << "year";
        for (Eigen::Index k = 0; k < K; ++k) f << ",beta" << k + 1;
        f << '\n';
        for (std::size_t t = 0; t < s.years.size(); ++t) {
            f << s.years[t];
            for (Eigen::Index k = 0; k < K; ++k) f << ',' << format_double(dec.scores(static_cast<Eigen::Index>(t), k));
            f << '\n';
        }
    }
    {
        auto f = o.open("diagnostics.txt");
        f << "components " << K << '\n';
        for (Eigen::Index k = 0; k < K; ++k)
            f << "variance_explained Z" << k + 1 << ' ' << format_double(dec.variance_explained(k)) << '\n';
        f << "in_sample_mse " << format_double(dec.residuals.squaredNorm() / static_cast<double>(dec.residuals.size()))
          << '\n';
        f << "repairs " << s.provenance.repairs << '\n';
        if (fit.features)
            f << "features " << fit.features->tag << " kept=" << fit.features->kept.size()
              << " dropped=" << fit.features->dropped.size() << '\n';
        for (std::size_t t = 0; t < fit.lambdas.size(); ++t)
            f << "lambda " << s.years[t] << ' ' << format_double(fit.lambdas[t]) << '\n';
        f << "seed " << rc.seed << '\n';
        for (const auto& n : fit.notes) f << "note " << n << '\n';
    }
    // Plot data: observed surface, smoothed surface, per-age series.
    {
        auto f = o.open("observed_long.csv");
        write_long(f, s, s.values, "log_rate");
    }
    {
        auto f = o.open("smoothed_long.csv");
        write_long(f, s, fit.smoothed.values, "smoothed_log_rate");
    }
    {
        auto f = o.open("age_series_long.csv");
        f << "age,year,smoothed_log_rate,centered\n";
        for (std::size_t i = 0; i < s.ages.size(); ++i)
            for (std::size_t t = 0; t < s.years.size(); ++t) {
                const auto ti = static_cast<Eigen::Index>(t), ii = static_cast<Eigen::Index>(i);
                f << s.age_labels[i] << ',' << s.years[t] << ',' << format_double(fit.smoothed.values(ti, ii)) << ','
                  << format_double(fit.fstar(ti, ii)) << '\n';
            }
    }
    out << "fit " << to_string(model) << ": " << K << " components, " << s.age_count() << " ages, "
        << s.year_count() << " years -> " << o.path("") << '\n';
    for (const auto& n : fit.notes) out << "note: " << n << '\n';
    return 0;
}

int cmd_forecast(const RunConfig& rc, CLI::App& sub, std::ostream& out) {
    const ModelKind model = parse_model(rc.model);
    check_model_flags(sub, {rc.model});
    if (rc.steps < 1) throw UsageError("--steps must be at least 1");
    const PipelineConfig cfg = to_pipeline(rc, model);
    const auto surfaces = load_all(rc);
    const MortalitySurface& s = surfaces.front();
    const PipelineFit fit = fit_pipeline(s, cfg);
    const SurfaceForecast fc = forecast_pipeline(fit, rc.steps, cfg);
    std::vector<std::string> header = run_header(rc, cfg.describe(), surfaces);
    header.push_back("h " + std::to_string(rc.steps));
    for (std::size_t k = 0; k < fc.models.size(); ++k)
        header.push_back("arima Z" + std::to_string(k + 1) + " " + fc.models[k].describe());
    const Outputs o(rc, header, out);
    auto f = o.open("forecast.csv");
    f << "year,age,predicted\n";
    for (Eigen::Index j = 0; j < fc.curves.rows(); ++j)
        for (std::size_t i = 0; i < s.ages.size(); ++i)
            f << s.years.back() + j + 1 << ',' << s.age_labels[i] << ','
              << format_double(fc.curves(j, static_cast<Eigen::Index>(i))) << '\n';
    out << "forecast " << to_string(model) << ": " << rc.steps << " years -> " << o.path("forecast.csv") << '\n';
    return 0;
}

int cmd_features(const RunConfig& rc, CLI::App& sub, std::ostream& out) {
    const ModelKind model = parse_model(rc.model);
    if (model != ModelKind::hurs && model != ModelKind::huts)
        throw UsageError("features needs a signature model (hurs or huts)");
    check_model_flags(sub, {rc.model});
    const PipelineConfig cfg = to_pipeline(rc, model);
    const auto surfaces = load_all(rc);
    const MortalitySurface& s = surfaces.front();
    const PipelineFit fit = fit_pipeline(s, cfg);
    const FeatureMatrix& fm = *fit.features;
    std::vector<std::string> header = run_header(rc, cfg.describe(), surfaces);
    header.push_back("featurizer " + fm.tag);
    const Outputs o(rc, header, out);
    auto f = o.open("features.csv");
    f << "age";
    for (std::size_t c : fm.kept) f << ",f" << c + 1;
    f << '\n';
    for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
        f << s.age_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < fm.values.cols(); ++c) f << ',' << format_double(fm.values(i, c));
        f << '\n';
    }
    out << "features " << fm.tag << ": " << fm.values.rows() << "x" << fm.values.cols() << " -> "
        << o.path("features.csv") << '\n';
    return 0;
}

int cmd_backtest(const RunConfig& rc, CLI::App& sub, std::ostream& out) {
    const std::vector<std::string> names = split_list(rc.model);
    if (names.empty()) throw UsageError("--model lists no models");
    check_model_flags(sub, names);
    std::vector<BacktestModel> models;
    std::vector<std::string> resolved;
    for (const auto& n : names) {
        if (n == "naive") {
            models.push_back(naive_model());
            resolved.push_back("model=naive");
            continue;
        }
        const PipelineConfig cfg = to_pipeline(rc, parse_model(n));
        for (const auto& line : cfg.describe()) resolved.push_back(n + "." + line);
        models.push_back(pipeline_model(n, cfg));
    }
    const auto surfaces = load_all(rc);
    std::vector<int> horizons = parse_horizons(rc.horizons);
    std::vector<BacktestReport> reports;
    std::vector<std::string> header = run_header(rc, resolved, surfaces);
    std::string hs;
    for (int h : horizons) hs += (hs.empty() ? "" : ",") + std::to_string(h);
    header.push_back("horizons " + hs);
    for (const auto& s : surfaces) {
        BacktestPlan plan;
        plan.horizons = horizons;
        plan.seed = rc.seed;
        if (rc.window.empty()) {
            plan.last_test_year = s.years.back();
            plan.first_test_year = plan.last_test_year - 19;
        } else {
            std::tie(plan.first_test_year, plan.last_test_year) = parse_window(rc.window);
        }
        BacktestReport rep = run_backtest(s, plan, models);
        header.push_back("window " + rep.label + " " + std::to_string(plan.first_test_year) + ":" +
                         std::to_string(plan.last_test_year));
        reports.push_back(std::move(rep));
    }
    const Outputs o(rc, header, out);
    const bool batched = reports.size() > 1;
    for (const auto& rep : reports) {
        const std::string suffix = batched ? "_" + rep.label : "";
        {
            auto f = o.open("summary" + suffix + ".csv");
            write_summary_csv(f, rep);
        }
        {
            auto f = o.open("summary_table" + suffix + ".csv");
            write_summary_table(f, rep);
        }
        {
            auto f = o.open("forecasts_long" + suffix + ".csv");
            write_long_csv(f, rep);
        }
        for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
    }
    const auto rankings = compare_models(reports);
    {
        auto f = o.open("ranking.csv");
        f << "label,horizon,rank,model,mse\n";
        for (const auto& r : rankings)
            for (std::size_t i = 0; i < r.order.size(); ++i)
                f << r.label << ',' << r.horizon << ',' << i + 1 << ',' << r.order[i].first << ','
                  << format_double(r.order[i].second) << '\n';
    }
    for (const auto& rep : reports) {
        out << "MSE(h) " << rep.label << (rep.complete ? "" : " (incomplete)") << '\n';
        out << "  h";
        for (const auto& m : rep.models) out << '\t' << m;
        out << '\n';
        for (int h : rep.horizons) {
            out << "  " << h;
            for (const auto& m : rep.models) {
                const MseEntry* e = rep.find(m, h);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.5f", e ? e->mse : std::nan(""));
                out << '\t' << buf;
            }
            out << '\n';
        }
    }
    out << "backtest outputs -> " << o.path("") << '\n';
    return 0;
}

}  // namespace

std::vector<int> parse_horizons(const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        std::string a = item, b;
        auto dots = item.find("..");
        auto dash = item.find('-', 1);
        if (dots != std::string::npos) {
            a = item.substr(0, dots);
            b = item.substr(dots + 2);
        } else if (dash != std::string::npos) {
            a = item.substr(0, dash);
            b = item.substr(dash + 1);
        }
        try {
            std::size_t pos = 0;
            const int lo = std::stoi(a, &pos);
            if (pos != a.size()) throw std::invalid_argument(a);
            int hi = lo;
            if (!b.empty()) {
                hi = std::stoi(b, &pos);
                if (pos != b.size()) throw std::invalid_argument(b);
            }
            if (lo < 1 || hi < lo) throw UsageError("invalid horizon range '" + item + "'");
            for (int h = lo; h <= hi; ++h) out.push_back(h);
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            throw UsageError("invalid horizon '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("no horizons given");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::pair<int, int> parse_window(const std::string& text) {
    auto sep = text.find(':');
    if (sep == std::string::npos) sep = text.find('-', 1);
    if (sep == std::string::npos) throw UsageError("window must look like FIRST:LAST");
    try {
        const int a = std::stoi(text.substr(0, sep));
        const int b = std::stoi(text.substr(sep + 1));
        if (b < a) throw UsageError("window end precedes start");
        return {a, b};
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("window must look like FIRST:LAST");
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mortality forecasting with signature-based functional decomposition", "sigmort"};
    app.set_version_flag("--version", std::string("sigmort ") + SIGMORT_VERSION);
    app.require_subcommand(1);
    RunConfig rc;
    std::map<std::string, CLI::App*> subs;
    for (const char* name : {"fit", "forecast", "backtest", "features"}) {
        static const std::map<std::string, std::string> help = {
            {"fit", "smooth, decompose and write mu/basis/scores"},
            {"forecast", "fit and write h-step forecast curves"},
            {"backtest", "expanding-window MSE(h) evaluation"},
            {"features", "write the signature feature matrix"}};
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        add_shared(*sub, rc);
        subs[name] = sub;
    }
    subs["forecast"]->add_option("--steps", rc.steps, "forecast horizon in years");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << e.what() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage_error: " << e.what() << '\n';
        return 2;
    }

    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) rc.command = name;
    }
    CLI::App& sub = *subs.at(rc.command);
    try {
        if (!rc.config_file.empty()) apply_config_file(sub, rc.config_file);
        if (rc.data.empty()) throw UsageError("--data is required");
        set_thread_count(rc.jobs);
        if (rc.command == "fit") return cmd_fit(rc, sub, out);
        if (rc.command == "forecast") return cmd_forecast(rc, sub, out);
        if (rc.command == "features") return cmd_features(rc, sub, out);
        return cmd_backtest(rc, sub, out);
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: numeric_error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace sigmort
