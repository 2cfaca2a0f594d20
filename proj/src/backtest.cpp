#include "sigmort/backtest.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"
#include "sigmort/rng.hpp"

namespace sigmort {

double mse(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted) {
    if (observed.rows() != predicted.rows() || observed.cols() != predicted.cols())
        throw DimensionError("observed and predicted coverage differ (" + std::to_string(observed.rows()) + "x" +
                             std::to_string(observed.cols()) + " vs " + std::to_string(predicted.rows()) + "x" +
                             std::to_string(predicted.cols()) + ")");
    if (observed.size() == 0) throw DataError("MSE over an empty table");
    return (observed - predicted).squaredNorm() / static_cast<double>(observed.size());
}

void BacktestPlan::validate(const MortalitySurface& surface) const {
    if (horizons.empty()) throw UsageError("backtest needs at least one horizon");
    for (int h : horizons)
        if (h < 1) throw UsageError("horizons must be >= 1");
    if (last_test_year < first_test_year) throw UsageError("window end precedes window start");
    const int start = surface.years.front();
    const int end = surface.years.back();
    if (last_test_year > end)
        throw DataError("window end " + std::to_string(last_test_year) + " is beyond the data (last year " +
                        std::to_string(end) + ")");
    if (first_test_year - start < min_training_years)
        throw DataError("window start " + std::to_string(first_test_year) + " leaves fewer than " +
                        std::to_string(min_training_years) + " training years (data start " + std::to_string(start) +
                        ")");
}

BacktestModel pipeline_model(std::string name, PipelineConfig cfg) {
    cfg.validate();
    return {std::move(name), [cfg](const MortalitySurface& train, std::size_t steps, std::uint64_t seed) {
                // Runs inside the origin loop; inner kernels stay serial.
                const PipelineFit fit = fit_pipeline(train, cfg, seed, Exec::serial);
                return forecast_pipeline(fit, steps, cfg, Exec::serial).curves;
            }};
}

BacktestModel naive_model(std::string name) {
    return {std::move(name), [](const MortalitySurface& train, std::size_t steps, std::uint64_t) {
                Eigen::MatrixXd out(static_cast<Eigen::Index>(steps), train.values.cols());
                out.rowwise() = train.values.row(train.values.rows() - 1);
                return out;
            }};
}

const MseEntry* BacktestReport::find(const std::string& model, int horizon) const {
    for (const auto& e : summary)
        if (e.model == model && e.horizon == horizon) return &e;
    return nullptr;
}

BacktestReport run_backtest(const MortalitySurface& surface, const BacktestPlan& plan,
                            const std::vector<BacktestModel>& models, Exec exec) {
    surface.validate();
    plan.validate(surface);
    if (models.empty()) throw UsageError("backtest needs at least one model");
    std::set<std::string> names;
    for (const auto& m : models)
        if (!names.insert(m.name).second) throw UsageError("duplicate model name '" + m.name + "'");

    std::vector<int> horizons = plan.horizons;
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    const int hmax = horizons.back();
    const int start = surface.years.front();

    struct Task {
        int origin;
        std::size_t model;
        std::vector<ForecastRecord> records;
        std::string warning;
    };
    std::vector<Task> tasks;
    for (int o = plan.first_test_year - 1; o <= plan.last_test_year - 1; ++o)
        for (std::size_t m = 0; m < models.size(); ++m) tasks.push_back({o, m, {}, {}});

    auto run_task = [&](Task& task) {
        const int o = task.origin;
        const auto steps = static_cast<std::size_t>(std::min(hmax, plan.last_test_year - o));
        const MortalitySurface train = surface.slice_years(start, o);
        const BacktestModel& model = models[task.model];
        try {
            const Eigen::MatrixXd pred = model.forecast(train, steps, derive_seed(plan.seed, static_cast<std::uint64_t>(o)));
            if (pred.rows() != static_cast<Eigen::Index>(steps) || pred.cols() != surface.values.cols())
                throw DimensionError("model returned a forecast of the wrong shape");
            if (!pred.allFinite()) throw NumericError("model returned non-finite forecasts");
            for (int h : horizons) {
                if (h > static_cast<int>(steps)) break;
                const auto row = static_cast<Eigen::Index>(o + h - start);
                task.records.push_back({model.name, o, h, surface.values.row(row).transpose(),
                                        pred.row(h - 1).transpose()});
            }
        } catch (const std::exception& e) {
            task.warning = model.name + " failed at origin " + std::to_string(o) + ": " + e.what();
        }
    };

    const auto nt = static_cast<std::ptrdiff_t>(tasks.size());
    for_each_index(nt, exec, [&](std::ptrdiff_t i) { run_task(tasks[static_cast<std::size_t>(i)]); });

    BacktestReport report;
    report.label = surface.provenance.country;
    report.age_labels = surface.age_labels;
    for (const auto& m : models) report.models.push_back(m.name);
    report.horizons = horizons;
    // Tasks are already ordered by origin, then model.
    for (auto& t : tasks) {
        if (!t.warning.empty()) {
            report.warnings.push_back(t.warning);
            report.complete = false;
        }
        for (auto& r : t.records) report.records.push_back(std::move(r));
    }

    for (const auto& name : report.models) {
        for (int h : horizons) {
            double sum = 0.0;
            std::size_t cells = 0, years = 0;
            for (const auto& r : report.records) {
                if (r.model != name || r.horizon != h) continue;
                sum += (r.observed - r.predicted).squaredNorm();
                cells += static_cast<std::size_t>(r.observed.size());
                ++years;
            }
            if (years == 0) continue;
            report.summary.push_back({name, h, sum / static_cast<double>(cells), years});
        }
    }
    return report;
}

std::vector<Ranking> compare_models(std::span<const BacktestReport> reports) {
    std::vector<Ranking> out;
    for (const auto& rep : reports) {
        for (int h : rep.horizons) {
            Ranking r;
            r.label = rep.label;
            r.horizon = h;
            for (const auto& e : rep.summary)
                if (e.horizon == h) r.order.emplace_back(e.model, e.mse);
            std::stable_sort(r.order.begin(), r.order.end(),
                             [](const auto& a, const auto& b) { return a.second < b.second; });
            if (!r.order.empty()) out.push_back(std::move(r));
        }
    }
    return out;
}

namespace {

void write_metadata(std::ostream& out, const BacktestReport& report) {
    for (const auto& m : report.metadata) out << "# " << m << '\n';
}

}  // namespace

void write_long_csv(std::ostream& out, const BacktestReport& report) {
    write_metadata(out, report);
    out << "model,origin,horizon,age,observed,predicted\n";
    for (const auto& r : report.records) {
        for (Eigen::Index i = 0; i < r.observed.size(); ++i) {
            out << r.model << ',' << r.origin << ',' << r.horizon << ',' << report.age_labels[static_cast<std::size_t>(i)]
                << ',' << format_double(r.observed(i)) << ',' << format_double(r.predicted(i)) << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const BacktestReport& report) {
    write_metadata(out, report);
    out << "model,horizon,mse,years\n";
    for (const auto& e : report.summary)
        out << e.model << ',' << e.horizon << ',' << format_double(e.mse) << ',' << e.years << '\n';
}

void write_summary_table(std::ostream& out, const BacktestReport& report) {
    write_metadata(out, report);
    out << "horizon";
    for (const auto& m : report.models) out << ',' << m;
    out << '\n';
    for (int h : report.horizons) {
        out << h;
        for (const auto& m : report.models) {
            const MseEntry* e = report.find(m, h);
            out << ',' << (e ? format_double(e->mse) : std::string());
        }
        out << '\n';
    }
}

}  // namespace sigmort
