#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/exec.hpp"
#include "sigmort/io.hpp"
#include "sigmort/pipeline.hpp"

namespace sigmort {

/// Mean squared error over all (year, age) cells of two equally shaped
/// year x age matrices: (1 / pq) sum_t sum_i (y - yhat)^2.
double mse(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& predicted);

struct BacktestPlan {
    int first_test_year = 0;
    int last_test_year = 0;
    std::vector<int> horizons;
    std::uint64_t seed = 0;
    int min_training_years = 20;

    void validate(const MortalitySurface& surface) const;
};

/// Produces `steps` forecast curves (rows) after the last year of `train`.
using ForecastFn =
    std::function<Eigen::MatrixXd(const MortalitySurface& train, std::size_t steps, std::uint64_t seed)>;

struct BacktestModel {
    std::string name;
    ForecastFn forecast;
};

BacktestModel pipeline_model(std::string name, PipelineConfig cfg);

/// Repeats the last observed curve at every horizon.
BacktestModel naive_model(std::string name = "naive");

struct ForecastRecord {
    std::string model;
    int origin = 0;
    int horizon = 0;
    Eigen::VectorXd observed;
    Eigen::VectorXd predicted;
};

struct MseEntry {
    std::string model;
    int horizon = 0;
    double mse = 0.0;
    std::size_t years = 0;  ///< q: forecast years scored at this horizon
};

struct BacktestReport {
    std::string label;
    std::vector<std::string> age_labels;
    std::vector<std::string> models;
    std::vector<int> horizons;
    std::vector<ForecastRecord> records;  ///< ordered by origin, model, horizon
    std::vector<MseEntry> summary;        ///< ordered by model, horizon
    std::vector<std::string> warnings;
    std::vector<std::string> metadata;    ///< emitted as '#' header lines
    bool complete = true;

    const MseEntry* find(const std::string& model, int horizon) const;
};

/// Expanding-window evaluation. For each origin o = first_test_year-1 ..
/// last_test_year-1, every model is fitted on the years up to o with seed
/// derive_seed(plan.seed, o) and forecasts min(max horizon, last_test_year-o)
/// steps; realizable horizons in the plan are scored against the observed
/// surface. Failures skip that (model, origin) with a warning.
BacktestReport run_backtest(const MortalitySurface& surface, const BacktestPlan& plan,
                            const std::vector<BacktestModel>& models, Exec exec = Exec::parallel);

struct Ranking {
    std::string label;
    int horizon = 0;
    std::vector<std::pair<std::string, double>> order;  ///< ascending MSE
};

/// Per report and horizon, models sorted by ascending MSE(h).
std::vector<Ranking> compare_models(std::span<const BacktestReport> reports);

/// model,origin,horizon,age,observed,predicted
void write_long_csv(std::ostream& out, const BacktestReport& report);
/// model,horizon,mse,years
void write_summary_csv(std::ostream& out, const BacktestReport& report);
/// horizon,<model...>: the model x horizon table laid out by horizon.
void write_summary_table(std::ostream& out, const BacktestReport& report);

}  // namespace sigmort
