// Serial reference vs OpenMP kernels on a synthetic surface.
// Usage: bench_kernels [threads] [repeats]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "sigmort/backtest.hpp"
#include "sigmort/decompose.hpp"
#include "sigmort/exec.hpp"
#include "sigmort/pipeline.hpp"
#include "sigmort/rng.hpp"
#include "sigmort/smoothing.hpp"

using namespace sigmort;

namespace {

MortalitySurface synthetic(std::size_t years, std::size_t ages) {
    NormalStream rng(99);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(years), static_cast<Eigen::Index>(ages));
    for (Eigen::Index t = 0; t < m.rows(); ++t)
        for (Eigen::Index x = 0; x < m.cols(); ++x)
            m(t, x) = -9.0 + 0.085 * static_cast<double>(x) - 0.015 * static_cast<double>(t) + 0.03 * rng.normal();
    std::vector<int> y(years);
    for (std::size_t i = 0; i < years; ++i) y[i] = 1950 + static_cast<int>(i);
    return make_surface(y, m);
}

double best_of(int repeats, const std::function<void()>& body) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const std::string& name, const std::function<void(Exec)>& body, int repeats) {
    const double s = best_of(repeats, [&] { body(Exec::serial); });
    const double p = best_of(repeats, [&] { body(Exec::parallel); });
    std::cout << std::left << std::setw(22) << name << std::right << std::fixed << std::setprecision(4) << std::setw(11)
              << s << std::setw(11) << p << std::setw(9) << std::setprecision(2) << s / p << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
    const int repeats = argc > 2 ? std::max(1, std::atoi(argv[2])) : 3;
    set_thread_count(threads);

    const MortalitySurface surface = synthetic(69, 101);
    const Eigen::MatrixXd fstar = surface.values.rowwise() - surface.values.colwise().mean();
    PipelineConfig cfg;
    const Featurizer rs = make_featurizer(cfg, cfg.seed);

    std::cout << "threads " << thread_count() << ", best of " << repeats << "\n";
    std::cout << std::left << std::setw(22) << "kernel" << std::right << std::setw(11) << "serial_s" << std::setw(11)
              << "parallel_s" << std::setw(9) << "speedup" << '\n';
    row("feature_matrix k=100", [&](Exec e) { (void)feature_matrix(fstar, rs, e); }, repeats);
    row("feature_matrix m=3", [&](Exec e) { (void)feature_matrix(fstar, TruncatedFeatures{3}, e); }, repeats);
    row("smooth_surface", [&](Exec e) { (void)smooth_surface(surface, {}, e); }, repeats);

    BacktestPlan plan;
    plan.first_test_year = 2013;
    plan.last_test_year = 2018;
    plan.horizons = {1, 5};
    plan.seed = cfg.seed;
    PipelineConfig hu = cfg;
    hu.model = ModelKind::hu;
    const std::vector<BacktestModel> models{pipeline_model("hurs", cfg), pipeline_model("hu", hu)};
    row("run_backtest", [&](Exec e) { (void)run_backtest(surface, plan, models, e); }, 1);
}
