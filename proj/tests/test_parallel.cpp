#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "sigmort/backtest.hpp"
#include "sigmort/decompose.hpp"
#include "sigmort/forecast.hpp"
#include "sigmort/pipeline.hpp"
#include "sigmort/smoothing.hpp"
#include "test_support.hpp"

using namespace sigmort;

namespace {

// Exact equality, NaN never expected.
bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

MortalitySurface synthetic(std::uint64_t seed) {
    const test::LeeCarter lc = test::lee_carter(35, 30, 1.2, 0.03, seed);
    return make_surface(test::year_range(1970, 35), lc.observed);
}

}  // namespace

TEST_CASE("kernels agree bit for bit across thread counts") {
    const MortalitySurface s = synthetic(404);
    const Eigen::MatrixXd fstar = s.values.rowwise() - s.values.colwise().mean();
    PipelineConfig cfg;
    cfg.k = 30;

    for (int threads : {1, 2, 4}) {
        CAPTURE(threads);
        set_thread_count(threads);

        const Featurizer rs = make_featurizer(cfg, 99);
        CHECK(same(feature_matrix(fstar, rs, Exec::serial).values, feature_matrix(fstar, rs, Exec::parallel).values));
        const Featurizer ts = TruncatedFeatures{3};
        CHECK(same(feature_matrix(fstar, ts, Exec::serial).values, feature_matrix(fstar, ts, Exec::parallel).values));

        const SmoothedSurface a = smooth_surface(s, {}, Exec::serial);
        const SmoothedSurface b = smooth_surface(s, {}, Exec::parallel);
        CHECK(same(a.surface.values, b.surface.values));
        CHECK(a.lambdas == b.lambdas);

        const Decomposition dec = fpca_decompose(fstar, Eigen::VectorXd::Zero(fstar.cols()), 3);
        const SurfaceForecast fa = forecast_surface(dec, 8, {}, Exec::serial);
        const SurfaceForecast fb = forecast_surface(dec, 8, {}, Exec::parallel);
        CHECK(same(fa.curves, fb.curves));
        CHECK(same(fa.scores, fb.scores));
    }
    set_thread_count(0);
}

TEST_CASE("backtest output is independent of the execution policy") {
    const MortalitySurface s = synthetic(505);
    PipelineConfig rs;
    rs.k = 20;
    rs.components = 3;
    PipelineConfig hu = rs;
    hu.model = ModelKind::hu;
    const std::vector<BacktestModel> models{pipeline_model("hurs", rs), pipeline_model("hu", hu), naive_model()};
    BacktestPlan plan;
    plan.first_test_year = 2000;
    plan.last_test_year = 2004;
    plan.horizons = {1, 3};
    plan.seed = 17;

    auto render = [&](Exec exec) {
        const BacktestReport r = run_backtest(s, plan, models, exec);
        std::ostringstream out;
        write_long_csv(out, r);
        write_summary_csv(out, r);
        return out.str();
    };
    const std::string reference = render(Exec::serial);
    for (int threads : {1, 3}) {
        set_thread_count(threads);
        CHECK(render(Exec::parallel) == reference);
    }
    set_thread_count(0);
}
