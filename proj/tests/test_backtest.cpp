#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sigmort/backtest.hpp"
#include "sigmort/errors.hpp"
#include "test_support.hpp"

using namespace sigmort;

namespace {

MortalitySurface declining_surface(std::size_t years, std::size_t ages, double delta) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(years), static_cast<Eigen::Index>(ages));
    for (Eigen::Index t = 0; t < v.rows(); ++t)
        for (Eigen::Index x = 0; x < v.cols(); ++x) v(t, x) = -9.0 + 0.08 * static_cast<double>(x) - delta * t;
    return make_surface(test::year_range(1950, years), v);
}

BacktestModel oracle_model(const MortalitySurface& full) {
    return {"oracle", [full](const MortalitySurface& train, std::size_t steps, std::uint64_t) {
                const auto first = static_cast<Eigen::Index>(train.years.back() + 1 - full.years.front());
                return Eigen::MatrixXd(full.values.middleRows(first, static_cast<Eigen::Index>(steps)));
            }};
}

std::string serialize(const BacktestReport& r) {
    std::ostringstream ss;
    write_long_csv(ss, r);
    write_summary_csv(ss, r);
    write_summary_table(ss, r);
    return ss.str();
}

}  // namespace

TEST_CASE("mse") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 3, 4;
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, (a.array() + 0.25).matrix()) == doctest::Approx(0.0625).epsilon(1e-15));
    Eigen::MatrixXd b(2, 2);
    b << 1.5, 1, 3, 6;
    // (0.25 + 1 + 0 + 4) / 4
    CHECK(std::abs(mse(a, b) - 5.25 / 4.0) < 1e-15);
    CHECK_THROWS_AS(mse(a, Eigen::MatrixXd::Zero(2, 3)), DimensionError);

    NormalStream rng(1);
    const Eigen::MatrixXd o = test::random_matrix(rng, 7, 5), p = test::random_matrix(rng, 7, 5);
    const double top = mse(o.topRows(3), p.topRows(3)), bottom = mse(o.bottomRows(4), p.bottomRows(4));
    CHECK(std::abs(mse(o, p) - (3.0 * top + 4.0 * bottom) / 7.0) < 1e-12);
}

TEST_CASE("perfect foresight scores zero") {
    const MortalitySurface s = declining_surface(30, 8, 0.02);
    const BacktestPlan plan{1975, 1975, {1}, 7};
    const BacktestReport r = run_backtest(s, plan, {oracle_model(s)});
    REQUIRE(r.summary.size() == 1);
    CHECK(r.summary[0].mse == 0.0);
    CHECK(r.summary[0].years == 1);
    CHECK(r.complete);
}

TEST_CASE("naive model on a constant decrement gives (h delta)^2") {
    const double delta = 0.03;
    const MortalitySurface s = declining_surface(40, 10, delta);
    const BacktestPlan plan{1975, 1989, {1, 2, 5, 10}, 3};
    const BacktestReport r = run_backtest(s, plan, {naive_model()});
    for (int h : {1, 2, 5, 10}) {
        const MseEntry* e = r.find("naive", h);
        REQUIRE(e != nullptr);
        CHECK(std::abs(e->mse - std::pow(h * delta, 2)) < 1e-12);
        // Origins 1974..1988; horizon h is scorable while o + h <= 1989.
        CHECK(e->years == static_cast<std::size_t>(16 - h));
    }
    // Every (origin, horizon) pair with origin + horizon <= last year is present.
    std::size_t pairs = 0;
    for (int o = 1974; o <= 1988; ++o)
        for (int h : {1, 2, 5, 10}) pairs += o + h <= 1989;
    CHECK(r.records.size() == pairs);
    for (std::size_t i = 1; i < r.records.size(); ++i) {
        const auto& a = r.records[i - 1];
        const auto& b = r.records[i];
        CHECK((a.origin < b.origin || (a.origin == b.origin && a.horizon < b.horizon)));
    }
}

TEST_CASE("plan validation") {
    const MortalitySurface s = declining_surface(30, 5, 0.01);
    CHECK_THROWS_AS(run_backtest(s, {1960, 1970, {1}, 0}, {naive_model()}), DataError);
    CHECK_THROWS_AS(run_backtest(s, {1975, 1985, {1}, 0}, {naive_model()}), DataError);
    CHECK_THROWS_AS(run_backtest(s, {1975, 1979, {0}, 0}, {naive_model()}), UsageError);
    CHECK_THROWS_AS(run_backtest(s, {1975, 1979, {}, 0}, {naive_model()}), UsageError);
    CHECK_THROWS_AS(run_backtest(s, {1975, 1979, {1}, 0}, {naive_model("a"), naive_model("a")}), UsageError);
    CHECK_THROWS_AS(run_backtest(s, {1975, 1979, {1}, 0}, {}), UsageError);
}

TEST_CASE("expanding windows and derived seeds") {
    const MortalitySurface s = declining_surface(30, 4, 0.01);
    std::vector<std::pair<int, std::uint64_t>> seen;
    std::vector<std::size_t> sizes;
    const BacktestModel spy{"spy", [&](const MortalitySurface& train, std::size_t steps, std::uint64_t seed) {
                                seen.emplace_back(train.years.back(), seed);
                                sizes.push_back(train.year_count());
                                return Eigen::MatrixXd(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps), 4));
                            }};
    run_backtest(s, {1972, 1979, {1, 3}, 99}, {spy}, Exec::serial);
    REQUIRE(seen.size() == 8);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        CHECK(seen[i].first == 1971 + static_cast<int>(i));
        CHECK(seen[i].second == derive_seed(99, static_cast<std::uint64_t>(seen[i].first)));
        if (i) CHECK(sizes[i] == sizes[i - 1] + 1);
    }
}

TEST_CASE("failures are recorded and the report marked incomplete") {
    const MortalitySurface s = declining_surface(30, 4, 0.01);
    const BacktestModel flaky{"flaky", [](const MortalitySurface& train, std::size_t steps, std::uint64_t) {
                                  if (train.years.back() == 1975) throw NumericError("boom");
                                  return Eigen::MatrixXd(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps), 4));
                              }};
    const BacktestReport r = run_backtest(s, {1975, 1979, {1}, 0}, {flaky, naive_model()});
    CHECK(!r.complete);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("origin 1975") != std::string::npos);
    CHECK(r.find("flaky", 1)->years == 4);
    CHECK(r.find("naive", 1)->years == 5);
}

TEST_CASE("identical configs and reruns give identical reports") {
    const auto lc = test::lee_carter(32, 12, 1.0, 0.02, 5);
    const MortalitySurface s = make_surface(test::year_range(1960, 32), lc.observed);
    PipelineConfig cfg;
    cfg.k = 10;
    cfg.components = 2;
    const BacktestPlan plan{1988, 1991, {1, 2}, 17};
    const std::vector<BacktestModel> models{pipeline_model("a", cfg), pipeline_model("b", cfg)};
    const BacktestReport r = run_backtest(s, plan, models, Exec::parallel);
    for (int h : {1, 2}) CHECK(r.find("a", h)->mse == r.find("b", h)->mse);
    const BacktestReport again = run_backtest(s, plan, models, Exec::serial);
    CHECK(serialize(r) == serialize(again));
}

TEST_CASE("ranking") {
    BacktestReport r;
    r.label = "X";
    r.models = {"A", "B"};
    r.horizons = {1};
    r.summary = {{"A", 1, 0.2, 3}, {"B", 1, 0.1, 3}};
    const std::vector<BacktestReport> reports{r};
    const auto rank = compare_models(reports);
    REQUIRE(rank.size() == 1);
    CHECK(rank[0].order[0].first == "B");
    CHECK(rank[0].label == "X");

    BacktestReport single = r;
    single.models = {"A"};
    single.summary = {{"A", 1, 0.2, 3}};
    const std::vector<BacktestReport> one{single};
    CHECK(compare_models(one)[0].order.size() == 1);

    std::ostringstream table;
    write_summary_table(table, r);
    CHECK(table.str() == "horizon,A,B\n1,0.2,0.1\n");
}
