#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sigmort/errors.hpp"
#include "sigmort/io.hpp"
#include "test_support.hpp"

using namespace sigmort;

namespace {

const std::string kData = SIGMORT_TEST_DATA;
const std::string kMx = kData + "/Synthland_Mx_1x1.txt";
const std::string kEx = kData + "/Synthland_Exposures_1x1.txt";

HmdTable parse(const std::string& text) {
    std::istringstream in(text);
    return parse_hmd_table(in, "mem");
}

MortalitySurface parse_csv(const std::string& text) {
    std::istringstream in(text);
    return parse_csv_matrix(in, "mem");
}

const char* kSmallHmd =
    "Testland, Death rates (period 1x1)\n"
    "\n"
    "  Year   Age   Female   Male   Total\n"
    "  2000   0     0.01     0.012  0.011\n"
    "  2000   1     0.002    .      0.0021\n"
    "  2000   2+    0.5      1.0    0.75\n"
    "  2001   0     0.009    0.011  0.010\n"
    "  2001   1     0.0019   0.0022 0\n"
    "  2001   2+    0.4      0.9    0.65\n";

const char* kSmallExposure =
    "Testland, Exposure to risk (period 1x1)\n"
    "\n"
    "  Year   Age   Female   Male   Total\n"
    "  2000   0     100      100    200\n"
    "  2000   1     100      100    200\n"
    "  2000   2+    10       30     40\n"
    "  2001   0     100      100    200\n"
    "  2001   1     100      100    200\n"
    "  2001   2+    10       30     40\n";

}  // namespace

TEST_CASE("HMD rows") {
    const HmdTable t = parse(kSmallHmd);
    CHECK(t.title == "Testland, Death rates (period 1x1)");
    REQUIRE(t.records.size() == 6);
    const HmdRecord& r = t.records[0];
    CHECK(r.year == 2000);
    CHECK(r.age == 0);
    CHECK(*r.female == 0.01);
    CHECK(*r.male == 0.012);
    CHECK(*r.total == 0.011);
    CHECK(!t.records[1].male.has_value());
    CHECK(t.records[2].open_age);
    CHECK(t.records[2].age == 2);

    const HmdTable bare = parse("1947  0  0.1 0.09 0.095\n");
    REQUIRE(bare.records.size() == 1);
    CHECK(bare.records[0].year == 1947);
    CHECK(*bare.records[0].total == 0.095);

    const HmdTable open = parse("h\n\n1950 110+ 0.9 1.1 1.0\n");
    CHECK(open.records[0].open_age);
    CHECK(open.records[0].age == 110);
}

TEST_CASE("HMD errors carry line numbers") {
    CHECK_THROWS_AS(parse(""), DataError);
    try {
        parse("title\n\nYear Age Female Male Total\n2000 0 0.1 0.1 0.1\n2000 1 0.1 x 0.1\n");
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("mem:5") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("title\n\n2000 0 0.1 0.1\n"), DataError);
    CHECK_THROWS_AS(parse("title\n\n2000 a 0.1 0.1 0.1\n"), DataError);
}

TEST_CASE("surface building: open group, repair and log transform") {
    const HmdTable mx = parse(kSmallHmd);
    const HmdTable ex = parse(kSmallExposure);
    SurfaceOptions opts;
    opts.max_age = 1;
    const MortalitySurface s = build_surface(mx, &ex, opts);
    CHECK(s.age_labels == std::vector<std::string>{"0", "1+"});
    CHECK(s.years == std::vector<int>{2000, 2001});
    // 2000, ages 1 and 2+ merged with exposure weights: (0.0021*200 + 0.75*40) / 240.
    CHECK(std::exp(s.values(0, 1)) == doctest::Approx((0.0021 * 200 + 0.75 * 40) / 240.0));
    CHECK(s.provenance.country == "Testland");
    CHECK(s.exposures.has_value());

    // Spec-style merge: (mx, E) = (0.5, 10), (1.0, 30) for the female column.
    opts.max_age = 2;
    opts.column = SexColumn::female;
    const HmdTable pair = parse("t\n\n2000 0 0.01 0.01 0.01\n2000 1 0.5 0.5 0.5\n2000 2 1.0 1.0 1.0\n");
    const HmdTable pair_ex = parse("t\n\n2000 0 5 5 10\n2000 1 10 10 20\n2000 2 30 30 60\n");
    opts.max_age = 1;
    const MortalitySurface m = build_surface(pair, &pair_ex, opts);
    CHECK(std::exp(m.values(0, 1)) == doctest::Approx(0.875).epsilon(1e-12));

    // Without exposures: the unweighted mean of the merged rates.
    const MortalitySurface u = build_surface(pair, nullptr, opts);
    CHECK(std::exp(u.values(0, 1)) == doctest::Approx(0.75).epsilon(1e-12));

    // Zero total in 2001 at age 1: repaired with the smallest positive rate
    // for that age, never log(0).
    opts = SurfaceOptions{};
    opts.max_age = 2;
    const MortalitySurface z = build_surface(mx, nullptr, opts);
    CHECK(std::isfinite(z.values(1, 1)));
    CHECK(z.values(1, 1) == doctest::Approx(std::log(0.0021)));
    CHECK(z.provenance.repairs == 1);
    CHECK(!z.exposures.has_value());

    opts.column = SexColumn::male;
    const MortalitySurface male = build_surface(mx, nullptr, opts);
    CHECK(male.values(0, 1) == doctest::Approx(std::log(0.0022)));
}

TEST_CASE("surface building errors") {
    SurfaceOptions opts;
    opts.max_age = 1;
    opts.start_year = 1999;
    CHECK_THROWS_AS(build_surface(parse(kSmallHmd), nullptr, opts), DataError);
    CHECK_THROWS_AS(build_surface(parse("t\n\n2000 0 . . .\n2000 1 0.1 0.1 0.1\n"), nullptr, opts = {}), DataError);
    SurfaceOptions o1;
    o1.max_age = 1;
    CHECK_THROWS_AS(build_surface(parse("t\n\n2000 0 . . .\n2000 1 0.1 0.1 0.1\n"), nullptr, o1), DataError);
    // Rates given in percent fall outside the sanity band.
    CHECK_THROWS_AS(build_surface(parse("t\n\n2000 0 5 5 5\n2000 1 0.1 0.1 0.1\n"), nullptr, o1), DataError);
    CHECK(parse_sex("female") == SexColumn::female);
    CHECK(to_string(SexColumn::male) == "male");
    CHECK_THROWS_AS(parse_sex("both"), UsageError);
}

TEST_CASE("fixture shapes to 0..100+") {
    const HmdTable mx = parse_hmd_file(kMx);
    const HmdTable ex = parse_hmd_file(kEx);
    SurfaceOptions opts;
    const MortalitySurface s = build_surface(mx, &ex, opts);
    CHECK(s.age_count() == 101);
    CHECK(s.age_labels.front() == "0");
    CHECK(s.age_labels[99] == "99");
    CHECK(s.age_labels.back() == "100+");
    CHECK(s.years.front() == 1950);
    CHECK(s.years.back() == 2009);
    CHECK(s.provenance.country == "Synthland");
    CHECK(s.provenance.repairs == 2);
    CHECK(s.values.allFinite());
    CHECK(s.values.maxCoeff() <= kLogRateCeiling);
    CHECK(s.values.minCoeff() >= kLogRateFloor);

    opts.start_year = 1960;
    opts.end_year = 1999;
    opts.max_age = 90;
    const MortalitySurface w = build_surface(mx, &ex, opts);
    CHECK(w.year_count() == 40);
    CHECK(w.age_labels.back() == "90+");

    const MortalitySurface loaded = load_surface(kMx, kEx, SurfaceOptions{});
    CHECK(loaded.values == s.values);
    REQUIRE(loaded.provenance.sources.size() == 2);
    CHECK(loaded.provenance.sources[0].find("fnv1a=") != std::string::npos);
}

TEST_CASE("ingestion ignores row order") {
    std::istringstream in(kSmallHmd);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::vector<std::string> body(lines.begin() + 3, lines.end());
    std::reverse(body.begin(), body.end());
    std::swap(body[1], body[4]);
    std::string shuffled = lines[0] + "\n" + lines[1] + "\n" + lines[2] + "\n";
    for (const auto& l : body) shuffled += l + "\n";
    SurfaceOptions opts;
    opts.max_age = 2;
    CHECK(build_surface(parse(shuffled), nullptr, opts) == build_surface(parse(kSmallHmd), nullptr, opts));

    const MortalitySurface a = parse_csv("year,0,1\n2001,-3,-4\n2000,-1,-2\n");
    const MortalitySurface b = parse_csv("year,0,1\n2000,-1,-2\n2001,-3,-4\n");
    CHECK(a == b);
    CHECK(a.years.front() == 2000);
}

TEST_CASE("CSV matrices") {
    const MortalitySurface s = parse_csv("#scale=log\nyear,0,1,2,3+\n1990,-5,-6,-7,-1\n1991,-5.1,-6.1,-7.1,-1.1\n"
                                         "1992,-5.2,-6.2,-7.2,-1.2\n");
    CHECK(s.year_count() == 3);
    CHECK(s.age_count() == 4);
    CHECK(s.values(1, 2) == -7.1);
    CHECK(s.age_labels.back() == "3+");

    const MortalitySurface raw = parse_csv("#scale=raw\nyear,0,1\n2000,0.01,0.5\n2001,0.02,0.25\n");
    CHECK(raw.values(0, 0) == std::log(0.01));
    CHECK(raw.scale == Scale::log);

    try {
        parse_csv("year,0,1\n2000,1,2\n2000,3,4\n");
        FAIL("expected duplicate-year error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2000") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("year,0,1\n2000,1\n"), DataError);
    CHECK_THROWS_AS(parse_csv("age,0,1\n2000,1,2\n"), DataError);
    CHECK_THROWS_AS(parse_csv("#scale=pct\nyear,0\n2000,1\n"), DataError);
    CHECK_THROWS_AS(parse_csv("#scale=raw\nyear,0\n2000,0\n"), DataError);
    CHECK_THROWS_AS(parse_csv("year,0,1\n2000,1,2\n2002,3,4\n"), DataError);
}

TEST_CASE("CSV round trip is bit-exact") {
    NormalStream rng(77);
    Eigen::MatrixXd v = test::random_matrix(rng, 6, 9);
    v = (v.array() * 0.37 - 5.0).matrix();
    v(2, 3) = -1.0 / 3.0;
    v(4, 1) = 5e-324;
    MortalitySurface s = make_surface(test::year_range(1980, 6), v);
    s.age_labels.back() = "8+";
    std::ostringstream out;
    write_surface_csv(out, s);
    const MortalitySurface back = parse_csv(out.str());
    CHECK(back.values == s.values);
    CHECK(back.years == s.years);
    CHECK(back.age_labels == s.age_labels);
    CHECK(back.fingerprint() == s.fingerprint());
    std::ostringstream again;
    write_surface_csv(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("slicing and labels") {
    const MortalitySurface s = make_surface(test::year_range(2000, 5), Eigen::MatrixXd::Constant(5, 3, -2.0));
    CHECK(s.slice_years(2001, 2003).years == std::vector<int>{2001, 2002, 2003});
    CHECK_THROWS_AS(s.slice_years(1999, 2002), DataError);
    bool open = false;
    CHECK(parse_age_label("100+", &open) == 100.0);
    CHECK(open);
    CHECK_THROWS_AS(parse_age_label("x"), DataError);
}
