#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "support/tempdir.hpp"
#include "tplas/data/csv.hpp"
#include "tplas/data/dataset.hpp"
#include "tplas/data/manifest.hpp"
#include "tplas/data/normalize.hpp"
#include "tplas/data/partition.hpp"
#include "tplas/data/synthetic.hpp"
#include "tplas/data/window.hpp"

using namespace tplas;
using namespace tplas::data;
using testing_support::TempDir;

namespace {

TimeSeries column(std::vector<double> v) {
    const auto n = v.size();
    return TimeSeries(Matrix(n, 1, std::move(v)));
}

TimeSeries ramp(std::size_t T, std::size_t C) {
    Matrix m(T, C);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) m(t, c) = static_cast<double>(t) + 1000.0 * c;
    }
    return TimeSeries(std::move(m));
}

double mean_of(const TimeSeries& s, Range r, std::size_t c = 0) {
    double acc = 0;
    for (auto t = r.begin; t < r.end; ++t) acc += s(t, c);
    return acc / static_cast<double>(r.size());
}

}  // namespace

// ---- csv ----

TEST_CASE("a 3-row, 2-column CSV becomes a 3x2 series") {
    TempDir dir;
    const auto p = dir.write("a.csv", "x,y\n1,2\n3,4\n5,6\n");
    const auto ts = load_csv(p);
    CHECK(ts.length() == 3);
    CHECK(ts.channels() == 2);
    CHECK(ts(2, 1) == 6);
    CHECK(ts.channel_names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("a non-numeric cell is reported at its data row and value column") {
    TempDir dir;
    std::string text = "a,b\n";
    for (int r = 1; r <= 9; ++r) text += r == 7 ? "1,abc\n" : "1,2\n";
    const auto p = dir.write("bad.csv", text);
    try {
        (void)load_csv(p);
        FAIL("expected a parse error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(7,2)") != std::string::npos);
        CHECK(msg.find("abc") != std::string::npos);
    }
}

TEST_CASE("the time column is skipped and its first cell becomes the origin") {
    TempDir dir;
    CsvSchema schema;
    schema.time_column = "date";
    schema.delimiter = ';';
    schema.interval_seconds = 3600;
    const auto p = dir.write("t.csv", "date;v\n2020-01-01 00:00;1.5\n2020-01-01 01:00;-2e-3\n");
    const auto ts = load_csv(p, schema);
    CHECK(ts.channels() == 1);
    CHECK(ts(1, 0) == -2e-3);
    CHECK(ts.origin() == "2020-01-01 00:00");
    CHECK(ts.interval_seconds() == 3600);
}

TEST_CASE("malformed CSV inputs are rejected with a reason") {
    TempDir dir;
    CHECK_THROWS_WITH_AS(load_csv(dir.write("e.csv", "")), doctest::Contains("empty"), DataError);
    CHECK_THROWS_WITH_AS(load_csv(dir.write("h.csv", "a,b\n")), doctest::Contains("no data rows"),
                         DataError);
    CHECK_THROWS_WITH_AS(load_csv(dir.write("r.csv", "a,b\n1,2\n3\n")),
                         doctest::Contains("row 2 has 1 fields"), DataError);
    CHECK_THROWS_WITH_AS(load_csv(dir.write("m.csv", "a,b\n1,\n")),
                         doctest::Contains("missing value at (1,2)"), DataError);
    CsvSchema schema;
    schema.value_columns = {"zzz"};
    CHECK_THROWS_WITH_AS(load_csv(dir.write("c.csv", "a\n1\n"), schema),
                         doctest::Contains("no column 'zzz'"), DataError);
    CHECK_THROWS_AS(load_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("write_csv then load_csv is lossless") {
    TempDir dir;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1e3);
    Matrix m(50, 3);
    for (std::size_t i = 0; i < m.values().size(); ++i) m.data()[i] = g(rng);
    TimeSeries ts(m);
    write_csv(ts, dir / "rt.csv");
    CsvSchema schema;
    schema.time_column = "step";
    const auto back = load_csv(dir / "rt.csv", schema);
    CHECK(back.values() == ts.values());
}

TEST_CASE("a Flight-shaped file yields a 26304 x 7 manifest") {
    TempDir dir;
    std::string text = "date,a,b,c,d,e,f,g\n";
    text.reserve(26304 * 40);
    for (int t = 0; t < 26304; ++t) {
        text += std::to_string(t);
        for (int c = 0; c < 7; ++c) text += "," + std::to_string((t * 7 + c) % 101) + ".5";
        text += "\n";
    }
    CsvSchema schema;
    schema.time_column = "date";
    const auto ts = load_csv(dir.write("flight.csv", text), schema);
    const auto m = make_manifest(ts, "flight", DataSource::csv);
    CHECK(m.length == 26304);
    CHECK(m.channels == 7);
    CHECK(m.checksum.size() == 8);
    CHECK(make_manifest(ts, "flight", DataSource::csv) == m);
}

// ---- partitions ----

TEST_CASE("T=100 P=10 gives ten 6/2/2 partitions") {
    const auto plan = make_partitions(100, 10);
    REQUIRE(plan.partitions.size() == 10);
    for (const auto& p : plan.partitions) {
        CHECK(p.range.size() == 10);
        CHECK(p.train.size() == 6);
        CHECK(p.val.size() == 2);
        CHECK(p.test.size() == 2);
    }
}

TEST_CASE("T=26304 P=10 puts the remainder in the last partition") {
    const auto plan = make_partitions(26304, 10);
    for (std::size_t i = 0; i < 9; ++i) CHECK(plan.partitions[i].range.size() == 2630);
    CHECK(plan.partitions[9].range.size() == 2634);
    CHECK(plan.partitions[9].range.end == 26304);
}

TEST_CASE("T=11 P=2 gives lengths 5 and 6 with a 3/1/1 first split") {
    const auto plan = make_partitions(11, 2);
    CHECK(plan.partitions[0].range.size() == 5);
    CHECK(plan.partitions[1].range.size() == 6);
    CHECK(plan.partitions[0].train.size() == 3);
    CHECK(plan.partitions[0].val.size() == 1);
    CHECK(plan.partitions[0].test.size() == 1);
}

TEST_CASE("random plans always validate") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t P = 1 + rng() % 20;
        const std::size_t T = P + rng() % 5000;
        SplitRatio ratio{1.0 + static_cast<double>(rng() % 8), 1.0 + static_cast<double>(rng() % 3),
                         1.0 + static_cast<double>(rng() % 3)};
        const auto plan = make_partitions(T, P, ratio);
        INFO("T=" << T << " P=" << P);
        CHECK(validate_plan(plan).empty());
    }
}

TEST_CASE("make_partitions rejects P > T and P = 0") {
    CHECK_THROWS_AS(make_partitions(5, 6), DataError);
    CHECK_THROWS_AS(make_partitions(5, 0), DataError);
}

// ---- windows ----

TEST_CASE("window counts at the boundaries") {
    const auto ts = ramp(20, 1);
    Diagnostics diag;
    CHECK(window_iter(ts, {0, 10}, 3, 2, &diag).size() == 6);
    const auto one = window_iter(ts, {4, 9}, 3, 2, &diag);
    REQUIRE(one.size() == 1);
    CHECK(one[0].anchor == 6);
    CHECK(one[0].context(0, 0) == 4);
    CHECK(one[0].target(1, 0) == 8);
    CHECK(diag.empty());
    CHECK(window_iter(ts, {0, 4}, 3, 2, &diag).empty());
    CHECK(diag.warnings().size() == 1);
    static_assert(window_count(10, 3, 2) == 6);
    static_assert(window_count(4, 3, 2) == 0);
}

TEST_CASE("windows are contiguous context then target") {
    const auto ts = ramp(30, 2);
    for (const auto& w : window_iter(ts, {5, 25}, 4, 3)) {
        for (std::size_t i = 0; i < 4; ++i) CHECK(w.context(i, 1) == 1000.0 + w.anchor - 3 + i);
        for (std::size_t i = 0; i < 3; ++i) CHECK(w.target(i, 0) == w.anchor + 1 + i);
        CHECK(w.anchor >= 5 + 3);
        CHECK(w.anchor + 3 < 25);
    }
}

// ---- normalization ----

TEST_CASE("z-scoring [1,2,3] uses the population std") {
    const auto ts = column({1, 2, 3});
    const auto st = fit_norm(ts, {0, 3});
    CHECK(st.mean[0] == doctest::Approx(2.0));
    CHECK(st.std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    const auto z = apply_norm(ts.values().view(), st);
    CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(z(1, 0) == doctest::Approx(0.0));
    CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("a constant channel has its std floored and warns") {
    const auto ts = column({5, 5, 5});
    Diagnostics diag;
    const auto st = fit_norm(ts, {0, 3}, &diag);
    CHECK(st.std[0] == kStdFloor);
    const auto z = apply_norm(ts.values().view(), st);
    for (std::size_t t = 0; t < 3; ++t) CHECK(z(t, 0) == 0.0);
    CHECK(diag.warnings().size() == 1);
}

TEST_CASE("invert_norm undoes apply_norm") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(10, 50);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(40, 3);
        for (std::size_t i = 0; i < m.values().size(); ++i) m.data()[i] = g(rng);
        const auto st = fit_norm(m.view());
        const auto back = invert_norm(apply_norm(m.view(), st).view(), st);
        for (std::size_t i = 0; i < m.values().size(); ++i) {
            CHECK(std::abs(back.values()[i] - m.values()[i]) < 1e-12 * std::max(1.0, std::abs(m.values()[i])));
        }
    }
}

// ---- synthetic ----

TEST_CASE("an eventless white-noise script has near-zero partition means") {
    ShiftScript s;
    s.base.ar = {0.0};
    s.base.amplitude = 0.0;
    s.base.noise_std = 1.0;
    const auto out = gen_synthetic(s, 10000, 2, 10, 11);
    const auto plan = make_partitions(10000, 10);
    for (const auto& p : plan.partitions) {
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(std::abs(mean_of(out.series, p.range, c)) < 4.0 / std::sqrt(1000.0));
        }
    }
    CHECK(out.events.empty());
}

TEST_CASE("a mean shift of 3 at partition 5 moves the later half by about 3") {
    ShiftScript s;
    s.events = {{5, ShiftKind::mean_shift, 3.0}};
    const auto out = gen_synthetic(s, 10000, 1, 10, 5);
    const double before = mean_of(out.series, {0, 5000});
    const double after = mean_of(out.series, {5000, 10000});
    CHECK(after - before == doctest::Approx(3.0).epsilon(0.2 / 3.0));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].step == 5000);
}

TEST_CASE("the generator is deterministic in its seed") {
    ShiftScript s;
    s.events = {{1, ShiftKind::variance_shift, 2.0}, {3, ShiftKind::trend_break, 1.0}};
    const auto a = gen_synthetic(s, 1000, 3, 5, 42);
    const auto b = gen_synthetic(s, 1000, 3, 5, 42);
    const auto c = gen_synthetic(s, 1000, 3, 5, 43);
    CHECK(a.series.values() == b.series.values());
    CHECK_FALSE(a.series.values() == c.series.values());
}

TEST_CASE("variance and trend events change the statistics they target") {
    ShiftScript s;
    s.base.amplitude = 0.0;
    s.events = {{2, ShiftKind::variance_shift, 3.0}};
    const auto v = gen_synthetic(s, 8000, 1, 4, 9);
    auto var = [&](Range r) {
        const double m = mean_of(v.series, r);
        double acc = 0;
        for (auto t = r.begin; t < r.end; ++t) acc += (v.series(t, 0) - m) * (v.series(t, 0) - m);
        return acc / static_cast<double>(r.size());
    };
    CHECK(var({4000, 8000}) / var({0, 4000}) == doctest::Approx(9.0).epsilon(0.2));

    ShiftScript tb;
    tb.base.amplitude = 0.0;
    tb.base.noise_std = 0.0;
    tb.events = {{1, ShiftKind::trend_break, 2.0}};
    const auto t = gen_synthetic(tb, 100, 1, 2, 1);
    CHECK(t.series(49, 0) == 0.0);
    CHECK(t.series(99, 0) == doctest::Approx(2.0 * 49.0 / 50.0));
}

TEST_CASE("invalid scripts are rejected") {
    ShiftScript s;
    s.base.ar = {1.0};
    s.events = {{7, ShiftKind::period_shift, -1.0}};
    const auto f = validate_script(s, 1, 5);
    CHECK(f.size() == 3);
    CHECK_THROWS_AS(gen_synthetic(s, 100, 1, 5, 0), DataError);
}

TEST_CASE("the synthetic manifest echoes script, seed and events") {
    ShiftScript s;
    s.events = {{1, ShiftKind::mean_shift, 3.0}};
    const auto out = gen_synthetic(s, 200, 1, 2, 4);
    const auto m = make_manifest(out.series, "syn", DataSource::synthetic);
    const auto j = nlohmann::json::parse(synthetic_manifest_json(m, s, 2, 4, out.events));
    CHECK(j["seed"] == 4);
    CHECK(j["events"][0]["step"] == 100);
    CHECK(j["checksum"] == m.checksum);
}

// ---- partitioned series ----

TEST_CASE("partitioned windows never straddle split boundaries") {
    const auto ts = ramp(1000, 2);
    const auto plan = make_partitions(1000, 4);
    PartitionedSeries ps(ts, plan, 12, 5);
    std::size_t union_count = 0;
    for (std::size_t p = 0; p < 4; ++p) {
        for (auto split : {Split::train, Split::val, Split::test}) {
            const auto& ws = ps.windows(p, split);
            const auto r = plan.partitions[p].split(split);
            CHECK(ws.size() == window_count(r.size(), 12, 5));
            for (const auto& s : ws.samples()) {
                CHECK(s.anchor >= r.begin + 11);
                CHECK(s.anchor + 5 < r.end);
            }
        }
        union_count += ps.windows(p, Split::train).size();
    }
    CHECK(union_count == 4 * window_count(150, 12, 5));
}

TEST_CASE("partition scope normalizes each partition by its own train range") {
    const auto ts = ramp(400, 1);
    const auto plan = make_partitions(400, 2);
    PartitionedSeries own(ts, plan, 4, 2, NormScope::partition);
    PartitionedSeries ref(ts, plan, 4, 2, NormScope::reference);
    CHECK(own.stats(1).mean[0] == doctest::Approx(mean_of(ts, plan.partitions[1].train)));
    CHECK(ref.stats(1).mean == ref.stats(0).mean);
    CHECK(ref.stats(0).mean[0] == doctest::Approx(mean_of(ts, plan.partitions[0].train)));

    const auto s = own.windows(1, Split::train)[0];
    const double raw = ts(s.anchor - 3, 0);
    CHECK(s.context(0, 0) == doctest::Approx((raw - own.stats(1).mean[0]) / own.stats(1).std[0]));
}

TEST_CASE("access hooks observe every window-set read") {
    const auto ts = ramp(300, 1);
    PartitionedSeries ps(ts, make_partitions(300, 3), 4, 2);
    std::vector<std::pair<std::size_t, Split>> seen;
    (void)ps.windows(2, Split::val, [&](std::size_t p, Split s) { seen.emplace_back(p, s); });
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].first == 2);
    CHECK(seen[0].second == Split::val);
}

TEST_CASE("empty window sets are reported") {
    const auto ts = ramp(100, 1);
    Diagnostics diag;
    PartitionedSeries ps(ts, make_partitions(100, 10), 3, 2, NormScope::partition, &diag);
    CHECK(ps.windows(0, Split::test).empty());
    CHECK_FALSE(diag.empty());
}
