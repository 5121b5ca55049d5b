#include <doctest.h>

#include <cmath>
#include <limits>

#include "tplas/core/checksum.hpp"
#include "tplas/core/diagnostics.hpp"
#include "tplas/core/matrix.hpp"
#include "tplas/core/types.hpp"
#include "tplas/data/partition.hpp"

using namespace tplas;

TEST_CASE("matrix is row-major and views share storage") {
    Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(m(1, 0) == 4);
    const auto v = m.view();
    CHECK(v(0, 2) == 3);
    CHECK(v.row(1)[2] == 6);
    const auto block = m.row_block(1, 1);
    CHECK(block.rows() == 1);
    CHECK(block(0, 1) == 5);
    CHECK(Matrix(v) == m);
}

TEST_CASE("time series rejects bad shapes and non-finite values") {
    CHECK_THROWS_AS(TimeSeries(Matrix(0, 1)), DataError);
    CHECK_THROWS_AS(TimeSeries(Matrix(2, 2), {"a"}), DataError);
    Matrix bad(2, 1);
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(TimeSeries{bad}, DataError);

    TimeSeries ts(Matrix(3, 2));
    CHECK(ts.length() == 3);
    CHECK(ts.channels() == 2);
    CHECK(ts.channel_names() == std::vector<std::string>{"ch0", "ch1"});
}

TEST_CASE("validate_plan accepts the T=100 P=10 plan") {
    CHECK(validate_plan(data::make_partitions(100, 10)).empty());
}

TEST_CASE("validate_plan reports overlapping partitions") {
    auto plan = data::make_partitions(100, 10);
    plan.partitions[1].range.begin -= 1;
    plan.partitions[1].train.begin -= 1;
    const auto f = validate_plan(plan);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == "partitions 0,1 overlap");
}

TEST_CASE("validate_plan reports a single skipped index") {
    auto plan = data::make_partitions(100, 10);
    // Partition 5 covers [50, 60); start it one step later.
    plan.partitions[5].range.begin = 51;
    plan.partitions[5].train.begin = 51;
    const auto f = validate_plan(plan);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == "coverage gap at 50");
}

TEST_CASE("validate_plan reports split order and ratio violations") {
    auto plan = data::make_partitions(100, 10);
    std::swap(plan.partitions[2].val, plan.partitions[2].test);
    CHECK(validate_plan(plan) ==
          std::vector<std::string>{"partition 2: train/val/test do not tile the partition in order"});

    plan = data::make_partitions(100, 10);
    plan.partitions[3].train.end = 37;  // 7 train steps out of a 6-step share, val shrinks to 1
    plan.partitions[3].val.begin = 37;
    CHECK(validate_plan(plan).empty());  // within integer-rounding slack
    plan.partitions[3].train.end = 38;
    plan.partitions[3].val.begin = 38;
    CHECK(validate_plan(plan).size() == 2);
}

TEST_CASE("checksums match published crc32 values") {
    CHECK(crc32_of(std::string_view("123456789")) == 0xCBF43926u);
    CHECK(hex32(0xCBF43926u) == "cbf43926");
    const std::vector<double> a{1.0, 2.0};
    std::vector<double> b{1.0, 2.0};
    CHECK(crc32_of(std::span<const double>(a)) == crc32_of(std::span<const double>(b)));
    b[1] = std::nextafter(2.0, 3.0);
    CHECK(crc32_of(std::span<const double>(a)) != crc32_of(std::span<const double>(b)));
}

TEST_CASE("enum names round-trip") {
    for (auto k : {ModelKind::naive_seasonal, ModelKind::linear_direct, ModelKind::mlp}) {
        CHECK(model_kind_from_string(to_string(k)) == k);
    }
    for (auto r : {Regime::init, Regime::zero, Regime::incremental, Regime::full, Regime::pretrain}) {
        CHECK(regime_from_string(to_string(r)) == r);
    }
    CHECK(model_kind_from_string("naive") == ModelKind::naive_seasonal);
    CHECK_THROWS(model_kind_from_string("transformer"));
    CHECK_THROWS(regime_from_string("sometimes"));
}

TEST_CASE("ratio keeps raw values and flags a zero denominator") {
    Ratio r{0.8, 1.6};
    CHECK_FALSE(r.degenerate());
    CHECK(r.value() == 0.5);
    Ratio z{1.0, 0.0};
    CHECK(z.degenerate());
    CHECK(z.numerator == 1.0);
}

TEST_CASE("metrics table rejects invalid mse and finds rows") {
    MetricsTable t;
    t.add({"a", Regime::zero, 0, 1.0});
    t.add({"b", Regime::full, 2, 0.5});
    t.add({"a", Regime::incremental, 0, 0.25});
    CHECK_THROWS(t.add({"a", Regime::zero, 1, -1.0}));
    CHECK_THROWS(t.add({"a", Regime::zero, 1, std::nan("")}));
    CHECK(t.find("a", Regime::incremental, 0) == 0.25);
    CHECK_FALSE(t.find("a", Regime::full, 0).has_value());
    CHECK(t.model_ids() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("diagnostics collect warnings") {
    Diagnostics d;
    CHECK(d.empty());
    d.warn("x");
    CHECK(d.warnings() == std::vector<std::string>{"x"});
}
