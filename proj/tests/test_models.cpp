#include <doctest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "tplas/models/checkpoint_io.hpp"
#include "tplas/models/forecaster.hpp"

using namespace tplas;
using namespace tplas::models;
using testing_support::TempDir;

namespace {

ForecasterSpec spec_of(ModelKind kind, std::size_t l, std::size_t h, std::size_t C = 1) {
    ForecasterSpec s;
    s.kind = kind;
    s.context_length = l;
    s.horizon = h;
    s.channels = C;
    s.kernel_size = std::min<std::size_t>(5, l % 2 ? l : l - 1);
    s.hidden = {6, 5};
    return s;
}

// Owns the buffers a batch of Samples points into.
struct Batch {
    std::vector<Matrix> ctx;
    std::vector<Matrix> tgt;
    std::vector<data::Sample> samples;

    Batch(std::size_t n, std::size_t l, std::size_t h, std::size_t C, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0, 1);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix x(l, C), y(h, C);
            for (std::size_t k = 0; k < l * C; ++k) x.data()[k] = g(rng);
            for (std::size_t k = 0; k < h * C; ++k) y.data()[k] = g(rng);
            ctx.push_back(std::move(x));
            tgt.push_back(std::move(y));
        }
        relink();
    }
    void relink() {
        samples.clear();
        for (std::size_t i = 0; i < ctx.size(); ++i) samples.push_back({ctx[i].view(), tgt[i].view(), i});
    }
};

Checkpoint randomized(const ForecasterSpec& spec, std::uint64_t seed) {
    auto ck = init_params(spec, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> g(0, 0.3);
    for (auto& p : ck.params) {
        for (auto& v : p.values) v += g(rng);
    }
    return ck;
}

}  // namespace

// ---- construction ----

TEST_CASE("naive_seasonal has no params") {
    const auto ck = init_params(spec_of(ModelKind::naive_seasonal, 4, 2), 0);
    CHECK(ck.params.empty());
    CHECK_FALSE(ck.trainable());
}

TEST_CASE("init is deterministic in the seed") {
    const auto s = spec_of(ModelKind::mlp, 8, 3);
    CHECK(init_params(s, 5) == init_params(s, 5));
    CHECK_FALSE(init_params(s, 5).params == init_params(s, 6).params);
}

TEST_CASE("mlp l=96 h=96 hidden=[128,128] has the expected param sizes") {
    ForecasterSpec s;
    s.kind = ModelKind::mlp;
    s.hidden = {128, 128};
    const auto ck = init_params(s, 0);
    std::vector<std::size_t> sizes;
    for (const auto& p : ck.params) sizes.push_back(p.values.size());
    CHECK(sizes == std::vector<std::size_t>{96 * 128, 128, 128 * 128, 128, 128 * 96, 96});
    CHECK(ck.params[0].name == "layers.0.weight");
    CHECK(ck.params[0].shape == std::vector<std::size_t>{128, 96});
}

TEST_CASE("init draws weights within the fan-in bound and zero biases") {
    const auto ck = init_params(spec_of(ModelKind::linear_direct, 9, 4), 3);
    for (const auto& p : ck.params) {
        if (p.shape.size() == 1) {
            for (auto v : p.values) CHECK(v == 0.0);
        } else {
            for (auto v : p.values) CHECK(std::abs(v) <= 1.0 / 3.0);
        }
    }
}

TEST_CASE("invalid specs are rejected") {
    auto s = spec_of(ModelKind::linear_direct, 8, 2);
    s.kernel_size = 4;
    CHECK_THROWS_AS(validate_spec(s), ModelError);
    s.kernel_size = 9;
    CHECK_THROWS_AS(validate_spec(s), ModelError);
    s = spec_of(ModelKind::naive_seasonal, 8, 2);
    s.season_length = 9;
    CHECK_THROWS_AS(validate_spec(s), ModelError);
    s = spec_of(ModelKind::mlp, 8, 2);
    s.hidden = {4, 0};
    CHECK_THROWS_AS(validate_spec(s), ModelError);
    s.hidden = {};
    CHECK_THROWS_AS(validate_spec(s), ModelError);
}

// ---- forward ----

TEST_CASE("naive s=1 carries the last row forward") {
    auto s = spec_of(ModelKind::naive_seasonal, 2, 3, 2);
    const auto ck = init_params(s, 0);
    const Matrix x(2, 2, std::vector<double>{9.0, 9.0, 2.0, -1.0});
    const auto y = predict(ck, x.view());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(y(i, 0) == 2.0);
        CHECK(y(i, 1) == -1.0);
    }
}

TEST_CASE("naive s=3 repeats the last season cyclically") {
    auto s = spec_of(ModelKind::naive_seasonal, 5, 7);
    s.season_length = 3;
    const Matrix x(5, 1, std::vector<double>{0, 1, 2, 3, 4});
    const auto y = predict(init_params(s, 0), x.view());
    const double want[] = {2, 3, 4, 2, 3, 4, 2};
    for (std::size_t i = 0; i < 7; ++i) CHECK(y(i, 0) == want[i]);
}

TEST_CASE("linear_direct with zero weights outputs its bias") {
    auto ck = init_params(spec_of(ModelKind::linear_direct, 5, 3, 2), 0);
    for (auto& v : ck.params[0].values) v = 0.0;
    for (auto& v : ck.params[2].values) v = 0.0;
    ck.params[1].values = {0.5, -1.0, 2.0};
    ck.params[3].values = {0.25, 0.0, 0.0};
    Batch b(3, 5, 3, 2, 1);
    for (const auto& s : b.samples) {
        const auto y = predict(ck, s.context);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(y(0, c) == 0.75);
            CHECK(y(1, c) == -1.0);
            CHECK(y(2, c) == 2.0);
        }
    }
}

TEST_CASE("forecasts agree with the reference forward pass") {
    for (auto kind : {ModelKind::naive_seasonal, ModelKind::linear_direct, ModelKind::mlp}) {
        const auto s = spec_of(kind, 7, 4, 3);
        const auto ck = randomized(s, 11);
        const auto w = oracle::params_of(ck);
        Batch b(5, 7, 4, 3, 2);
        for (const auto& smp : b.samples) {
            const auto y = predict(ck, smp.context);
            for (std::size_t c = 0; c < 3; ++c) {
                std::vector<oracle::LD> x(7);
                for (std::size_t t = 0; t < 7; ++t) x[t] = smp.context(t, c);
                const auto ref = oracle::forward_channel(s, w, x);
                for (std::size_t i = 0; i < 4; ++i) {
                    CHECK(y(i, c) == doctest::Approx(static_cast<double>(ref[i])).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("predict rejects contexts of the wrong shape") {
    const auto ck = init_params(spec_of(ModelKind::mlp, 6, 2, 1), 0);
    CHECK_THROWS_AS(predict(ck, Matrix(5, 1).view()), ModelError);
    CHECK_THROWS_AS(predict(ck, Matrix(6, 2).view()), ModelError);
}

TEST_CASE("moving average replicates the edges") {
    const std::vector<double> x{1, 2, 3, 4, 10};
    const auto m = moving_average(x, 3);
    CHECK(m[0] == doctest::Approx(4.0 / 3.0));
    CHECK(m[2] == doctest::Approx(3.0));
    CHECK(m[4] == doctest::Approx(8.0));
    CHECK(moving_average(x, 1) == x);
}

// ---- gradients ----

TEST_CASE("zero-weight linear model: bias gradient is -2/h times the target mean per step") {
    for (std::size_t h : {1u, 4u}) {
        auto ck = init_params(spec_of(ModelKind::linear_direct, 5, h, 2), 0);
        for (auto& p : ck.params) std::fill(p.values.begin(), p.values.end(), 0.0);
        Batch b(16, 5, h, 2, 3);
        const auto g = grad(ck, b.samples);
        for (std::size_t j = 0; j < h; ++j) {
            double mean = 0;
            for (const auto& s : b.samples) mean += s.target(j, 0) + s.target(j, 1);
            mean /= 32.0;
            const double want = -2.0 / static_cast<double>(h) * mean;
            CHECK(g.grads[1][j] == doctest::Approx(want).epsilon(1e-12));
            CHECK(g.grads[3][j] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("a batch the model already fits exactly has zero gradient") {
    for (auto kind : {ModelKind::linear_direct, ModelKind::mlp}) {
        const auto s = spec_of(kind, 6, 3, 2);
        const auto ck = randomized(s, 4);
        Batch b(8, 6, 3, 2, 5);
        for (std::size_t i = 0; i < b.ctx.size(); ++i) b.tgt[i] = predict(ck, b.ctx[i].view());
        b.relink();
        const auto g = grad(ck, b.samples);
        CHECK(g.loss == 0.0);
        for (const auto& arr : g.grads) {
            for (auto v : arr) CHECK(v == 0.0);
        }
    }
}

TEST_CASE("analytic gradients match central differences") {
    for (auto kind : {ModelKind::linear_direct, ModelKind::mlp}) {
        const auto s = spec_of(kind, 6, 3, 2);
        int checked = 0;
        for (std::uint64_t seed = 0; checked < 5; ++seed) {
            const auto ck = randomized(s, seed);
            Batch b(4, 6, 3, 2, seed + 50);
            oracle::ForwardStats stats;
            const auto w = oracle::params_of(ck);
            (void)oracle::loss(s, w, b.samples, &stats);
            if (stats.min_abs_preact < 1e-3) continue;
            ++checked;
            const auto g = grad(ck, b.samples);
            const auto n = oracle::numeric_grad(s, w, b.samples);
            CHECK(g.loss == doctest::Approx(static_cast<double>(oracle::loss(s, w, b.samples))).epsilon(1e-12));
            for (std::size_t a = 0; a < n.size(); ++a) {
                for (std::size_t k = 0; k < n[a].size(); ++k) {
                    const double denom = std::max({std::abs(g.grads[a][k]), std::abs(n[a][k]), 1e-8});
                    CHECK(std::abs(g.grads[a][k] - n[a][k]) / denom < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("naive_seasonal is not trainable") {
    const auto ck = init_params(spec_of(ModelKind::naive_seasonal, 4, 2), 0);
    Batch b(2, 4, 2, 1, 0);
    CHECK_THROWS_WITH_AS(grad(ck, b.samples), "model not trainable", ModelError);
}

TEST_CASE("the least-squares oracle recovers y = 2x exactly") {
    Batch b(20, 1, 1, 1, 9);
    for (std::size_t i = 0; i < b.ctx.size(); ++i) b.tgt[i](0, 0) = 2.0 * b.ctx[i](0, 0);
    b.relink();
    const auto ls = oracle::least_squares(b.samples);
    CHECK(ls.coef(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(ls.coef(0, 1)) < 1e-12);
    CHECK(ls.mse < 1e-24);
}

// ---- checkpoints ----

TEST_CASE("save, load, save produces a byte-identical file") {
    TempDir dir;
    auto ck = randomized(spec_of(ModelKind::mlp, 6, 3, 2), 8);
    save(ck, dir / "a.ckpt");
    const auto back = load(dir / "a.ckpt");
    CHECK(back == ck);
    save(back, dir / "b.ckpt");
    CHECK(testing_support::slurp(dir / "a.ckpt") == testing_support::slurp(dir / "b.ckpt"));
    CHECK(checksum(back) == checksum(ck));
}

TEST_CASE("provenance round-trips exactly") {
    auto ck = init_params(spec_of(ModelKind::linear_direct, 5, 2), 1);
    ck.provenance = {Regime::incremental, {0, 1, 2}, 77, 30};
    CHECK(from_text(to_text(ck)).provenance == ck.provenance);
}

TEST_CASE("a truncated checkpoint names the array it stops in") {
    auto ck = init_params(spec_of(ModelKind::mlp, 6, 3), 2);
    const auto text = to_text(ck);
    const auto at = text.find("\"name\":\"layers.1.weight\"");
    REQUIRE(at != std::string::npos);
    try {
        (void)from_text(text.substr(0, at + 60));
        FAIL("expected an error");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("layers.1.weight") != std::string::npos);
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    auto ck = init_params(spec_of(ModelKind::linear_direct, 5, 2), 3);
    const auto text = to_text(ck);

    auto bad_version = text;
    bad_version.replace(bad_version.find("\"format_version\":1"), 18, "\"format_version\":2");
    CHECK_THROWS_WITH_AS(from_text(bad_version), doctest::Contains("format version 2"), ModelError);

    ck.params[1].values.push_back(0.0);
    CHECK_THROWS_WITH_AS(from_text(to_text(ck)), doctest::Contains("'trend.bias' has 3 values, expected 2"),
                         ModelError);
    ck.params[1].values.pop_back();

    auto flipped = to_text(ck);
    const auto digit = flipped.find_first_of("123456789", flipped.find("\"values\":[") + 11);
    flipped[digit] = flipped[digit] == '9' ? '8' : static_cast<char>(flipped[digit] + 1);
    CHECK_THROWS_WITH_AS(from_text(flipped), doctest::Contains("checksum"), ModelError);

    auto no_trailer = to_text(ck);
    no_trailer = no_trailer.substr(0, no_trailer.rfind("\ncrc32"));
    CHECK_THROWS_WITH_AS(from_text(no_trailer), doctest::Contains("trailer"), ModelError);

    TempDir dir;
    CHECK_THROWS_AS(load(dir / "nope.ckpt"), ModelError);
}
