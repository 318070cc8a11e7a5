#include <doctest.h>

#include <cmath>
#include <sstream>

#include "karma/mlp.hpp"
#include "karma/rng.hpp"

using namespace karma;
using namespace karma::mlp;

namespace {

FeatureVector random_vec(Rng& rng, std::size_t n) {
    FeatureVector v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_CASE("init is deterministic with Glorot bounds and zero biases") {
    const auto a = init_model({2, 128, 128, 128, 2}, 11);
    const auto b = init_model({2, 128, 128, 128, 2}, 11);
    CHECK(a == b);
    CHECK_FALSE(a == init_model({2, 128, 128, 128, 2}, 12));
    REQUIRE(a.layers.size() == 4);
    const std::size_t shapes[4][2] = {{2, 128}, {128, 128}, {128, 128}, {128, 2}};
    for (std::size_t l = 0; l < 4; ++l) {
        const auto& L = a.layers[l];
        CHECK(L.in == shapes[l][0]);
        CHECK(L.out == shapes[l][1]);
        CHECK(L.w.size() == L.in * L.out);
        const double bound = std::sqrt(6.0 / static_cast<double>(L.in + L.out));
        for (double w : L.w) CHECK(std::abs(w) <= bound);
        for (double x : L.b) CHECK(x == 0.0);
    }
    CHECK_THROWS(init_model({3}, 0));
    CHECK_THROWS(init_model({3, 0, 1}, 0));
}

TEST_CASE("forward: zero net, identity net, hand-set 1-2-1 net") {
    auto z = init_model({3, 4, 2}, 1);
    for (auto& L : z.layers) std::fill(L.w.begin(), L.w.end(), 0.0);
    CHECK(forward(z, FeatureVector{1, -2, 3}) == FeatureVector{0, 0});

    auto id = init_model({3, 3}, 1);
    id.layers[0].w = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(forward(id, FeatureVector{0.5, -2, 7}) == FeatureVector{0.5, -2, 7});

    auto m = init_model({1, 2, 1}, 1);
    m.layers[0].w = {2.0, -1.0};
    m.layers[0].b = {0.5, 0.25};
    m.layers[1].w = {3.0, 4.0};
    m.layers[1].b = {-1.0};
    // x = 1.5: hidden = relu(3.5), relu(-1.25) = 3.5, 0; out = 10.5 - 1
    CHECK(std::abs(forward(m, FeatureVector{1.5})[0] - 9.5) < 1e-12);
    // x = -2: hidden = relu(-3.5), relu(2.25) = 0, 2.25; out = 9 - 1
    CHECK(std::abs(forward(m, FeatureVector{-2.0})[0] - 8.0) < 1e-12);
    CHECK_THROWS(forward(m, FeatureVector{1, 2}));
}

TEST_CASE("forward is positively homogeneous without biases") {
    auto m = init_model({3, 5, 2}, 3);
    for (auto& w : m.layers[0].w) w = std::abs(w);
    const FeatureVector x{0.2, 0.4, 0.6};
    const FeatureVector x3{0.6, 1.2, 1.8};
    const auto y = forward(m, x);
    const auto y3 = forward(m, x3);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y3[i] - 3.0 * y[i]) < 1e-12);
}

TEST_CASE("mse on a two-sample batch") {
    auto m = init_model({1, 1}, 0);
    m.layers[0].w = {2.0};
    m.layers[0].b = {1.0};
    const std::vector<Sample> batch{{{1.0}, {2.0}}, {{-1.0}, {0.0}}};
    // predictions 3 and -1; squared errors 1 and 1
    CHECK(mse_loss(m, batch) == doctest::Approx(1.0).epsilon(1e-15));
    MlpTrainer t(m, TrainOpts{});
    CHECK(t.train_step(batch) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("train_step on a perfect batch leaves parameters unchanged") {
    auto m = init_model({2, 4, 1}, 5);
    std::vector<Sample> batch;
    Rng rng(1);
    for (int i = 0; i < 4; ++i) {
        auto x = random_vec(rng, 2);
        batch.push_back({x, forward(m, x)});
    }
    const auto before = m;
    MlpTrainer t(m, TrainOpts{});
    CHECK(t.train_step(batch) == 0.0);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (std::size_t i = 0; i < m.layers[l].w.size(); ++i) {
            CHECK(std::abs(m.layers[l].w[i] - before.layers[l].w[i]) < 1e-9);
        }
    }
}

TEST_CASE("repeated steps reduce the loss on a fixed batch") {
    auto m = init_model({3, 8, 2}, 9);
    Rng rng(2);
    std::vector<Sample> batch;
    for (int i = 0; i < 8; ++i) batch.push_back({random_vec(rng, 3), random_vec(rng, 2)});
    TrainOpts o;
    o.learning_rate = 1e-2;
    MlpTrainer t(m, o);
    const double first = t.train_step(batch);
    double prev = first;
    int rises = 0;
    for (int s = 0; s < 100; ++s) {
        const double l = t.train_step(batch);
        if (l > prev + 1e-6) ++rises;
        prev = l;
    }
    CHECK(prev < 0.5 * first);
    CHECK(rises <= 5);
}

TEST_CASE("train_step rejects NaN and empty batches") {
    auto m = init_model({1, 1}, 0);
    MlpTrainer t(m, TrainOpts{});
    std::vector<Sample> bad{{{std::nan("")}, {1.0}}};
    CHECK_THROWS(t.train_step(bad));
    CHECK_THROWS(t.train_step(std::vector<Sample>{}));
    std::vector<Sample> wrong{{{1.0, 2.0}, {1.0}}};
    CHECK_THROWS(t.train_step(wrong));
}

TEST_CASE("gradient check against central differences") {
    Rng rng(3);
    for (int n = 0; n < 20; ++n) {
        const std::size_t in = 1 + rng.uniform_int(0, 3), hid = 2 + rng.uniform_int(0, 4), out = 1 + rng.uniform_int(0, 2);
        const auto m = init_model({in, hid, out}, 100 + n);
        CHECK(m.parameter_count() <= 64);
        const auto x = random_vec(rng, in);
        const auto y = random_vec(rng, out);
        CHECK(gradient_check(m, x, y, 1e-5) < 1e-4);
    }
}

TEST_CASE("gradient check on an all-zero problem") {
    auto m = init_model({2, 3, 1}, 0);
    for (auto& L : m.layers) std::fill(L.w.begin(), L.w.end(), 0.0);
    const FeatureVector x{0, 0}, y{0};
    const auto g = mse_gradient(m, x, y);
    for (const auto& w : g.w)
        for (double v : w) CHECK(v == 0.0);
    CHECK(gradient_check(m, x, y, 1e-5) == 0.0);
}

TEST_CASE("gradient check catches a sign-flipped backprop") {
    Rng rng(4);
    const auto m = init_model({3, 4, 2}, 8);
    const auto x = random_vec(rng, 3);
    const auto y = random_vec(rng, 2);
    const GradientFn flipped = [](const MlpModel& mm, std::span<const double> a, std::span<const double> b) {
        auto g = mse_gradient(mm, a, b);
        g.scale(-1.0);
        return g;
    };
    CHECK(gradient_check(m, x, y, 1e-5, flipped) > 1e-2);
}

TEST_CASE("Adam steps deterministically from the same seed") {
    auto run = [] {
        auto m = init_model({2, 6, 1}, 21);
        Rng rng(5);
        std::vector<Sample> batch;
        for (int i = 0; i < 6; ++i) batch.push_back({random_vec(rng, 2), random_vec(rng, 1)});
        MlpTrainer t(m, TrainOpts{});
        for (int s = 0; s < 10; ++s) t.train_step(batch);
        return m;
    };
    CHECK(run() == run());
}

TEST_CASE("model text round trip is bit exact") {
    const auto m = init_model({4, 7, 3}, 77);
    std::stringstream ss;
    save_model(ss, m);
    const auto back = load_model(ss);
    CHECK(back == m);
    std::stringstream bad("karma-mlp 2\n");
    CHECK_THROWS(load_model(bad));
}

TEST_CASE("train opts validation") {
    TrainOpts o;
    o.learning_rate = 0;
    CHECK_THROWS(o.validate());
    o = TrainOpts{};
    o.batch_size = 0;
    CHECK_THROWS(o.validate());
}
