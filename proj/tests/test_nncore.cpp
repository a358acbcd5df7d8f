#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "provdet/adam.hpp"
#include "provdet/checkpoint.hpp"
#include "provdet/losses.hpp"
#include "provdet/mlp.hpp"

using namespace provdet;

TEST_CASE("mlp forward: identity single layer reproduces its input") {
    Rng rng(1);
    Mlp m = Mlp::init({3, 3}, rng);
    m.w[0].zero();
    for (int i = 0; i < 3; ++i) m.w[0].at(i, i) = 1.0;
    std::fill(m.b[0].begin(), m.b[0].end(), 0.0);
    const std::vector<double> x = {0.3, -1.2, 2.5};
    CHECK(m.forward(x) == x);
}

TEST_CASE("mlp forward: zero weights yield the bias") {
    Rng rng(2);
    Mlp m = Mlp::init({4, 3, 2}, rng);
    for (auto& w : m.w) w.zero();
    m.b[0] = {0.1, 0.2, 0.3};
    m.b[1] = {-0.5, 0.7};
    const auto y = m.forward(std::vector<double>{1, 2, 3, 4});
    CHECK(y == std::vector<double>{-0.5, 0.7});

    Mlp m2 = Mlp::init({4, 3, 2}, rng);
    CHECK(m2.forward(std::vector<double>{1, 2, 3, 4}) ==
          m2.forward(std::vector<double>{1, 2, 3, 4}));
    CHECK_THROWS_AS(m2.forward(std::vector<double>{1, 2, 3}), ShapeMismatch);
}

TEST_CASE("mlp backward: scalar linear layer gives dL/dw = x * dL/dy") {
    Rng rng(3);
    Mlp m = Mlp::init({1, 1}, rng);
    m.w[0].at(0, 0) = 0.8;
    m.b[0][0] = 0.0;
    Mlp::Cache cache;
    m.forward(std::vector<double>{2.5}, &cache);
    const auto g = m.backward(cache, std::vector<double>{3.0});
    CHECK(g.w[0].at(0, 0) == Catch::Approx(2.5 * 3.0));
    CHECK(g.b[0][0] == Catch::Approx(3.0));
    CHECK(g.input[0] == Catch::Approx(0.8 * 3.0));
}

TEST_CASE("mlp backward matches finite differences on a random 3-layer net") {
    Rng rng(4);
    Mlp m = Mlp::init({5, 7, 6, 4}, rng);
    std::vector<double> input(5), upstream(4);
    for (double& x : input) x = rng.uniform(-1, 1);
    for (double& x : upstream) x = rng.uniform(-1, 1);

    Mlp::Cache cache;
    m.forward(input, &cache);
    const auto g = m.backward(cache, upstream);
    std::vector<double> analytic;
    for (int l = 0; l < m.layer_count(); ++l) {
        analytic.insert(analytic.end(), g.w[l].v.begin(), g.w[l].v.end());
        analytic.insert(analytic.end(), g.b[l].begin(), g.b[l].end());
    }

    std::vector<double> params;
    m.pack(params);
    Mlp probe = m;
    auto loss = [&](const std::vector<double>& p) {
        probe.unpack(p);
        const auto y = probe.forward(input);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
        return acc;
    };
    CHECK(oracles::max_gradient_error(loss, params, analytic) < 1e-3);
}

TEST_CASE("mlp backward: zero upstream yields zero gradients") {
    Rng rng(5);
    Mlp m = Mlp::init({3, 4, 2}, rng);
    Mlp::Cache cache;
    m.forward(std::vector<double>{0.1, 0.2, 0.3}, &cache);
    const auto g = m.backward(cache, std::vector<double>{0.0, 0.0});
    for (int l = 0; l < m.layer_count(); ++l) {
        for (double x : g.w[l].v) CHECK(x == 0.0);
        for (double x : g.b[l]) CHECK(x == 0.0);
    }
    for (double x : g.input) CHECK(x == 0.0);
}

TEST_CASE("weighted_bce matches the closed-form anchor values") {
    const std::vector<double> w1 = {1.0};
    CHECK(weighted_bce(std::vector<double>{50.0}, std::vector<double>{1.0}, w1) ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK(weighted_bce(std::vector<double>{0.0}, std::vector<double>{1.0}, w1) ==
          Catch::Approx(std::log(2.0)));
    CHECK(weighted_bce(std::vector<double>{0.0}, std::vector<double>{1.0},
                       std::vector<double>{2.0}) == Catch::Approx(2.0 * std::log(2.0)));
    CHECK_THROWS_AS(weighted_bce(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0}, w1),
                    DimensionMismatch);
}

TEST_CASE("weighted_bce with unit weights equals the unweighted sum") {
    Rng rng(6);
    std::vector<double> z(10), y(10), w(10, 1.0);
    for (int i = 0; i < 10; ++i) {
        z[i] = rng.uniform(-4, 4);
        y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    double plain = 0.0;
    for (int i = 0; i < 10; ++i)
        plain += std::max(z[i], 0.0) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
    CHECK(weighted_bce(z, y, w) == Catch::Approx(plain).epsilon(1e-12));
    CHECK(weighted_bce(z, y, w) >= 0.0);
}

TEST_CASE("weighted_bce gradient matches finite differences") {
    Rng rng(7);
    std::vector<double> z(6), y(6), w(6);
    for (int i = 0; i < 6; ++i) {
        z[i] = rng.uniform(-3, 3);
        y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        w[i] = rng.uniform(0.1, 2.0);
    }
    std::vector<double> grad(6);
    weighted_bce(z, y, w, grad);
    auto loss = [&](const std::vector<double>& p) { return weighted_bce(p, y, w); };
    CHECK(oracles::max_gradient_error(loss, z, grad) < 1e-3);
}

TEST_CASE("class weights follow sqrt((N-n)/n) with degenerate handling") {
    std::vector<EventSet> edges;
    for (int i = 0; i < 100; ++i) {
        EventSet e;
        e.insert(EventType::Clone);  // n = 100 = N
        if (i < 25) e.insert(EventType::Read);  // n = 25
        edges.push_back(e);
    }
    const auto w = class_weights(edges);
    CHECK(w[static_cast<int>(EventType::Read)] == Catch::Approx(std::sqrt(3.0)));
    CHECK(w[static_cast<int>(EventType::Clone)] == 1e-3);   // floor at n = N
    CHECK(w[static_cast<int>(EventType::Write)] == 0.0);    // absent class excluded
}

TEST_CASE("class weights are permutation-equivariant in the class index") {
    Rng rng(8);
    std::vector<EventSet> edges;
    for (int i = 0; i < 60; ++i) {
        EventSet e;
        e.insert(static_cast<EventType>(rng.index(kEventTypeCount)));
        if (rng.uniform() < 0.4) e.insert(static_cast<EventType>(rng.index(kEventTypeCount)));
        edges.push_back(e);
    }
    const auto w = class_weights(edges);

    // Swap two classes in every edge; the weight vector must swap with them.
    const int a = 2, b = 7;
    std::vector<EventSet> swapped;
    for (const EventSet& e : edges) {
        EventSet s;
        for (int i = 0; i < kEventTypeCount; ++i) {
            if (!e.contains(static_cast<EventType>(i))) continue;
            int j = i == a ? b : (i == b ? a : i);
            s.insert(static_cast<EventType>(j));
        }
        swapped.push_back(s);
    }
    const auto w2 = class_weights(swapped);
    for (int i = 0; i < kEventTypeCount; ++i) {
        int j = i == a ? b : (i == b ? a : i);
        CHECK(w2[j] == w[i]);
    }
}

TEST_CASE("cosine loss anchors: identical, orthogonal, antiparallel") {
    const std::vector<double> u = {1.0, 2.0, -1.0};
    std::vector<double> v = {1.0, 2.0, -1.0};
    CHECK(cosine_loss(u, v) == Catch::Approx(0.0).margin(1e-9));
    v = {2.0, -1.0, 0.0};
    CHECK(cosine_loss(u, v) == Catch::Approx(1.0).margin(1e-9));
    v = {-1.0, -2.0, 1.0};
    CHECK(cosine_loss(u, v) == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("cosine loss gradient matches finite differences") {
    Rng rng(9);
    std::vector<double> r(5), t(5), grad(5);
    for (int i = 0; i < 5; ++i) {
        r[i] = rng.uniform(-1, 1);
        t[i] = rng.uniform(-1, 1);
    }
    cosine_loss(r, t, grad);
    auto loss = [&](const std::vector<double>& p) { return cosine_loss(p, t); };
    CHECK(oracles::max_gradient_error(loss, r, grad) < 1e-3);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::vector<double> p = {1.0, -2.0, 3.0};
    const std::vector<double> saved = p;
    AdamState st(3);
    adam_step(p, std::vector<double>{0.0, 0.0, 0.0}, st, 1e-2);
    CHECK(p == saved);
}

TEST_CASE("adam: repeated positive gradient decreases the parameter monotonically") {
    std::vector<double> p = {0.5};
    AdamState st(1);
    double prev = p[0];
    for (int i = 0; i < 20; ++i) {
        adam_step(p, std::vector<double>{1.0}, st, 1e-2);
        CHECK(p[0] < prev);
        prev = p[0];
    }
}

TEST_CASE("adam drives a convex quadratic downhill over 100 steps") {
    std::vector<double> p = {4.0, -3.0};
    AdamState st(2);
    auto loss = [&] { return (p[0] - 1.0) * (p[0] - 1.0) + 2.0 * (p[1] + 2.0) * (p[1] + 2.0); };
    const double initial = loss();
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> g = {2.0 * (p[0] - 1.0), 4.0 * (p[1] + 2.0)};
        adam_step(p, g, st, 5e-2);
    }
    CHECK(loss() < initial);
    CHECK(loss() < 0.5 * initial);
}

TEST_CASE("parameter dumps round-trip through the shape manifest") {
    Matrix m(2, 3);
    m.v = {1.5, -2.25, 3.0, 0.125, 1e-17, -4.75};
    TensorDump d;
    d.add("weights", m);
    d.add("bias", std::vector<double>{0.1, 0.2});
    std::stringstream ss;
    d.save(ss);
    const TensorDump d2 = TensorDump::load(ss);
    CHECK(d2.matrix("weights").v == m.v);
    CHECK(d2.values("bias") == std::vector<double>{0.1, 0.2});
    CHECK(d2.has("weights"));
    CHECK_FALSE(d2.has("nope"));
    CHECK_THROWS_AS(d2.values("nope"), IoError);
}
