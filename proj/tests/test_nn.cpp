#include <doctest.h>

#include <rararl/nn.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace rararl;

namespace {

// Tiny fixed net for hand-checkable forwards: 2 -> 2 -> 1.
DenseNet hand_net() {
    DenseNet net;
    net.layer_dims = {2, 2, 1};
    net.weights = {{1.0, -2.0, 0.5, 0.25}, {1.0, -1.0}};
    net.biases = {{0.5, -1.0}, {0.25}};
    return net;
}

double max_rel_err(const GradientSet& a, const GradientSet& b) {
    double worst = 0.0;
    auto cmp = [&](const std::vector<std::vector<double>>& xs,
                   const std::vector<std::vector<double>>& ys) {
        for (std::size_t l = 0; l < xs.size(); ++l)
            for (std::size_t i = 0; i < xs[l].size(); ++i) {
                double x = xs[l][i], y = ys[l][i];
                double denom = std::max({std::fabs(x), std::fabs(y), 1e-8});
                worst = std::max(worst, std::fabs(x - y) / denom);
            }
    };
    cmp(a.weights, b.weights);
    cmp(a.biases, b.biases);
    return worst;
}

}  // namespace

TEST_CASE("forward matches a hand computation") {
    DenseNet net = hand_net();
    // input (1, 2): z0 = [1*1 - 2*2 + 0.5, 0.5*1 + 0.25*2 - 1] = [-2.5, 0]
    // relu -> [0, 0]; out = 1*0 - 1*0 + 0.25 = 0.25
    std::vector<double> in{1.0, 2.0};
    auto out = forward(net, in);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-15));

    // input (-1, -1): z0 = [-1 + 2 + 0.5, -0.5 - 0.25 - 1] = [1.5, -1.75]
    // relu -> [1.5, 0]; out = 1.5 + 0.25 = 1.75
    std::vector<double> in2{-1.0, -1.0};
    auto out2 = forward(net, in2);
    CHECK(out2[0] == doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("forward cache records post-activation values per layer") {
    DenseNet net = hand_net();
    std::vector<double> in{-1.0, -1.0};
    ForwardCache cache;
    auto out = forward(net, in, &cache);
    REQUIRE(cache.activations.size() == 3);
    CHECK(cache.activations[0] == std::vector<double>{-1.0, -1.0});
    CHECK(cache.activations[1][0] == doctest::Approx(1.5));
    CHECK(cache.activations[1][1] == 0.0);
    CHECK(cache.activations[2][0] == out[0]);
}

TEST_CASE("init stays within the fan-in bound and is seed-deterministic") {
    RngStream r1(derive_seed(31, Stream::Init));
    RngStream r2(derive_seed(31, Stream::Init));
    DenseNet a = make_dense_net({36, 64, 64, 9}, r1);
    DenseNet b = make_dense_net({36, 64, 64, 9}, r2);
    CHECK(a.weights == b.weights);
    CHECK(a.biases == b.biases);
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        double bound = 1.0 / std::sqrt(double(a.layer_dims[l]));
        for (double w : a.weights[l]) CHECK(std::fabs(w) <= bound);
        for (double c : a.biases[l]) CHECK(std::fabs(c) <= bound);
    }
    CHECK(a.parameter_count() == 36u * 64 + 64 + 64u * 64 + 64 + 64u * 9 + 9);
}

TEST_CASE("backward agrees with central finite differences") {
    RngStream rng(derive_seed(3, Stream::Init));
    DenseNet net = make_dense_net({5, 8, 4}, rng);
    RngStream data(derive_seed(4, Stream::Batch));
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> in(5), go(4);
        for (double& v : in) v = data.uniform01() * 2.0 - 1.0;
        for (double& v : go) v = data.uniform01() * 2.0 - 1.0;
        ForwardCache cache;
        forward(net, in, &cache);
        GradientSet an = backward(net, cache, go);
        GradientSet fd = finite_diff_grad(net, in, go, 1e-5);
        CHECK(max_rel_err(an, fd) <= 1e-4);
    }
}

TEST_CASE("grad_input matches finite differences on the input") {
    RngStream rng(derive_seed(9, Stream::Init));
    DenseNet net = make_dense_net({3, 6, 2}, rng);
    std::vector<double> in{0.3, -0.7, 0.9};
    std::vector<double> go{1.0, -0.5};
    ForwardCache cache;
    forward(net, in, &cache);
    std::vector<double> gin;
    backward(net, cache, go, &gin);
    REQUIRE(gin.size() == 3);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        auto lo = in, hi = in;
        lo[i] -= h;
        hi[i] += h;
        auto flo = forward(net, lo), fhi = forward(net, hi);
        double dot_hi = fhi[0] * go[0] + fhi[1] * go[1];
        double dot_lo = flo[0] * go[0] + flo[1] * go[1];
        double fd = (dot_hi - dot_lo) / (2.0 * h);
        CHECK(gin[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

// For a purely linear map the central difference is algebraically exact, so
// the only error left is rounding noise. A cubic term brings back the
// expected O(h^2) truncation, which we probe by quartering.
TEST_CASE("central differences are exact on linear nets and O(h^2) on cubics") {
    DenseNet lin;
    lin.layer_dims = {1, 1};
    lin.weights = {{3.0}};
    lin.biases = {{0.0}};
    std::vector<double> in{0.5}, go{1.0};
    GradientSet fd = finite_diff_grad(lin, in, go, 1e-3);
    // d(w*x)/dw = x = 0.5 exactly
    CHECK(std::fabs(fd.weights[0][0] - 0.5) <= 1e-12);

    auto cubic = [](double w) { return w * w * w; };
    auto central = [&](double w, double h) {
        return (cubic(w + h) - cubic(w - h)) / (2.0 * h);
    };
    double w0 = 1.3;
    double exact = 3.0 * w0 * w0;
    double e1 = std::fabs(central(w0, 1e-2) - exact);
    double e2 = std::fabs(central(w0, 1e-2 / 4.0) - exact);
    // halving h twice should cut the truncation error about 16x
    CHECK(e2 * 8.0 < e1);
}

TEST_CASE("adam matches a scalar reference implementation") {
    DenseNet net;
    net.layer_dims = {1, 1};
    net.weights = {{0.7}};
    net.biases = {{-0.2}};
    AdamState st = make_adam_state(net);

    double wm = 0, wv = 0, bm = 0, bv = 0;
    double w = 0.7, b = -0.2;
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    RngStream g(derive_seed(77, Stream::Batch));
    for (int t = 1; t <= 25; ++t) {
        double gw = g.uniform01() * 2.0 - 1.0;
        double gb = g.uniform01() * 2.0 - 1.0;
        GradientSet gs = make_zero_gradients(net);
        gs.weights[0][0] = gw;
        gs.biases[0][0] = gb;
        adam_step(net, st, gs, lr);

        wm = b1 * wm + (1 - b1) * gw;
        wv = b2 * wv + (1 - b2) * gw * gw;
        bm = b1 * bm + (1 - b1) * gb;
        bv = b2 * bv + (1 - b2) * gb * gb;
        double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
        w -= lr * (wm / c1) / (std::sqrt(wv / c2) + eps);
        b -= lr * (bm / c1) / (std::sqrt(bv / c2) + eps);

        CHECK(net.weights[0][0] == doctest::Approx(w).epsilon(1e-14));
        CHECK(net.biases[0][0] == doctest::Approx(b).epsilon(1e-14));
    }
    CHECK(st.step == 25);
}

TEST_CASE("adam with an all-zero gradient advances step only") {
    RngStream rng(derive_seed(8, Stream::Init));
    DenseNet net = make_dense_net({4, 4, 2}, rng);
    DenseNet before = net;
    AdamState st = make_adam_state(net);
    GradientSet zero = make_zero_gradients(net);
    adam_step(net, st, zero, 0.1);
    CHECK(st.step == 1);
    CHECK(net.weights == before.weights);
    CHECK(net.biases == before.biases);
    for (const auto& v : st.m_weights)
        for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("clip_global_norm rescales only above the threshold") {
    DenseNet net;
    net.layer_dims = {1, 1};
    net.weights = {{0.0}};
    net.biases = {{0.0}};
    GradientSet g = make_zero_gradients(net);
    g.weights[0][0] = 3.0;
    g.biases[0][0] = 4.0;  // norm 5
    GradientSet* one[] = {&g};

    double pre = clip_global_norm(one, 10.0);
    CHECK(pre == doctest::Approx(5.0));
    CHECK(g.weights[0][0] == 3.0);  // untouched below the cap

    pre = clip_global_norm(one, 1.0);
    CHECK(pre == doctest::Approx(5.0));
    double norm = std::sqrt(squared_norm(g));
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.weights[0][0] == doctest::Approx(0.6));
    CHECK(g.biases[0][0] == doctest::Approx(0.8));
}

TEST_CASE("clip_global_norm treats multiple sets as one vector") {
    DenseNet net;
    net.layer_dims = {1, 1};
    net.weights = {{0.0}};
    net.biases = {{0.0}};
    GradientSet a = make_zero_gradients(net);
    GradientSet b = make_zero_gradients(net);
    a.weights[0][0] = 3.0;
    b.weights[0][0] = 4.0;  // joint norm 5 (plus zero biases)
    GradientSet* both[] = {&a, &b};
    double pre = clip_global_norm(both, 2.5);
    CHECK(pre == doctest::Approx(5.0));
    CHECK(a.weights[0][0] == doctest::Approx(1.5));
    CHECK(b.weights[0][0] == doctest::Approx(2.0));
}

TEST_CASE("accumulate adds elementwise and rejects shape mismatch") {
    RngStream rng(derive_seed(2, Stream::Init));
    DenseNet net = make_dense_net({3, 3, 1}, rng);
    GradientSet a = make_zero_gradients(net);
    GradientSet b = make_zero_gradients(net);
    a.weights[0][0] = 1.5;
    b.weights[0][0] = 2.25;
    b.biases[1][0] = -1.0;
    accumulate(a, b);
    CHECK(a.weights[0][0] == 3.75);
    CHECK(a.biases[1][0] == -1.0);

    DenseNet other = make_dense_net({4, 3, 1}, rng);
    GradientSet c = make_zero_gradients(other);
    CHECK_THROWS(accumulate(a, c));
}

TEST_CASE("forward rejects wrong input size") {
    DenseNet net = hand_net();
    std::vector<double> bad{1.0, 2.0, 3.0};
    CHECK_THROWS(forward(net, bad));
}

TEST_CASE("copy_parameters makes a bitwise copy") {
    RngStream rng(derive_seed(6, Stream::Init));
    DenseNet a = make_dense_net({4, 8, 3}, rng);
    DenseNet b = make_dense_net({4, 8, 3}, rng);
    CHECK(a.weights != b.weights);
    copy_parameters(a, b);
    CHECK(a.weights == b.weights);
    CHECK(a.biases == b.biases);
}
