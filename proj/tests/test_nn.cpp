#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "scma/nn/checkpoint.hpp"
#include "scma/nn/gradcheck.hpp"
#include "scma/nn/loss.hpp"
#include "scma/nn/network.hpp"
#include "scma/nn/optim.hpp"

using namespace scma;
using namespace scma::nn;

namespace {

Matrix random_matrix(size_t r, size_t c, Rng& rng, double lo = 0.05, double hi = 0.95) {
    Matrix m(r, c);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : m.v) v = u(rng);
    return m;
}

Matrix random_bits(size_t r, size_t c, Rng& rng) {
    Matrix m(r, c);
    std::uniform_int_distribution<int> b(0, 1);
    for (double& v : m.v) v = b(rng);
    return m;
}

Network bn_test_net(Rng& rng) {
    // tanh + relu hidden layers with batch-norm, sigmoid output
    Network net = make_mlp({4, 7, 6, 3}, Activation::tanh, Activation::sigmoid, true, rng);
    net.layers[1].act = Activation::relu;
    return net;
}

}  // namespace

TEST_CASE("xavier samples hit the target variance") {
    Rng rng(101);
    Matrix w = xavier_init(8, 48, rng);
    const double target = 2.0 / 56.0;
    CHECK(target == Catch::Approx(0.0357142857).epsilon(1e-6));
    const double limit = std::sqrt(6.0 / 56.0);
    double sum = 0, sq = 0;
    for (double v : w.v) {
        CHECK(std::abs(v) <= limit);
        sum += v;
        sq += v * v;
    }
    // small draw: just sanity — the tight statistical check uses 250k samples
    const double var_small = sq / w.v.size();
    CHECK(std::abs(var_small - target) < 0.25 * target);

    Matrix big = xavier_init(500, 500, rng);
    const double t2 = 2.0 / 1000.0;
    double mean = 0;
    for (double v : big.v) mean += v;
    mean /= big.v.size();
    double var = 0;
    for (double v : big.v) var += (v - mean) * (v - mean);
    var /= big.v.size();
    CHECK(std::abs(var - t2) < 0.05 * t2);
    // se(mean) = sd/sqrt(n); 3 standard errors
    CHECK(std::abs(mean) < 3.0 * std::sqrt(t2 / big.v.size()));
}

TEST_CASE("identity layer passes input through") {
    Network net;
    DenseLayer ly;
    ly.W = Matrix(3, 3);
    for (int i = 0; i < 3; ++i) ly.W(i, i) = 1.0;
    ly.b.assign(3, 0.0);
    ly.act = Activation::identity;
    net.layers.push_back(ly);
    Rng rng(1);
    Matrix x = random_matrix(5, 3, rng, -2, 2);
    CHECK(net.infer(x).v == x.v);
    CHECK(net.forward(x, Mode::train).v == x.v);
}

TEST_CASE("batch normalization matches the hand-computed batch") {
    Network net;
    DenseLayer ly;
    ly.W = Matrix(1, 1);
    ly.W(0, 0) = 1.0;
    ly.b.assign(1, 0.0);
    ly.act = Activation::identity;
    ly.bn = BatchNorm(1);
    net.layers.push_back(ly);

    Matrix x(3, 1);
    x(0, 0) = 1;
    x(1, 0) = 2;
    x(2, 0) = 3;
    Matrix y = net.forward(x, Mode::train);
    CHECK(y(0, 0) == Catch::Approx(-1.2247448).margin(1e-6));
    CHECK(y(1, 0) == Catch::Approx(0.0).margin(1e-6));
    CHECK(y(2, 0) == Catch::Approx(1.2247448).margin(1e-6));
}

TEST_CASE("train-mode batch-norm standardizes each feature") {
    Rng rng(4);
    Network net = make_mlp({6, 16, 8}, Activation::tanh, Activation::sigmoid, true, rng);
    Matrix x = random_matrix(128, 6, rng, -3, 3);
    net.forward(x, Mode::train);
    // inspect the first layer's normalized pre-activation through a probe:
    // gamma=1, beta=0 initially, so the activation input is the standardized z
    Network probe;
    probe.layers.push_back(net.layers[0]);
    probe.layers[0].act = Activation::identity;
    Matrix a = probe.forward(x, Mode::train);
    for (size_t c = 0; c < a.cols; ++c) {
        double mean = 0;
        for (size_t r = 0; r < a.rows; ++r) mean += a(r, c);
        mean /= a.rows;
        double var = 0;
        for (size_t r = 0; r < a.rows; ++r) var += (a(r, c) - mean) * (a(r, c) - mean);
        var /= a.rows;
        CHECK(std::abs(mean - 0.0) < 1e-6);   // beta
        CHECK(std::abs(var - 1.0) < 1e-4);    // gamma^2, eps-corrected
    }
}

TEST_CASE("batch-norm requires a real batch in train mode") {
    Rng rng(9);
    Network net = make_mlp({3, 4, 2}, Activation::tanh, Activation::sigmoid, true, rng);
    Matrix x(1, 3);
    CHECK_THROWS_AS(net.forward(x, Mode::train), std::invalid_argument);
    CHECK_NOTHROW(net.infer(x));
}

TEST_CASE("tanh outputs stay strictly inside (-1, 1)") {
    Rng rng(12);
    Network net = make_mlp({4, 32, 8}, Activation::tanh, Activation::tanh, true, rng);
    Matrix x = random_matrix(64, 4, rng, -50, 50);
    Matrix y = net.forward(x, Mode::train);
    for (double v : y.v) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("cross entropy values and monotonicity") {
    Matrix t(1, 2), p(1, 2);
    t(0, 0) = 1;
    t(0, 1) = 0;
    p(0, 0) = 1;
    p(0, 1) = 0;
    CHECK(cross_entropy(t, p) == Catch::Approx(0.0).margin(1e-9));

    Matrix t1(1, 1), p1(1, 1);
    t1(0, 0) = 1;
    p1(0, 0) = 0.5;
    CHECK(cross_entropy(t1, p1) == Catch::Approx(std::log(2.0)).epsilon(1e-9));

    double prev = cross_entropy(t1, p1);
    for (double q : {0.6, 0.7, 0.8, 0.9, 0.99}) {
        p1(0, 0) = q;
        const double cur = cross_entropy(t1, p1);
        CHECK(cur < prev);
        CHECK(cur >= 0.0);
        prev = cur;
    }

    Matrix bad(2, 1);
    CHECK_THROWS_AS(cross_entropy(t1, bad), std::invalid_argument);
}

TEST_CASE("zero-weight sigmoid layer: bias gradient is mean(p - t)") {
    Network net;
    DenseLayer ly;
    ly.W = Matrix(4, 3);  // all zeros
    ly.b.assign(3, 0.0);
    ly.act = Activation::sigmoid;
    net.layers.push_back(ly);

    Rng rng(21);
    Matrix x = random_matrix(64, 4, rng, -1, 1);
    Matrix t = random_bits(64, 3, rng);
    Matrix p = net.forward(x, Mode::train);
    Gradients g = net.backward(cross_entropy_grad(t, p));
    for (size_t c = 0; c < 3; ++c) {
        double expect = 0.0;
        for (size_t r = 0; r < 64; ++r) expect += (0.5 - t(r, c));
        expect /= 64.0;
        CHECK(g.layers[0].db[c] == Catch::Approx(expect).margin(1e-9));
    }
}

TEST_CASE("gradients match central finite differences through batch-norm") {
    Rng rng(31);
    Network net = bn_test_net(rng);
    Matrix x = random_matrix(16, 4, rng, -1.5, 1.5);
    Matrix t = random_bits(16, 3, rng);
    auto rep = grad_check(net, x, t, 1e-5);
    INFO(rep.worst);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("constant input batch: batch-norm input gradients sum to zero") {
    Rng rng(41);
    Network net = make_mlp({3, 5, 2}, Activation::tanh, Activation::sigmoid, true, rng);
    Matrix x(8, 3);
    for (size_t r = 0; r < 8; ++r)
        for (size_t c = 0; c < 3; ++c) x(r, c) = 0.37 * (c + 1);
    Matrix t = random_bits(8, 2, rng);
    Matrix p = net.forward(x, Mode::train);
    Gradients g = net.backward(cross_entropy_grad(t, p));
    for (size_t c = 0; c < 3; ++c) {
        double col = 0.0;
        for (size_t r = 0; r < 8; ++r) col += g.input(r, c);
        CHECK(std::abs(col) < 1e-9);
    }
}

TEST_CASE("fault injection is flagged by the finite-difference comparison") {
    Rng rng(51);
    Network net = bn_test_net(rng);
    Matrix x = random_matrix(8, 4, rng, -1, 1);
    Matrix t = random_bits(8, 3, rng);
    Matrix p = net.forward(x, Mode::train, false);
    Gradients g = net.backward(cross_entropy_grad(t, p));
    g.layers[0].dW(0, 0) += 1.0;  // corrupt one entry
    auto loss_fn = [&] { return cross_entropy(t, net.forward(x, Mode::train, false)); };
    auto rep = compare_with_finite_diff(net, g, loss_fn, 1e-5);
    CHECK(rep.max_rel_err > 1e-2);
    CHECK(rep.worst.find("layer 0 W[0]") != std::string::npos);
}

TEST_CASE("identity network gradient equals finite differences to fp noise") {
    Network net;
    DenseLayer ly;
    ly.W = Matrix(2, 2);
    ly.W(0, 0) = ly.W(1, 1) = 1.0;
    ly.b.assign(2, 0.0);
    ly.act = Activation::identity;
    net.layers.push_back(ly);
    Rng rng(61);
    Matrix x = random_matrix(4, 2, rng, 0.2, 0.8);  // outputs stay valid probabilities
    Matrix t = random_bits(4, 2, rng);
    auto rep = grad_check(net, x, t, 1e-5);
    INFO(rep.worst);
    CHECK(rep.max_rel_err < 1e-7);
}

TEST_CASE("grad_check validates its step size") {
    Rng rng(71);
    Network net = bn_test_net(rng);
    Matrix x = random_matrix(4, 4, rng);
    Matrix t = random_bits(4, 3, rng);
    CHECK_THROWS_AS(grad_check(net, x, t, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(net, x, t, 1e-2), std::invalid_argument);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    Rng rng(81);
    Network net = make_mlp({2, 4, 2}, Activation::tanh, Activation::sigmoid, true, rng);
    Network before = net;
    Gradients g;
    g.layers.resize(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        g.layers[l].dW = Matrix(net.layers[l].W.rows, net.layers[l].W.cols);
        g.layers[l].db.assign(net.layers[l].b.size(), 0.0);
        if (net.layers[l].bn) {
            g.layers[l].dgamma.assign(net.layers[l].bn->gamma.size(), 0.0);
            g.layers[l].dbeta.assign(net.layers[l].bn->beta.size(), 0.0);
        }
    }
    AdamState s = AdamState::for_network(net, 1e-3);
    adam_step(net, g, s);
    for (size_t l = 0; l < net.layers.size(); ++l)
        CHECK(net.layers[l].W.v == before.layers[l].W.v);
}

TEST_CASE("adam: constant gradient approaches alpha-sized signed steps") {
    // single scalar parameter network
    Network net;
    DenseLayer ly;
    ly.W = Matrix(1, 1);
    ly.W(0, 0) = 0.0;
    ly.b.assign(1, 0.0);
    ly.act = Activation::identity;
    net.layers.push_back(ly);
    AdamState s = AdamState::for_network(net, 1e-2);
    Gradients g;
    g.layers.resize(1);
    g.layers[0].dW = Matrix(1, 1);
    g.layers[0].dW(0, 0) = 0.73;  // constant positive gradient
    g.layers[0].db.assign(1, 0.0);
    double prev = net.layers[0].W(0, 0);
    double step = 0.0;
    for (int i = 0; i < 300; ++i) {
        adam_step(net, g, s);
        step = prev - net.layers[0].W(0, 0);
        prev = net.layers[0].W(0, 0);
    }
    CHECK(step == Catch::Approx(1e-2).epsilon(0.02));
}

TEST_CASE("one adam step reduces a scalar quadratic") {
    // loss = 0.5 * (w - 3)^2, gradient = w - 3
    Network net;
    DenseLayer ly;
    ly.W = Matrix(1, 1);
    ly.W(0, 0) = 0.0;
    ly.b.assign(1, 0.0);
    net.layers.push_back(ly);
    AdamState s = AdamState::for_network(net, 1e-2);
    auto loss = [&] { return 0.5 * std::pow(net.layers[0].W(0, 0) - 3.0, 2); };
    const double before = loss();
    Gradients g;
    g.layers.resize(1);
    g.layers[0].dW = Matrix(1, 1);
    g.layers[0].dW(0, 0) = net.layers[0].W(0, 0) - 3.0;
    g.layers[0].db.assign(1, 0.0);
    adam_step(net, g, s);
    CHECK(loss() < before);
}

TEST_CASE("sgd step applies the coupled weight/bias update") {
    Rng rng(91);
    Network net = make_mlp({2, 3, 1}, Activation::tanh, Activation::sigmoid, false, rng);
    Matrix x = random_matrix(8, 2, rng, -1, 1);
    Matrix t = random_bits(8, 1, rng);
    Matrix p = net.forward(x, Mode::train);
    Gradients g = net.backward(cross_entropy_grad(t, p));
    Network manual = net;
    const double lr = 0.05;
    sgd_step(net, g, lr);
    for (size_t l = 0; l < net.layers.size(); ++l) {
        for (size_t i = 0; i < net.layers[l].W.v.size(); ++i)
            CHECK(net.layers[l].W.v[i] ==
                  Catch::Approx(manual.layers[l].W.v[i] - lr * g.layers[l].dW.v[i]));
        for (size_t i = 0; i < net.layers[l].b.size(); ++i)
            CHECK(net.layers[l].b[i] ==
                  Catch::Approx(manual.layers[l].b[i] - lr * g.layers[l].db[i]));
    }
}

TEST_CASE("running statistics update rule") {
    BatchNorm bn(2);
    bn.momentum = 0.5;
    std::vector<double> mean = {2.0, -1.0}, var = {4.0, 0.25};
    update_running_stats(bn, mean, var);
    CHECK(bn.running_mean[0] == Catch::Approx(1.0));
    CHECK(bn.running_var[0] == Catch::Approx(2.5));

    // momentum -> 0 copies the batch in one update
    BatchNorm once(2);
    once.momentum = 1e-12;
    update_running_stats(once, mean, var);
    CHECK(once.running_mean[0] == Catch::Approx(2.0));
    CHECK(once.running_var[1] == Catch::Approx(0.25));

    // repeated identical batches converge to the batch statistics
    BatchNorm conv(2);
    conv.momentum = 0.9;
    for (int i = 0; i < 400; ++i) update_running_stats(conv, mean, var);
    CHECK(conv.running_mean[0] == Catch::Approx(2.0).epsilon(1e-6));
    CHECK(conv.running_var[0] == Catch::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("after a stationary stream, infer matches train-mode outputs") {
    Rng rng(111);
    Network net = make_mlp({3, 12, 2}, Activation::tanh, Activation::sigmoid, true, rng);
    // lower momentum so the averages settle quickly in a unit test
    for (auto& ly : net.layers)
        if (ly.bn) ly.bn->momentum = 0.9;
    Rng data(112);
    for (int step = 0; step < 300; ++step) {
        Matrix x = random_matrix(256, 3, data, -1, 1);
        net.forward(x, Mode::train);
    }
    Matrix x = random_matrix(4096, 3, data, -1, 1);
    Matrix train_out = net.forward(x, Mode::train, false);
    Matrix infer_out = net.infer(x);
    double worst = 0.0;
    for (size_t i = 0; i < train_out.v.size(); ++i)
        worst = std::max(worst,
                         std::abs(train_out.v[i] - infer_out.v[i]) /
                             std::max(0.05, std::abs(train_out.v[i])));
    CHECK(worst < 0.02);
}

TEST_CASE("inference is deterministic and checkpoints round-trip bit-exactly") {
    Rng rng_a(777), rng_b(777);
    Network a = make_mlp({4, 9, 5}, Activation::tanh, Activation::sigmoid, true, rng_a);
    Network b = make_mlp({4, 9, 5}, Activation::tanh, Activation::sigmoid, true, rng_b);
    Rng xr(3);
    Matrix x = random_matrix(7, 4, xr, -2, 2);
    CHECK(a.infer(x).v == b.infer(x).v);

    // exercise the running stats before saving
    a.forward(x, Mode::train);
    const std::string tmp = "roundtrip_net.json";
    save_json(network_to_json(a), tmp);
    Network back = network_from_json(load_json(tmp));
    std::remove(tmp.c_str());
    CHECK(back.infer(x).v == a.infer(x).v);  // bit-exact
}

TEST_CASE("backward without forward is an error") {
    Rng rng(121);
    Network net = make_mlp({2, 3, 1}, Activation::tanh, Activation::sigmoid, false, rng);
    Matrix dy(4, 1);
    CHECK_THROWS_AS(net.backward(dy), std::logic_error);
}
