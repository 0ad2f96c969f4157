#include <doctest.h>

#include <cmath>

#include "metaiot/neuralnet.hpp"
#include "metaiot/rng.hpp"

using namespace metaiot;
using namespace metaiot::nn;

namespace {

Tensor4 random_tensor(int n, int c, int h, int w, std::uint64_t seed, double lo = 0.0,
                      double hi = 1.0) {
    Tensor4 t(n, c, h, w);
    Rng rng(seed);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// plain reference convolution, no parallel path
Tensor4 reference_conv(const Tensor4& x, const LayerSpec& spec, const LayerParams& p) {
    const auto [oh, ow] = spec.output_shape(x.h, x.w);
    Tensor4 out(x.n, spec.out_channels, oh, ow);
    for (int in = 0; in < x.n; ++in) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = p.bias[static_cast<std::size_t>(oc)];
                    for (int ic = 0; ic < spec.in_channels; ++ic) {
                        for (int ky = 0; ky < spec.kernel_h; ++ky) {
                            for (int kx = 0; kx < spec.kernel_w; ++kx) {
                                const int iy = oy * spec.stride_h + ky - spec.pad_h;
                                const int ix = ox * spec.stride_w + kx - spec.pad_w;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                acc += p.weights[((static_cast<std::size_t>(oc) *
                                                       spec.in_channels +
                                                   ic) *
                                                      spec.kernel_h +
                                                  ky) *
                                                     spec.kernel_w +
                                                 kx] *
                                       x.at(in, ic, iy, ix);
                            }
                        }
                    }
                    if (spec.activation == Activation::relu) acc = acc > 0 ? acc : 0;
                    if (spec.activation == Activation::sigmoid) acc = 1 / (1 + std::exp(-acc));
                    out.at(in, oc, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("layer forward basics") {
    SUBCASE("1x1 identity kernel passes the input through") {
        LayerSpec spec;
        spec.kind = LayerKind::conv;
        spec.in_channels = spec.out_channels = 1;
        spec.kernel_h = spec.kernel_w = 1;
        spec.pad_h = spec.pad_w = 0;
        spec.activation = Activation::none;
        LayerParams p;
        p.weights = {1.0};
        p.bias = {0.0};
        const Tensor4 x = random_tensor(2, 1, 5, 4, 3);
        const Tensor4 y = layer_forward(x, spec, p);
        CHECK(y.data == x.data);
    }

    SUBCASE("zero weights and relu give zero output") {
        LayerSpec spec;
        spec.in_channels = 3;
        spec.out_channels = 4;
        spec.activation = Activation::relu;
        LayerParams p;
        p.weights.assign(spec.weight_count(), 0.0);
        p.bias.assign(4, 0.0);
        const Tensor4 x = random_tensor(1, 3, 8, 8, 5, -1.0, 1.0);
        const Tensor4 y = layer_forward(x, spec, p);
        for (double v : y.data) CHECK(v == 0.0);
    }

    SUBCASE("stride-2 shape formula") {
        LayerSpec spec;
        spec.in_channels = 2;
        spec.out_channels = 2;
        spec.stride_h = spec.stride_w = 2;
        const auto [oh, ow] = spec.output_shape(32, 8);
        CHECK(oh == 16);
        CHECK(ow == 4);
    }

    SUBCASE("channel mismatch is a shape error") {
        LayerSpec spec;
        spec.in_channels = 3;
        spec.out_channels = 2;
        LayerParams p;
        p.weights.assign(spec.weight_count(), 0.0);
        p.bias.assign(2, 0.0);
        const Tensor4 x = random_tensor(1, 2, 8, 8, 7);
        CHECK_THROWS_AS(layer_forward(x, spec, p), std::invalid_argument);
    }

    SUBCASE("parallel path matches the reference bitwise") {
        LayerSpec spec;
        spec.in_channels = 3;
        spec.out_channels = 5;
        spec.stride_h = spec.stride_w = 2;
        spec.activation = Activation::relu;
        Rng rng(11);
        LayerParams p;
        p.weights.resize(spec.weight_count());
        p.bias.resize(5);
        for (double& w : p.weights) w = rng.uniform(-0.5, 0.5);
        for (double& b : p.bias) b = rng.uniform(-0.1, 0.1);
        const Tensor4 x = random_tensor(3, 3, 17, 9, 13, -1.0, 1.0);
        const Tensor4 a = conv_forward(x, spec, p, Exec::parallel);
        const Tensor4 b = reference_conv(x, spec, p);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("network forward contract") {
    const auto spec = NetworkSpec::build(4, 6, 32, 8, 32);
    const Network net(spec, 2027);

    SUBCASE("output shape equals input shape") {
        const Tensor4 x = random_tensor(1, 6, 32, 8, 21);
        const Tensor4 y = net.forward(x);
        CHECK(y.n == 1);
        CHECK(y.c == 6);
        CHECK(y.h == 32);
        CHECK(y.w == 8);
    }

    SUBCASE("sigmoid output stays in (0, 1)") {
        const Tensor4 x = random_tensor(2, 6, 32, 8, 23);
        const Tensor4 y = net.forward(x);
        for (double v : y.data) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }

    SUBCASE("all depths in range mirror the input shape") {
        for (int depth = 1; depth <= 5; ++depth) {
            const auto s = NetworkSpec::build(depth, 4, 32, 8, 8);
            const Network n(s, 1);
            const Tensor4 x = random_tensor(1, 4, 32, 8, 31);
            const Tensor4 y = n.forward(x);
            CHECK(y.c == 4);
            CHECK(y.h == 32);
            CHECK(y.w == 8);
        }
    }

    SUBCASE("serial and parallel forward are bitwise identical") {
        const Tensor4 x = random_tensor(2, 6, 32, 8, 37);
        const Tensor4 a = net.forward(x, Exec::parallel);
        const Tensor4 b = net.forward(x, Exec::serial);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("gradients") {
    SUBCASE("perfect reconstruction gives zero gradients") {
        // a 1x1 identity network reproduces its input exactly
        LayerSpec spec;
        spec.in_channels = spec.out_channels = 1;
        spec.kernel_h = spec.kernel_w = 1;
        spec.pad_h = spec.pad_w = 0;
        spec.activation = Activation::none;
        LayerParams p;
        p.weights = {1.0};
        p.bias = {0.0};
        const Tensor4 x = random_tensor(1, 1, 6, 6, 41);
        const Tensor4 pre = conv_forward(x, spec, p);
        Tensor4 dy(1, 1, 6, 6);  // gradient of 0.5 * ||x - y||^2 at y = x
        LayerGrads grads;
        conv_backward(x, pre, dy, spec, p, grads);
        for (double g : grads.weights) CHECK(g == 0.0);
        for (double g : grads.bias) CHECK(g == 0.0);
    }

    SUBCASE("scaling the loss scales every gradient") {
        const auto spec = NetworkSpec::build(2, 3, 16, 8, 4);
        const Network net(spec, 3);
        const Tensor4 x = random_tensor(1, 3, 16, 8, 43);
        auto ctx = net.forward_cached(x);
        Tensor4 dout = ctx.output();
        for (std::size_t k = 0; k < dout.data.size(); ++k) {
            dout.data[k] = ctx.output().data[k] - x.data[k];
        }
        const auto g1 = net.backward(ctx, dout);
        for (double& v : dout.data) v *= 2.0;
        const auto g2 = net.backward(ctx, dout);
        for (std::size_t k = 0; k < g1.size(); ++k) {
            CHECK(g2[k] == doctest::Approx(2.0 * g1[k]).epsilon(1e-12));
        }
    }

    SUBCASE("finite differences, depth 1") {
        auto spec = NetworkSpec::build(1, 2, 8, 4, 4);
        Network net(spec, 5);
        const Tensor4 x = random_tensor(1, 2, 8, 4, 47);
        CHECK(gradient_check(net, x, 1e-5) < 1e-4);
    }

    SUBCASE("finite differences, depth 4 reduced width") {
        auto spec = NetworkSpec::build(4, 2, 16, 8, 4);
        Network net(spec, 7);
        const Tensor4 x = random_tensor(1, 2, 16, 8, 53);
        CHECK(gradient_check(net, x, 1e-5) < 1e-3);
    }

    SUBCASE("linear-only network matches finite differences tightly") {
        auto spec = NetworkSpec::build(1, 2, 8, 4, 4);
        for (auto& l : spec.encoder) l.activation = Activation::none;
        for (auto& l : spec.state) l.activation = Activation::none;
        for (auto& l : spec.decoder) l.activation = Activation::none;
        Network net(spec, 9);
        const Tensor4 x = random_tensor(1, 2, 8, 4, 59);
        CHECK(gradient_check(net, x, 1e-5) < 1e-7);
    }
}

TEST_CASE("adam") {
    SUBCASE("zero gradients leave weights bitwise unchanged") {
        std::vector<double> w{1.0, -2.0, 0.5};
        const std::vector<double> saved = w;
        AdamState state(3, 1e-3);
        adam_step(w, {0.0, 0.0, 0.0}, state);
        CHECK(w == saved);
        CHECK(state.step == 1);
    }

    SUBCASE("constant gradient drives the update magnitude to lr") {
        std::vector<double> w{0.0};
        AdamState state(1, 1e-3);
        double prev = w[0];
        double step_size = 0.0;
        for (int s = 0; s < 1000; ++s) {
            adam_step(w, {0.37}, state);
            step_size = prev - w[0];
            prev = w[0];
        }
        CHECK(step_size == doctest::Approx(1e-3).epsilon(0.01));
    }

    SUBCASE("non-finite gradient is a training error") {
        std::vector<double> w{0.0};
        AdamState state(1);
        CHECK_THROWS_AS(adam_step(w, {std::nan("")}, state), std::runtime_error);
    }

    SUBCASE("identical seeds give identical trajectories") {
        for (int run = 0; run < 2; ++run) {
            static std::vector<double> first;
            const auto spec = NetworkSpec::build(1, 2, 8, 4, 4);
            Network net(spec, 123);
            const Tensor4 x = random_tensor(2, 2, 8, 4, 61);
            std::vector<double> params = net.parameters();
            AdamState state(params.size(), 1e-3);
            for (int epoch = 0; epoch < 5; ++epoch) {
                auto ctx = net.forward_cached(x);
                Tensor4 dout = ctx.output();
                for (std::size_t k = 0; k < dout.data.size(); ++k) {
                    dout.data[k] = 2 * (ctx.output().data[k] - x.data[k]) /
                                   static_cast<double>(x.size());
                }
                const auto grads = net.backward(ctx, dout);
                adam_step(params, grads, state);
                net.set_parameters(params);
            }
            if (run == 0) {
                first = params;
            } else {
                CHECK(params == first);
            }
        }
    }
}

TEST_CASE("overfitting a single tensor collapses the loss") {
    const auto spec = NetworkSpec::build(2, 3, 16, 8, 8);
    Network net(spec, 77);
    const Tensor4 x = random_tensor(1, 3, 16, 8, 67, 0.2, 0.8);
    std::vector<double> params = net.parameters();
    AdamState state(params.size(), 3e-3);
    double initial = -1.0;
    double last = 0.0;
    for (int epoch = 0; epoch < 500; ++epoch) {
        auto ctx = net.forward_cached(x);
        double loss = 0.0;
        Tensor4 dout = ctx.output();
        for (std::size_t k = 0; k < x.data.size(); ++k) {
            const double d = ctx.output().data[k] - x.data[k];
            loss += d * d;
            dout.data[k] = 2 * d / static_cast<double>(x.size());
        }
        loss /= static_cast<double>(x.size());
        if (initial < 0) initial = loss;
        last = loss;
        const auto grads = net.backward(ctx, dout);
        adam_step(params, grads, state);
        net.set_parameters(params);
    }
    CHECK(last < 0.01 * initial);
}

TEST_CASE("checkpoint round trip through the flat parameter order") {
    const auto spec = NetworkSpec::build(3, 4, 32, 8, 8);
    Network a(spec, 31);
    Network b(spec, 99);
    b.set_parameters(a.parameters());
    const Tensor4 x = random_tensor(1, 4, 32, 8, 71);
    const Tensor4 ya = a.forward(x);
    const Tensor4 yb = b.forward(x);
    CHECK(ya.data == yb.data);
}
