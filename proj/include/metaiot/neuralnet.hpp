#ifndef METAIOT_NEURALNET_HPP
#define METAIOT_NEURALNET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "metaiot/common.hpp"

namespace metaiot::nn {

struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

    std::size_t size() const { return data.size(); }
    double& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    double at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

enum class Activation { none, relu, sigmoid };
enum class LayerKind { conv, deconv, state_conv };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 3, kernel_w = 3;
    int stride_h = 1, stride_w = 1;
    int pad_h = 1, pad_w = 1;
    int out_pad_h = 0, out_pad_w = 0;  // deconv only
    Activation activation = Activation::relu;

    // conv: floor((n + 2p - k) / s) + 1 ; deconv: (n - 1) s - 2p + k + op
    std::pair<int, int> output_shape(int in_h, int in_w) const;
    std::size_t weight_count() const {
        return static_cast<std::size_t>(in_channels) * out_channels * kernel_h * kernel_w;
    }
};

// Weights of one layer. Conv weights are [out][in][kh][kw]; deconv weights
// [in][out][kh][kw].
struct LayerParams {
    std::vector<double> weights;
    std::vector<double> bias;
};

Tensor4 conv_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p,
                     Exec exec = Exec::parallel);
Tensor4 deconv_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p,
                       Exec exec = Exec::parallel);
// Applies the layer of any kind (state_conv behaves as conv).
Tensor4 layer_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p,
                      Exec exec = Exec::parallel);

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

// dy is the gradient w.r.t. the layer output *after* activation.
// pre is the pre-activation output, x the layer input.
Tensor4 conv_backward(const Tensor4& x, const Tensor4& pre, const Tensor4& dy,
                      const LayerSpec& spec, const LayerParams& p, LayerGrads& grads,
                      Exec exec = Exec::parallel);
Tensor4 deconv_backward(const Tensor4& x, const Tensor4& pre, const Tensor4& dy,
                        const LayerSpec& spec, const LayerParams& p, LayerGrads& grads,
                        Exec exec = Exec::parallel);

// Depth-n encoder-decoder: encoder convs (stride 1 then stride 2), one state
// conv per level, mirrored deconvs with channel-concatenated skips from the
// state convs, sigmoid on the final layer.
struct NetworkSpec {
    int depth = 4;
    int in_channels = 0;
    int input_h = 0, input_w = 0;
    int base_channels = 32;

    std::vector<LayerSpec> encoder;  // depth entries
    std::vector<LayerSpec> state;    // depth entries
    std::vector<LayerSpec> decoder;  // depth entries, deepest first

    static NetworkSpec build(int depth, int in_channels, int input_h, int input_w,
                             int base_channels = 32);
    std::size_t parameter_count() const;
};

class Network {
public:
    Network() = default;
    Network(NetworkSpec spec, std::uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }

    struct ForwardContext {
        std::vector<Tensor4> enc_in, enc_pre, enc_out;
        std::vector<Tensor4> st_pre, st_out;
        std::vector<Tensor4> dec_in, dec_pre, dec_out;
        const Tensor4& output() const { return dec_out.back(); }
    };

    Tensor4 forward(const Tensor4& x, Exec exec = Exec::parallel) const;
    ForwardContext forward_cached(const Tensor4& x, Exec exec = Exec::parallel) const;

    // dLoss/dOutput in, parameter gradients out (same layout as parameters()).
    std::vector<double> backward(const ForwardContext& ctx, const Tensor4& dout,
                                 Exec exec = Exec::parallel) const;

    // flat view in documented traversal order: encoder 0..depth-1, state
    // 0..depth-1, decoder deepest..0; weights then bias within a layer
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& flat);
    std::size_t parameter_count() const;

private:
    NetworkSpec spec_;
    std::vector<LayerParams> enc_params_, st_params_, dec_params_;

    friend class Checkpoint;
};

struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit AdamState(std::size_t n = 0, double lr_ = 1e-3)
        : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

// In-place Adam update; throws on non-finite gradients.
void adam_step(std::vector<double>& weights, const std::vector<double>& grads, AdamState& state,
               Exec exec = Exec::parallel);

// Max relative difference between analytic and central-difference gradients
// of the mean squared reconstruction loss on the given input.
double gradient_check(Network& net, const Tensor4& input, double epsilon, Exec exec = Exec::serial);

// sum of squared errors and its elementwise mean
double mse_sum(const Tensor4& a, const Tensor4& b);

}  // namespace metaiot::nn

#endif
