#include "metaiot/neuralnet.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "metaiot/rng.hpp"

namespace metaiot::nn {

namespace {

double activate(double x, Activation a) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        default: return x;
    }
}

double activate_grad(double pre, Activation a) {
    switch (a) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-pre));
            return s * (1.0 - s);
        }
        default: return 1.0;
    }
}

void check_input(const Tensor4& x, const LayerSpec& spec, const char* who) {
    if (x.c != spec.in_channels) {
        throw std::invalid_argument(std::string(who) + ": channel count mismatch");
    }
    const auto [oh, ow] = spec.output_shape(x.h, x.w);
    if (oh < 1 || ow < 1) throw std::invalid_argument(std::string(who) + ": degenerate output shape");
}

}  // namespace

std::pair<int, int> LayerSpec::output_shape(int in_h, int in_w) const {
    if (kind == LayerKind::deconv) {
        return {(in_h - 1) * stride_h - 2 * pad_h + kernel_h + out_pad_h,
                (in_w - 1) * stride_w - 2 * pad_w + kernel_w + out_pad_w};
    }
    return {(in_h + 2 * pad_h - kernel_h) / stride_h + 1,
            (in_w + 2 * pad_w - kernel_w) / stride_w + 1};
}

Tensor4 conv_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p, Exec exec) {
    check_input(x, spec, "conv_forward");
    const auto [oh, ow] = spec.output_shape(x.h, x.w);
    Tensor4 out(x.n, spec.out_channels, oh, ow);
    const std::ptrdiff_t tasks = static_cast<std::ptrdiff_t>(x.n) * spec.out_channels;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t task = 0; task < tasks; ++task) {
        const int in = static_cast<int>(task / spec.out_channels);
        const int oc = static_cast<int>(task % spec.out_channels);
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = p.bias[static_cast<std::size_t>(oc)];
                for (int ic = 0; ic < spec.in_channels; ++ic) {
                    for (int ky = 0; ky < spec.kernel_h; ++ky) {
                        const int iy = oy * spec.stride_h + ky - spec.pad_h;
                        if (iy < 0 || iy >= x.h) continue;
                        const double* wrow =
                            &p.weights[((static_cast<std::size_t>(oc) * spec.in_channels + ic) *
                                            spec.kernel_h +
                                        ky) *
                                       spec.kernel_w];
                        for (int kx = 0; kx < spec.kernel_w; ++kx) {
                            const int ix = ox * spec.stride_w + kx - spec.pad_w;
                            if (ix < 0 || ix >= x.w) continue;
                            acc += wrow[kx] * x.at(in, ic, iy, ix);
                        }
                    }
                }
                out.at(in, oc, oy, ox) = activate(acc, spec.activation);
            }
        }
    }
    (void)exec;
    return out;
}

Tensor4 deconv_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p, Exec exec) {
    check_input(x, spec, "deconv_forward");
    const auto [oh, ow] = spec.output_shape(x.h, x.w);
    Tensor4 out(x.n, spec.out_channels, oh, ow);
    const std::ptrdiff_t tasks = static_cast<std::ptrdiff_t>(x.n) * spec.out_channels;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t task = 0; task < tasks; ++task) {
        const int in = static_cast<int>(task / spec.out_channels);
        const int oc = static_cast<int>(task % spec.out_channels);
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = p.bias[static_cast<std::size_t>(oc)];
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int num_y = oy + spec.pad_h - ky;
                    if (num_y < 0 || num_y % spec.stride_h != 0) continue;
                    const int iy = num_y / spec.stride_h;
                    if (iy >= x.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int num_x = ox + spec.pad_w - kx;
                        if (num_x < 0 || num_x % spec.stride_w != 0) continue;
                        const int ix = num_x / spec.stride_w;
                        if (ix >= x.w) continue;
                        for (int ic = 0; ic < spec.in_channels; ++ic) {
                            acc += p.weights[((static_cast<std::size_t>(ic) * spec.out_channels +
                                               oc) *
                                                  spec.kernel_h +
                                              ky) *
                                                 spec.kernel_w +
                                             kx] *
                                   x.at(in, ic, iy, ix);
                        }
                    }
                }
                out.at(in, oc, oy, ox) = activate(acc, spec.activation);
            }
        }
    }
    (void)exec;
    return out;
}

Tensor4 layer_forward(const Tensor4& x, const LayerSpec& spec, const LayerParams& p, Exec exec) {
    return spec.kind == LayerKind::deconv ? deconv_forward(x, spec, p, exec)
                                          : conv_forward(x, spec, p, exec);
}

namespace {

// gradient w.r.t. pre-activation from gradient w.r.t. activated output
Tensor4 pre_activation_grad(const Tensor4& pre, const Tensor4& dy, Activation act) {
    Tensor4 dpre = dy;
    if (act != Activation::none) {
        for (std::size_t k = 0; k < dpre.data.size(); ++k) {
            dpre.data[k] *= activate_grad(pre.data[k], act);
        }
    }
    return dpre;
}

}  // namespace

Tensor4 conv_backward(const Tensor4& x, const Tensor4& pre, const Tensor4& dy,
                      const LayerSpec& spec, const LayerParams& p, LayerGrads& grads, Exec exec) {
    const Tensor4 dpre = pre_activation_grad(pre, dy, spec.activation);
    grads.weights.assign(p.weights.size(), 0.0);
    grads.bias.assign(p.bias.size(), 0.0);

    // weight and bias gradients: one thread owns one output channel
    const std::ptrdiff_t ocs = spec.out_channels;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t oc = 0; oc < ocs; ++oc) {
        double bias_acc = 0.0;
        for (int in = 0; in < x.n; ++in) {
            for (int oy = 0; oy < dpre.h; ++oy) {
                for (int ox = 0; ox < dpre.w; ++ox) {
                    const double g = dpre.at(in, static_cast<int>(oc), oy, ox);
                    if (g == 0.0) continue;
                    bias_acc += g;
                    for (int ic = 0; ic < spec.in_channels; ++ic) {
                        for (int ky = 0; ky < spec.kernel_h; ++ky) {
                            const int iy = oy * spec.stride_h + ky - spec.pad_h;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < spec.kernel_w; ++kx) {
                                const int ix = ox * spec.stride_w + kx - spec.pad_w;
                                if (ix < 0 || ix >= x.w) continue;
                                grads.weights[((static_cast<std::size_t>(oc) * spec.in_channels +
                                                ic) *
                                                   spec.kernel_h +
                                               ky) *
                                                  spec.kernel_w +
                                              kx] += g * x.at(in, ic, iy, ix);
                            }
                        }
                    }
                }
            }
        }
        grads.bias[static_cast<std::size_t>(oc)] = bias_acc;
    }

    // input gradient: gather over output taps, one thread per (n, ic)
    Tensor4 dx(x.n, x.c, x.h, x.w);
    const std::ptrdiff_t tasks = static_cast<std::ptrdiff_t>(x.n) * x.c;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t task = 0; task < tasks; ++task) {
        const int in = static_cast<int>(task / x.c);
        const int ic = static_cast<int>(task % x.c);
        for (int iy = 0; iy < x.h; ++iy) {
            for (int ix = 0; ix < x.w; ++ix) {
                double acc = 0.0;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int num_y = iy + spec.pad_h - ky;
                    if (num_y < 0 || num_y % spec.stride_h != 0) continue;
                    const int oy = num_y / spec.stride_h;
                    if (oy >= dpre.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int num_x = ix + spec.pad_w - kx;
                        if (num_x < 0 || num_x % spec.stride_w != 0) continue;
                        const int ox = num_x / spec.stride_w;
                        if (ox >= dpre.w) continue;
                        for (int oc = 0; oc < spec.out_channels; ++oc) {
                            acc += dpre.at(in, oc, oy, ox) *
                                   p.weights[((static_cast<std::size_t>(oc) * spec.in_channels +
                                               ic) *
                                                  spec.kernel_h +
                                              ky) *
                                                 spec.kernel_w +
                                             kx];
                        }
                    }
                }
                dx.at(in, ic, iy, ix) = acc;
            }
        }
    }
    (void)exec;
    return dx;
}

Tensor4 deconv_backward(const Tensor4& x, const Tensor4& pre, const Tensor4& dy,
                        const LayerSpec& spec, const LayerParams& p, LayerGrads& grads, Exec exec) {
    const Tensor4 dpre = pre_activation_grad(pre, dy, spec.activation);
    grads.weights.assign(p.weights.size(), 0.0);
    grads.bias.assign(p.bias.size(), 0.0);

    // bias grads
    for (int oc = 0; oc < spec.out_channels; ++oc) {
        double acc = 0.0;
        for (int in = 0; in < dpre.n; ++in) {
            for (int oy = 0; oy < dpre.h; ++oy) {
                for (int ox = 0; ox < dpre.w; ++ox) acc += dpre.at(in, oc, oy, ox);
            }
        }
        grads.bias[static_cast<std::size_t>(oc)] = acc;
    }

    // weight grads: dW[ic][oc][ky][kx] = sum_n,iy,ix x[n][ic][iy][ix] * dpre[n][oc][iy*s+ky-p][..]
    const std::ptrdiff_t ics = spec.in_channels;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t ic = 0; ic < ics; ++ic) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
                for (int kx = 0; kx < spec.kernel_w; ++kx) {
                    double acc = 0.0;
                    for (int in = 0; in < x.n; ++in) {
                        for (int iy = 0; iy < x.h; ++iy) {
                            const int oy = iy * spec.stride_h + ky - spec.pad_h;
                            if (oy < 0 || oy >= dpre.h) continue;
                            for (int ix = 0; ix < x.w; ++ix) {
                                const int ox = ix * spec.stride_w + kx - spec.pad_w;
                                if (ox < 0 || ox >= dpre.w) continue;
                                acc += x.at(in, static_cast<int>(ic), iy, ix) *
                                       dpre.at(in, oc, oy, ox);
                            }
                        }
                    }
                    grads.weights[((static_cast<std::size_t>(ic) * spec.out_channels + oc) *
                                       spec.kernel_h +
                                   ky) *
                                      spec.kernel_w +
                                  kx] = acc;
                }
            }
        }
    }

    // input grads: dX[n][ic][iy][ix] = sum_oc,ky,kx dpre[n][oc][iy*s+ky-p][..] * W[ic][oc][ky][kx]
    Tensor4 dx(x.n, x.c, x.h, x.w);
    const std::ptrdiff_t tasks = static_cast<std::ptrdiff_t>(x.n) * x.c;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t task = 0; task < tasks; ++task) {
        const int in = static_cast<int>(task / x.c);
        const int ic = static_cast<int>(task % x.c);
        for (int iy = 0; iy < x.h; ++iy) {
            for (int ix = 0; ix < x.w; ++ix) {
                double acc = 0.0;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int oy = iy * spec.stride_h + ky - spec.pad_h;
                    if (oy < 0 || oy >= dpre.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int ox = ix * spec.stride_w + kx - spec.pad_w;
                        if (ox < 0 || ox >= dpre.w) continue;
                        for (int oc = 0; oc < spec.out_channels; ++oc) {
                            acc += dpre.at(in, oc, oy, ox) *
                                   p.weights[((static_cast<std::size_t>(ic) * spec.out_channels +
                                               oc) *
                                                  spec.kernel_h +
                                              ky) *
                                                 spec.kernel_w +
                                             kx];
                        }
                    }
                }
                dx.at(in, ic, iy, ix) = acc;
            }
        }
    }
    (void)exec;
    return dx;
}

NetworkSpec NetworkSpec::build(int depth, int in_channels, int input_h, int input_w,
                               int base_channels) {
    if (depth < 1 || depth > 6) throw std::invalid_argument("NetworkSpec: depth must be in [1, 6]");
    NetworkSpec s;
    s.depth = depth;
    s.in_channels = in_channels;
    s.input_h = input_h;
    s.input_w = input_w;
    s.base_channels = base_channels;

    std::vector<std::pair<int, int>> shapes;  // per-level input shapes
    int h = input_h, w = input_w;
    int ch = in_channels;
    for (int level = 0; level < depth; ++level) {
        LayerSpec enc;
        enc.kind = LayerKind::conv;
        enc.in_channels = ch;
        enc.out_channels = level == 0 ? base_channels : ch * 2;
        enc.stride_h = enc.stride_w = level == 0 ? 1 : 2;
        enc.activation = Activation::relu;
        shapes.emplace_back(h, w);
        const auto [oh, ow] = enc.output_shape(h, w);
        if (oh < 1 || ow < 1) throw std::invalid_argument("NetworkSpec: input too small for depth");
        s.encoder.push_back(enc);

        LayerSpec st;
        st.kind = LayerKind::state_conv;
        st.in_channels = st.out_channels = enc.out_channels;
        st.activation = Activation::relu;
        s.state.push_back(st);

        ch = enc.out_channels;
        h = oh;
        w = ow;
    }

    // decoder mirrors the encoder, deepest first; each level after the
    // deepest takes the concatenation of the lower decoder output with the
    // state output of this level
    for (int level = depth - 1; level >= 0; --level) {
        const LayerSpec& enc = s.encoder[static_cast<std::size_t>(level)];
        LayerSpec dec;
        dec.kind = LayerKind::deconv;
        dec.in_channels = level == depth - 1 ? enc.out_channels : enc.out_channels * 2;
        dec.out_channels = enc.in_channels;
        dec.stride_h = enc.stride_h;
        dec.stride_w = enc.stride_w;
        dec.activation = level == 0 ? Activation::sigmoid : Activation::relu;
        // output padding recovers the exact encoder input shape
        const auto [in_h, in_w] = shapes[static_cast<std::size_t>(level)];
        const auto [enc_oh, enc_ow] = enc.output_shape(in_h, in_w);
        dec.out_pad_h = in_h - ((enc_oh - 1) * dec.stride_h - 2 * dec.pad_h + dec.kernel_h);
        dec.out_pad_w = in_w - ((enc_ow - 1) * dec.stride_w - 2 * dec.pad_w + dec.kernel_w);
        if (dec.out_pad_h < 0 || dec.out_pad_h >= dec.stride_h + 1 || dec.out_pad_w < 0) {
            throw std::invalid_argument("NetworkSpec: cannot mirror encoder shape");
        }
        s.decoder.push_back(dec);
    }
    return s;
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : encoder) total += l.weight_count() + static_cast<std::size_t>(l.out_channels);
    for (const auto& l : state) total += l.weight_count() + static_cast<std::size_t>(l.out_channels);
    for (const auto& l : decoder) total += l.weight_count() + static_cast<std::size_t>(l.out_channels);
    return total;
}

namespace {

LayerParams init_layer(const LayerSpec& spec, Rng& rng) {
    LayerParams p;
    p.weights.resize(spec.weight_count());
    p.bias.assign(static_cast<std::size_t>(spec.out_channels), 0.0);
    const double fan_in = static_cast<double>(spec.in_channels) * spec.kernel_h * spec.kernel_w;
    const double a = 1.0 / std::sqrt(fan_in);
    for (double& w : p.weights) w = rng.uniform(-a, a);
    return p;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw std::invalid_argument("concat_channels: spatial shape mismatch");
    }
    Tensor4 out(a.n, a.c + b.c, a.h, a.w);
    for (int in = 0; in < a.n; ++in) {
        for (int ic = 0; ic < a.c; ++ic)
            for (int y = 0; y < a.h; ++y)
                for (int x = 0; x < a.w; ++x) out.at(in, ic, y, x) = a.at(in, ic, y, x);
        for (int ic = 0; ic < b.c; ++ic)
            for (int y = 0; y < a.h; ++y)
                for (int x = 0; x < a.w; ++x) out.at(in, a.c + ic, y, x) = b.at(in, ic, y, x);
    }
    return out;
}

std::pair<Tensor4, Tensor4> split_channels(const Tensor4& x, int c_first) {
    Tensor4 a(x.n, c_first, x.h, x.w);
    Tensor4 b(x.n, x.c - c_first, x.h, x.w);
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < c_first; ++ic)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) a.at(in, ic, y, xx) = x.at(in, ic, y, xx);
        for (int ic = c_first; ic < x.c; ++ic)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) b.at(in, ic - c_first, y, xx) = x.at(in, ic, y, xx);
    }
    return {a, b};
}

// forward with raw pre-activation capture
Tensor4 forward_layer_capture(const Tensor4& x, const LayerSpec& spec, const LayerParams& p,
                              Tensor4& pre, Exec exec) {
    LayerSpec linear = spec;
    linear.activation = Activation::none;
    pre = layer_forward(x, linear, p, exec);
    Tensor4 out = pre;
    if (spec.activation != Activation::none) {
        for (double& v : out.data) v = activate(v, spec.activation);
    }
    return out;
}

}  // namespace

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    Rng rng(seed);
    for (const auto& l : spec_.encoder) enc_params_.push_back(init_layer(l, rng));
    for (const auto& l : spec_.state) st_params_.push_back(init_layer(l, rng));
    for (const auto& l : spec_.decoder) dec_params_.push_back(init_layer(l, rng));
}

Network::ForwardContext Network::forward_cached(const Tensor4& x, Exec exec) const {
    ForwardContext ctx;
    const int depth = spec_.depth;
    Tensor4 cur = x;
    for (int level = 0; level < depth; ++level) {
        ctx.enc_in.push_back(cur);
        Tensor4 pre;
        cur = forward_layer_capture(cur, spec_.encoder[static_cast<std::size_t>(level)],
                                    enc_params_[static_cast<std::size_t>(level)], pre, exec);
        ctx.enc_pre.push_back(std::move(pre));
        ctx.enc_out.push_back(cur);

        Tensor4 st_pre;
        Tensor4 st = forward_layer_capture(cur, spec_.state[static_cast<std::size_t>(level)],
                                           st_params_[static_cast<std::size_t>(level)], st_pre, exec);
        ctx.st_pre.push_back(std::move(st_pre));
        ctx.st_out.push_back(std::move(st));
    }

    Tensor4 dec = ctx.st_out.back();
    for (int di = 0; di < depth; ++di) {
        const int level = depth - 1 - di;
        Tensor4 input = di == 0 ? dec
                                : concat_channels(dec, ctx.st_out[static_cast<std::size_t>(level)]);
        ctx.dec_in.push_back(input);
        Tensor4 pre;
        dec = forward_layer_capture(input, spec_.decoder[static_cast<std::size_t>(di)],
                                    dec_params_[static_cast<std::size_t>(di)], pre, exec);
        ctx.dec_pre.push_back(std::move(pre));
        ctx.dec_out.push_back(dec);
    }
    return ctx;
}

Tensor4 Network::forward(const Tensor4& x, Exec exec) const {
    return forward_cached(x, exec).output();
}

std::vector<double> Network::backward(const ForwardContext& ctx, const Tensor4& dout,
                                      Exec exec) const {
    const int depth = spec_.depth;
    std::vector<LayerGrads> enc_g(static_cast<std::size_t>(depth));
    std::vector<LayerGrads> st_g(static_cast<std::size_t>(depth));
    std::vector<LayerGrads> dec_g(static_cast<std::size_t>(depth));
    std::vector<Tensor4> st_dy(static_cast<std::size_t>(depth));

    // decoder chain, shallowest first when walking gradients backwards
    Tensor4 dcur = dout;
    for (int di = depth - 1; di >= 0; --di) {
        const int level = depth - 1 - di;
        const auto& spec = spec_.decoder[static_cast<std::size_t>(di)];
        Tensor4 dinput = deconv_backward(ctx.dec_in[static_cast<std::size_t>(di)],
                                         ctx.dec_pre[static_cast<std::size_t>(di)], dcur, spec,
                                         dec_params_[static_cast<std::size_t>(di)],
                                         dec_g[static_cast<std::size_t>(di)], exec);
        if (di == 0) {
            // deepest decoder: input is the deepest state output
            st_dy[static_cast<std::size_t>(depth - 1)] = std::move(dinput);
        } else {
            auto [d_lower, d_state] = split_channels(
                dinput, spec_.encoder[static_cast<std::size_t>(level)].out_channels);
            st_dy[static_cast<std::size_t>(level)] = std::move(d_state);
            dcur = std::move(d_lower);
        }
    }

    // encoder and state chains from deepest level back to the input
    Tensor4 denc_out(0, 0, 0, 0);
    for (int level = depth - 1; level >= 0; --level) {
        Tensor4 d_enc_from_state = conv_backward(
            ctx.enc_out[static_cast<std::size_t>(level)], ctx.st_pre[static_cast<std::size_t>(level)],
            st_dy[static_cast<std::size_t>(level)], spec_.state[static_cast<std::size_t>(level)],
            st_params_[static_cast<std::size_t>(level)], st_g[static_cast<std::size_t>(level)],
            exec);
        if (denc_out.size() > 0) {
            for (std::size_t k = 0; k < d_enc_from_state.data.size(); ++k) {
                d_enc_from_state.data[k] += denc_out.data[k];
            }
        }
        denc_out = conv_backward(ctx.enc_in[static_cast<std::size_t>(level)],
                                 ctx.enc_pre[static_cast<std::size_t>(level)], d_enc_from_state,
                                 spec_.encoder[static_cast<std::size_t>(level)],
                                 enc_params_[static_cast<std::size_t>(level)],
                                 enc_g[static_cast<std::size_t>(level)], exec);
    }

    std::vector<double> flat;
    flat.reserve(parameter_count());
    const auto append = [&flat](const LayerGrads& g) {
        flat.insert(flat.end(), g.weights.begin(), g.weights.end());
        flat.insert(flat.end(), g.bias.begin(), g.bias.end());
    };
    for (const auto& g : enc_g) append(g);
    for (const auto& g : st_g) append(g);
    for (const auto& g : dec_g) append(g);
    return flat;
}

std::vector<double> Network::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    const auto append = [&flat](const LayerParams& p) {
        flat.insert(flat.end(), p.weights.begin(), p.weights.end());
        flat.insert(flat.end(), p.bias.begin(), p.bias.end());
    };
    for (const auto& p : enc_params_) append(p);
    for (const auto& p : st_params_) append(p);
    for (const auto& p : dec_params_) append(p);
    return flat;
}

void Network::set_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) {
        throw std::invalid_argument("Network::set_parameters: size mismatch");
    }
    std::size_t off = 0;
    const auto take = [&](LayerParams& p) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + p.weights.size()),
                  p.weights.begin());
        off += p.weights.size();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + p.bias.size()), p.bias.begin());
        off += p.bias.size();
    };
    for (auto& p : enc_params_) take(p);
    for (auto& p : st_params_) take(p);
    for (auto& p : dec_params_) take(p);
}

std::size_t Network::parameter_count() const { return spec_.parameter_count(); }

void adam_step(std::vector<double>& weights, const std::vector<double>& grads, AdamState& state,
               Exec exec) {
    if (weights.size() != grads.size() || weights.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(weights.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        weights[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    (void)exec;
}

double mse_sum(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mse_sum: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        s += d * d;
    }
    return s;
}

double gradient_check(Network& net, const Tensor4& input, double epsilon, Exec exec) {
    const double denom = static_cast<double>(input.size());
    const auto loss_of = [&](const Tensor4& out) { return mse_sum(input, out) / denom; };

    auto ctx = net.forward_cached(input, exec);
    Tensor4 dout = ctx.output();
    for (std::size_t k = 0; k < dout.data.size(); ++k) {
        dout.data[k] = 2.0 * (ctx.output().data[k] - input.data[k]) / denom;
    }
    const std::vector<double> analytic = net.backward(ctx, dout, exec);

    std::vector<double> params = net.parameters();
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + epsilon;
        net.set_parameters(params);
        const double up = loss_of(net.forward(input, exec));
        params[k] = saved - epsilon;
        net.set_parameters(params);
        const double down = loss_of(net.forward(input, exec));
        params[k] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom_k = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom_k);
    }
    net.set_parameters(params);
    return worst;
}

}  // namespace metaiot::nn
