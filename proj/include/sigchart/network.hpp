#pragma once

// Small CNN for Siamese charting, with hand-written forward and backward
// passes. Layout is NCHW throughout; convolutions use same-padding so the
// N_b x L input keeps its spatial shape, and the pooling stage collapses
// the channel axis back to a single plane.

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/rng.hpp"

namespace sigchart {

struct Batch {
    std::size_t n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Batch() = default;
    Batch(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
        : n(n_), c(c_), h(h_), w(w_), v(n_ * c_ * h_ * w_, 0.0) {}

    double& at(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) {
        return v[((in * c + ic) * h + iy) * w + ix];
    }
    double at(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) const {
        return v[((in * c + ic) * h + iy) * w + ix];
    }
    std::size_t plane() const { return h * w; }
};

// view over one parameter array and its gradient
struct ParamView {
    double* value;
    double* grad;
    std::size_t count;
};

struct Conv2d {
    std::size_t in_c, out_c, kh, kw;
    std::vector<double> weight; // [out_c][in_c][kh][kw]
    std::vector<double> bias;
    std::vector<double> grad_weight;
    std::vector<double> grad_bias;
    Batch cached_in;

    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w)
        : in_c(in_channels), out_c(out_channels), kh(kernel_h), kw(kernel_w),
          weight(out_c * in_c * kh * kw, 0.0), bias(out_c, 0.0),
          grad_weight(weight.size(), 0.0), grad_bias(bias.size(), 0.0) {
        require(kh % 2 == 1 && kw % 2 == 1, "Conv2d: same-padding needs odd kernels");
    }

    double& w_at(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) {
        return weight[((oc * in_c + ic) * kh + ky) * kw + kx];
    }
    double w_at(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) const {
        return weight[((oc * in_c + ic) * kh + ky) * kw + kx];
    }

    Batch apply(const Batch& x) const {
        require(x.c == in_c, "Conv2d: channel mismatch");
        const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
        const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
        Batch y(x.n, out_c, x.h, x.w);
        for (std::size_t in = 0; in < x.n; ++in) {
            for (std::size_t oc = 0; oc < out_c; ++oc) {
                for (std::size_t iy = 0; iy < x.h; ++iy) {
                    for (std::size_t ix = 0; ix < x.w; ++ix) {
                        double acc = bias[oc];
                        for (std::size_t ic = 0; ic < in_c; ++ic) {
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(iy + ky) - ph;
                                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(x.h))
                                    continue;
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(ix + kx) - pw;
                                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(x.w))
                                        continue;
                                    acc += w_at(oc, ic, ky, kx) *
                                           x.at(in, ic, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                                }
                            }
                        }
                        y.at(in, oc, iy, ix) = acc;
                    }
                }
            }
        }
        return y;
    }

    Batch forward_train(const Batch& x) {
        cached_in = x;
        return apply(x);
    }
    Batch forward_eval(const Batch& x) const { return apply(x); }

    Batch backward(const Batch& gy) {
        const Batch& x = cached_in;
        const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
        const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
        Batch gx(x.n, x.c, x.h, x.w);
        for (std::size_t in = 0; in < x.n; ++in) {
            for (std::size_t oc = 0; oc < out_c; ++oc) {
                for (std::size_t iy = 0; iy < x.h; ++iy) {
                    for (std::size_t ix = 0; ix < x.w; ++ix) {
                        const double g = gy.at(in, oc, iy, ix);
                        if (g == 0.0)
                            continue;
                        grad_bias[oc] += g;
                        for (std::size_t ic = 0; ic < in_c; ++ic) {
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(iy + ky) - ph;
                                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(x.h))
                                    continue;
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(ix + kx) - pw;
                                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(x.w))
                                        continue;
                                    const auto uy = static_cast<std::size_t>(sy);
                                    const auto ux = static_cast<std::size_t>(sx);
                                    grad_weight[((oc * in_c + ic) * kh + ky) * kw + kx] += g * x.at(in, ic, uy, ux);
                                    gx.at(in, ic, uy, ux) += g * w_at(oc, ic, ky, kx);
                                }
                            }
                        }
                    }
                }
            }
        }
        return gx;
    }
};

struct BatchNorm {
    std::size_t channels;
    double eps = 1e-5;
    double momentum = 0.1;
    std::vector<double> gamma, beta;
    std::vector<double> grad_gamma, grad_beta;
    std::vector<double> running_mean, running_var;
    // training caches
    Batch cached_xhat;
    std::vector<double> cached_invstd;

    explicit BatchNorm(std::size_t ch)
        : channels(ch), gamma(ch, 1.0), beta(ch, 0.0), grad_gamma(ch, 0.0), grad_beta(ch, 0.0),
          running_mean(ch, 0.0), running_var(ch, 1.0) {}

    Batch forward_train(const Batch& x) {
        require(x.c == channels, "BatchNorm: channel mismatch");
        const double count = static_cast<double>(x.n * x.plane());
        Batch y(x.n, x.c, x.h, x.w);
        cached_xhat = Batch(x.n, x.c, x.h, x.w);
        cached_invstd.assign(channels, 0.0);
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double mean = 0.0;
            for (std::size_t in = 0; in < x.n; ++in)
                for (std::size_t p = 0; p < x.plane(); ++p)
                    mean += x.v[(in * x.c + ch) * x.plane() + p];
            mean /= count;
            double var = 0.0;
            for (std::size_t in = 0; in < x.n; ++in)
                for (std::size_t p = 0; p < x.plane(); ++p) {
                    const double d = x.v[(in * x.c + ch) * x.plane() + p] - mean;
                    var += d * d;
                }
            var /= count; // biased, used for normalization
            const double invstd = 1.0 / std::sqrt(var + eps);
            cached_invstd[ch] = invstd;
            for (std::size_t in = 0; in < x.n; ++in) {
                for (std::size_t p = 0; p < x.plane(); ++p) {
                    const std::size_t idx = (in * x.c + ch) * x.plane() + p;
                    const double xh = (x.v[idx] - mean) * invstd;
                    cached_xhat.v[idx] = xh;
                    y.v[idx] = gamma[ch] * xh + beta[ch];
                }
            }
            const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
            running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mean;
            running_var[ch] = (1.0 - momentum) * running_var[ch] + momentum * unbiased;
        }
        return y;
    }

    Batch forward_eval(const Batch& x) const {
        require(x.c == channels, "BatchNorm: channel mismatch");
        Batch y(x.n, x.c, x.h, x.w);
        for (std::size_t ch = 0; ch < channels; ++ch) {
            const double invstd = 1.0 / std::sqrt(running_var[ch] + eps);
            for (std::size_t in = 0; in < x.n; ++in) {
                for (std::size_t p = 0; p < x.plane(); ++p) {
                    const std::size_t idx = (in * x.c + ch) * x.plane() + p;
                    y.v[idx] = gamma[ch] * (x.v[idx] - running_mean[ch]) * invstd + beta[ch];
                }
            }
        }
        return y;
    }

    Batch backward(const Batch& gy) {
        const Batch& xhat = cached_xhat;
        const double count = static_cast<double>(gy.n * gy.plane());
        Batch gx(gy.n, gy.c, gy.h, gy.w);
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double sum_gy = 0.0;
            double sum_gy_xhat = 0.0;
            for (std::size_t in = 0; in < gy.n; ++in) {
                for (std::size_t p = 0; p < gy.plane(); ++p) {
                    const std::size_t idx = (in * gy.c + ch) * gy.plane() + p;
                    sum_gy += gy.v[idx];
                    sum_gy_xhat += gy.v[idx] * xhat.v[idx];
                }
            }
            grad_beta[ch] += sum_gy;
            grad_gamma[ch] += sum_gy_xhat;
            const double k = gamma[ch] * cached_invstd[ch] / count;
            for (std::size_t in = 0; in < gy.n; ++in) {
                for (std::size_t p = 0; p < gy.plane(); ++p) {
                    const std::size_t idx = (in * gy.c + ch) * gy.plane() + p;
                    gx.v[idx] = k * (count * gy.v[idx] - sum_gy - xhat.v[idx] * sum_gy_xhat);
                }
            }
        }
        return gx;
    }
};

struct Relu {
    Batch cached_mask;

    Batch forward_train(const Batch& x) {
        cached_mask = x;
        Batch y = x;
        for (double& v : y.v)
            v = v > 0.0 ? v : 0.0;
        return y;
    }
    Batch forward_eval(const Batch& x) const {
        Batch y = x;
        for (double& v : y.v)
            v = v > 0.0 ? v : 0.0;
        return y;
    }
    Batch backward(const Batch& gy) {
        Batch gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            gx.v[i] = cached_mask.v[i] > 0.0 ? gy.v[i] : 0.0;
        return gx;
    }
};

// Collapses the channel axis to a single plane by averaging, preserving
// the spatial dimensions (C x H x W -> 1 x H x W).
struct ChannelAvgPool {
    std::size_t cached_channels = 0;

    Batch apply(const Batch& x) const {
        Batch y(x.n, 1, x.h, x.w);
        const double inv = 1.0 / static_cast<double>(x.c);
        for (std::size_t in = 0; in < x.n; ++in)
            for (std::size_t ch = 0; ch < x.c; ++ch)
                for (std::size_t p = 0; p < x.plane(); ++p)
                    y.v[in * x.plane() + p] += x.v[(in * x.c + ch) * x.plane() + p] * inv;
        return y;
    }
    Batch forward_train(const Batch& x) {
        cached_channels = x.c;
        return apply(x);
    }
    Batch forward_eval(const Batch& x) const { return apply(x); }
    Batch backward(const Batch& gy) {
        Batch gx(gy.n, cached_channels, gy.h, gy.w);
        const double inv = 1.0 / static_cast<double>(cached_channels);
        for (std::size_t in = 0; in < gy.n; ++in)
            for (std::size_t ch = 0; ch < cached_channels; ++ch)
                for (std::size_t p = 0; p < gy.plane(); ++p)
                    gx.v[(in * gx.c + ch) * gy.plane() + p] = gy.v[in * gy.plane() + p] * inv;
        return gx;
    }
};

// Fully connected layer over the flattened input.
struct Dense {
    std::size_t in_dim, out_dim;
    std::vector<double> weight; // [out][in]
    std::vector<double> bias;
    std::vector<double> grad_weight, grad_bias;
    Batch cached_in;

    Dense(std::size_t in_d, std::size_t out_d)
        : in_dim(in_d), out_dim(out_d), weight(out_d * in_d, 0.0), bias(out_d, 0.0),
          grad_weight(weight.size(), 0.0), grad_bias(bias.size(), 0.0) {}

    Batch apply(const Batch& x) const {
        require(x.c * x.h * x.w == in_dim, "Dense: input size mismatch");
        Batch y(x.n, out_dim, 1, 1);
        for (std::size_t in = 0; in < x.n; ++in) {
            const double* src = x.v.data() + in * in_dim;
            for (std::size_t o = 0; o < out_dim; ++o) {
                double acc = bias[o];
                const double* wrow = weight.data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i)
                    acc += wrow[i] * src[i];
                y.v[in * out_dim + o] = acc;
            }
        }
        return y;
    }
    Batch forward_train(const Batch& x) {
        cached_in = x;
        return apply(x);
    }
    Batch forward_eval(const Batch& x) const { return apply(x); }

    Batch backward(const Batch& gy) {
        const Batch& x = cached_in;
        Batch gx(x.n, x.c, x.h, x.w);
        for (std::size_t in = 0; in < x.n; ++in) {
            const double* src = x.v.data() + in * in_dim;
            double* gsrc = gx.v.data() + in * in_dim;
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double g = gy.v[in * out_dim + o];
                grad_bias[o] += g;
                double* gw = grad_weight.data() + o * in_dim;
                const double* wrow = weight.data() + o * in_dim;
                for (std::size_t i = 0; i < in_dim; ++i) {
                    gw[i] += g * src[i];
                    gsrc[i] += g * wrow[i];
                }
            }
        }
        return gx;
    }
};

using Layer = std::variant<Conv2d, BatchNorm, Relu, ChannelAvgPool, Dense>;

class Network {
public:
    std::vector<Layer> layers;
    std::size_t input_c = 1, input_h = 0, input_w = 0;

    Batch forward_train(const Batch& x) {
        Batch cur = x;
        for (auto& layer : layers)
            cur = std::visit([&](auto& l) { return l.forward_train(cur); }, layer);
        return cur;
    }

    Batch forward_eval(const Batch& x) const {
        Batch cur = x;
        for (const auto& layer : layers)
            cur = std::visit([&](const auto& l) { return l.forward_eval(cur); }, layer);
        return cur;
    }

    // gradient w.r.t. the input; parameter gradients accumulate in-place
    Batch backward(const Batch& grad_out) {
        Batch cur = grad_out;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            cur = std::visit([&](auto& l) { return l.backward(cur); }, *it);
        return cur;
    }

    std::vector<ParamView> parameters() {
        std::vector<ParamView> out;
        for (auto& layer : layers) {
            std::visit(
                [&](auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, Conv2d> || std::is_same_v<T, Dense>) {
                        out.push_back({l.weight.data(), l.grad_weight.data(), l.weight.size()});
                        out.push_back({l.bias.data(), l.grad_bias.data(), l.bias.size()});
                    } else if constexpr (std::is_same_v<T, BatchNorm>) {
                        out.push_back({l.gamma.data(), l.grad_gamma.data(), l.gamma.size()});
                        out.push_back({l.beta.data(), l.grad_beta.data(), l.beta.size()});
                    }
                },
                layer);
        }
        return out;
    }

    void zero_grad() {
        for (auto p : parameters())
            std::fill(p.grad, p.grad + p.count, 0.0);
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto p : parameters())
            n += p.count;
        return n;
    }
};

namespace detail {

inline void kaiming_uniform(std::vector<double>& w, std::size_t fan_in, RngStream& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& x : w)
        x = rng.uniform(-bound, bound);
}

} // namespace detail

/// Two conv blocks (conv + BN + ReLU), channel-average pooling, Dense-10
/// with ReLU, Dense-2. conv_channels shrinks the instance for tests.
inline Network make_conv_network(std::size_t n_bs, std::size_t n_features, std::uint64_t seed,
                                 std::size_t conv1_channels = 16, std::size_t conv2_channels = 32) {
    RngStream rng(seed);
    Network net;
    net.input_c = 1;
    net.input_h = n_bs;
    net.input_w = n_features;

    Conv2d c1(1, conv1_channels, 3, 3);
    detail::kaiming_uniform(c1.weight, 1 * 3 * 3, rng);
    net.layers.emplace_back(std::move(c1));
    net.layers.emplace_back(BatchNorm(conv1_channels));
    net.layers.emplace_back(Relu{});

    Conv2d c2(conv1_channels, conv2_channels, 5, 5);
    detail::kaiming_uniform(c2.weight, conv1_channels * 5 * 5, rng);
    net.layers.emplace_back(std::move(c2));
    net.layers.emplace_back(BatchNorm(conv2_channels));
    net.layers.emplace_back(Relu{});

    net.layers.emplace_back(ChannelAvgPool{});

    Dense d1(n_bs * n_features, 10);
    detail::kaiming_uniform(d1.weight, d1.in_dim, rng);
    net.layers.emplace_back(std::move(d1));
    net.layers.emplace_back(Relu{});

    Dense d2(10, 2);
    detail::kaiming_uniform(d2.weight, d2.in_dim, rng);
    net.layers.emplace_back(std::move(d2));
    return net;
}

/// Dense-only alternative for ablation: flatten -> 64 -> 32 -> 2 with ReLU.
inline Network make_dense_network(std::size_t n_bs, std::size_t n_features, std::uint64_t seed) {
    RngStream rng(seed);
    Network net;
    net.input_c = 1;
    net.input_h = n_bs;
    net.input_w = n_features;
    const std::size_t in_dim = n_bs * n_features;

    Dense d1(in_dim, 64);
    detail::kaiming_uniform(d1.weight, d1.in_dim, rng);
    net.layers.emplace_back(std::move(d1));
    net.layers.emplace_back(Relu{});
    Dense d2(64, 32);
    detail::kaiming_uniform(d2.weight, d2.in_dim, rng);
    net.layers.emplace_back(std::move(d2));
    net.layers.emplace_back(Relu{});
    Dense d3(32, 2);
    detail::kaiming_uniform(d3.weight, d3.in_dim, rng);
    net.layers.emplace_back(std::move(d3));
    return net;
}

/// Inference for one N_b x L map; returns the 2-D embedding.
inline std::vector<double> network_forward(const Network& net, const Matrix& input) {
    Batch x(1, 1, input.rows(), input.cols());
    std::copy(input.data().begin(), input.data().end(), x.v.begin());
    Batch y = net.forward_eval(x);
    return y.v;
}

} // namespace sigchart
