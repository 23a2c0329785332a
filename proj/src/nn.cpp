#include "gdq/nn.hpp"

#include "gdq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gdq {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad) {
    if (stride == 0) throw ContractError("convolution stride must be >= 1");
    if (in + 2 * pad < kernel) throw ContractError("convolution kernel larger than padded input");
    return (in + 2 * pad - kernel) / stride + 1;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
    if (n == 1) return 0;
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

namespace {

void check_conv_shapes(const Tensor& x, const Tensor& w, std::span<const float> bias) {
    if (w.height() != w.width()) throw ContractError("convolution kernels must be square");
    if (x.channels() != w.channels()) {
        throw ContractError("conv2d: input has " + std::to_string(x.channels()) +
                            " channels, kernel expects " + std::to_string(w.channels()));
    }
    if (!bias.empty() && bias.size() != w.batch()) {
        throw ContractError("conv2d: bias length does not match output channels");
    }
}

// Padded copy of one sample so the inner loops are branch-free.
std::vector<float> pad_sample(const Tensor& x, std::size_t n, std::size_t pad, PadMode mode) {
    const auto h = static_cast<std::ptrdiff_t>(x.height());
    const auto w = static_cast<std::ptrdiff_t>(x.width());
    const auto p = static_cast<std::ptrdiff_t>(pad);
    const std::size_t ph = x.height() + 2 * pad;
    const std::size_t pw = x.width() + 2 * pad;
    std::vector<float> out(x.channels() * ph * pw, 0.0f);
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::ptrdiff_t y = -p; y < h + p; ++y) {
            for (std::ptrdiff_t xx = -p; xx < w + p; ++xx) {
                float v = 0.0f;
                if (mode == PadMode::reflect) {
                    v = x(n, c, static_cast<std::size_t>(reflect_index(y, h)),
                          static_cast<std::size_t>(reflect_index(xx, w)));
                } else if (y >= 0 && y < h && xx >= 0 && xx < w) {
                    v = x(n, c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
                }
                out[(c * ph + static_cast<std::size_t>(y + p)) * pw +
                    static_cast<std::size_t>(xx + p)] = v;
            }
        }
    }
    return out;
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, std::span<const float> bias,
              const ConvSpec& spec) {
    check_conv_shapes(x, w, bias);
    const std::size_t k = w.height();
    const std::size_t cin = x.channels();
    const std::size_t cout = w.batch();
    const std::size_t oh = conv_output_extent(x.height(), k, spec.stride, spec.pad);
    const std::size_t ow = conv_output_extent(x.width(), k, spec.stride, spec.pad);
    const std::size_t ph = x.height() + 2 * spec.pad;
    const std::size_t pw = x.width() + 2 * spec.pad;
    const std::size_t s = spec.stride;

    Tensor out(x.batch(), cout, oh, ow);
    std::vector<float> acc(oh * ow);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        const auto padded = pad_sample(x, n, spec.pad, spec.pad_mode);
        for (std::size_t co = 0; co < cout; ++co) {
            std::fill(acc.begin(), acc.end(), bias.empty() ? 0.0f : bias[co]);
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const float* src = padded.data() + ci * ph * pw;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const float wv = w(co, ci, ky, kx);
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            const float* row = src + (oy * s + ky) * pw + kx;
                            float* dst = acc.data() + oy * ow;
                            if (s == 1) {
                                for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] += wv * row[ox];
                            } else {
                                for (std::size_t ox = 0; ox < ow; ++ox) {
                                    dst[ox] += wv * row[ox * s];
                                }
                            }
                        }
                    }
                }
            }
            std::copy(acc.begin(), acc.end(), out.plane(n, co).begin());
        }
    }
    return out;
}

Tensor conv2d_reference(const Tensor& x, const Tensor& w, std::span<const float> bias,
                        const ConvSpec& spec) {
    check_conv_shapes(x, w, bias);
    const std::size_t k = w.height();
    const std::size_t oh = conv_output_extent(x.height(), k, spec.stride, spec.pad);
    const std::size_t ow = conv_output_extent(x.width(), k, spec.stride, spec.pad);
    const auto h = static_cast<std::ptrdiff_t>(x.height());
    const auto wd = static_cast<std::ptrdiff_t>(x.width());
    Tensor out(x.batch(), w.batch(), oh, ow);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t co = 0; co < w.batch(); ++co) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double sum = bias.empty() ? 0.0 : bias[co];
                    for (std::size_t ci = 0; ci < x.channels(); ++ci) {
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) -
                                          static_cast<std::ptrdiff_t>(spec.pad);
                                auto ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) -
                                          static_cast<std::ptrdiff_t>(spec.pad);
                                if (spec.pad_mode == PadMode::reflect) {
                                    iy = reflect_index(iy, h);
                                    ix = reflect_index(ix, wd);
                                } else if (iy < 0 || iy >= h || ix < 0 || ix >= wd) {
                                    continue;
                                }
                                sum += static_cast<double>(w(co, ci, ky, kx)) *
                                       x(n, ci, static_cast<std::size_t>(iy),
                                         static_cast<std::size_t>(ix));
                            }
                        }
                    }
                    out(n, co, oy, ox) = static_cast<float>(sum);
                }
            }
        }
    }
    return out;
}

void relu_inplace(Tensor& t) noexcept {
    for (float& v : t.values()) v = std::max(v, 0.0f);
}

Tensor avg_pool2(const Tensor& x) { return avg_pool(x, 2); }

Tensor avg_pool(const Tensor& x, std::size_t factor) {
    if (factor == 0) throw ContractError("pool factor must be >= 1");
    if (factor == 1) return x;
    const std::size_t oh = x.height() / factor;
    const std::size_t ow = x.width() / factor;
    if (oh == 0 || ow == 0) throw ContractError("pool factor larger than the feature map");
    Tensor out(x.batch(), x.channels(), oh, ow);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t c = 0; c < x.channels(); ++c) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    double s = 0.0;
                    for (std::size_t dy = 0; dy < factor; ++dy) {
                        for (std::size_t dx = 0; dx < factor; ++dx) {
                            s += x(n, c, y * factor + dy, xx * factor + dx);
                        }
                    }
                    out(n, c, y, xx) = static_cast<float>(s * inv);
                }
            }
        }
    }
    return out;
}

Tensor group_norm(const Tensor& x, std::size_t groups, std::span<const float> scale,
                  std::span<const float> shift, double eps) {
    const std::size_t c = x.channels();
    if (groups == 0 || c % groups != 0) {
        throw ContractError("group_norm: " + std::to_string(c) +
                            " channels not divisible into " + std::to_string(groups) +
                            " groups");
    }
    if (scale.size() != c || shift.size() != c) {
        throw ContractError("group_norm: affine parameters must have one entry per channel");
    }
    Tensor out(x.dims(), std::vector<float>(x.size()));
    const std::size_t per_group = c / groups;
    const std::size_t hw = x.height() * x.width();
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t g = 0; g < groups; ++g) {
            double mean = 0.0;
            for (std::size_t ch = g * per_group; ch < (g + 1) * per_group; ++ch) {
                for (float v : x.plane(n, ch)) mean += v;
            }
            mean /= static_cast<double>(per_group * hw);
            double var = 0.0;
            for (std::size_t ch = g * per_group; ch < (g + 1) * per_group; ++ch) {
                for (float v : x.plane(n, ch)) var += (v - mean) * (v - mean);
            }
            var /= static_cast<double>(per_group * hw);
            const double inv_std = 1.0 / std::sqrt(var + eps);
            for (std::size_t ch = g * per_group; ch < (g + 1) * per_group; ++ch) {
                auto src = x.plane(n, ch);
                auto dst = out.plane(n, ch);
                for (std::size_t i = 0; i < hw; ++i) {
                    dst[i] = static_cast<float>((src[i] - mean) * inv_std * scale[ch] + shift[ch]);
                }
            }
        }
    }
    return out;
}

Tensor pixel_shuffle(const Tensor& x, std::size_t scale) {
    const std::size_t s2 = scale * scale;
    if (scale == 0 || x.channels() % s2 != 0) {
        throw ContractError("pixel_shuffle: channels not divisible by scale^2");
    }
    const std::size_t oc = x.channels() / s2;
    Tensor out(x.batch(), oc, x.height() * scale, x.width() * scale);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t c = 0; c < oc; ++c) {
            for (std::size_t i = 0; i < scale; ++i) {
                for (std::size_t j = 0; j < scale; ++j) {
                    const std::size_t src_c = c * s2 + i * scale + j;
                    for (std::size_t y = 0; y < x.height(); ++y) {
                        for (std::size_t xx = 0; xx < x.width(); ++xx) {
                            out(n, c, y * scale + i, xx * scale + j) = x(n, src_c, y, xx);
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

struct Taps {
    std::ptrdiff_t index[4];
    double weight[4];
};

std::vector<Taps> cubic_taps(std::size_t in, std::size_t scale) {
    std::vector<Taps> taps(in * scale);
    const auto n = static_cast<std::ptrdiff_t>(in);
    for (std::size_t o = 0; o < taps.size(); ++o) {
        const double src = (static_cast<double>(o) + 0.5) / static_cast<double>(scale) - 0.5;
        const auto base = static_cast<std::ptrdiff_t>(std::floor(src));
        const double frac = src - static_cast<double>(base);
        for (int k = 0; k < 4; ++k) {
            taps[o].index[k] = std::clamp<std::ptrdiff_t>(base - 1 + k, 0, n - 1);
            taps[o].weight[k] = cubic_weight(frac - (k - 1));
        }
    }
    return taps;
}

} // namespace

Tensor bicubic_upsample(const Tensor& x, std::size_t scale) {
    if (scale == 0) throw ContractError("upsample scale must be >= 1");
    const auto ty = cubic_taps(x.height(), scale);
    const auto tx = cubic_taps(x.width(), scale);
    Tensor out(x.batch(), x.channels(), x.height() * scale, x.width() * scale);
    std::vector<double> rows(x.width());
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t c = 0; c < x.channels(); ++c) {
            for (std::size_t oy = 0; oy < out.height(); ++oy) {
                for (std::size_t ix = 0; ix < x.width(); ++ix) {
                    double s = 0.0;
                    for (int k = 0; k < 4; ++k) {
                        s += ty[oy].weight[k] *
                             x(n, c, static_cast<std::size_t>(ty[oy].index[k]), ix);
                    }
                    rows[ix] = s;
                }
                for (std::size_t ox = 0; ox < out.width(); ++ox) {
                    double s = 0.0;
                    for (int k = 0; k < 4; ++k) {
                        s += tx[ox].weight[k] * rows[static_cast<std::size_t>(tx[ox].index[k])];
                    }
                    out(n, c, oy, ox) = static_cast<float>(s);
                }
            }
        }
    }
    return out;
}

} // namespace gdq
