#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numeric kernels.

#include "gdq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Exact fake quantization for one value via integer code arithmetic.
/// Returns the integer code k (value = k * a / levels).
inline std::int64_t quant_code(double x, double a, int bits, bool is_signed) {
    const std::int64_t levels =
        is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
    const double lo = is_signed ? -a : 0.0;
    const double c = std::min(std::max(x, lo), a);
    const long double scaled = static_cast<long double>(c) * levels / a;
    const long double fl = std::floor(std::fabs(scaled));
    const long double frac = std::fabs(scaled) - fl;
    std::int64_t k = static_cast<std::int64_t>(fl) + (frac >= 0.5L ? 1 : 0);
    return scaled < 0 ? -k : k;
}

inline double quant_value(double x, double a, int bits, bool is_signed) {
    const std::int64_t levels =
        is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
    return static_cast<double>(quant_code(x, a, bits, is_signed)) * a / static_cast<double>(levels);
}

/// Seven-loop convolution with zero or reflect padding, double accumulation.
inline gdq::Tensor conv(const gdq::Tensor& x, const gdq::Tensor& w, const std::vector<float>& b,
                        std::size_t stride, std::size_t pad, bool reflect) {
    const auto n = x.batch(), cin = x.channels(), h = x.height(), wd = x.width();
    const auto cout = w.batch(), k = w.height();
    const std::size_t oh = (h + 2 * pad - k) / stride + 1;
    const std::size_t ow = (wd + 2 * pad - k) / stride + 1;
    gdq::Tensor y(n, cout, oh, ow);
    auto mirror = [](long i, long len) {
        if (len == 1) return 0L;
        while (i < 0 || i >= len) i = i < 0 ? -i : 2 * (len - 1) - i;
        return i;
    };
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t c = 0; c < ow; ++c) {
                    double acc = b.empty() ? 0.0 : b[o];
                    for (std::size_t i = 0; i < cin; ++i)
                        for (std::size_t u = 0; u < k; ++u)
                            for (std::size_t v = 0; v < k; ++v) {
                                long yy = static_cast<long>(r * stride + u) - static_cast<long>(pad);
                                long xx = static_cast<long>(c * stride + v) - static_cast<long>(pad);
                                if (reflect) {
                                    yy = mirror(yy, static_cast<long>(h));
                                    xx = mirror(xx, static_cast<long>(wd));
                                } else if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) ||
                                           xx >= static_cast<long>(wd)) {
                                    continue;
                                }
                                acc += static_cast<double>(x(s, i, yy, xx)) * w(o, i, u, v);
                            }
                    y(s, o, r, c) = static_cast<float>(acc);
                }
    return y;
}

/// Shannon entropy (nats) of the normalised histogram of integer labels.
inline double label_entropy(const std::vector<int>& labels) {
    std::vector<double> counts;
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        counts.push_back(static_cast<double>(j - i));
        i = j;
    }
    double h = 0.0;
    for (double c : counts) {
        const double p = c / static_cast<double>(labels.size());
        h -= p * std::log(p);
    }
    return h;
}

/// Sort-and-bucket bit assignment: cutoff k is the ceil(M t_k)-th smallest entropy.
inline int bucket_bit(std::vector<double> corpus, const std::vector<double>& fractions,
                      const std::vector<int>& codes, double e) {
    std::sort(corpus.begin(), corpus.end());
    const auto m = static_cast<long>(corpus.size());
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        // Integer ceiling of M*t using a rational approximation of t with denominator 10^9.
        const long long num = std::llround(fractions[k] * 1e9);
        long long idx = (static_cast<long long>(m) * num + 999999999LL) / 1000000000LL;
        idx = std::clamp<long long>(idx, 1, m);
        if (e <= corpus[static_cast<std::size_t>(idx - 1)]) return codes[k];
    }
    return codes.back();
}

inline std::vector<double> softmax(const std::vector<double>& g, double tau) {
    std::vector<double> e(g.size());
    double z = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) z += (e[i] = std::exp(g[i] / tau));
    for (double& v : e) v /= z;
    return e;
}

inline gdq::Tensor random_tensor(std::mt19937_64& rng, std::size_t n, std::size_t c,
                                 std::size_t h, std::size_t w, float lo = 0.0f,
                                 float hi = 1.0f) {
    std::uniform_real_distribution<float> d(lo, hi);
    gdq::Tensor t(n, c, h, w);
    for (float& v : t.values()) v = d(rng);
    return t;
}

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("gdq_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

} // namespace oracle
