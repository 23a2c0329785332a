#include "oracles.hpp"

#include "gdq/errors.hpp"
#include "gdq/nn.hpp"

#include <doctest.h>

#include <random>

using namespace gdq;

namespace {

float max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.values()[i] - b.values()[i]));
    return m;
}

} // namespace

TEST_SUITE("nn") {
TEST_CASE("output extent formula") {
    CHECK(conv_output_extent(5, 3, 1, 1) == 5);
    CHECK(conv_output_extent(7, 3, 2, 1) == 4);
    CHECK(conv_output_extent(4, 1, 1, 0) == 4);
    CHECK_THROWS_AS(conv_output_extent(2, 5, 1, 0), ContractError);
}

TEST_CASE("reflect index mirrors without repeating the edge") {
    CHECK(reflect_index(-1, 5) == 1);
    CHECK(reflect_index(-2, 5) == 2);
    CHECK(reflect_index(5, 5) == 3);
    CHECK(reflect_index(6, 5) == 2);
    CHECK(reflect_index(3, 1) == 0);
}

TEST_CASE("1x1 identity kernel reproduces the input") {
    std::mt19937_64 rng(1);
    const Tensor x = oracle::random_tensor(rng, 1, 3, 6, 7);
    Tensor w(3, 3, 1, 1);
    for (std::size_t c = 0; c < 3; ++c) w(c, c, 0, 0) = 1.0f;
    CHECK(conv2d(x, w, {}, {1, 0, PadMode::zeros}) == x);
}

TEST_CASE("box kernel on a constant field with reflect padding") {
    const Tensor x(1, 1, 5, 5, 0.6f);
    const Tensor w(1, 1, 3, 3, 1.0f / 9.0f);
    const Tensor y = conv2d(x, w, {});
    for (float v : y.values()) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}

TEST_CASE("fast and reference convolutions agree with the naive oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t cin = 1 + rng() % 4, cout = 1 + rng() % 4;
        const std::size_t k = trial % 3 == 0 ? 1 : 3;
        const std::size_t h = 3 + rng() % 8, w = 3 + rng() % 8;
        const std::size_t stride = 1 + rng() % 2;
        const std::size_t pad = k == 1 ? 0 : rng() % 2;
        const bool reflect = trial % 2 == 0;
        const Tensor x = oracle::random_tensor(rng, 1 + rng() % 2, cin, h, w, -1.0f, 1.0f);
        const Tensor wt = oracle::random_tensor(rng, cout, cin, k, k, -1.0f, 1.0f);
        std::vector<float> b(cout);
        for (float& v : b) v = static_cast<float>(rng() % 100) / 100.0f;
        const ConvSpec spec{stride, pad, reflect ? PadMode::reflect : PadMode::zeros};
        const Tensor want = oracle::conv(x, wt, b, stride, pad, reflect);
        CHECK(max_abs_diff(conv2d(x, wt, b, spec), want) < 1e-5f);
        CHECK(max_abs_diff(conv2d_reference(x, wt, b, spec), want) < 1e-5f);
    }
}

TEST_CASE("conv rejects channel disagreement") {
    CHECK_THROWS_AS(conv2d(Tensor(1, 2, 4, 4), Tensor(1, 3, 3, 3), {}), ContractError);
    CHECK_THROWS_AS(conv2d(Tensor(1, 3, 4, 4), Tensor(2, 3, 3, 3), std::vector<float>(3)),
                    ContractError);
}

TEST_CASE("relu and pooling") {
    Tensor t = Tensor::from_values({-1.0f, 0.0f, 2.0f});
    relu_inplace(t);
    CHECK(std::vector<float>(t.values().begin(), t.values().end()) == std::vector<float>{0, 0, 2});
    Tensor x({1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor p = avg_pool2(x);
    CHECK(p.dims() == std::array<std::size_t, 4>{1, 1, 1, 2});
    CHECK(p(0, 0, 0, 0) == 3.5f);
    CHECK(p(0, 0, 0, 1) == 5.5f);
    CHECK(avg_pool(x, 2) == p);
    CHECK(avg_pool(x, 1) == x);
}

TEST_CASE("group norm of a constant field returns the shift") {
    const Tensor x(1, 4, 3, 3, 2.5f);
    const std::vector<float> scale{1, 2, 3, 4}, shift{0.1f, 0.2f, 0.3f, 0.4f};
    const Tensor y = group_norm(x, 2, scale, shift);
    for (std::size_t c = 0; c < 4; ++c) CHECK(y(0, c, 1, 1) == doctest::Approx(shift[c]));
}

TEST_CASE("group norm matches a direct evaluation") {
    std::mt19937_64 rng(3);
    const Tensor x = oracle::random_tensor(rng, 2, 4, 3, 5, -2.0f, 2.0f);
    const std::vector<float> scale{1.0f, 0.5f, -1.0f, 2.0f}, shift{0.0f, 0.1f, 0.2f, -0.3f};
    const Tensor y = group_norm(x, 2, scale, shift);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t g = 0; g < 2; ++g) {
            double mean = 0, var = 0;
            const double count = 2 * 15;
            for (std::size_t c = 2 * g; c < 2 * g + 2; ++c)
                for (std::size_t i = 0; i < 15; ++i) mean += x(n, c, i / 5, i % 5);
            mean /= count;
            for (std::size_t c = 2 * g; c < 2 * g + 2; ++c)
                for (std::size_t i = 0; i < 15; ++i) var += std::pow(x(n, c, i / 5, i % 5) - mean, 2);
            var /= count;
            for (std::size_t c = 2 * g; c < 2 * g + 2; ++c)
                for (std::size_t i = 0; i < 15; ++i) {
                    const double want =
                        (x(n, c, i / 5, i % 5) - mean) / std::sqrt(var + 1e-5) * scale[c] + shift[c];
                    CHECK(y(n, c, i / 5, i % 5) == doctest::Approx(want).epsilon(1e-5));
                }
        }
}

TEST_CASE("pixel shuffle uses depth-to-space channel order") {
    Tensor x(1, 4, 1, 1);
    for (std::size_t c = 0; c < 4; ++c) x(0, c, 0, 0) = static_cast<float>(c);
    const Tensor y = pixel_shuffle(x, 2);
    CHECK(y.dims() == std::array<std::size_t, 4>{1, 1, 2, 2});
    CHECK(y(0, 0, 0, 0) == 0.0f);
    CHECK(y(0, 0, 0, 1) == 1.0f);
    CHECK(y(0, 0, 1, 0) == 2.0f);
    CHECK(y(0, 0, 1, 1) == 3.0f);
    CHECK_THROWS_AS(pixel_shuffle(Tensor(1, 3, 1, 1), 2), ContractError);
}

TEST_CASE("bicubic upsampling") {
    const Tensor c(1, 3, 4, 5, 0.3f);
    const Tensor up = bicubic_upsample(c, 2);
    CHECK(up.dims() == std::array<std::size_t, 4>{1, 3, 8, 10});
    for (float v : up.values()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));
    // linear ramps are reproduced away from the clamped border
    Tensor ramp(1, 1, 1, 8);
    for (std::size_t x = 0; x < 8; ++x) ramp(0, 0, 0, x) = static_cast<float>(x);
    const Tensor r = bicubic_upsample(ramp, 2);
    for (std::size_t x = 4; x < 12; ++x) {
        CHECK(r(0, 0, 0, x) == doctest::Approx((x + 0.5) / 2.0 - 0.5).epsilon(1e-5));
    }
}
}
