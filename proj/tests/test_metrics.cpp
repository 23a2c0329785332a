#include "oracles.hpp"

#include "gdq/errors.hpp"
#include "gdq/metrics.hpp"
#include "gdq/srnet.hpp"

#include <doctest.h>

#include <random>

using namespace gdq;

namespace {

std::vector<PatchPlan> plans_with(std::vector<BitCode> bits) {
    std::vector<PatchPlan> out;
    for (BitCode b : bits) {
        PatchPlan p;
        p.gbc_bit = p.final_bit = b;
        out.push_back(p);
    }
    return out;
}

// Closed-form single-window SSIM of two constant images.
double constant_ssim(double a, double b) {
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    return ((2 * a * b + c1) * c2) / ((a * a + b * b + c1) * c2);
}

} // namespace

TEST_SUITE("metrics") {
TEST_CASE("PSNR examples") {
    const Tensor a(1, 1, 8, 8, 0.3f);
    CHECK(psnr(a, a).infinite);
    const Tensor b(1, 1, 8, 8, 0.4f);
    CHECK(psnr(a, b).db == doctest::Approx(20.0).epsilon(1e-5));
    Tensor checker(1, 1, 4, 4);
    for (std::size_t i = 0; i < 16; ++i) checker.values()[i] = static_cast<float>((i / 4 + i % 4) % 2);
    CHECK(psnr(checker, Tensor(1, 1, 4, 4, 0.5f)).db ==
          doctest::Approx(10 * std::log10(1 / 0.25)).epsilon(1e-12));
    CHECK(psnr(checker, Tensor(1, 1, 4, 4, 0.5f)).db == doctest::Approx(6.0206).epsilon(1e-5));
    CHECK_THROWS_AS(psnr(a, Tensor(1, 1, 8, 7)), ContractError);
}

TEST_CASE("PSNR and SSIM are symmetric") {
    std::mt19937_64 rng(2);
    const Tensor a = oracle::random_tensor(rng, 1, 3, 20, 20);
    const Tensor b = oracle::random_tensor(rng, 1, 3, 20, 20);
    CHECK(psnr(a, b).db == psnr(b, a).db);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("SSIM examples") {
    std::mt19937_64 rng(3);
    const Tensor a = oracle::random_tensor(rng, 1, 1, 16, 16);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    Tensor bin(1, 1, 16, 16), inv(1, 1, 16, 16);
    for (std::size_t i = 0; i < 256; ++i) {
        bin.values()[i] = static_cast<float>(rng() % 2);
        inv.values()[i] = 1.0f - bin.values()[i];
    }
    CHECK(ssim(bin, inv) <= 0.0);

    const double s = ssim(Tensor(1, 1, 16, 16, 0.2f), Tensor(1, 1, 16, 16, 0.7f));
    CHECK(s < 1.0);
    CHECK(s == doctest::Approx(constant_ssim(0.2, 0.7)).epsilon(1e-6));
    // smaller than the window: one global window
    CHECK(ssim(Tensor(1, 1, 5, 5, 0.2f), Tensor(1, 1, 5, 5, 0.7f)) ==
          doctest::Approx(constant_ssim(0.2, 0.7)).epsilon(1e-6));
}

TEST_CASE("L1 loss") {
    const Tensor a(1, 2, 3, 3, 0.5f);
    CHECK(l1_loss(a, a) == 0.0);
    CHECK(l1_loss(a, Tensor(1, 2, 3, 3, 0.7f)) == doctest::Approx(0.2).epsilon(1e-6));
    std::mt19937_64 rng(4);
    const Tensor x = oracle::random_tensor(rng, 1, 3, 9, 7);
    const Tensor y = oracle::random_tensor(rng, 1, 3, 9, 7);
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::fabs(static_cast<double>(x.values()[i]) - y.values()[i]);
    CHECK(std::fabs(l1_loss(x, y) - acc / static_cast<double>(x.size())) <= 1e-9);
}

TEST_CASE("FAB") {
    CHECK(fab(plans_with({4, 4, 8})) == doctest::Approx(16.0 / 3).epsilon(1e-15));
    CHECK(fab(plans_with({4, 4, 5})) == doctest::Approx(13.0 / 3).epsilon(1e-15));
    CHECK(fab(plans_with({4, 4, 4, 4})) == 4.0);
    CHECK(fab(plans_with({6})) == 6.0);
    CHECK_THROWS_AS(fab({}), ContractError);
    // concatenation is the count-weighted mean
    const auto a = plans_with({4, 8, 8});
    const auto b = plans_with({5, 6});
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(fab(ab) == doctest::Approx((3 * fab(a) + 2 * fab(b)) / 5).epsilon(1e-15));
}

TEST_CASE("layer costs for the reference model") {
    SrArchitecture arch;
    arch.features = 4;
    arch.blocks = 1;
    const QuantModel m = make_reference_model(arch, 0);
    const auto costs = conv_layer_costs(m, 6, 5);
    REQUIRE(costs.size() == 4);
    CHECK(costs[0].macs == 6 * 5 * 4 * 3 * 9);
    CHECK(costs[1].macs == 6 * 5 * 4 * 4 * 9);
    CHECK(costs[3].macs == 6 * 5 * 12 * 4 * 9);
    CHECK(costs[0].params == 4 * 3 * 9 + 4);
    CHECK(costs[1].quantized);
    CHECK_FALSE(costs[3].quantized);
}

TEST_CASE("single quantized conv at 8/8 bits is one sixteenth") {
    const std::vector<LayerCost> one{{"conv", 1000.0, 0.0, 0.0, true}};
    const auto s = bitops(one, plans_with({8}));
    CHECK(s.ratio == 1.0 / 16);
    CHECK(s.per_patch_mean == 1000.0 * 64);
    CHECK(s.full_precision == 1000.0 * 1024);
    CHECK(bitops(one, plans_with({32})).ratio == 1.0);
    CHECK(reduction_label(s.full_precision, s.full_precision) == "(0.0%)");
}

TEST_CASE("toy model accounting matches a hand-summed table") {
    // head 3->4, body 4->4 (quantized), tail 4->12 on a 2x2 patch
    const std::vector<LayerCost> toy{{"head", 2 * 2 * 4 * 3 * 9, 112, 108, false},
                                     {"body", 2 * 2 * 4 * 4 * 9, 148, 144, true},
                                     {"tail", 2 * 2 * 12 * 4 * 9, 444, 432, false}};
    // spreadsheet: head 432 MAC, body 576 MAC, tail 1728 MAC
    const double fp = (432 + 576 + 1728) * 1024.0;
    const auto s = bitops(toy, plans_with({4, 8}));
    const double mixed = ((432 + 1728) * 1024.0 * 2 + 576 * 32.0 + 576 * 64.0) / 2;
    CHECK(s.per_patch_mean == mixed);
    CHECK(s.full_precision == fp);
    CHECK(patch_bitops(toy, 4) == (432 + 1728) * 1024.0 + 576 * 32.0);

    const auto p = params_summary(toy);
    CHECK(p.full == 704);
    CHECK(p.effective == 704 - 144 + 144 * 8.0 / 32);
}

TEST_CASE("BitOPs is monotone in bits and bounded") {
    const std::vector<LayerCost> layers{{"a", 100, 0, 0, true}, {"b", 50, 0, 0, true}};
    double prev = 0;
    for (int b = 2; b <= 8; ++b) {
        const double v = patch_bitops(layers, b);
        CHECK(v > prev);
        prev = v;
        CHECK(patch_bitops(layers, b, 8) <= patch_bitops(layers, b, 16));
    }
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        std::vector<BitCode> bits;
        for (int i = 0; i < 5; ++i) bits.push_back(4 + static_cast<int>(rng() % 5));
        const auto s = bitops(layers, plans_with(bits));
        CHECK(s.ratio <= 1.0);
        CHECK(s.ratio >= (*std::min_element(bits.begin(), bits.end()) * 8.0) / 1024.0);
    }
}

TEST_CASE("table-style formatting") {
    CHECK(format_si(527.0e12) == "527.0T");
    CHECK(format_si(73.6e12) == "73.6T");
    CHECK(format_si(999) == "999");
    CHECK(format_si(1500) == "1.5K");
    CHECK(format_scaled(486000, 1000, "K", 0) == "486K");
    CHECK(reduction_label(73.6, 527.0) == "(↓ 86.0%)");
    CHECK(format_with_reduction(73.6e12, 527.0e12) == "73.6T (↓ 86.0%)");
    CHECK(format_scaled(486e3, 1e3, "K", 0) + " " + reduction_label(486e3, 1518.75e3) == "486K (↓ 68.0%)");
    CHECK_THROWS_AS(reduction_label(1, 0), ContractError);
}
}
