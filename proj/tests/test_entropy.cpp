#include "oracles.hpp"

#include "gdq/entropy.hpp"
#include "gdq/errors.hpp"

#include <doctest.h>

#include <random>

using namespace gdq;

namespace {

EntropyConfig narrow(std::size_t bins = 256) {
    EntropyConfig cfg;
    cfg.bins = bins;
    cfg.sigma = 1.0 / (4.0 * static_cast<double>(bins));
    return cfg;
}

Tensor gray(std::vector<float> v, std::size_t h, std::size_t w) {
    return Tensor({1, 1, h, w}, std::move(v));
}

double center(std::size_t j, std::size_t bins) {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(bins);
}

} // namespace

TEST_SUITE("entropy") {
TEST_CASE("constant patch concentrates in one bin") {
    const Tensor p(1, 1, 8, 8, static_cast<float>(center(100, 256)));
    CHECK(patch_entropy(p, narrow()) <= 0.01);
}

TEST_CASE("half 0 and half 1 gives ln 2") {
    std::vector<float> v(64);
    for (std::size_t i = 0; i < 64; ++i) v[i] = i % 2 ? 1.0f : 0.0f;
    const double h = patch_entropy(gray(v, 8, 8), narrow());
    CHECK(std::fabs(h - std::log(2.0)) <= 0.01);
    CHECK(std::fabs(h - oracle::label_entropy({0, 1})) <= 0.01);
}

TEST_CASE("n equal-mass levels approach ln n") {
    for (int n = 1; n <= 8; ++n) {
        std::vector<float> v;
        std::vector<int> labels;
        for (int rep = 0; rep < 8; ++rep)
            for (int k = 0; k < n; ++k) {
                v.push_back(static_cast<float>(center(static_cast<std::size_t>(k * 31 + 3), 256)));
                labels.push_back(k);
            }
        const double h = entropy_of_values(v, narrow());
        CHECK(std::fabs(h - oracle::label_entropy(labels)) <= 0.02);
    }
}

TEST_CASE("uniform noise stays below ln B") {
    std::mt19937_64 rng(1);
    for (std::size_t bins : {16u, 64u, 256u}) {
        EntropyConfig cfg;
        cfg.bins = bins;
        const Tensor p = oracle::random_tensor(rng, 1, 1, 8, 8);
        const double h = patch_entropy(p, cfg);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(bins)));
    }
}

TEST_CASE("constant < two-level < ln B") {
    const EntropyConfig cfg; // sigma = one bin width
    const Tensor c(1, 1, 4, 4, 0.5f);
    std::vector<float> two(16);
    for (std::size_t i = 0; i < 16; ++i) two[i] = i < 8 ? 0.2f : 0.8f;
    const double hc = patch_entropy(c, cfg);
    const double h2 = patch_entropy(gray(two, 4, 4), cfg);
    CHECK(hc < h2);
    CHECK(h2 < std::log(256.0));
}

TEST_CASE("permutation invariance is exact") {
    std::mt19937_64 rng(8);
    for (auto mode : {EntropyMode::bin_wise, EntropyMode::pixel_wise}) {
        EntropyConfig cfg;
        cfg.mode = mode;
        Tensor p = oracle::random_tensor(rng, 1, 1, 12, 12);
        const double h = patch_entropy(p, cfg);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(p.values().begin(), p.values().end(), rng);
            CHECK(patch_entropy(p, cfg) == h);
        }
    }
}

TEST_CASE("bin distribution sums to one up to epsilon") {
    std::mt19937_64 rng(2);
    EntropyConfig cfg;
    cfg.bins = 32;
    const Tensor p = oracle::random_tensor(rng, 1, 1, 6, 6);
    const auto q = kernel_bin_distribution(p.values(), cfg);
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    CHECK(total <= 1.0 + 1e-12);
    CHECK(total >= 1.0 - 10 * cfg.epsilon * 32);
}

TEST_CASE("bin-wise matches a direct kernel sum") {
    std::mt19937_64 rng(13);
    EntropyConfig cfg;
    cfg.bins = 20;
    cfg.sigma = 0.03;
    const Tensor p = oracle::random_tensor(rng, 1, 1, 5, 7);
    std::vector<double> mass(20, 0.0);
    double z = 0.0;
    for (float x : p.values())
        for (std::size_t j = 0; j < 20; ++j) {
            const double d = x - center(j, 20);
            const double k = std::exp(-d * d / (2 * 0.03 * 0.03));
            mass[j] += k;
            z += k;
        }
    double h = 0.0;
    for (double m : mass) {
        const double q = m / (z + cfg.epsilon);
        if (q > 0) h -= q * std::log(q);
    }
    CHECK(patch_entropy(p, cfg) == doctest::Approx(h).epsilon(1e-9));
}

TEST_CASE("pixel-wise gives a constant patch the maximal entropy") {
    EntropyConfig cfg;
    cfg.mode = EntropyMode::pixel_wise;
    const Tensor c(1, 1, 4, 4, 0.5f);
    CHECK(patch_entropy(c, cfg) == doctest::Approx(std::log(16.0)).epsilon(1e-6));
}

TEST_CASE("RGB patches are reduced to luma") {
    std::mt19937_64 rng(6);
    const Tensor rgb = oracle::random_tensor(rng, 1, 3, 6, 6);
    const EntropyConfig cfg;
    CHECK(patch_entropy(rgb, cfg) == patch_entropy(to_luma(rgb), cfg));
}

TEST_CASE("config validation") {
    EntropyConfig cfg;
    cfg.bins = 1;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = {};
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = {};
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    CHECK(entropy_mode_from_string(to_string(EntropyMode::pixel_wise)) == EntropyMode::pixel_wise);
}
}

TEST_SUITE("entropy_stats") {
TEST_CASE("stats are sorted") {
    const auto s = make_entropy_stats({0.6, 0.2, 0.4}, {});
    CHECK(s.values == std::vector<double>{0.2, 0.4, 0.6});
    CHECK(s.count() == 3);
    CHECK(s.min() == 0.2);
    CHECK(s.max() == 0.6);
    CHECK(s.corpus_order == std::vector<double>{0.6, 0.2, 0.4});
    CHECK(make_entropy_stats({0.5, 0.5}, {}).values == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(make_entropy_stats({}, {}), ContractError);
}

TEST_CASE("built stats match recomputed patch entropies") {
    std::mt19937_64 rng(12);
    std::vector<Tensor> patches;
    for (int i = 0; i < 30; ++i) patches.push_back(oracle::random_tensor(rng, 1, 3, 12, 12));
    const EntropyConfig cfg;
    const auto stats = build_entropy_stats(patches, cfg);
    CHECK(stats.count() == 30);
    std::vector<double> expect;
    for (const auto& p : patches) expect.push_back(patch_entropy(p, cfg));
    CHECK(stats.corpus_order == expect);
    std::sort(expect.begin(), expect.end());
    CHECK(stats.values == expect);

    std::size_t next = 0;
    const auto streamed = build_entropy_stats(
        [&](Tensor& out) {
            if (next == patches.size()) return false;
            out = patches[next++];
            return true;
        },
        cfg);
    CHECK(streamed.values == stats.values);
}

TEST_CASE("quantile index examples") {
    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    CHECK(quantile_index(make_entropy_stats(hundred, {}), 0.5).index == 50);
    std::vector<double> ten(10);
    std::iota(ten.begin(), ten.end(), 1.0);
    CHECK(quantile_index(make_entropy_stats(ten, {}), 0.95).index == 10);
    CHECK(quantile_index(make_entropy_stats(ten, {}), 0.3).index == 3);
    const auto seven = make_entropy_stats({0.7, 0.1, 0.5, 0.3, 0.6, 0.2, 0.4}, {});
    const auto q = quantile_index(seven, 0.5);
    CHECK(q.index == 4);
    CHECK(q.threshold == 0.4);
    CHECK_THROWS_AS(quantile_index(seven, 0.0), ContractError);
    CHECK_THROWS_AS(quantile_index(seven, 1.0), ContractError);
}

TEST_CASE("quantile index is monotone in t") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.0, 5.0);
    std::vector<double> v(137);
    for (double& x : v) x = d(rng);
    const auto s = make_entropy_stats(v, {});
    std::size_t prev = 0;
    for (int i = 1; i < 1000; ++i) {
        const auto q = quantile_index(s, i / 1000.0);
        CHECK(q.index >= prev);
        prev = q.index;
    }
}

TEST_CASE("histogram counts every patch") {
    const auto s = make_entropy_stats({0.0, 0.1, 0.5, 0.9, 1.0}, {});
    const auto h = entropy_histogram(s, 2);
    CHECK(h.lower == 0.0);
    CHECK(h.upper == 1.0);
    CHECK(h.counts == std::vector<std::size_t>{2, 3});
}
}
