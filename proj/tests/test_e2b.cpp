#include "oracles.hpp"

#include "gdq/e2b.hpp"
#include "gdq/errors.hpp"

#include <doctest.h>

#include <random>

using namespace gdq;

namespace {

CalibratedThresholds cutoffs(std::vector<double> c, std::vector<BitCode> bits = {4, 5, 8}) {
    CalibratedThresholds t;
    t.cutoffs = std::move(c);
    t.bit_codes = std::move(bits);
    return t;
}

PatchPlan plan(BitCode gbc, double entropy) {
    PatchPlan p;
    p.gbc_bit = gbc;
    p.final_bit = gbc;
    p.entropy = entropy;
    return p;
}

} // namespace

TEST_SUITE("e2b") {
TEST_CASE("resolve thresholds against ten evenly spaced entropies") {
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) v.push_back(i / 10.0);
    const auto thr = resolve_thresholds(make_entropy_stats(v, {}), E2BConfig{});
    CHECK(thr.cutoffs == std::vector<double>{0.5, 0.9});
    CHECK(thr.bit_codes == std::vector<BitCode>{4, 5, 8});
    E2BConfig one;
    one.thresholds = {0.5};
    one.bit_codes = {4, 8};
    CHECK(resolve_thresholds(make_entropy_stats({0.3, 0.7}, {}), one).cutoffs ==
          std::vector<double>{0.3});
}

TEST_CASE("assign bit follows the interval table") {
    const auto thr = cutoffs({0.5, 0.9});
    CHECK(assign_bit(0.0, thr) == 4);
    CHECK(assign_bit(0.7, thr) == 5);
    CHECK(assign_bit(0.5, thr) == 4);
    CHECK(assign_bit(0.9, thr) == 5);
    CHECK(assign_bit(0.9000001, thr) == 8);
    CHECK(assign_bit(100.0, thr) == 8);
}

TEST_CASE("assign bit matches sort-and-bucket on random stats") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> d(0.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> corpus(2 + rng() % 50);
        for (double& e : corpus) e = std::round(d(rng) * 20) / 20; // ties on purpose
        E2BConfig cfg;
        cfg.thresholds = {0.2 + 0.1 * (trial % 3), 0.75};
        const auto thr = resolve_thresholds(make_entropy_stats(corpus, {}), cfg);
        for (std::size_t k = 1; k < thr.cutoffs.size(); ++k) CHECK(thr.cutoffs[k - 1] <= thr.cutoffs[k]);
        for (int q = 0; q < 40; ++q) {
            const double e = q < 20 ? corpus[rng() % corpus.size()] : d(rng);
            CHECK(assign_bit(e, thr) ==
                  oracle::bucket_bit(corpus, cfg.thresholds, cfg.bit_codes, e));
        }
    }
}

TEST_CASE("assign bit is monotone in entropy") {
    const auto thr = cutoffs({0.2, 0.4, 0.6}, {2, 4, 6, 8});
    BitCode prev = 0;
    for (int i = 0; i <= 100; ++i) {
        const BitCode b = assign_bit(i / 100.0, thr);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("config validation") {
    E2BConfig c;
    c.thresholds = {0.9, 0.5};
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.bit_codes = {4, 8};
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.bit_codes = {8, 5, 4};
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.gamma = 0.0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.thresholds = {0.0, 0.5};
    CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("normalisation uses the batch range") {
    const std::vector<double> batch{1.0, 2.0, 3.0};
    CHECK(normalize_entropy(2.5, batch) == 0.75);
    CHECK(normalize_entropy(1.0, batch) == 0.0);
    const std::vector<double> flat{2.0, 2.0};
    CHECK(normalize_entropy(2.0, flat) == 0.5);
}

TEST_CASE("single EMA step") {
    const std::vector<double> batch{0.0, 1.0};
    CHECK(atc_update(0.5, batch, 0.8, 0.9997) == doctest::Approx(0.50009).epsilon(1e-12));
    CHECK(atc_update(0.3, batch, 0.3, 0.9997) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(atc_update(0.3, batch, 0.9, 1.0) == 0.3);
}

TEST_CASE("closed form for constant normalised entropy") {
    const std::vector<double> batch{0.0, 1.0};
    for (double n : {0.0, 0.2, 0.8, 1.0}) {
        double t = 0.5;
        const double g = 0.9997;
        for (int j = 1; j <= 1000; ++j) {
            const double prev = t;
            t = atc_update(t, batch, n, g);
            CHECK(std::fabs(t - prev) <= 3e-4);
        }
        CHECK(std::fabs(t - (n + (0.5 - n) * std::pow(g, 1000))) < 1e-12);
    }
}

TEST_CASE("update stays inside (0, 1) for any sequence") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-3.0, 3.0), gd(0.0, 1.0);
    double t = 0.5;
    for (int j = 0; j < 5000; ++j) {
        std::vector<double> batch{d(rng), d(rng), d(rng)};
        t = atc_update(t, batch, d(rng), std::max(1e-3, gd(rng)));
        CHECK(t > 0.0);
        CHECK(t < 1.0);
    }
}

TEST_CASE("calibration pass") {
    std::vector<double> v;
    for (int i = 0; i < 40; ++i) v.push_back(0.1 * ((i * 7) % 40));
    const auto stats = make_entropy_stats(v, {});

    SUBCASE("gamma 1 leaves fractions unchanged") {
        E2BConfig cfg;
        cfg.gamma = 1.0;
        const auto r = calibrate_thresholds(stats, cfg);
        CHECK(r.thresholds.fractions == cfg.thresholds);
        CHECK(r.thresholds.cutoffs == resolve_thresholds(stats, cfg).cutoffs);
    }
    SUBCASE("one batch gives one step") {
        AtcOptions opts;
        opts.batch_size = 64;
        opts.trace = true;
        const auto r = calibrate_thresholds(stats, E2BConfig{}, opts);
        CHECK(r.thresholds.iterations == 1);
        REQUIRE(r.trajectory.size() == 1);
        const double n = normalize_entropy(v[0], v);
        CHECK(r.trajectory[0][0] == doctest::Approx(0.5 * 0.9997 + n * 0.0003).epsilon(1e-15));
    }
    SUBCASE("trajectory follows the per-batch recursion") {
        AtcOptions opts;
        opts.batch_size = 16;
        opts.trace = true;
        for (auto sel : {AtcSelect::per_patch_sequential, AtcSelect::batch_mean}) {
            opts.select = sel;
            const auto r = calibrate_thresholds(stats, E2BConfig{}, opts);
            CHECK(r.thresholds.iterations == 3);
            std::vector<double> t{0.5, 0.9};
            for (std::size_t b = 0; b < 3; ++b) {
                const std::size_t lo = b * 16, hi = std::min<std::size_t>(lo + 16, v.size());
                const std::vector<double> batch(v.begin() + lo, v.begin() + hi);
                double e = batch.front();
                if (sel == AtcSelect::batch_mean) {
                    e = std::accumulate(batch.begin(), batch.end(), 0.0) /
                        static_cast<double>(batch.size());
                }
                const auto [mn, mx] = std::minmax_element(batch.begin(), batch.end());
                const double n = (e - *mn) / (*mx - *mn);
                for (double& tk : t) tk = tk * 0.9997 + n * 0.0003;
                CHECK(r.trajectory[b][0] == doctest::Approx(t[0]).epsilon(1e-14));
                CHECK(r.trajectory[b][1] == doctest::Approx(t[1]).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("select names round-trip") {
    CHECK(atc_select_from_string(to_string(AtcSelect::batch_mean)) == AtcSelect::batch_mean);
    CHECK(atc_select_from_string("per-patch-sequential") == AtcSelect::per_patch_sequential);
    CHECK_THROWS_AS(atc_select_from_string("median"), ContractError);
}

TEST_CASE("refinement only touches patches at the high bit") {
    const auto thr = cutoffs({0.5, 0.9});
    const auto out = refine_plan({plan(4, 0.95), plan(6, 0.95), plan(8, 0.7)}, thr);
    CHECK(out[0].final_bit == 4);
    CHECK(out[1].final_bit == 6);
    CHECK(out[2].final_bit == 5);
    CHECK(out[2].gbc_bit == 8);

    const auto none = refine_plan({plan(4, 0.1), plan(6, 0.2)}, thr);
    CHECK(none[0].final_bit == 4);
    CHECK(none[1].final_bit == 6);

    const auto top = refine_plan({plan(8, 1.0), plan(8, 2.0)}, thr);
    CHECK(top[0].final_bit == 8);
    CHECK(top[1].final_bit == 8);
}

TEST_CASE("refinement never raises bits and lowers mean bit") {
    std::mt19937_64 rng(31);
    const auto thr = cutoffs({0.5, 0.9});
    const std::vector<BitCode> bits{4, 6, 8};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<PatchPlan> plans;
        for (int i = 0; i < 10; ++i) plans.push_back(plan(bits[rng() % 3], (rng() % 100) / 80.0));
        const auto out = refine_plan(plans, thr);
        double before = 0, after = 0;
        for (std::size_t i = 0; i < plans.size(); ++i) {
            CHECK(out[i].final_bit <= plans[i].gbc_bit);
            if (plans[i].gbc_bit != 8) CHECK(out[i].final_bit == plans[i].gbc_bit);
            before += plans[i].final_bit;
            after += out[i].final_bit;
        }
        CHECK(after <= before);
    }
}
}
