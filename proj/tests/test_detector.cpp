#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tagdsp/codegen.hpp"
#include "tagdsp/detector.hpp"

using namespace tagdsp;

namespace {

ModulationParams small_params(size_t packet_bits = 256) {
    ModulationParams p;
    p.sample_rate = 1.0e6;
    p.bit_rate = 125.0e3;
    p.freq_one = 31.25e3;
    p.freq_zero = -31.25e3;
    p.packet_bits = packet_bits;
    return p;
}

DemodConfig small_cfg(size_t packet_bits = 256) {
    DemodConfig cfg;
    cfg.mod = small_params(packet_bits);
    cfg.bandpass_width = 187.5e3;
    return cfg;
}

std::vector<float> random_real(size_t n, uint64_t seed) {
    GaussianRng rng(seed);
    std::vector<float> out(n);
    for (auto& v : out) v = rng.next();
    return out;
}

// Brute-force lag-domain correlation oracle.
std::vector<float> direct_xcorr(std::span<const float> d, std::span<const float> dc) {
    std::vector<float> out(d.size(), 0.0f);
    for (size_t t = 0; t < d.size(); ++t) {
        double acc = 0.0;
        for (size_t i = 0; i < dc.size() && i + t < d.size(); ++i)
            acc += double(dc[i]) * double(d[i + t]);
        out[t] = float(acc);
    }
    return out;
}

TransformedCode transformed_from(std::span<const float> dc, size_t window_len,
                                 PlanCache& cache, const std::string& id = "x") {
    std::vector<float> u(dc.begin(), dc.end());
    return make_transformed(id, dc, u, window_len, pad_length(window_len + dc.size()), cache);
}

}  // namespace

TEST_CASE("prepare_code is a pure cache lookup the second time") {
    auto cfg = small_cfg();
    auto code = gen_code(1, cfg.mod, "a");
    WindowShape shape{cfg.mod.packet_samples() + 500, cfg};
    PlanCache cache;
    CodeCache codes;
    const auto& tc1 = prepare_code(code, shape, cache, codes);
    auto transforms_before = cache.stats().forward_execs + cache.stats().inverse_execs;
    const auto& tc2 = prepare_code(code, shape, cache, codes);
    CHECK(&tc1 == &tc2);
    CHECK(cache.stats().forward_execs + cache.stats().inverse_execs == transforms_before);
}

TEST_CASE("transformed code energy matches a direct sum") {
    auto cfg = small_cfg();
    auto code = gen_code(2, cfg.mod, "b");
    WindowShape shape{cfg.mod.packet_samples() + 500, cfg};
    PlanCache cache;
    CodeCache codes;
    const auto& tc = prepare_code(code, shape, cache, codes);

    auto replica = synth_replica(code, shape.window_len);
    auto demod = demodulate_signal(replica, 0, 0.0, cfg, cache);
    double energy = 0.0;
    for (size_t i = 0; i < tc.nonzero_len; ++i) energy += double(demod.d[i]) * demod.d[i];
    CHECK(tc.energy == doctest::Approx(energy).epsilon(1e-5));

    // support: packet plus the composed filter tail
    CHECK(tc.nonzero_len >= cfg.mod.packet_samples());
    CHECK(tc.nonzero_len <= cfg.mod.packet_samples() + cfg.composed_filter_len());
}

TEST_CASE("xcorr autocorrelation peaks at zero lag with the energy") {
    PlanCache cache;
    auto dc = random_real(512, 5);
    auto tc = transformed_from(dc, 2048, cache);
    std::vector<float> d(2048, 0.0f);
    std::copy(dc.begin(), dc.end(), d.begin());
    auto xc = xcorr(d, tc, cache);
    auto [j, value] = find_peak(xc);
    CHECK(j == 0);
    CHECK(value == doctest::Approx(tc.energy).epsilon(1e-4));
}

TEST_CASE("xcorr of zeros is zero") {
    PlanCache cache;
    auto dc = random_real(64, 6);
    auto tc = transformed_from(dc, 512, cache);
    std::vector<float> d(512, 0.0f);
    auto xc = xcorr(d, tc, cache);
    for (float v : xc) CHECK(std::abs(v) < 1e-6f * tc.energy);
}

TEST_CASE("xcorr matches brute force on random instances") {
    PlanCache cache;
    for (uint64_t trial = 0; trial < 20; ++trial) {
        auto dc = random_real(64, 100 + trial);
        auto d = random_real(4096, 200 + trial);
        auto tc = transformed_from(dc, d.size(), cache);
        auto got = xcorr(d, tc, cache);
        auto want = direct_xcorr(d, dc);
        REQUIRE(got.size() == want.size());
        for (size_t t = 0; t < got.size(); ++t)
            CHECK(std::abs(got[t] - want[t]) <= 1e-3f * tc.energy);
    }
}

TEST_CASE("batch_xcorr equals sequential xcorr with one forward transform") {
    PlanCache cache;
    std::vector<TransformedCode> tcs;
    size_t window = 2048;
    for (uint64_t i = 0; i < 16; ++i)
        tcs.push_back(transformed_from(random_real(128, 300 + i), window, cache,
                                       "c" + std::to_string(i)));
    std::vector<const TransformedCode*> ptrs;
    for (auto& tc : tcs) ptrs.push_back(&tc);
    auto d = random_real(window, 999);

    auto fwd_before = cache.stats().forward_execs;
    auto batch = batch_xcorr(d, ptrs, cache);
    CHECK(cache.stats().forward_execs == fwd_before + 1);

    for (size_t i = 0; i < ptrs.size(); ++i) {
        auto single = xcorr(d, *ptrs[i], cache);
        REQUIRE(single.size() == batch[i].size());
        for (size_t t = 0; t < single.size(); ++t) {
            float tol = 1e-6f * std::max(1.0f, std::abs(single[t]));
            CHECK(std::abs(single[t] - batch[i][t]) <= tol);
        }
    }

    const TransformedCode* one[] = {ptrs[0]};
    auto b1 = batch_xcorr(d, one, cache);
    CHECK(b1[0] == xcorr(d, *ptrs[0], cache));
}

TEST_CASE("find_peak absolute maximum and tie break") {
    std::vector<float> a = {0.0f, -5.0f, 3.0f};
    auto [j1, v1] = find_peak(a);
    CHECK(j1 == 1);
    CHECK(v1 == -5.0f);

    std::vector<float> b = {2.0f, 2.0f};
    auto [j2, v2] = find_peak(b);
    CHECK(j2 == 0);
    CHECK(v2 == 2.0f);

    std::vector<float> empty;
    CHECK_THROWS_AS(find_peak(empty), std::invalid_argument);
}

TEST_CASE("interpolate_peak symmetry, boundaries, degenerate neighborhoods") {
    std::vector<float> sym = {0.5f, 1.0f, 0.5f};
    CHECK(interpolate_peak(sym, 1) == 0.0f);
    CHECK(interpolate_peak(sym, 0) == 0.0f);   // boundary
    CHECK(interpolate_peak(sym, 2) == 0.0f);   // boundary

    std::vector<float> flat = {1.0f, 1.0f, 1.0f};
    CHECK(interpolate_peak(flat, 1) == 0.0f);  // non-concave

    std::vector<float> skew = {0.4f, 1.0f, 0.6f};
    float delta = interpolate_peak(skew, 1);
    CHECK(delta > 0.0f);
    CHECK(delta <= 0.5f);
}

TEST_CASE("statistics on a perfectly aligned copy") {
    PlanCache cache;
    auto dc = random_real(256, 7);
    auto tc = transformed_from(dc, 1024, cache);
    std::vector<float> d(1024, 0.0f), u(1024, 0.0f);
    size_t j = 100;
    std::copy(dc.begin(), dc.end(), d.begin() + j);
    std::copy(dc.begin(), dc.end(), u.begin() + j);
    auto st = statistics(d, u, tc, j);
    CHECK(!st.partial);
    CHECK(st.w_c == doctest::Approx(tc.energy).epsilon(1e-5));
    CHECK(st.q == doctest::Approx(tc.energy).epsilon(1e-5));
    CHECK(st.p_c == doctest::Approx(tc.energy).epsilon(1e-5));
    float score = st.w_c / std::sqrt(st.q * tc.energy);
    CHECK(score == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("statistics truncates and flags at the window edge") {
    PlanCache cache;
    auto dc = random_real(256, 8);
    auto tc = transformed_from(dc, 512, cache);
    std::vector<float> d(512, 0.1f), u(512, 0.1f);
    auto st = statistics(d, u, tc, 400);   // only 112 of 256 samples available
    CHECK(st.partial);
    auto st2 = statistics(d, u, tc, 600);  // fully out of range
    CHECK(st2.partial);
    CHECK(st2.q == 0.0f);
}

TEST_CASE("noise scores concentrate near zero (Monte Carlo)") {
    PlanCache cache;
    auto dc = random_real(256, 9);
    for (auto& v : dc) v = (v > 0) ? 1.0f : -1.0f;   // unit-energy-per-sample code
    auto tc = transformed_from(dc, 1024, cache);
    double n = double(tc.nonzero_len);
    double mean_abs = 0.0;
    for (uint64_t trial = 0; trial < 100; ++trial) {
        auto d = random_real(1024, 1000 + trial);
        auto st = statistics(d, d, tc, 0);
        mean_abs += std::abs(st.w_c / std::sqrt(st.q * tc.energy));
    }
    mean_abs /= 100.0;
    CHECK(mean_abs <= 3.0 / std::sqrt(n));
}

TEST_CASE("Cauchy-Schwarz bound and q nonnegativity") {
    PlanCache cache;
    std::mt19937_64 seeds(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto dc = random_real(64, seeds());
        auto tc = transformed_from(dc, 256, cache);
        auto d = random_real(256, seeds());
        auto st = statistics(d, d, tc, seeds() % 220);
        CHECK(st.q >= 0.0f);
        CHECK(double(st.w_c) * st.w_c <= double(st.q) * tc.energy * (1.0 + 1e-5));
    }
}

TEST_CASE("statistics w_c is consistent with the correlation value") {
    PlanCache cache;
    auto dc = random_real(128, 10);
    auto tc = transformed_from(dc, 1024, cache);
    auto d = random_real(1024, 11);
    auto xc = xcorr(d, tc, cache);
    for (size_t j : {size_t(0), size_t(17), size_t(500), size_t(1024 - 128)}) {
        auto st = statistics(d, d, tc, j);
        CHECK(st.w_c == doctest::Approx(xc[j]).epsilon(1e-4));
    }
}

TEST_CASE("end-to-end: one injected code among three, fractional delay recovered") {
    // 1024 bits: long enough that the parabolic-interpolation bias of an
    // individual code pattern averages out below the 0.05-sample tolerance.
    auto cfg = small_cfg(1024);
    size_t window = cfg.mod.packet_samples() + 1000;
    WindowShape shape{window, cfg};
    PlanCache cache;
    CodeCache codes;

    auto a = gen_code(100, cfg.mod, "A");
    auto b = gen_code(101, cfg.mod, "B");
    auto c = gen_code(102, cfg.mod, "C");
    std::vector<const TransformedCode*> tcs = {
        &prepare_code(a, shape, cache, codes),
        &prepare_code(b, shape, cache, codes),
        &prepare_code(c, shape, cache, codes),
    };

    double injected = 12.25;
    auto replica = synth_replica(a, cfg.mod.packet_samples());
    ChannelSpec chan;
    chan.delay = injected;
    auto rf = apply_channel(replica, chan, window, 55, cfg.mod.sample_rate);
    auto blk = quantize(rf, 8192.0f, 0, cfg.mod.sample_rate);
    auto demod = demodulate_window(blk, cfg, cache);

    DetectionConfig det_cfg{0.25f, 0};
    auto dets = detect(demod.d, demod.u, tcs, det_cfg, cfg.mod.sample_rate, cache);
    REQUIRE(dets.size() == 3);
    for (const auto& det : dets) {
        if (det.tag_id == "A") {
            CHECK(det.accepted);
            double toa_samples = det.toa_seconds * cfg.mod.sample_rate;
            CHECK(std::abs(toa_samples - injected) <= 0.05);
            CHECK(det.score > 0.9f);
        } else {
            CHECK(!det.accepted);
        }
    }
}

TEST_CASE("score and peak location are invariant under input gain") {
    auto cfg = small_cfg(128);
    size_t window = cfg.mod.packet_samples() + 300;
    WindowShape shape{window, cfg};
    PlanCache cache;
    CodeCache codes;
    auto a = gen_code(200, cfg.mod, "A");
    const TransformedCode* tcs[] = {&prepare_code(a, shape, cache, codes)};

    auto replica = synth_replica(a, cfg.mod.packet_samples());
    ChannelSpec unit;
    unit.delay = 40.0;
    auto rf = apply_channel(replica, unit, window, 1, cfg.mod.sample_rate);

    DetectionConfig det_cfg{0.25f, 0};
    // un-quantized float path: demodulate the complex signal directly
    auto d1 = demodulate_signal(rf, 0, 0.0, cfg, cache);
    auto r1 = detect(d1.d, d1.u, tcs, det_cfg, cfg.mod.sample_rate, cache);

    auto scaled = rf;
    for (auto& v : scaled) v *= 7.5f;
    auto d2 = demodulate_signal(scaled, 0, 0.0, cfg, cache);
    auto r2 = detect(d2.d, d2.u, tcs, det_cfg, cfg.mod.sample_rate, cache);

    CHECK(r1[0].peak_index == r2[0].peak_index);
    CHECK(std::abs(r1[0].score - r2[0].score) <= 1e-5f);
}
