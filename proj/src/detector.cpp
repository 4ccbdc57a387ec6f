#include "tagdsp/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tagdsp/codegen.hpp"

namespace tagdsp {

TransformedCode make_transformed(std::string tag_id, std::span<const float> replica_d,
                                 std::span<const float> replica_u, size_t window_len,
                                 size_t corr_len, PlanCache& cache) {
    TransformedCode tc;
    tc.tag_id = std::move(tag_id);
    tc.window_len = window_len;

    // Support is measured on the unnormalized output: the normalized d is a
    // ratio of filter outputs and amplifies numerical dust in the zero tail
    // to order one, which would stretch the support across the whole window.
    std::span<const float> support = replica_u.empty() ? replica_d : replica_u;
    float peak = 0.0f;
    for (float v : support) peak = std::max(peak, std::abs(v));
    size_t n = 0;
    for (size_t i = 0; i < support.size(); ++i)
        if (std::abs(support[i]) > 1e-6f * peak) n = i + 1;
    tc.nonzero_len = n;
    if (window_len + n > corr_len + 1)
        throw std::invalid_argument("make_transformed: transform too short for linear correlation");

    tc.replica_d.assign(replica_d.begin(), replica_d.begin() + n);
    tc.replica_u.assign(replica_u.begin(), replica_u.begin() + std::min(n, replica_u.size()));
    double energy = 0.0, abs_sum = 0.0;
    for (float v : tc.replica_d) {
        energy += double(v) * double(v);
        abs_sum += std::abs(double(v));
    }
    tc.energy = float(energy);
    tc.abs_sum = float(abs_sum);

    auto& buf = cache.work("code_pad", corr_len);
    std::fill(buf.begin(), buf.end(), cfloat{0.0f, 0.0f});
    for (size_t i = 0; i < n; ++i) buf[i] = cfloat(replica_d[i], 0.0f);
    tc.spectrum.resize(corr_len);
    cache.forward(buf, tc.spectrum);
    for (auto& v : tc.spectrum) v = std::conj(v);
    return tc;
}

const TransformedCode& prepare_code(const TagCode& code, const WindowShape& shape,
                                    PlanCache& cache, CodeCache& codes) {
    auto key = std::make_pair(code.tag_id, shape.window_len);
    auto it = codes.find(key);
    if (it != codes.end()) return it->second;

    if (shape.window_len < shape.cfg.mod.packet_samples())
        throw std::invalid_argument("prepare_code: window shorter than a packet");
    auto replica = synth_replica(code, shape.window_len);
    // Identical chain to live data; the replica is already at baseband so
    // the local oscillator is not applied.
    auto demod = demodulate_signal(replica, 0, 0.0, shape.cfg, cache);
    auto tc = make_transformed(code.tag_id, demod.d, demod.u, shape.window_len,
                               shape.corr_len(), cache);
    auto [ins, ok] = codes.emplace(key, std::move(tc));
    return ins->second;
}

namespace {

void forward_window(std::span<const float> d, size_t corr_len, PlanCache& cache,
                    std::span<cfloat> spec) {
    auto& buf = cache.work("xc_d", corr_len);
    std::fill(buf.begin(), buf.end(), cfloat{0.0f, 0.0f});
    for (size_t i = 0; i < d.size(); ++i) buf[i] = cfloat(d[i], 0.0f);
    cache.forward(buf, spec);
}

std::vector<float> correlate_spectrum(std::span<const cfloat> dspec, const TransformedCode& tc,
                                      size_t out_len, PlanCache& cache) {
    size_t n = tc.spectrum.size();
    auto& prod = cache.work("xc_prod", n);
    for (size_t k = 0; k < n; ++k) prod[k] = dspec[k] * tc.spectrum[k];
    auto& time = cache.work("xc_time", n);
    cache.inverse(prod, time);
    std::vector<float> out(out_len);
    for (size_t t = 0; t < out_len; ++t) out[t] = time[t].real();
    return out;
}

}  // namespace

std::vector<float> xcorr(std::span<const float> d, const TransformedCode& tc,
                         PlanCache& cache) {
    size_t corr_len = tc.spectrum.size();
    if (d.size() + tc.nonzero_len > corr_len + 1)
        throw std::invalid_argument("xcorr: window does not fit cached transform size");
    auto& dspec = cache.work("xc_dspec", corr_len);
    forward_window(d, corr_len, cache, dspec);
    return correlate_spectrum(dspec, tc, d.size(), cache);
}

std::vector<std::vector<float>> batch_xcorr(std::span<const float> d,
                                            std::span<const TransformedCode* const> codes,
                                            PlanCache& cache) {
    std::vector<std::vector<float>> out;
    if (codes.empty()) return out;
    size_t corr_len = codes.front()->spectrum.size();
    for (const auto* tc : codes) {
        if (tc->spectrum.size() != corr_len)
            throw std::invalid_argument("batch_xcorr: mixed window shapes");
        if (d.size() + tc->nonzero_len > corr_len + 1)
            throw std::invalid_argument("batch_xcorr: window does not fit transform size");
    }
    auto& dspec = cache.work("xc_dspec", corr_len);
    forward_window(d, corr_len, cache, dspec);   // one forward transform for the batch
    out.reserve(codes.size());
    for (const auto* tc : codes)
        out.push_back(correlate_spectrum(dspec, *tc, d.size(), cache));
    return out;
}

std::pair<size_t, float> find_peak(std::span<const float> xc) {
    if (xc.empty()) throw std::invalid_argument("find_peak: empty input");
    size_t best = 0;
    float best_abs = std::abs(xc[0]);
    for (size_t i = 1; i < xc.size(); ++i) {
        float a = std::abs(xc[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    return {best, xc[best]};
}

float interpolate_peak(std::span<const float> xc, size_t j) {
    if (j == 0 || j + 1 >= xc.size()) return 0.0f;
    float a = std::abs(xc[j - 1]);
    float b = std::abs(xc[j]);
    float c = std::abs(xc[j + 1]);
    float denom = a - 2.0f * b + c;
    if (denom >= 0.0f) return 0.0f;   // not a concave neighborhood
    float delta = 0.5f * (a - c) / denom;
    return std::clamp(delta, -0.5f, 0.5f);
}

Statistics statistics(std::span<const float> d, std::span<const float> u,
                      const TransformedCode& tc, size_t j) {
    Statistics st;
    size_t n = tc.nonzero_len;
    size_t avail = (j < d.size()) ? d.size() - j : 0;
    size_t count = std::min(n, avail);
    st.partial = count < n;
    double w = 0.0, q = 0.0, p = 0.0;
    for (size_t i = 0; i < count; ++i) {
        double di = d[j + i];
        w += double(tc.replica_d[i]) * di;
        q += di * di;
        p += double(tc.replica_d[i]) * double(u[j + i]);
    }
    st.w_c = float(w);
    st.q = float(q);
    st.p_c = float(p);
    return st;
}

std::vector<Detection> detect(std::span<const float> d, std::span<const float> u,
                              std::span<const TransformedCode* const> codes,
                              const DetectionConfig& cfg, double sample_rate,
                              PlanCache& cache, DetectTimings* timings) {
    auto t0 = std::chrono::steady_clock::now();
    auto correlations = batch_xcorr(d, codes, cache);
    auto t1 = std::chrono::steady_clock::now();
    std::vector<Detection> out;
    out.reserve(codes.size());
    for (size_t c = 0; c < codes.size(); ++c) {
        const TransformedCode& tc = *codes[c];
        const auto& xc = correlations[c];
        auto [j, value] = find_peak(xc);
        float delta = interpolate_peak(xc, j);
        auto st = statistics(d, u, tc, j);

        Detection det;
        det.tag_id = tc.tag_id;
        det.peak_index = j;
        det.subsample_offset = delta;
        det.peak_value = value;
        det.w_c = st.w_c;
        det.q = st.q;
        det.p_c = st.p_c;
        det.partial = st.partial;
        float denom = std::sqrt(st.q * tc.energy);
        det.score = (denom > 0.0f) ? st.w_c / denom : 0.0f;
        // The replica passes through the identical filter chain, so group
        // delay cancels in the correlation and the lag is the arrival time.
        det.toa_seconds = (double(cfg.window_start) + double(j) + double(delta)) / sample_rate;
        det.accepted = !det.partial && det.score >= cfg.threshold;
        out.push_back(std::move(det));
    }
    if (timings) {
        auto t2 = std::chrono::steady_clock::now();
        timings->correlation_s += std::chrono::duration<double>(t1 - t0).count();
        timings->peak_stats_s += std::chrono::duration<double>(t2 - t1).count();
    }
    return out;
}

}  // namespace tagdsp
