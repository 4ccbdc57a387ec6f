#pragma once

#include <map>
#include <optional>
#include <span>

#include "tagdsp/dsp.hpp"

namespace tagdsp {

// Window shape a transformed code is prepared for. All codes correlated
// against one window must share it.
struct WindowShape {
    size_t window_len = 0;   // samples per demodulated window
    DemodConfig cfg;

    // Transform size for FFT correlation: long enough that circular
    // correlation equals linear correlation for all lags in the window.
    size_t corr_len() const {
        return pad_length(window_len + cfg.mod.packet_samples() + cfg.composed_filter_len());
    }
};

// Demodulated replica of one code: time-domain nonzero part plus the
// conjugated forward transform, computed once and stored indefinitely.
struct TransformedCode {
    std::string tag_id;
    std::vector<float> replica_d;      // first nonzero_len samples of d^(c)
    std::vector<float> replica_u;      // matching unnormalized demod output
    std::vector<cfloat> spectrum;      // conj(fft(zero-padded d^(c)))
    size_t nonzero_len = 0;
    size_t window_len = 0;
    float energy = 0.0f;               // sum of replica_d[i]^2
    float abs_sum = 0.0f;
};

using CodeCache = std::map<std::pair<std::string, size_t>, TransformedCode>;

struct Detection {
    std::string tag_id;
    size_t peak_index = 0;
    float subsample_offset = 0.0f;     // in (-0.5, 0.5]
    double toa_seconds = 0.0;          // since stream start
    float peak_value = 0.0f;           // signed correlation value at the peak
    float w_c = 0.0f;
    float q = 0.0f;
    float p_c = 0.0f;
    float score = 0.0f;                // w_c / sqrt(q * energy), in [-1, 1]
    bool accepted = false;
    bool partial = false;              // statistics truncated at a window edge
};

struct DetectionConfig {
    float threshold = 0.25f;
    int64_t window_start = 0;          // stream index of window sample 0
};

// Build a TransformedCode from an explicit demodulated replica (the
// prepare_code path and the test oracles share this).
TransformedCode make_transformed(std::string tag_id, std::span<const float> replica_d,
                                 std::span<const float> replica_u, size_t window_len,
                                 size_t corr_len, PlanCache& cache);

// Synthesize the code's replica, run it through the identical demodulation
// chain, transform and cache. Second call for the same (tag, shape) is a
// pure lookup.
const TransformedCode& prepare_code(const TagCode& code, const WindowShape& shape,
                                    PlanCache& cache, CodeCache& codes);

// xc[t] = sum_i d^(c)_i * d_{i+t} for lags t in [0, |d|).
std::vector<float> xcorr(std::span<const float> d, const TransformedCode& tc,
                         PlanCache& cache);

// One forward transform of d, one spectral product + inverse per code.
std::vector<std::vector<float>> batch_xcorr(std::span<const float> d,
                                            std::span<const TransformedCode* const> codes,
                                            PlanCache& cache);

// argmax of |xc|, ties toward the smallest index; value is signed.
std::pair<size_t, float> find_peak(std::span<const float> xc);

// Three-point parabolic refinement of the peak location on |xc|.
float interpolate_peak(std::span<const float> xc, size_t j);

struct Statistics {
    float w_c = 0.0f;
    float q = 0.0f;
    float p_c = 0.0f;
    bool partial = false;
};

Statistics statistics(std::span<const float> d, std::span<const float> u,
                      const TransformedCode& tc, size_t j);

struct DetectTimings {
    double correlation_s = 0.0;
    double peak_stats_s = 0.0;
};

// Full back half for each code: batched correlation, peak, interpolation,
// statistics, score and accept decision. All candidates are returned so
// callers can log near-misses.
std::vector<Detection> detect(std::span<const float> d, std::span<const float> u,
                              std::span<const TransformedCode* const> codes,
                              const DetectionConfig& cfg, double sample_rate,
                              PlanCache& cache, DetectTimings* timings = nullptr);

}  // namespace tagdsp
