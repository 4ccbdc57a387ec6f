#pragma once

#include <span>
#include <utility>

#include "tagdsp/fft.hpp"
#include "tagdsp/types.hpp"

namespace tagdsp {

struct FirFilter {
    std::vector<cfloat> coeffs;

    size_t length() const { return coeffs.size(); }
};

enum class ConvMode {
    Full,   // output length |x| + |h| - 1
    Same,   // trimmed to |x|; output index t corresponds to input index t,
            // group delay (|h|-1)/2 is left in (it cancels against the
            // replica chain in correlation)
};

// Demodulation front-end configuration shared by live windows and replicas.
struct DemodConfig {
    ModulationParams mod;
    double lo_freq = 0.0;            // local-oscillator shift, Hz
    double bandpass_center = 0.0;    // Hz
    double bandpass_width = 1.5e6;   // Hz, full passband width
    size_t bandpass_taps = 200;
    float eps = 1e-12f;              // demodulation denominator guard

    size_t composed_filter_len() const {
        return bandpass_taps + mod.samples_per_bit() - 1;
    }
};

std::vector<cfloat> convert(const RawSampleBlock& block);

// x[i] *= exp(-2*pi*i * lo_freq * (start_index+i) / sample_rate). Phase is
// referenced to the absolute stream index so overlapping windows agree.
void mix(std::span<cfloat> x, double lo_freq, int64_t start_index, double sample_rate);

// Complex bandpass: Hamming windowed-sinc lowpass of cutoff width/2,
// modulated up to center; unit gain at center.
FirFilter design_bandpass(double center, double width, size_t taps, double sample_rate);

// Conjugated, time-reversed single-bit tones at freq_one / freq_zero.
std::pair<FirFilter, FirFilter> matched_filters(const ModulationParams& params);

// Full linear convolution of coefficient vectors.
FirFilter compose(const FirFilter& a, const FirFilter& b);

// FFT overlap-add linear convolution; block size pad_length(4*|h|).
std::vector<cfloat> overlap_add_filter(std::span<const cfloat> x, const FirFilter& h,
                                       PlanCache& cache, ConvMode mode = ConvMode::Full);

// u = |f1| - |f0|; d = u / max(|f1| + |f0|, eps). d is in [-1, 1].
void demodulate(std::span<const cfloat> f1, std::span<const cfloat> f0, float eps,
                std::span<float> d, std::span<float> u);

struct DemodResult {
    std::vector<float> d;
    std::vector<float> u;
};

// convert -> mix -> composed bandpass+matched filters (overlap-add, Same
// mode) -> demodulate. Done once per window however many codes are
// correlated afterwards.
DemodResult demodulate_window(const RawSampleBlock& block, const DemodConfig& cfg,
                              PlanCache& cache);

// Same chain on an already-complex baseband signal (used for replicas,
// which are synthesized at baseband and skip the local oscillator).
DemodResult demodulate_signal(std::span<const cfloat> x, int64_t start_index,
                              double lo_freq, const DemodConfig& cfg, PlanCache& cache);

}  // namespace tagdsp
