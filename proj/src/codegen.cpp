#include "tagdsp/codegen.hpp"

#include <cmath>
#include <numbers>

#include "tagdsp/fft.hpp"

namespace tagdsp {

float GaussianRng::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on splitmix64 output; unit-interval doubles from the top
    // 53 bits, u1 kept away from zero.
    double u1 = (double(splitmix64(state_) >> 11) + 1.0) * 0x1p-53;
    double u2 = double(splitmix64(state_) >> 11) * 0x1p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = float(r * std::sin(a));
    have_spare_ = true;
    return float(r * std::cos(a));
}

TagCode gen_code(uint64_t seed, const ModulationParams& params, const std::string& tag_id) {
    TagCode code;
    code.tag_id = tag_id.empty() ? ("tag-" + std::to_string(seed)) : tag_id;
    code.mod = params;
    code.bits.resize(params.packet_bits);
    uint64_t state = seed;
    uint64_t word = 0;
    for (size_t i = 0; i < params.packet_bits; ++i) {
        if (i % 64 == 0) word = splitmix64(state);
        code.bits[i] = uint8_t((word >> (i % 64)) & 1);
    }
    return code;
}

std::vector<cfloat> synth_replica(const TagCode& code, size_t padded_len) {
    const auto& mod = code.mod;
    size_t spb = mod.samples_per_bit();
    size_t n = code.bits.size() * spb;
    if (padded_len < n)
        throw std::invalid_argument("synth_replica: padded_len smaller than packet");

    std::vector<cfloat> out(padded_len, cfloat{0.0f, 0.0f});
    // Continuous phase across bit boundaries.
    double phase = 0.0;
    size_t i = 0;
    for (uint8_t bit : code.bits) {
        double step = 2.0 * std::numbers::pi * (bit ? mod.freq_one : mod.freq_zero) / mod.sample_rate;
        for (size_t k = 0; k < spb; ++k, ++i) {
            out[i] = cfloat(float(std::cos(phase)), float(std::sin(phase)));
            phase += step;
            if (phase > 64.0 * std::numbers::pi) phase = std::remainder(phase, 2.0 * std::numbers::pi);
        }
    }
    return out;
}

namespace {

// Exact band-limited fractional shift by frac in [0,1): linear phase ramp
// in the frequency domain.
std::vector<cfloat> fractional_shift(std::span<const cfloat> s, double frac) {
    size_t n = pad_length(s.size() + 64);
    PlanCache cache;
    std::vector<cfloat> buf(n, cfloat{0.0f, 0.0f});
    std::copy(s.begin(), s.end(), buf.begin());
    std::vector<cfloat> spec(n);
    cache.forward(buf, spec);
    for (size_t k = 0; k < n; ++k) {
        double kf = (k <= n / 2) ? double(k) : double(k) - double(n);
        double a = -2.0 * std::numbers::pi * kf * frac / double(n);
        spec[k] *= cfloat(float(std::cos(a)), float(std::sin(a)));
    }
    cache.inverse(spec, buf);
    return buf;
}

}  // namespace

std::vector<cfloat> apply_channel(std::span<const cfloat> signal, const ChannelSpec& chan,
                                  size_t out_len, uint64_t rng_seed, double sample_rate) {
    if (chan.delay < 0.0) throw std::invalid_argument("apply_channel: negative delay");
    if (chan.gain <= 0.0) throw std::invalid_argument("apply_channel: gain must be positive");
    auto int_delay = int64_t(std::floor(chan.delay));
    double frac = chan.delay - double(int_delay);
    if (out_len < signal.size() + size_t(std::ceil(chan.delay)))
        throw std::invalid_argument("apply_channel: out_len too small");

    std::vector<cfloat> out(out_len, cfloat{0.0f, 0.0f});
    float g = float(chan.gain);
    if (frac < 1e-9) {
        for (size_t i = 0; i < signal.size(); ++i)
            out[size_t(int_delay) + i] = g * signal[i];
    } else {
        auto shifted = fractional_shift(signal, frac);
        size_t count = std::min(shifted.size(), out_len - size_t(int_delay));
        for (size_t i = 0; i < count; ++i)
            out[size_t(int_delay) + i] = g * shifted[i];
    }

    if (chan.freq_offset != 0.0) {
        for (size_t i = 0; i < out_len; ++i) {
            double a = 2.0 * std::numbers::pi * chan.freq_offset * double(i) / sample_rate;
            out[i] *= cfloat(float(std::cos(a)), float(std::sin(a)));
        }
    }

    if (std::isfinite(chan.snr_db)) {
        double power = 0.0;
        for (const auto& v : signal) power += double(std::norm(v));
        power = power / double(signal.size()) * chan.gain * chan.gain;
        double noise_power = power / std::pow(10.0, chan.snr_db / 10.0);
        float sigma = float(std::sqrt(noise_power / 2.0));
        GaussianRng rng(rng_seed);
        for (auto& v : out) {
            v += cfloat(sigma * rng.next(), sigma * rng.next());
        }
    }
    return out;
}

RawSampleBlock quantize(std::span<const cfloat> signal, float scale,
                        int64_t start_time, double sample_rate) {
    RawSampleBlock block;
    block.start_time = start_time;
    block.sample_rate = sample_rate;
    block.samples.resize(signal.size() * 2);
    auto sat = [](float v) -> int16_t {
        float r = std::nearbyint(v);
        if (r > 32767.0f) return 32767;
        if (r < -32768.0f) return -32768;
        return int16_t(r);
    };
    for (size_t i = 0; i < signal.size(); ++i) {
        block.samples[2 * i] = sat(scale * signal[i].real());
        block.samples[2 * i + 1] = sat(scale * signal[i].imag());
    }
    return block;
}

}  // namespace tagdsp
