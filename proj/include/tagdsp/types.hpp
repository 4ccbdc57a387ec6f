#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagdsp {

using cfloat = std::complex<float>;

// Raw interleaved 16-bit I/Q, the wire/disk form of RF data.
struct RawSampleBlock {
    std::vector<int16_t> samples;   // interleaved I,Q pairs
    int64_t start_time = 0;         // sample index since stream start
    double sample_rate = 8.0e6;

    size_t num_complex() const { return samples.size() / 2; }
};

struct ModulationParams {
    double sample_rate = 8.0e6;
    double bit_rate = 1.0e6;
    double freq_one = 250.0e3;      // tone for a 1 symbol, relative to baseband center
    double freq_zero = -250.0e3;
    size_t packet_bits = 8192;

    size_t samples_per_bit() const {
        double spb = sample_rate / bit_rate;
        auto n = static_cast<size_t>(spb + 0.5);
        if (n < 1 || std::abs(spb - double(n)) > 1e-9)
            throw std::invalid_argument("sample_rate / bit_rate must be a positive integer");
        return n;
    }
    size_t packet_samples() const { return packet_bits * samples_per_bit(); }
    double packet_duration() const { return double(packet_bits) / bit_rate; }
};

// A tag's pseudorandom packet plus its modulation parameters. The
// frequency-domain demodulated replica is cached per window shape in the
// detector's code cache, not here.
struct TagCode {
    std::string tag_id;
    std::vector<uint8_t> bits;      // one per packet bit, 0 or 1
    ModulationParams mod;
};

// Test-signal channel model: delay, gain, carrier offset, additive noise.
struct ChannelSpec {
    double delay = 0.0;             // samples, may be fractional
    double snr_db = std::numeric_limits<double>::infinity();
    double gain = 1.0;
    double freq_offset = 0.0;       // Hz
};

}  // namespace tagdsp
