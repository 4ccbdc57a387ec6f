#pragma once

#include <span>

#include "tagdsp/types.hpp"

namespace tagdsp {

// Counter-free splitmix64 step; fixed across platforms so generated codes
// and noise are reproducible everywhere.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic standard-normal source built on splitmix64 (Box-Muller).
class GaussianRng {
public:
    explicit GaussianRng(uint64_t seed) : state_(seed) {}
    float next();

private:
    uint64_t state_;
    bool have_spare_ = false;
    float spare_ = 0.0f;
};

// Pseudorandom packet bits for a tag, deterministic per seed.
TagCode gen_code(uint64_t seed, const ModulationParams& params,
                 const std::string& tag_id = "");

// Noise-free continuous-phase FSK packet, unit amplitude, zero-padded to
// padded_len samples.
std::vector<cfloat> synth_replica(const TagCode& code, size_t padded_len);

// Delay (fractionally, via a frequency-domain phase ramp), scale, shift and
// embed the signal in white Gaussian noise. Integer delays are exact shifts.
std::vector<cfloat> apply_channel(std::span<const cfloat> signal, const ChannelSpec& chan,
                                  size_t out_len, uint64_t rng_seed, double sample_rate);

// Round scale*sample to int16 with saturation, interleave I then Q.
RawSampleBlock quantize(std::span<const cfloat> signal, float scale,
                        int64_t start_time = 0, double sample_rate = 8.0e6);

}  // namespace tagdsp
