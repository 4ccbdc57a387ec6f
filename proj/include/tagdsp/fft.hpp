#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tagdsp/types.hpp"

namespace tagdsp {

// Owns FFTW plans and reusable work arrays, keyed by shape. Plans are
// created with pinned input/output buffers and arrays are never released;
// after the first call for a given shape no further allocation happens.
// Single-owner context: one task at a time per cache.
class PlanCache {
public:
    struct Stats {
        uint64_t plans_created = 0;
        uint64_t buffers_allocated = 0;
        uint64_t forward_execs = 0;
        uint64_t inverse_execs = 0;
        uint64_t plan_hits = 0;
        uint64_t buffer_hits = 0;
    };

    PlanCache() = default;
    ~PlanCache();
    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    // out = DFT(in); in.size() == out.size() == transform size.
    void forward(std::span<const cfloat> in, std::span<cfloat> out);
    // out = IDFT(in) / n (normalized inverse).
    void inverse(std::span<const cfloat> in, std::span<cfloat> out);

    // Named complex work array of exactly n elements, allocated once per
    // (name, n) and reused.
    std::vector<cfloat>& work(const std::string& name, size_t n);
    std::vector<float>& work_real(const std::string& name, size_t n);

    const Stats& stats() const { return stats_; }

private:
    struct Plan;
    Plan& get_plan(size_t n, int sign);

    std::map<std::pair<size_t, int>, Plan*> plans_;
    std::map<std::pair<std::string, size_t>, std::vector<cfloat>> work_;
    std::map<std::pair<std::string, size_t>, std::vector<float>> work_real_;
    Stats stats_;
};

// Smallest m >= n whose prime factors are all in {2, 3, 5, 7}.
size_t pad_length(size_t n);

}  // namespace tagdsp
