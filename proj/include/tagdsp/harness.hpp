#pragma once

#include "tagdsp/detector.hpp"

namespace tagdsp {

struct StageTimings {
    double demodulation_s = 0.0;
    double correlation_s = 0.0;
    double peak_stats_s = 0.0;
};

struct BenchResult {
    size_t n_patterns = 0;
    size_t repeat = 0;
    double window_duration_s = 0.0;
    double total_time_s = 0.0;     // whole task, per window
    double ratio = 0.0;            // (total / patterns) / window duration
    StageTimings stages;
};

// (total_time / n_patterns) / window_duration. Lower is better; 1.0 means
// one tag searchable continuously.
double perf_ratio(double total_time_s, size_t n_patterns, double window_duration_s);

// Tags searchable without dropping samples given the searching time share.
int64_t throughput(double ratio, double search_share = 0.5);

struct BenchScenario {
    DemodConfig cfg;
    size_t window_len = 0;
    std::vector<size_t> pattern_counts = {1, 2, 4, 8, 16, 32, 64, 128};
    size_t repeats = 10;
    size_t windows = 10;           // RF windows per measurement
    uint64_t seed = 1;
    float quantize_scale = 8192.0f;
    float threshold = 0.25f;
};

// Seeded end-to-end benchmark: demodulate_window + detect per window, with
// a correctness gate (the injected tag must be found) before any timing is
// reported. Detection outputs are bit-stable across repeats.
std::vector<BenchResult> run_bench(const BenchScenario& scenario);

std::string bench_csv(std::span<const BenchResult> results);
std::string bench_summary_json(std::span<const BenchResult> results, double search_share);

}  // namespace tagdsp
