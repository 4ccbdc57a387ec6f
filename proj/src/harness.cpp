#include "tagdsp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagdsp/codegen.hpp"

namespace tagdsp {

double perf_ratio(double total_time_s, size_t n_patterns, double window_duration_s) {
    if (total_time_s <= 0.0 || n_patterns == 0 || window_duration_s <= 0.0)
        throw std::invalid_argument("perf_ratio: inputs must be positive");
    return (total_time_s / double(n_patterns)) / window_duration_s;
}

int64_t throughput(double ratio, double search_share) {
    if (search_share <= 0.0 || search_share > 1.0)
        throw std::invalid_argument("throughput: search_share must be in (0, 1]");
    if (ratio <= 0.0) throw std::invalid_argument("throughput: ratio must be positive");
    return int64_t(std::floor(search_share / ratio));
}

std::vector<BenchResult> run_bench(const BenchScenario& scenario) {
    const auto& cfg = scenario.cfg;
    double rate = cfg.mod.sample_rate;
    size_t window_len = scenario.window_len;
    double window_duration = double(window_len) / rate;

    size_t max_patterns = *std::max_element(scenario.pattern_counts.begin(),
                                            scenario.pattern_counts.end());

    PlanCache cache;
    CodeCache code_cache;
    WindowShape shape{window_len, cfg};
    std::vector<TagCode> codes;
    std::vector<const TransformedCode*> transformed;
    for (size_t i = 0; i < max_patterns; ++i) {
        codes.push_back(gen_code(scenario.seed + i, cfg.mod, "bench-" + std::to_string(i)));
        transformed.push_back(&prepare_code(codes.back(), shape, cache, code_cache));
    }

    // One synthetic window with the first code's packet injected at a known
    // offset; everything downstream must find exactly that.
    const int64_t inject_at = 1000;
    auto replica = synth_replica(codes[0], cfg.mod.packet_samples());
    ChannelSpec chan;
    chan.delay = double(inject_at);
    auto rf = apply_channel(replica, chan, window_len, scenario.seed, rate);
    auto block = quantize(rf, scenario.quantize_scale, 0, rate);

    DetectionConfig det_cfg{scenario.threshold, 0};

    // Correctness gate before any timing is reported.
    {
        auto demod = demodulate_window(block, cfg, cache);
        auto dets = detect(demod.d, demod.u, transformed, det_cfg, rate, cache);
        bool found = false;
        for (const auto& det : dets) {
            if (det.tag_id == codes[0].tag_id) {
                double err = std::abs(det.toa_seconds * rate - double(inject_at));
                found = det.accepted && err < 0.5;
            } else if (det.accepted) {
                throw std::runtime_error("run_bench: spurious detection of " + det.tag_id);
            }
        }
        if (!found)
            throw std::runtime_error("run_bench: injected packet not detected; refusing to time");
    }

    std::vector<BenchResult> results;
    for (size_t patterns : scenario.pattern_counts) {
        std::span<const TransformedCode* const> subset(transformed.data(), patterns);
        for (size_t rep = 0; rep < scenario.repeats; ++rep) {
            BenchResult r;
            r.n_patterns = patterns;
            r.repeat = rep;
            r.window_duration_s = window_duration;
            DetectTimings dt;
            auto t0 = std::chrono::steady_clock::now();
            for (size_t w = 0; w < scenario.windows; ++w) {
                auto td0 = std::chrono::steady_clock::now();
                auto demod = demodulate_window(block, cfg, cache);
                auto td1 = std::chrono::steady_clock::now();
                r.stages.demodulation_s += std::chrono::duration<double>(td1 - td0).count();
                detect(demod.d, demod.u, subset, det_cfg, rate, cache, &dt);
            }
            auto t1 = std::chrono::steady_clock::now();
            r.stages.correlation_s = dt.correlation_s;
            r.stages.peak_stats_s = dt.peak_stats_s;
            r.total_time_s = std::chrono::duration<double>(t1 - t0).count() / double(scenario.windows);
            r.stages.demodulation_s /= double(scenario.windows);
            r.stages.correlation_s /= double(scenario.windows);
            r.stages.peak_stats_s /= double(scenario.windows);
            r.ratio = perf_ratio(r.total_time_s, patterns, window_duration);
            results.push_back(r);
        }
    }
    return results;
}

std::string bench_csv(std::span<const BenchResult> results) {
    std::ostringstream os;
    os << "patterns,repeat,total_seconds,ratio,demod_seconds,corr_seconds,peak_stats_seconds\n";
    for (const auto& r : results) {
        os << r.n_patterns << ',' << r.repeat << ',' << r.total_time_s << ',' << r.ratio << ','
           << r.stages.demodulation_s << ',' << r.stages.correlation_s << ','
           << r.stages.peak_stats_s << '\n';
    }
    return os.str();
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string bench_summary_json(std::span<const BenchResult> results, double search_share) {
    std::map<size_t, std::vector<double>> by_patterns;
    for (const auto& r : results) by_patterns[r.n_patterns].push_back(r.ratio);
    nlohmann::json summary;
    summary["per_patterns"] = nlohmann::json::array();
    double last_median = 0.0;
    for (const auto& [patterns, ratios] : by_patterns) {
        double med = median(ratios);
        double mn = *std::min_element(ratios.begin(), ratios.end());
        double mx = *std::max_element(ratios.begin(), ratios.end());
        summary["per_patterns"].push_back(
            {{"patterns", patterns}, {"median_ratio", med}, {"min_ratio", mn}, {"max_ratio", mx}});
        last_median = med;
    }
    if (last_median > 0.0) {
        summary["search_share"] = search_share;
        summary["throughput_tags"] = throughput(last_median, search_share);
    }
    return summary.dump(2);
}

}  // namespace tagdsp
