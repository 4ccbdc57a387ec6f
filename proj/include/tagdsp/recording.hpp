#pragma once

#include <filesystem>

#include "tagdsp/harness.hpp"
#include "tagdsp/scheduler.hpp"

namespace tagdsp {

// On-disk recording: little-endian int16 interleaved I,Q payload plus a
// JSON sidecar with the stream metadata.
struct RecordingFile {
    RawSampleBlock block;
    double center_freq = 0.0;
    std::string creator;
};

void write_recording(const std::filesystem::path& payload_path, const RecordingFile& rec);
RecordingFile read_recording(const std::filesystem::path& payload_path);
std::filesystem::path sidecar_path(const std::filesystem::path& payload_path);

struct TagEntry {
    std::string id;
    uint64_t seed = 0;
    double period_s = 1.0;
};

struct RunConfig {
    DemodConfig demod;
    float threshold = 0.25f;
    SchedulerConfig sched;
    double search_share = 0.5;
    float quantize_scale = 8192.0f;
    std::vector<TagEntry> tags;
};

RunConfig default_run_config();
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

// One injected packet in a synthetic recording.
struct Injection {
    std::string tag_id;
    double time_s = 0.0;            // arrival time of packet sample 0
    double gain = 1.0;
    double freq_offset = 0.0;
};

struct Scenario {
    double duration_s = 1.0;
    double noise_snr_db = std::numeric_limits<double>::infinity();  // vs unit-amplitude packet
    uint64_t noise_seed = 1;
    std::vector<Injection> injections;
};

Scenario load_scenario(const std::filesystem::path& path);

struct GroundTruth {
    std::string tag_id;
    double arrival_sample = 0.0;    // fractional stream sample of packet start
};

// Deterministic synthetic recording with packets injected at the scenario's
// times; returns the ground truth alongside.
RecordingFile generate_recording(const RunConfig& cfg, const Scenario& scenario,
                                 std::vector<GroundTruth>* truth = nullptr);

std::string ground_truth_json(std::span<const GroundTruth> truth);

std::string detection_json_line(const Detection& det);
std::string event_json_line(const SchedulerEvent& ev);

// Single searching-style pass over a recording: 100 ms windows with 10 ms
// overlap, all roster codes. Returns every candidate (accepted or not).
std::vector<Detection> detect_recording(const RecordingFile& rec, const RunConfig& cfg);

struct SimulationResult {
    std::vector<SchedulerEvent> events;
    double searched_fraction_pct = 0.0;
    size_t detections = 0;
    size_t misses = 0;
    double searching_time_s = 0.0;
    double tracking_time_s = 0.0;
};

// Virtual-time scheduler simulation over a recording: samples are fed at
// the stream rate, each task costs compute_ratio x its span of samples.
SimulationResult simulate_recording(const RecordingFile& rec, const RunConfig& cfg,
                                    double compute_ratio = 0.1);

}  // namespace tagdsp
