#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "tagdsp/detector.hpp"

namespace tagdsp {

// Fixed-capacity FIFO over the raw I/Q stream, addressed by absolute
// sample index. Reads of discarded ranges fail explicitly.
class CircularBuffer {
public:
    explicit CircularBuffer(size_t capacity_samples);

    // Appends a contiguous block; returns the evicted [start, end) range
    // (empty if nothing was evicted). A gap resynchronizes the buffer at
    // the block's start.
    struct PushResult {
        int64_t evicted_begin = 0;
        int64_t evicted_end = 0;     // == begin when nothing evicted
        bool gap = false;
    };
    PushResult push(const RawSampleBlock& block);

    // Copies samples [start, end) into out (interleaved I/Q); false if any
    // part of the range has been evicted or not yet received.
    bool read(int64_t start, int64_t end, std::vector<int16_t>& out) const;

    int64_t head() const { return head_; }   // oldest retrievable index
    int64_t tail() const { return tail_; }   // one past newest
    size_t capacity() const { return capacity_; }

private:
    size_t capacity_;                 // in complex samples
    std::vector<int16_t> storage_;    // 2 * capacity ints, ring addressed
    int64_t head_ = 0;
    int64_t tail_ = 0;
};

enum class TagMode { Searching, Tracking };

struct TagState {
    TagCode code;
    double period_s = 1.0;            // one of {1, 2, 4, 8}
    TagMode mode = TagMode::Searching;
    double next_predicted_toa = 0.0;  // samples, Tracking only
    double last_detection_sample = 0.0;
    bool ever_detected = false;
    size_t miss_count = 0;
};

enum class TaskKind { Searching, Tracking };

struct Task {
    TaskKind kind;
    int64_t start = 0;                // sample range [start, end)
    int64_t end = 0;
    std::vector<size_t> tag_indices;  // all searching tags, or exactly one
};

struct SchedulerConfig {
    double sample_rate = 8.0e6;
    double window_s = 0.100;
    double overlap_s = 0.010;
    double track_pre_s = 0.002;       // tracking window opens this early
    double track_post_s = 0.010;      // and closes this late
    double buffer_s = 12.0;
    double demotion_timeout_s = 180.0;

    int64_t window_samples() const { return int64_t(window_s * sample_rate + 0.5); }
    int64_t overlap_samples() const { return int64_t(overlap_s * sample_rate + 0.5); }
    int64_t advance_samples() const { return window_samples() - overlap_samples(); }
};

struct SchedulerEvent {
    enum class Type {
        TaskIssued, SearchDone, TrackDetect, TrackMiss,
        Promoted, Demoted, FrontierSkip, StreamGap
    };
    Type type;
    double time_s = 0.0;              // stream time of the event
    std::string tag_id;               // when tag-specific
    int64_t range_start = 0;
    int64_t range_end = 0;
    std::string detail;
};

// The searching/tracking scheduler: sequential, one task at a time, 50/50
// amortized time split via a signed debt accumulator over reported task
// durations.
class Scheduler {
public:
    explicit Scheduler(const SchedulerConfig& cfg);

    size_t add_tag(TagCode code, double period_s);
    CircularBuffer& buffer() { return buffer_; }
    const CircularBuffer& buffer() const { return buffer_; }

    void push_samples(const RawSampleBlock& block);

    // Next runnable task, or nothing if neither queue has work ready.
    std::optional<Task> next_task();

    void complete_search(const Task& task, std::span<const Detection> detections,
                         double elapsed_s);
    // detection == nullopt means a miss (not accepted, or range evicted).
    void complete_track(const Task& task, const std::optional<Detection>& detection,
                        double elapsed_s);

    const std::vector<TagState>& tags() const { return tags_; }
    int64_t frontier() const { return frontier_; }
    double searching_time() const { return search_time_s_; }
    double tracking_time() const { return track_time_s_; }
    int64_t searched_samples() const { return searched_samples_; }
    const std::vector<SchedulerEvent>& events() const { return events_; }

private:
    double now_s() const { return double(buffer_.tail()) / cfg_.sample_rate; }
    std::optional<Task> make_search_task();
    std::optional<Task> make_track_task();
    void demote_if_stale(size_t idx);

    SchedulerConfig cfg_;
    CircularBuffer buffer_;
    std::vector<TagState> tags_;
    int64_t frontier_ = 0;
    double search_time_s_ = 0.0;
    double track_time_s_ = 0.0;
    int64_t searched_samples_ = 0;
    std::vector<SchedulerEvent> events_;
};

}  // namespace tagdsp
