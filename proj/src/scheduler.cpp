#include "tagdsp/scheduler.hpp"

#include <algorithm>

namespace tagdsp {

CircularBuffer::CircularBuffer(size_t capacity_samples)
    : capacity_(capacity_samples), storage_(2 * capacity_samples, 0) {}

CircularBuffer::PushResult CircularBuffer::push(const RawSampleBlock& block) {
    PushResult res;
    if (block.start_time != tail_) {
        // Gap in the stream: resynchronize at the new start.
        res.gap = true;
        res.evicted_begin = head_;
        res.evicted_end = tail_;
        head_ = tail_ = block.start_time;
    }
    size_t n = block.num_complex();
    for (size_t i = 0; i < n; ++i) {
        size_t slot = size_t(uint64_t(tail_ + int64_t(i)) % capacity_);
        storage_[2 * slot] = block.samples[2 * i];
        storage_[2 * slot + 1] = block.samples[2 * i + 1];
    }
    tail_ += int64_t(n);
    if (tail_ - head_ > int64_t(capacity_)) {
        if (!res.gap) {
            res.evicted_begin = head_;
            res.evicted_end = tail_ - int64_t(capacity_);
        }
        head_ = tail_ - int64_t(capacity_);
    }
    return res;
}

bool CircularBuffer::read(int64_t start, int64_t end, std::vector<int16_t>& out) const {
    if (start < head_ || end > tail_ || start > end) return false;
    out.resize(size_t(end - start) * 2);
    for (int64_t t = start; t < end; ++t) {
        size_t slot = size_t(uint64_t(t) % capacity_);
        out[size_t(t - start) * 2] = storage_[2 * slot];
        out[size_t(t - start) * 2 + 1] = storage_[2 * slot + 1];
    }
    return true;
}

Scheduler::Scheduler(const SchedulerConfig& cfg)
    : cfg_(cfg), buffer_(size_t(cfg.buffer_s * cfg.sample_rate + 0.5)) {}

size_t Scheduler::add_tag(TagCode code, double period_s) {
    TagState st;
    st.code = std::move(code);
    st.period_s = period_s;
    tags_.push_back(std::move(st));
    return tags_.size() - 1;
}

void Scheduler::push_samples(const RawSampleBlock& block) {
    auto res = buffer_.push(block);
    if (res.gap) {
        events_.push_back({SchedulerEvent::Type::StreamGap, now_s(), "",
                           res.evicted_begin, res.evicted_end, "stream resynchronized"});
    }
}

std::optional<Task> Scheduler::make_search_task() {
    bool any_searching = std::any_of(tags_.begin(), tags_.end(), [](const TagState& t) {
        return t.mode == TagMode::Searching;
    });
    if (!any_searching) return std::nullopt;
    if (frontier_ < buffer_.head()) {
        // Fell behind eviction under overload: skip to the oldest buffered
        // sample and log the dropped span.
        events_.push_back({SchedulerEvent::Type::FrontierSkip, now_s(), "",
                           frontier_, buffer_.head(), "dropped span"});
        frontier_ = buffer_.head();
    }
    int64_t end = frontier_ + cfg_.window_samples();
    if (end > buffer_.tail()) return std::nullopt;   // not fully buffered yet
    Task task;
    task.kind = TaskKind::Searching;
    task.start = frontier_;
    task.end = end;
    for (size_t i = 0; i < tags_.size(); ++i)
        if (tags_[i].mode == TagMode::Searching) task.tag_indices.push_back(i);
    return task;
}

std::optional<Task> Scheduler::make_track_task() {
    // Oldest due prediction wins; ties broken by tag_id for determinism.
    // Window is [toa - pre, toa + post); the packet plus a guard band.
    int64_t pre = int64_t(cfg_.track_pre_s * cfg_.sample_rate + 0.5);
    int64_t post = int64_t(cfg_.track_post_s * cfg_.sample_rate + 0.5);
    ssize_t best = -1;
    for (size_t i = 0; i < tags_.size(); ++i) {
        const TagState& t = tags_[i];
        if (t.mode != TagMode::Tracking) continue;
        int64_t end = int64_t(t.next_predicted_toa) + post;
        if (end > buffer_.tail()) continue;   // packet not fully received yet
        if (best < 0 || t.next_predicted_toa < tags_[size_t(best)].next_predicted_toa ||
            (t.next_predicted_toa == tags_[size_t(best)].next_predicted_toa &&
             t.code.tag_id < tags_[size_t(best)].code.tag_id))
            best = ssize_t(i);
    }
    if (best < 0) return std::nullopt;
    const TagState& t = tags_[size_t(best)];
    Task task;
    task.kind = TaskKind::Tracking;
    task.start = int64_t(t.next_predicted_toa) - pre;
    task.end = int64_t(t.next_predicted_toa) + post;
    task.tag_indices.push_back(size_t(best));
    return task;
}

std::optional<Task> Scheduler::next_task() {
    // debt > 0 means searching has consumed more time than tracking.
    bool prefer_tracking = (search_time_s_ - track_time_s_) > 0.0;
    auto first = prefer_tracking ? make_track_task() : make_search_task();
    if (!first) first = prefer_tracking ? make_search_task() : make_track_task();
    if (first) {
        events_.push_back({SchedulerEvent::Type::TaskIssued, now_s(),
                           first->tag_indices.size() == 1 && first->kind == TaskKind::Tracking
                               ? tags_[first->tag_indices[0]].code.tag_id
                               : "",
                           first->start, first->end,
                           first->kind == TaskKind::Searching ? "searching" : "tracking"});
    }
    return first;
}

void Scheduler::complete_search(const Task& task, std::span<const Detection> detections,
                                double elapsed_s) {
    frontier_ = task.start + cfg_.advance_samples();
    searched_samples_ += task.end - task.start;
    search_time_s_ += elapsed_s;
    events_.push_back({SchedulerEvent::Type::SearchDone, now_s(), "",
                       task.start, task.end, ""});
    for (const auto& det : detections) {
        if (!det.accepted) continue;
        for (auto idx : task.tag_indices) {
            TagState& t = tags_[idx];
            if (t.code.tag_id != det.tag_id || t.mode != TagMode::Searching) continue;
            t.mode = TagMode::Tracking;
            double toa_samples = det.toa_seconds * cfg_.sample_rate;
            t.next_predicted_toa = toa_samples + t.period_s * cfg_.sample_rate;
            t.last_detection_sample = toa_samples;
            t.ever_detected = true;
            t.miss_count = 0;
            events_.push_back({SchedulerEvent::Type::Promoted, now_s(), t.code.tag_id,
                               int64_t(toa_samples), 0, ""});
        }
    }
}

void Scheduler::demote_if_stale(size_t idx) {
    TagState& t = tags_[idx];
    double since = now_s() - t.last_detection_sample / cfg_.sample_rate;
    if (since > cfg_.demotion_timeout_s) {
        t.mode = TagMode::Searching;
        events_.push_back({SchedulerEvent::Type::Demoted, now_s(), t.code.tag_id, 0, 0, ""});
    }
}

void Scheduler::complete_track(const Task& task, const std::optional<Detection>& detection,
                               double elapsed_s) {
    track_time_s_ += elapsed_s;
    TagState& t = tags_[task.tag_indices.at(0)];
    double period = t.period_s * cfg_.sample_rate;
    if (detection && detection->accepted) {
        double toa_samples = detection->toa_seconds * cfg_.sample_rate;
        t.next_predicted_toa = toa_samples + period;
        t.last_detection_sample = toa_samples;
        t.miss_count = 0;
        events_.push_back({SchedulerEvent::Type::TrackDetect, now_s(), t.code.tag_id,
                           int64_t(toa_samples), 0, ""});
    } else {
        t.next_predicted_toa += period;
        ++t.miss_count;
        events_.push_back({SchedulerEvent::Type::TrackMiss, now_s(), t.code.tag_id,
                           task.start, task.end, ""});
        demote_if_stale(task.tag_indices.at(0));
    }
}

}  // namespace tagdsp
