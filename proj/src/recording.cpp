#include "tagdsp/recording.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tagdsp/codegen.hpp"

using nlohmann::json;

namespace tagdsp {

static_assert(std::endian::native == std::endian::little,
              "recording payload is little-endian int16");

std::filesystem::path sidecar_path(const std::filesystem::path& payload_path) {
    auto p = payload_path;
    p += ".meta.json";
    return p;
}

void write_recording(const std::filesystem::path& payload_path, const RecordingFile& rec) {
    std::ofstream out(payload_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + payload_path.string());
    out.write(reinterpret_cast<const char*>(rec.block.samples.data()),
              std::streamsize(rec.block.samples.size() * sizeof(int16_t)));
    if (!out) throw std::runtime_error("write failed: " + payload_path.string());

    json meta = {
        {"sample_rate", rec.block.sample_rate},
        {"start_time", rec.block.start_time},
        {"center_freq", rec.center_freq},
        {"creator", rec.creator},
    };
    std::ofstream ms(sidecar_path(payload_path));
    if (!ms) throw std::runtime_error("cannot write " + sidecar_path(payload_path).string());
    ms << meta.dump(2) << '\n';
}

RecordingFile read_recording(const std::filesystem::path& payload_path) {
    std::ifstream in(payload_path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot read " + payload_path.string());
    auto bytes = size_t(in.tellg());
    if (bytes % 4 != 0)
        throw std::runtime_error("malformed recording (payload not whole I/Q pairs): " +
                                 payload_path.string());
    RecordingFile rec;
    rec.block.samples.resize(bytes / 2);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(rec.block.samples.data()), std::streamsize(bytes));
    if (!in) throw std::runtime_error("read failed: " + payload_path.string());

    std::ifstream ms(sidecar_path(payload_path));
    if (!ms) throw std::runtime_error("missing sidecar " + sidecar_path(payload_path).string());
    json meta = json::parse(ms);
    rec.block.sample_rate = meta.at("sample_rate").get<double>();
    rec.block.start_time = meta.at("start_time").get<int64_t>();
    rec.center_freq = meta.value("center_freq", 0.0);
    rec.creator = meta.value("creator", "");
    if (rec.block.sample_rate <= 0.0)
        throw std::runtime_error("invalid sample_rate in " + sidecar_path(payload_path).string());
    return rec;
}

RunConfig default_run_config() {
    return RunConfig{};
}

namespace {

void parse_run_config(const json& j, RunConfig& cfg) {
    if (j.contains("modulation")) {
        const auto& m = j["modulation"];
        auto& mod = cfg.demod.mod;
        mod.sample_rate = m.value("sample_rate", mod.sample_rate);
        mod.bit_rate = m.value("bit_rate", mod.bit_rate);
        mod.freq_one = m.value("freq_one", mod.freq_one);
        mod.freq_zero = m.value("freq_zero", mod.freq_zero);
        mod.packet_bits = m.value("packet_bits", mod.packet_bits);
    }
    if (j.contains("bandpass")) {
        const auto& b = j["bandpass"];
        cfg.demod.bandpass_center = b.value("center", cfg.demod.bandpass_center);
        cfg.demod.bandpass_width = b.value("width", cfg.demod.bandpass_width);
        cfg.demod.bandpass_taps = b.value("taps", cfg.demod.bandpass_taps);
    }
    cfg.demod.lo_freq = j.value("lo_freq", cfg.demod.lo_freq);
    if (j.contains("detection"))
        cfg.threshold = j["detection"].value("threshold", cfg.threshold);
    if (j.contains("scheduler")) {
        const auto& s = j["scheduler"];
        cfg.sched.window_s = s.value("window_s", cfg.sched.window_s);
        cfg.sched.overlap_s = s.value("overlap_s", cfg.sched.overlap_s);
        cfg.sched.track_pre_s = s.value("track_pre_s", cfg.sched.track_pre_s);
        cfg.sched.track_post_s = s.value("track_post_s", cfg.sched.track_post_s);
        cfg.sched.buffer_s = s.value("buffer_s", cfg.sched.buffer_s);
        cfg.sched.demotion_timeout_s = s.value("demotion_timeout_s", cfg.sched.demotion_timeout_s);
        cfg.search_share = s.value("search_share", cfg.search_share);
    }
    cfg.quantize_scale = j.value("quantize_scale", cfg.quantize_scale);
    if (j.contains("tags")) {
        cfg.tags.clear();
        for (const auto& t : j["tags"]) {
            TagEntry e;
            e.id = t.at("id").get<std::string>();
            e.seed = t.at("seed").get<uint64_t>();
            e.period_s = t.value("period_s", 1.0);
            cfg.tags.push_back(e);
        }
    }
    cfg.sched.sample_rate = cfg.demod.mod.sample_rate;
    if (cfg.sched.overlap_s >= cfg.sched.window_s)
        throw std::invalid_argument("config: overlap must be smaller than the window");
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    RunConfig cfg = default_run_config();
    parse_run_config(json::parse(in), cfg);
    return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
    json j = {
        {"modulation",
         {{"sample_rate", cfg.demod.mod.sample_rate},
          {"bit_rate", cfg.demod.mod.bit_rate},
          {"freq_one", cfg.demod.mod.freq_one},
          {"freq_zero", cfg.demod.mod.freq_zero},
          {"packet_bits", cfg.demod.mod.packet_bits}}},
        {"bandpass",
         {{"center", cfg.demod.bandpass_center},
          {"width", cfg.demod.bandpass_width},
          {"taps", cfg.demod.bandpass_taps}}},
        {"lo_freq", cfg.demod.lo_freq},
        {"detection", {{"threshold", cfg.threshold}}},
        {"scheduler",
         {{"window_s", cfg.sched.window_s},
          {"overlap_s", cfg.sched.overlap_s},
          {"track_pre_s", cfg.sched.track_pre_s},
          {"track_post_s", cfg.sched.track_post_s},
          {"buffer_s", cfg.sched.buffer_s},
          {"demotion_timeout_s", cfg.sched.demotion_timeout_s},
          {"search_share", cfg.search_share}}},
        {"quantize_scale", cfg.quantize_scale},
    };
    j["tags"] = json::array();
    for (const auto& t : cfg.tags)
        j["tags"].push_back({{"id", t.id}, {"seed", t.seed}, {"period_s", t.period_s}});
    return j.dump(2);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scenario " + path.string());
    json j = json::parse(in);
    Scenario sc;
    sc.duration_s = j.value("duration_s", sc.duration_s);
    if (j.contains("noise_snr_db") && !j["noise_snr_db"].is_null())
        sc.noise_snr_db = j["noise_snr_db"].get<double>();
    sc.noise_seed = j.value("noise_seed", sc.noise_seed);
    for (const auto& inj : j.value("injections", json::array())) {
        Injection i;
        i.tag_id = inj.at("tag_id").get<std::string>();
        i.time_s = inj.at("time_s").get<double>();
        i.gain = inj.value("gain", 1.0);
        i.freq_offset = inj.value("freq_offset", 0.0);
        sc.injections.push_back(i);
    }
    return sc;
}

RecordingFile generate_recording(const RunConfig& cfg, const Scenario& scenario,
                                 std::vector<GroundTruth>* truth) {
    double rate = cfg.demod.mod.sample_rate;
    auto total = size_t(scenario.duration_s * rate + 0.5);
    std::vector<cfloat> stream(total, cfloat{0.0f, 0.0f});

    std::map<std::string, TagCode> roster;
    for (const auto& t : cfg.tags)
        roster.emplace(t.id, gen_code(t.seed, cfg.demod.mod, t.id));

    for (const auto& inj : scenario.injections) {
        auto it = roster.find(inj.tag_id);
        if (it == roster.end())
            throw std::runtime_error("scenario references unknown tag " + inj.tag_id);
        auto replica = synth_replica(it->second, cfg.demod.mod.packet_samples());
        double arrival = inj.time_s * rate;
        auto base = int64_t(std::floor(arrival));
        ChannelSpec chan;
        chan.delay = arrival - double(base);
        chan.gain = inj.gain;
        chan.freq_offset = inj.freq_offset;
        size_t span = replica.size() + 2;
        auto shifted = apply_channel(replica, chan, span, 0, rate);
        for (size_t i = 0; i < span; ++i) {
            int64_t idx = base + int64_t(i);
            if (idx >= 0 && idx < int64_t(total)) stream[size_t(idx)] += shifted[i];
        }
        if (truth) truth->push_back({inj.tag_id, arrival});
    }

    if (std::isfinite(scenario.noise_snr_db)) {
        // Noise power referenced to a unit-amplitude packet (|s|^2 = 1).
        double noise_power = std::pow(10.0, -scenario.noise_snr_db / 10.0);
        float sigma = float(std::sqrt(noise_power / 2.0));
        GaussianRng rng(scenario.noise_seed);
        for (auto& v : stream) v += cfloat(sigma * rng.next(), sigma * rng.next());
    }

    RecordingFile rec;
    rec.block = quantize(stream, cfg.quantize_scale, 0, rate);
    rec.creator = "tagdsp generate";
    return rec;
}

std::string ground_truth_json(std::span<const GroundTruth> truth) {
    json j = json::array();
    for (const auto& g : truth)
        j.push_back({{"tag_id", g.tag_id}, {"arrival_sample", g.arrival_sample}});
    return j.dump(2);
}

std::string detection_json_line(const Detection& det) {
    json j = {
        {"tag_id", det.tag_id},
        {"toa_seconds", det.toa_seconds},
        {"peak_index", det.peak_index},
        {"subsample_offset", det.subsample_offset},
        {"w_c", det.w_c},
        {"q", det.q},
        {"p_c", det.p_c},
        {"score", det.score},
        {"accepted", det.accepted},
        {"partial", det.partial},
    };
    return j.dump();
}

std::string event_json_line(const SchedulerEvent& ev) {
    static const char* names[] = {"task_issued", "search_done", "track_detect", "track_miss",
                                  "promoted", "demoted", "frontier_skip", "stream_gap"};
    json j = {
        {"event", names[size_t(ev.type)]},
        {"time_s", ev.time_s},
        {"tag_id", ev.tag_id},
        {"range_start", ev.range_start},
        {"range_end", ev.range_end},
        {"detail", ev.detail},
    };
    return j.dump();
}

std::vector<Detection> detect_recording(const RecordingFile& rec, const RunConfig& cfg) {
    double rate = rec.block.sample_rate;
    auto window = size_t(cfg.sched.window_s * rate + 0.5);
    auto advance = size_t((cfg.sched.window_s - cfg.sched.overlap_s) * rate + 0.5);
    size_t total = rec.block.num_complex();

    PlanCache cache;
    CodeCache code_cache;
    DemodConfig demod_cfg = cfg.demod;
    demod_cfg.mod.sample_rate = rate;
    WindowShape shape{window, demod_cfg};

    std::vector<const TransformedCode*> transformed;
    for (const auto& t : cfg.tags) {
        auto code = gen_code(t.seed, demod_cfg.mod, t.id);
        transformed.push_back(&prepare_code(code, shape, cache, code_cache));
    }

    std::vector<Detection> all;
    for (size_t start = 0; start + window <= total; start += advance) {
        RawSampleBlock blk;
        blk.sample_rate = rate;
        blk.start_time = rec.block.start_time + int64_t(start);
        blk.samples.assign(rec.block.samples.begin() + std::ptrdiff_t(2 * start),
                           rec.block.samples.begin() + std::ptrdiff_t(2 * (start + window)));
        auto demod = demodulate_window(blk, demod_cfg, cache);
        DetectionConfig det_cfg{cfg.threshold, blk.start_time};
        auto dets = detect(demod.d, demod.u, transformed, det_cfg, rate, cache);
        all.insert(all.end(), dets.begin(), dets.end());
    }
    return all;
}

SimulationResult simulate_recording(const RecordingFile& rec, const RunConfig& cfg,
                                    double compute_ratio) {
    double rate = rec.block.sample_rate;
    size_t total = rec.block.num_complex();

    Scheduler sched(cfg.sched);
    PlanCache cache;
    CodeCache code_cache;
    DemodConfig demod_cfg = cfg.demod;
    demod_cfg.mod.sample_rate = rate;

    auto search_window = size_t(cfg.sched.window_s * rate + 0.5);
    WindowShape search_shape{search_window, demod_cfg};
    auto track_window =
        size_t((cfg.sched.track_pre_s + cfg.sched.track_post_s) * rate + 0.5);
    WindowShape track_shape{track_window, demod_cfg};

    std::map<std::string, TagCode> roster;
    for (const auto& t : cfg.tags) {
        auto code = gen_code(t.seed, demod_cfg.mod, t.id);
        roster.emplace(t.id, code);
        sched.add_tag(code, t.period_s);
    }

    SimulationResult result;
    int64_t produced = 0;
    double clock_s = 0.0;
    auto feed = [&](int64_t upto) {
        upto = std::min(upto, int64_t(total));
        if (upto <= produced) return;
        RawSampleBlock blk;
        blk.sample_rate = rate;
        blk.start_time = produced;
        blk.samples.assign(rec.block.samples.begin() + std::ptrdiff_t(2 * produced),
                           rec.block.samples.begin() + std::ptrdiff_t(2 * upto));
        sched.push_samples(blk);
        produced = upto;
    };

    std::vector<int16_t> raw;
    while (true) {
        feed(int64_t(clock_s * rate));
        auto task = sched.next_task();
        if (!task) {
            if (produced >= int64_t(total)) break;
            clock_s += 0.001;   // idle until more samples arrive
            continue;
        }
        double task_span_s = double(task->end - task->start) / rate;
        double elapsed = compute_ratio * task_span_s;

        if (task->kind == TaskKind::Searching) {
            bool ok = sched.buffer().read(task->start, task->end, raw);
            std::vector<Detection> dets;
            if (ok) {
                RawSampleBlock blk{std::move(raw), task->start, rate};
                auto demod = demodulate_window(blk, demod_cfg, cache);
                raw = std::move(blk.samples);
                std::vector<const TransformedCode*> transformed;
                for (auto idx : task->tag_indices) {
                    const auto& code = roster.at(sched.tags()[idx].code.tag_id);
                    transformed.push_back(&prepare_code(code, search_shape, cache, code_cache));
                }
                DetectionConfig det_cfg{cfg.threshold, task->start};
                dets = detect(demod.d, demod.u, transformed, det_cfg, rate, cache);
            }
            sched.complete_search(*task, dets, elapsed);
            for (const auto& d : dets)
                if (d.accepted) ++result.detections;
        } else {
            std::optional<Detection> best;
            if (sched.buffer().read(task->start, task->end, raw)) {
                RawSampleBlock blk{std::move(raw), task->start, rate};
                auto demod = demodulate_window(blk, demod_cfg, cache);
                raw = std::move(blk.samples);
                const auto& code = roster.at(sched.tags()[task->tag_indices[0]].code.tag_id);
                const auto& tc = prepare_code(code, track_shape, cache, code_cache);
                const TransformedCode* tcs[] = {&tc};
                DetectionConfig det_cfg{cfg.threshold, task->start};
                auto dets = detect(demod.d, demod.u, tcs, det_cfg, rate, cache);
                if (!dets.empty() && dets[0].accepted) best = dets[0];
            }
            if (best)
                ++result.detections;
            else
                ++result.misses;
            sched.complete_track(*task, best, elapsed);
        }
        clock_s += elapsed;
    }

    result.events = sched.events();
    result.searching_time_s = sched.searching_time();
    result.tracking_time_s = sched.tracking_time();
    int64_t covered = sched.frontier() - 0;
    if (covered > 0)
        result.searched_fraction_pct = 100.0 * double(sched.searched_samples()) / double(covered);
    return result;
}

}  // namespace tagdsp
