#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "tagdsp/recording.hpp"

using namespace tagdsp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tagdsp-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig small_config() {
    RunConfig cfg;
    cfg.demod.mod.sample_rate = 1.0e6;
    cfg.demod.mod.bit_rate = 125.0e3;
    cfg.demod.mod.freq_one = 31.25e3;
    cfg.demod.mod.freq_zero = -31.25e3;
    cfg.demod.mod.packet_bits = 1024;
    cfg.demod.bandpass_width = 187.5e3;
    cfg.sched.sample_rate = 1.0e6;
    cfg.sched.window_s = 0.020;
    cfg.sched.overlap_s = 0.010;   // window must exceed packet (8.192 ms)
    cfg.sched.buffer_s = 2.0;
    cfg.tags = {{"A", 100, 1.0}, {"B", 101, 1.0}};
    return cfg;
}

}  // namespace

TEST_CASE("recording round trip preserves payload bytes") {
    TempDir tmp;
    RecordingFile rec;
    rec.block.samples = {1, -2, 300, -400, 32767, -32768};
    rec.block.sample_rate = 1.0e6;
    rec.block.start_time = 42;
    rec.center_freq = 434.0e6;
    auto path = tmp.path / "rt.iq";
    write_recording(path, rec);
    auto back = read_recording(path);
    CHECK(back.block.samples == rec.block.samples);
    CHECK(back.block.sample_rate == rec.block.sample_rate);
    CHECK(back.block.start_time == rec.block.start_time);
    CHECK(back.center_freq == rec.center_freq);
}

TEST_CASE("truncated payload is an explicit format error") {
    TempDir tmp;
    auto path = tmp.path / "bad.iq";
    std::ofstream out(path, std::ios::binary);
    out.write("\x01\x02\x03\x04\x05\x06", 6);   // 3 int16 = odd pairs
    out.close();
    CHECK_THROWS_WITH_AS(read_recording(path).block.num_complex(),
                         doctest::Contains("malformed"), std::runtime_error);
}

TEST_CASE("run config round trips through JSON") {
    TempDir tmp;
    auto cfg = small_config();
    auto path = tmp.path / "cfg.json";
    std::ofstream(path) << run_config_json(cfg);
    auto back = load_run_config(path);
    CHECK(back.demod.mod.sample_rate == cfg.demod.mod.sample_rate);
    CHECK(back.demod.mod.packet_bits == cfg.demod.mod.packet_bits);
    CHECK(back.sched.window_s == cfg.sched.window_s);
    CHECK(back.tags.size() == 2);
    CHECK(back.tags[1].id == "B");
    CHECK(back.tags[1].seed == 101);
}

TEST_CASE("invalid config is rejected") {
    TempDir tmp;
    auto path = tmp.path / "bad.json";
    std::ofstream(path) << R"({"scheduler": {"window_s": 0.01, "overlap_s": 0.02}})";
    CHECK_THROWS_AS(load_run_config(path), std::invalid_argument);
}

TEST_CASE("generate-detect closure, noise free") {
    auto cfg = small_config();
    Scenario sc;
    sc.duration_s = 0.06;
    sc.injections = {{"A", 0.010, 1.0, 0.0}};   // packet at 10 ms
    std::vector<GroundTruth> truth;
    auto rec = generate_recording(cfg, sc, &truth);
    REQUIRE(truth.size() == 1);

    auto dets = detect_recording(rec, cfg);
    bool found = false;
    for (const auto& d : dets) {
        if (!d.accepted) continue;
        CHECK(d.tag_id == "A");
        double err = std::abs(d.toa_seconds * 1.0e6 - truth[0].arrival_sample);
        if (d.tag_id == "A" && err <= 0.05) found = true;
    }
    CHECK(found);
}

TEST_CASE("generate-detect closure, two tags offset in time") {
    auto cfg = small_config();
    Scenario sc;
    sc.duration_s = 0.08;
    sc.injections = {{"A", 0.010, 1.0, 0.0}, {"B", 0.030, 1.0, 0.0}};
    std::vector<GroundTruth> truth;
    auto rec = generate_recording(cfg, sc, &truth);
    auto dets = detect_recording(rec, cfg);
    bool found_a = false, found_b = false;
    for (const auto& d : dets) {
        if (!d.accepted) continue;
        double toa = d.toa_seconds * 1.0e6;
        if (d.tag_id == "A" && std::abs(toa - truth[0].arrival_sample) <= 0.5) found_a = true;
        if (d.tag_id == "B" && std::abs(toa - truth[1].arrival_sample) <= 0.5) found_b = true;
    }
    CHECK(found_a);
    CHECK(found_b);
}

TEST_CASE("empty scenario produces pure noise of the requested length") {
    auto cfg = small_config();
    Scenario sc;
    sc.duration_s = 0.03;
    sc.noise_snr_db = 20.0;
    auto rec = generate_recording(cfg, sc, nullptr);
    CHECK(rec.block.num_complex() == 30000);
    bool nonzero = false;
    for (auto v : rec.block.samples) nonzero |= (v != 0);
    CHECK(nonzero);

    auto dets = detect_recording(rec, cfg);
    for (const auto& d : dets) CHECK(!d.accepted);
}

TEST_CASE("detection output is deterministic across runs") {
    auto cfg = small_config();
    Scenario sc;
    sc.duration_s = 0.05;
    sc.noise_snr_db = 15.0;
    sc.injections = {{"A", 0.012, 1.0, 0.0}};
    auto rec1 = generate_recording(cfg, sc, nullptr);
    auto rec2 = generate_recording(cfg, sc, nullptr);
    CHECK(rec1.block.samples == rec2.block.samples);

    auto d1 = detect_recording(rec1, cfg);
    auto d2 = detect_recording(rec2, cfg);
    REQUIRE(d1.size() == d2.size());
    for (size_t i = 0; i < d1.size(); ++i)
        CHECK(detection_json_line(d1[i]) == detection_json_line(d2[i]));
}

TEST_CASE("scenario file parsing") {
    TempDir tmp;
    auto path = tmp.path / "scenario.json";
    std::ofstream(path) << R"({
        "duration_s": 0.5,
        "noise_snr_db": 12.0,
        "noise_seed": 7,
        "injections": [{"tag_id": "A", "time_s": 0.1, "gain": 2.0}]
    })";
    auto sc = load_scenario(path);
    CHECK(sc.duration_s == 0.5);
    CHECK(sc.noise_snr_db == 12.0);
    CHECK(sc.noise_seed == 7);
    REQUIRE(sc.injections.size() == 1);
    CHECK(sc.injections[0].tag_id == "A");
    CHECK(sc.injections[0].gain == 2.0);
}
