// Command-line front end: synthetic recording generation, offline
// detection, scheduler simulation, benchmarking, and code export.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tagdsp/codegen.hpp"
#include "tagdsp/recording.hpp"

using namespace tagdsp;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return default_run_config();
    return load_run_config(path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_codes(const std::string& config_path, const std::string& out_dir) {
    auto cfg = load_config_or_default(config_path);
    std::filesystem::create_directories(out_dir);
    json index = json::array();
    for (const auto& t : cfg.tags) {
        auto code = gen_code(t.seed, cfg.demod.mod, t.id);
        auto bits_path = std::filesystem::path(out_dir) / (t.id + ".bits");
        std::ofstream bits(bits_path, std::ios::binary);
        bits.write(reinterpret_cast<const char*>(code.bits.data()),
                   std::streamsize(code.bits.size()));
        index.push_back({{"tag_id", t.id},
                         {"seed", t.seed},
                         {"period_s", t.period_s},
                         {"packet_bits", code.bits.size()},
                         {"bits_file", bits_path.filename().string()}});
    }
    json meta = {{"tags", index},
                 {"modulation",
                  {{"sample_rate", cfg.demod.mod.sample_rate},
                   {"bit_rate", cfg.demod.mod.bit_rate},
                   {"freq_one", cfg.demod.mod.freq_one},
                   {"freq_zero", cfg.demod.mod.freq_zero}}}};
    write_text(std::filesystem::path(out_dir) / "codes.json", meta.dump(2) + "\n");
    return kExitOk;
}

int cmd_generate(const std::string& config_path, const std::string& scenario_path,
                 const std::string& out_path) {
    auto cfg = load_config_or_default(config_path);
    auto scenario = load_scenario(scenario_path);
    std::vector<GroundTruth> truth;
    auto rec = generate_recording(cfg, scenario, &truth);
    write_recording(out_path, rec);
    write_text(out_path + ".truth.json", ground_truth_json(truth) + "\n");
    std::cerr << "wrote " << rec.block.num_complex() << " samples, " << truth.size()
              << " injected packets\n";
    return kExitOk;
}

int cmd_detect(const std::string& config_path, const std::string& rec_path,
               const std::string& out_path, bool all_candidates) {
    auto cfg = load_config_or_default(config_path);
    auto rec = read_recording(rec_path);
    auto dets = detect_recording(rec, cfg);
    std::string out;
    for (const auto& d : dets)
        if (all_candidates || d.accepted) out += detection_json_line(d) + "\n";
    write_text(out_path, out);
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& rec_path,
                 const std::string& out_path, double compute_ratio) {
    auto cfg = load_config_or_default(config_path);
    auto rec = read_recording(rec_path);
    auto result = simulate_recording(rec, cfg, compute_ratio);
    std::string out;
    for (const auto& ev : result.events) out += event_json_line(ev) + "\n";
    write_text(out_path, out);
    json summary = {{"searched_fraction_pct", result.searched_fraction_pct},
                    {"detections", result.detections},
                    {"misses", result.misses},
                    {"searching_time_s", result.searching_time_s},
                    {"tracking_time_s", result.tracking_time_s}};
    std::cerr << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& config_path, const std::vector<size_t>& patterns,
              size_t repeats, size_t windows, const std::string& out_path) {
    auto cfg = load_config_or_default(config_path);
    BenchScenario sc;
    sc.cfg = cfg.demod;
    sc.window_len = size_t(cfg.sched.window_s * cfg.demod.mod.sample_rate + 0.5);
    if (!patterns.empty()) sc.pattern_counts = patterns;
    sc.repeats = repeats;
    sc.windows = windows;
    sc.quantize_scale = cfg.quantize_scale;
    sc.threshold = cfg.threshold;
    auto results = run_bench(sc);
    write_text(out_path, bench_csv(results));
    std::cerr << bench_summary_json(results, cfg.search_share) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FSK tag detection pipeline: synthesis, detection, scheduling, benchmarks"};
    app.require_subcommand(1);

    std::string config_path, scenario_path, rec_path, out_path = "-", out_dir = "codes";
    double compute_ratio = 0.1;
    size_t repeats = 10, windows = 10;
    std::vector<size_t> patterns;
    bool all_candidates = false;

    auto* codes = app.add_subcommand("codes", "export tag codes as JSON + bit files");
    codes->add_option("--config", config_path, "run config JSON");
    codes->add_option("--out-dir", out_dir, "output directory");

    auto* gen = app.add_subcommand("generate", "synthesize a recording from a scenario");
    gen->add_option("--config", config_path, "run config JSON");
    gen->add_option("--scenario", scenario_path, "scenario JSON")->required();
    gen->add_option("--out", rec_path, "output recording payload path")->required();

    auto* det = app.add_subcommand("detect", "offline searching pass over a recording");
    det->add_option("--config", config_path, "run config JSON");
    det->add_option("--recording", rec_path, "recording payload path")->required();
    det->add_option("--out", out_path, "detections JSON lines ('-' for stdout)");
    det->add_flag("--all", all_candidates, "emit non-accepted candidates too");

    auto* sim = app.add_subcommand("simulate", "virtual-time scheduler run over a recording");
    sim->add_option("--config", config_path, "run config JSON");
    sim->add_option("--recording", rec_path, "recording payload path")->required();
    sim->add_option("--out", out_path, "event log JSON lines ('-' for stdout)");
    sim->add_option("--compute-ratio", compute_ratio,
                    "virtual task cost as a fraction of the task's sample span");

    auto* bench = app.add_subcommand("bench", "end-to-end searching benchmark");
    bench->add_option("--config", config_path, "run config JSON");
    bench->add_option("--patterns", patterns, "pattern counts to sweep");
    bench->add_option("--repeats", repeats, "repeats per pattern count");
    bench->add_option("--windows", windows, "RF windows per measurement");
    bench->add_option("--out", out_path, "CSV output path ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*codes) return cmd_codes(config_path, out_dir);
        if (*gen) return cmd_generate(config_path, scenario_path, rec_path);
        if (*det) return cmd_detect(config_path, rec_path, out_path, all_candidates);
        if (*sim) return cmd_simulate(config_path, rec_path, out_path, compute_ratio);
        if (*bench) return cmd_bench(config_path, patterns, repeats, windows, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
