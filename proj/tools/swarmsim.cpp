// swarmsim command-line front end: run, compare, bench, export, serve.

#include "swarmsim/config_io.hpp"
#include "swarmsim/engine.hpp"
#include "swarmsim/live.hpp"
#include "swarmsim/record.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace swarmsim;

namespace {

enum Exit { kOk = 0, kInvalidConfig = 2, kAborted = 3, kIoError = 4 };

constexpr const char* kOutEnv = "SWARMSIM_OUT_DIR";

struct Fail {
    int code;
    json detail;
};

[[noreturn]] void fail(int code, const std::string& error, json extra = json::object()) {
    extra["error"] = error;
    throw Fail{code, std::move(extra)};
}

struct Overrides {
    std::string config;
    std::optional<std::string> algorithm;
    std::optional<int> agents;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<std::string> dynamics;
    std::optional<std::string> neighbor_mode;
    std::optional<double> radius;
    std::optional<int> nn;
    std::optional<double> map_density;
    std::optional<int> threads;
    std::string out;
};

void add_scenario_flags(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config, "Scenario config file")->check(CLI::ExistingFile);
    app->add_option("--algorithm", o.algorithm, "olfati_saber | vasarhelyi");
    app->add_option("--agents", o.agents, "Number of drones");
    app->add_option("--seed", o.seed, "RNG seed for map and spawn");
    app->add_option("--dt", o.dt, "Timestep (s)");
    app->add_option("--t-end", o.t_end, "Simulated duration (s)");
    app->add_option("--dynamics", o.dynamics, "point_mass | quadcopter");
    app->add_option("--neighbor-mode", o.neighbor_mode, "metric | topological | hybrid");
    app->add_option("--radius", o.radius, "Metric neighbor radius (m)");
    app->add_option("--nn", o.nn, "Topological neighbor count");
    app->add_option("--map-density", o.map_density, "Obstacles per square meter");
    app->add_option("--threads", o.threads, "Worker threads for the tick loop");
    app->add_option("-o,--out", o.out, "Output directory");
}

ScenarioConfig load_scenario(const Overrides& o) {
    ScenarioConfig cfg;
    try {
        if (!o.config.empty()) cfg = load_config(o.config);
        auto& sim = cfg.sim;
        auto& sp = cfg.swarm;
        if (o.algorithm) sp.algorithm = parse_algorithm(*o.algorithm);
        if (o.agents) sp.agents = *o.agents;
        if (o.seed) sim.seed = *o.seed;
        if (o.dt) sim.dt = *o.dt;
        if (o.t_end) sim.t_end = *o.t_end;
        if (o.dynamics) sim.dynamics = parse_dynamics_mode(*o.dynamics);
        if (o.neighbor_mode) sp.neighbors.mode = parse_neighbor_mode(*o.neighbor_mode);
        if (o.radius) sp.neighbors.radius = *o.radius;
        if (o.nn) sp.neighbors.count = *o.nn;
        if (o.map_density) sim.map.density = *o.map_density;
        if (o.threads) sim.threads = *o.threads;
        if (!o.out.empty()) sim.out_dir = o.out;
    } catch (const ConfigError& e) {
        fail(kInvalidConfig, "invalid_config", {{"messages", json::array({e.what()})}});
    } catch (const std::invalid_argument& e) {
        fail(kInvalidConfig, "invalid_config", {{"messages", json::array({e.what()})}});
    }
    const auto report = validate_config(cfg.sim, cfg.swarm);
    if (!report.ok()) fail(kInvalidConfig, "invalid_config", {{"messages", report.errors}});
    return cfg;
}

// Output root: --out, then the config's out_dir, then the environment, then ./runs.
fs::path output_root(const ScenarioConfig& cfg) {
    if (!cfg.sim.out_dir.empty()) return cfg.sim.out_dir;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return "runs";
}

std::string run_name(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << to_string(cfg.swarm.algorithm) << "-" << to_string(cfg.sim.dynamics) << "-n"
       << cfg.swarm.agents << "-seed" << cfg.sim.seed;
    return os.str();
}

std::vector<ParamPatch> load_patches(const std::string& path, const SwarmParams& sp) {
    if (path.empty()) return {};
    try {
        return read_patches(path, sp);
    } catch (const RecordError& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    } catch (const std::exception& e) {
        fail(kInvalidConfig, "invalid_patch", {{"messages", json::array({e.what()})}});
    }
}

void save(const fs::path& dir, const RunRecord& rec) {
    try {
        write_record(dir, rec);
    } catch (const std::exception& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    }
}

void check_abort(const RunRecord& rec, const fs::path& dir) {
    if (!rec.abort) return;
    fail(kAborted, "aborted",
         {{"reason", rec.abort->reason},
          {"message", rec.abort->message},
          {"tick", rec.abort->tick},
          {"record", dir.string()}});
}

struct Summary {
    double min_safety_ag = 1.0;
    double min_safety_obs = 1.0;
    double mean_order = 0.0;
};

Summary summarize(const RunRecord& rec) {
    Summary s;
    double sum = 0.0;
    long n = 0;
    for (const auto& f : rec.metrics) {
        s.min_safety_ag = std::min(s.min_safety_ag, f.phi_safety_ag);
        s.min_safety_obs = std::min(s.min_safety_obs, f.phi_safety_obs);
        if (std::isfinite(f.phi_order)) {
            sum += f.phi_order;
            ++n;
        }
    }
    s.mean_order = n ? sum / static_cast<double>(n) : std::nan("");
    return s;
}

void print_summary(const std::string& label, const RunRecord& rec, const fs::path& dir) {
    const auto s = summarize(rec);
    std::cout << label << ": " << rec.ticks_completed << "/" << rec.ticks_planned << " ticks, wall "
              << std::fixed << std::setprecision(3) << rec.wall_seconds << " s, RTF "
              << std::setprecision(4) << rec.real_time_factor << "\n";
    if (!rec.metrics.empty()) {
        const auto& f = rec.metrics.back();
        std::cout << "  final  order " << f.phi_order << "  safety_ag " << f.phi_safety_ag
                  << "  safety_obs " << f.phi_safety_obs << "  union " << f.phi_union
                  << "  connectivity " << f.phi_connectivity << "\n";
        std::cout << "  run    min safety_ag " << s.min_safety_ag << "  min safety_obs "
                  << s.min_safety_obs << "  mean order " << s.mean_order << "\n";
    }
    std::cout << "  record " << dir.string() << "\n";
    std::cout.unsetf(std::ios::floatfield);
}

int cmd_run(const Overrides& o, const std::string& patches_path) {
    const auto cfg = load_scenario(o);
    const auto patches = load_patches(patches_path, cfg.swarm);
    for (const auto& p : patches) {
        const auto rep = validate_patch(cfg.sim, cfg.swarm, p);
        if (!rep.ok()) fail(kInvalidConfig, "invalid_patch", {{"messages", rep.errors}});
    }
    const fs::path dir = o.out.empty() ? output_root(cfg) / run_name(cfg) : fs::path(o.out);
    const auto rec = run(cfg.sim, cfg.swarm, patches);
    save(dir, rec);
    print_summary(run_name(cfg), rec, dir);
    check_abort(rec, dir);
    return kOk;
}

// Side-by-side table of the two runs, one row per shared metrics tick.
std::string comparison_table(const RunRecord& a, const RunRecord& b, const std::string& la,
                             const std::string& lb) {
    static const char* fields[] = {"dist_min",  "dist_avg",  "dist_max",     "speed_min",
                                   "speed_avg", "speed_max", "order",        "connectivity",
                                   "safety_ag", "safety_obs", "obs_dist_min"};
    const auto value = [](const MetricsFrame& f, int k) {
        switch (k) {
            case 0: return f.dist.min;
            case 1: return f.dist.avg;
            case 2: return f.dist.max;
            case 3: return f.speed.min;
            case 4: return f.speed.avg;
            case 5: return f.speed.max;
            case 6: return f.phi_order;
            case 7: return f.phi_connectivity;
            case 8: return f.phi_safety_ag;
            case 9: return f.phi_safety_obs;
            default: return f.obs_dist_min;
        }
    };
    std::ostringstream os;
    os << "tick,t";
    for (const auto& l : {la, lb})
        for (const char* f : fields) os << ',' << l << '_' << f;
    os << '\n';
    const std::size_t n = std::min(a.metrics.size(), b.metrics.size());
    for (std::size_t r = 0; r < n; ++r) {
        os << a.metrics[r].tick << ',' << format_double(a.metrics[r].t);
        for (const auto* rec : {&a, &b})
            for (int k = 0; k < 11; ++k) os << ',' << format_double(value(rec->metrics[r], k));
        os << '\n';
    }
    return os.str();
}

int cmd_compare(const Overrides& o, bool same_algorithm) {
    auto cfg = load_scenario(o);
    const fs::path root = o.out.empty() ? output_root(cfg) / ("compare-seed" + std::to_string(cfg.sim.seed))
                                        : fs::path(o.out);
    ScenarioConfig ca = cfg, cb = cfg;
    if (!same_algorithm) {
        ca.swarm.algorithm = Algorithm::olfati_saber;
        cb.swarm.algorithm = Algorithm::vasarhelyi;
    }
    const std::string la = same_algorithm ? "a" : std::string(to_string(ca.swarm.algorithm));
    const std::string lb = same_algorithm ? "b" : std::string(to_string(cb.swarm.algorithm));

    const auto ra = run(ca.sim, ca.swarm);
    save(root / la, ra);
    print_summary(la, ra, root / la);
    const auto rb = run(cb.sim, cb.swarm);
    save(root / lb, rb);
    print_summary(lb, rb, root / lb);

    try {
        std::ofstream out(root / "comparison.csv", std::ios::binary | std::ios::trunc);
        out << comparison_table(ra, rb, la, lb);
        if (!out) throw std::runtime_error("cannot write " + (root / "comparison.csv").string());
    } catch (const std::exception& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    }
    std::cout << "field-interval order: " << la << " " << field_interval_order(ra) << ", " << lb << " "
              << field_interval_order(rb) << "\n";
    std::cout << "comparison table " << (root / "comparison.csv").string() << "\n";
    check_abort(ra, root / la);
    check_abort(rb, root / lb);
    return kOk;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_bench(const Overrides& o, const std::string& sizes_arg, const std::string& modes_arg,
              const std::string& algos_arg) {
    Overrides base = o;
    if (!base.t_end) base.t_end = 20.0;
    auto cfg = load_scenario(base);
    cfg.sim.metrics_stride = 0;

    std::vector<int> sizes;
    std::vector<DynamicsMode> modes;
    std::vector<Algorithm> algos;
    try {
        for (const auto& s : split_list(sizes_arg)) sizes.push_back(std::stoi(s));
        for (const auto& s : split_list(modes_arg)) modes.push_back(parse_dynamics_mode(s));
        for (const auto& s : split_list(algos_arg)) algos.push_back(parse_algorithm(s));
    } catch (const std::exception& e) {
        fail(kInvalidConfig, "invalid_config", {{"messages", json::array({e.what()})}});
    }
    for (int n : sizes)
        if (n < 2) fail(kInvalidConfig, "invalid_config", {{"messages", {"bench sizes must be >= 2"}}});

    const fs::path root = o.out.empty() ? output_root(cfg) / "bench" : fs::path(o.out);
    std::ostringstream table;
    table << "agents,dynamics,algorithm,ticks,wall_seconds,rtf,status\n";
    std::cout << std::left << std::setw(8) << "agents" << std::setw(12) << "dynamics"
              << std::setw(14) << "algorithm" << std::setw(12) << "rtf"
              << "status\n";
    for (auto mode : modes) {
        for (auto algo : algos) {
            for (int n : sizes) {
                ScenarioConfig c = cfg;
                c.sim.dynamics = mode;
                c.swarm.algorithm = algo;
                c.swarm.agents = n;
                std::string status = "ok";
                RunRecord rec;
                if (const auto rep = validate_config(c.sim, c.swarm); !rep.ok()) {
                    status = "invalid: " + rep.joined();
                } else {
                    try {
                        rec = run(c.sim, c.swarm, {}, RunOptions{.record_states = false});
                        if (rec.abort) status = "aborted: " + rec.abort->reason;
                    } catch (const std::exception& e) {
                        status = std::string("failed: ") + e.what();
                    }
                }
                std::string quoted = status;
                std::replace(quoted.begin(), quoted.end(), ',', ';');
                table << n << ',' << to_string(mode) << ',' << to_string(algo) << ','
                      << rec.ticks_completed << ',' << format_double(rec.wall_seconds) << ','
                      << format_double(rec.real_time_factor) << ',' << quoted << '\n';
                std::cout << std::setw(8) << n << std::setw(12) << to_string(mode) << std::setw(14)
                          << to_string(algo) << std::setw(12) << std::setprecision(4)
                          << rec.real_time_factor << status << std::endl;
            }
        }
    }
    try {
        fs::create_directories(root);
        std::ofstream out(root / "bench.csv", std::ios::binary | std::ios::trunc);
        out << table.str();
        if (!out) throw std::runtime_error("cannot write " + (root / "bench.csv").string());
    } catch (const std::exception& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    }
    std::cout << "table " << (root / "bench.csv").string() << "\n";
    return kOk;
}

int cmd_export(const std::string& record, const std::string& out, const std::string& format) {
    if (format != "csv") fail(kInvalidConfig, "invalid_config", {{"messages", {"only csv export is supported"}}});
    const fs::path dir = out.empty() ? fs::path(record) / "plots" : fs::path(out);
    try {
        for (const auto& p : export_plot_data(record, dir)) std::cout << p.string() << "\n";
    } catch (const std::exception& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    }
    return kOk;
}

int cmd_serve(const Overrides& o, unsigned short port, const std::string& host,
              const std::string& ui_dir, double rate, bool paused, const std::string& patch_log) {
    const auto cfg = load_scenario(o);
    live::Server::Options opts;
    opts.host = host;
    opts.port = port;
    opts.ui_dir = ui_dir;
    opts.sim.rate = rate;
    opts.sim.start_paused = paused;
    opts.sim.patch_log =
        patch_log.empty() ? output_root(cfg) / ("live-" + run_name(cfg) + "-patches.json")
                          : fs::path(patch_log);
    try {
        fs::create_directories(opts.sim.patch_log.parent_path());
    } catch (const std::exception& e) {
        fail(kIoError, "io_error", {{"message", e.what()}});
    }

    live::Server server(cfg, opts);
    try {
        server.start();
    } catch (const std::exception& e) {
        fail(kIoError, "bind_failed", {{"message", e.what()}, {"port", port}});
    }
    std::cout << "serving http://" << host << ":" << server.port() << "/  (WebSocket at /ws)\n"
              << "patch log " << opts.sim.patch_log.string() << std::endl;
    server.wait();
    server.stop();
    std::cout << "stopped\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic multi-drone swarm simulator"};
    app.require_subcommand(1);
    app.footer(std::string("Exit codes: 0 ok, 2 invalid config, 3 aborted run, 4 I/O error.\n") +
               "Default output directory: $" + kOutEnv + ", else ./runs.");

    Overrides run_o, cmp_o, bench_o, serve_o;
    std::string patches;
    auto* run_cmd = app.add_subcommand("run", "Run one simulation and write its record");
    add_scenario_flags(run_cmd, run_o);
    run_cmd->add_option("--patches", patches, "Parameter patch stream (JSON)")
        ->check(CLI::ExistingFile);

    bool same = false;
    auto* cmp_cmd = app.add_subcommand("compare", "Run both algorithms on the same seed and map");
    add_scenario_flags(cmp_cmd, cmp_o);
    cmp_cmd->add_flag("--same-algorithm", same, "Run the configured algorithm twice");

    std::string sizes = "2,4,8,16,32,64,128,256,512,1024";
    std::string modes = "point_mass,quadcopter";
    std::string algos = "olfati_saber,vasarhelyi";
    auto* bench_cmd = app.add_subcommand("bench", "Real-time factor sweep over swarm sizes");
    add_scenario_flags(bench_cmd, bench_o);
    bench_cmd->add_option("--sizes", sizes, "Comma-separated swarm sizes")->capture_default_str();
    bench_cmd->add_option("--modes", modes, "Comma-separated dynamics modes")->capture_default_str();
    bench_cmd->add_option("--algorithms", algos, "Comma-separated algorithms")->capture_default_str();

    std::string record, export_out, format = "csv";
    auto* export_cmd = app.add_subcommand("export", "Write plot-ready CSV files from a run record");
    export_cmd->add_option("record", record, "Run record directory")->required();
    export_cmd->add_option("-o,--out", export_out, "Output directory (default: <record>/plots)");
    export_cmd->add_option("--format", format, "Output format")->capture_default_str();

    unsigned short port = 8080;
    std::string host = "127.0.0.1", ui_dir, patch_log;
    double rate = 0.0;
    bool start_paused = false;
    auto* serve_cmd = app.add_subcommand("serve", "Live server with WebSocket steering");
    add_scenario_flags(serve_cmd, serve_o);
    serve_cmd->add_option("--port", port, "TCP port, 0 for any free port")->capture_default_str();
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--ui-dir", ui_dir, "Static UI bundle directory");
    serve_cmd->add_option("--rate", rate, "Ticks per wall second (default: real time)");
    serve_cmd->add_flag("--paused", start_paused, "Start paused");
    serve_cmd->add_option("--patch-log", patch_log, "Where to persist the applied patch stream");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kInvalidConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run_o, patches);
        if (*cmp_cmd) return cmd_compare(cmp_o, same);
        if (*bench_cmd) return cmd_bench(bench_o, sizes, modes, algos);
        if (*export_cmd) return cmd_export(record, export_out, format);
        if (*serve_cmd)
            return cmd_serve(serve_o, port, host, ui_dir, rate, start_paused, patch_log);
    } catch (const Fail& f) {
        std::cerr << f.detail.dump() << std::endl;
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
        return 1;
    }
    return kOk;
}
