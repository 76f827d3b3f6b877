#include "swarmsim/record.hpp"
#include "swarmsim/config_io.hpp"

#include <doctest.h>

#include <charconv>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace swarmsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("swarmsim_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double parse(const std::string& s) {
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

RunRecord small_run(double t_end = 1.0) {
    ScenarioConfig sc;
    sc.sim.t_end = t_end;
    sc.sim.map.density = 2e-4;
    sc.swarm.agents = 6;
    return run(sc.sim, sc.swarm);
}

}  // namespace

TEST_CASE("record round-trips header, metrics and states") {
    TempDir dir("record");
    ParamPatch p;
    p.tick = 50;
    p.v_ref = 3.0;
    ScenarioConfig sc;
    sc.sim.t_end = 1.0;
    sc.swarm.agents = 5;
    const auto rec = run(sc.sim, sc.swarm, std::vector<ParamPatch>{p});
    write_record(dir.path, rec);

    const auto lr = read_record(dir.path);
    CHECK(lr.header.at("schema_version") == kRecordSchemaVersion);
    CHECK(lr.header.at("ticks_planned") == 100);
    CHECK(lr.header.at("ticks_completed") == 100);
    CHECK(lr.header.at("abort").is_null());
    CHECK(parse_config(lr.header.at("config").get<std::string>()) == rec.config);
    REQUIRE(lr.header.at("patches").size() == 1);
    CHECK(patch_from_json(lr.header.at("patches")[0], sc.swarm) == p);

    REQUIRE(lr.metric_rows.size() == rec.metrics.size());
    const auto col = [&](const char* name) {
        return static_cast<std::size_t>(
            std::find(lr.metric_columns.begin(), lr.metric_columns.end(), name) -
            lr.metric_columns.begin());
    };
    for (std::size_t k = 0; k < rec.metrics.size(); ++k) {
        CHECK(parse(lr.metric_rows[k][col("t")]) == rec.metrics[k].t);
        CHECK(parse(lr.metric_rows[k][col("phi_order")]) == rec.metrics[k].phi_order);
        CHECK(parse(lr.metric_rows[k][col("dist_avg")]) == rec.metrics[k].dist.avg);
    }
    REQUIRE(lr.state_rows.size() == rec.states.size() * 5);
    const auto& last = rec.states.back();
    const auto& row = lr.state_rows[lr.state_rows.size() - 1];
    CHECK(parse(row[3]) == last.states[4].position.x());
    CHECK(parse(row[7]) == last.states[4].velocity.y());
    CHECK(parse_map(slurp(dir.path / "map.txt")).obstacles == rec.map.obstacles);
}

TEST_CASE("abort is recorded in the header") {
    TempDir dir("abort");
    ScenarioConfig sc;
    sc.sim.t_end = 1.0;
    sc.sim.dynamics = DynamicsMode::quadcopter;
    sc.sim.quad.sanity_bound = 40.0;
    const auto rec = run(sc.sim, sc.swarm);
    REQUIRE(rec.abort);
    write_record(dir.path, rec);
    const auto h = read_record(dir.path).header;
    CHECK(h.at("abort").at("reason") == "numeric_blowup");
    CHECK(h.at("ticks_completed").get<std::int64_t>() < h.at("ticks_planned").get<std::int64_t>());
}

TEST_CASE("schema mismatch and missing files are errors") {
    TempDir dir("schema");
    write_record(dir.path, small_run());
    auto h = nlohmann::json::parse(slurp(dir.path / "record.json"));
    h["schema_version"] = kRecordSchemaVersion + 1;
    std::ofstream(dir.path / "record.json") << h.dump();
    CHECK_THROWS_AS(read_record(dir.path), RecordError);
    CHECK_THROWS_AS(read_record(dir.path / "nope"), RecordError);
    std::ofstream(dir.path / "record.json") << "{ not json";
    CHECK_THROWS_AS(read_record(dir.path), RecordError);
}

TEST_CASE("plot export writes all panels and is byte-identical on repeat") {
    TempDir dir("export");
    write_record(dir.path / "rec", small_run());
    const auto first = export_plot_data(dir.path / "rec", dir.path / "a");
    const auto second = export_plot_data(dir.path / "rec", dir.path / "b");
    REQUIRE(first.size() == 7);
    for (std::size_t k = 0; k < first.size(); ++k) {
        CHECK(first[k].filename() == second[k].filename());
        CHECK(slurp(first[k]) == slurp(second[k]));
    }
    const auto order = slurp(dir.path / "a" / "order.csv");
    CHECK(order.rfind("t,phi_order\n", 0) == 0);
    CHECK(std::count(order.begin(), order.end(), '\n') == 101);
}

TEST_CASE("sampled state timestamps follow the stride") {
    TempDir dir("stride");
    ScenarioConfig sc;
    sc.sim.t_end = 2.0;
    sc.sim.state_stride = 25;
    sc.swarm.agents = 3;
    write_record(dir.path, run(sc.sim, sc.swarm));
    const auto lr = read_record(dir.path);
    REQUIRE(lr.state_rows.size() == 9 * 3);
    for (std::size_t r = 0; r < lr.state_rows.size(); ++r) {
        const auto tick = std::stoll(lr.state_rows[r][0]);
        CHECK(tick == static_cast<long long>(r / 3) * 25);
        CHECK(parse(lr.state_rows[r][1]) == static_cast<double>(tick) * sc.sim.dt);
    }
}

TEST_CASE("patch files: both layouts, heading form, unknown fields") {
    TempDir dir("patches");
    fs::create_directories(dir.path);
    const SwarmParams base;
    std::vector<ParamPatch> ps(2);
    ps[0].tick = 10;
    ps[0].d_ref = 9.0;
    ps[1].tick = 30;
    ps[1].u_mig = Vec3(0.5, -1.0, 0.0);
    ps[1].vasarhelyi = VasarhelyiGains{};
    ps[1].vasarhelyi->c_frict = 0.3;
    write_patches(dir.path / "p.json", ps);
    CHECK(read_patches(dir.path / "p.json", base) == ps);

    nlohmann::json wrapped = {{"seed", 4}, {"patches", nlohmann::json::parse(slurp(dir.path / "p.json"))}};
    std::ofstream(dir.path / "w.json") << wrapped.dump();
    CHECK(read_patches(dir.path / "w.json", base) == ps);

    const auto east = patch_from_json({{"tick", 0}, {"u_mig_heading_deg", 90.0}, {"u_mig_speed", 2.0}}, base);
    REQUIRE(east.u_mig);
    CHECK((*east.u_mig - Vec3(0, 2, 0)).norm() < 1e-12);
    CHECK_THROWS(patch_from_json({{"tick", 0}, {"bogus", 1}}, base));
    CHECK_THROWS(patch_from_json({{"u_mig", {1, 2}}}, base));

    const auto partial = patch_from_json({{"olfati_saber", {{"c1_alpha", 0.7}}}}, base);
    REQUIRE(partial.olfati);
    CHECK(partial.olfati->c1_alpha == 0.7);
    CHECK(partial.olfati->c2_alpha == base.olfati.c2_alpha);
}
