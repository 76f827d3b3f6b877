#include "swarmsim/record.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace swarmsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(std::string(what) + " must be an array of three numbers");
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

// NaN is not representable in JSON; emit null instead.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
void take(const json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RecordError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw RecordError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RecordError("cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void read_csv(const fs::path& path, std::vector<std::string>& columns,
              std::vector<std::vector<std::string>>& rows) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw RecordError("empty table '" + path.string() + "'");
    columns = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != columns.size())
            throw RecordError("ragged row in '" + path.string() + "'");
        rows.push_back(std::move(row));
    }
}

}  // namespace

json gains_to_json(const OlfatiSaberGains& g) {
    return {{"c1_alpha", g.c1_alpha}, {"c2_alpha", g.c2_alpha}, {"c1_beta", g.c1_beta},
            {"c2_beta", g.c2_beta},   {"c_mig", g.c_mig},       {"epsilon", g.epsilon},
            {"h_alpha", g.h_alpha},   {"h_beta", g.h_beta},     {"kappa", g.kappa}, {"a", g.a},
            {"b", g.b},               {"d_obs", g.d_obs},       {"r_obs", g.r_obs}};
}

json gains_to_json(const VasarhelyiGains& g) {
    return {{"r0_rep", g.r0_rep},     {"p_rep", g.p_rep},       {"r0_frict", g.r0_frict},
            {"c_frict", g.c_frict},   {"v_frict", g.v_frict},   {"p_frict", g.p_frict},
            {"a_frict", g.a_frict},   {"r0_shill", g.r0_shill}, {"v_shill", g.v_shill},
            {"p_shill", g.p_shill},   {"a_shill", g.a_shill},   {"shill_range", g.shill_range},
            {"c_mig", g.c_mig},       {"tau", g.tau}};
}

OlfatiSaberGains olfati_gains_from_json(const json& j, OlfatiSaberGains g) {
    if (!j.is_object()) throw std::invalid_argument("olfati_saber gains must be an object");
    for (const auto& [k, v] : j.items()) {
        static const char* known[] = {"c1_alpha", "c2_alpha", "c1_beta", "c2_beta",
                                      "c_mig",    "epsilon",  "h_alpha", "h_beta",  "kappa",
                                      "a",        "b",        "d_obs",   "r_obs"};
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw std::invalid_argument("unknown olfati_saber gain '" + k + "'");
        (void)v;
    }
    take(j, "c1_alpha", g.c1_alpha);
    take(j, "c2_alpha", g.c2_alpha);
    take(j, "c1_beta", g.c1_beta);
    take(j, "c2_beta", g.c2_beta);
    take(j, "c_mig", g.c_mig);
    take(j, "epsilon", g.epsilon);
    take(j, "h_alpha", g.h_alpha);
    take(j, "h_beta", g.h_beta);
    take(j, "kappa", g.kappa);
    take(j, "a", g.a);
    take(j, "b", g.b);
    take(j, "d_obs", g.d_obs);
    take(j, "r_obs", g.r_obs);
    return g;
}

VasarhelyiGains vasarhelyi_gains_from_json(const json& j, VasarhelyiGains g) {
    if (!j.is_object()) throw std::invalid_argument("vasarhelyi gains must be an object");
    for (const auto& [k, v] : j.items()) {
        static const char* known[] = {"r0_rep",  "p_rep",   "r0_frict", "c_frict", "v_frict",
                                      "p_frict", "a_frict", "r0_shill", "v_shill", "p_shill",
                                      "a_shill", "shill_range", "c_mig", "tau"};
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw std::invalid_argument("unknown vasarhelyi gain '" + k + "'");
        (void)v;
    }
    take(j, "r0_rep", g.r0_rep);
    take(j, "p_rep", g.p_rep);
    take(j, "r0_frict", g.r0_frict);
    take(j, "c_frict", g.c_frict);
    take(j, "v_frict", g.v_frict);
    take(j, "p_frict", g.p_frict);
    take(j, "a_frict", g.a_frict);
    take(j, "r0_shill", g.r0_shill);
    take(j, "v_shill", g.v_shill);
    take(j, "p_shill", g.p_shill);
    take(j, "a_shill", g.a_shill);
    take(j, "shill_range", g.shill_range);
    take(j, "c_mig", g.c_mig);
    take(j, "tau", g.tau);
    return g;
}

json patch_to_json(const ParamPatch& p) {
    json j = {{"tick", p.tick}};
    if (p.v_ref) j["v_ref"] = *p.v_ref;
    if (p.d_ref) j["d_ref"] = *p.d_ref;
    if (p.u_mig) j["u_mig"] = vec_json(*p.u_mig);
    if (p.olfati) j["olfati_saber"] = gains_to_json(*p.olfati);
    if (p.vasarhelyi) j["vasarhelyi"] = gains_to_json(*p.vasarhelyi);
    return j;
}

ParamPatch patch_from_json(const json& j, const SwarmParams& base) {
    if (!j.is_object()) throw std::invalid_argument("patch must be a JSON object");
    static const char* known[] = {"tick",  "v_ref",        "d_ref",      "u_mig",
                                  "u_mig_heading_deg", "u_mig_speed", "olfati_saber",
                                  "vasarhelyi"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw std::invalid_argument("unknown patch field '" + k + "'");
        (void)v;
    }
    ParamPatch p;
    take(j, "tick", p.tick);
    if (j.contains("v_ref")) p.v_ref = j.at("v_ref").get<double>();
    if (j.contains("d_ref")) p.d_ref = j.at("d_ref").get<double>();
    if (j.contains("u_mig")) p.u_mig = vec_from(j.at("u_mig"), "u_mig");
    if (j.contains("u_mig_heading_deg")) {
        if (p.u_mig) throw std::invalid_argument("give either u_mig or u_mig_heading_deg");
        const double heading = j.at("u_mig_heading_deg").get<double>() * kPi / 180.0;
        const double speed = j.contains("u_mig_speed") ? j.at("u_mig_speed").get<double>()
                                                       : base.u_mig.head<2>().norm();
        p.u_mig = Vec3(speed * std::cos(heading), speed * std::sin(heading), 0.0);
    } else if (j.contains("u_mig_speed")) {
        const Vec3 dir = base.u_mig.norm() > 0.0 ? base.u_mig.normalized() : Vec3(1.0, 0.0, 0.0);
        p.u_mig = dir * j.at("u_mig_speed").get<double>();
    }
    if (j.contains("olfati_saber"))
        p.olfati = olfati_gains_from_json(j.at("olfati_saber"), base.olfati);
    if (j.contains("vasarhelyi"))
        p.vasarhelyi = vasarhelyi_gains_from_json(j.at("vasarhelyi"), base.vasarhelyi);
    return p;
}

std::vector<ParamPatch> read_patches(const fs::path& path, const SwarmParams& base) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw RecordError("patch file '" + path.string() + "': " + e.what());
    }
    if (j.is_object() && j.contains("patches")) j = j.at("patches");
    if (!j.is_array()) throw RecordError("patch file must hold an array of patches");
    std::vector<ParamPatch> out;
    SwarmParams running = base;
    for (const auto& pj : j) {
        out.push_back(patch_from_json(pj, running));
        running = apply_patch(running, out.back());
    }
    return out;
}

void write_patches(const fs::path& path, const std::vector<ParamPatch>& patches) {
    json arr = json::array();
    for (const auto& p : patches) arr.push_back(patch_to_json(p));
    write_text(path, arr.dump(2) + "\n");
}

json metrics_to_json(const MetricsFrame& f) {
    return {{"tick", f.tick},
            {"t", f.t},
            {"phi_order", num(f.phi_order)},
            {"phi_safety_ag", num(f.phi_safety_ag)},
            {"phi_safety_obs", num(f.phi_safety_obs)},
            {"phi_union", num(f.phi_union)},
            {"phi_connectivity", num(f.phi_connectivity)},
            {"n_ag", f.n_ag},
            {"n_obs", f.n_obs},
            {"n_components", f.n_components},
            {"dist", {num(f.dist.min), num(f.dist.avg), num(f.dist.max)}},
            {"obs_dist_min", num(f.obs_dist_min)},
            {"speed", {num(f.speed.min), num(f.speed.avg), num(f.speed.max)}},
            {"accel", {num(f.accel.min), num(f.accel.avg), num(f.accel.max)}}};
}

std::string metrics_csv_header() {
    return "tick,t,phi_order,phi_safety_ag,phi_safety_obs,phi_union,phi_connectivity,n_ag,n_obs,"
           "n_components,dist_min,dist_avg,dist_max,obs_dist_min,speed_min,speed_avg,speed_max,"
           "accel_min,accel_avg,accel_max";
}

std::string metrics_csv_row(const MetricsFrame& f) {
    std::string s = std::to_string(f.tick);
    const auto add = [&s](const std::string& v) {
        s += ',';
        s += v;
    };
    add(format_double(f.t));
    add(format_double(f.phi_order));
    add(format_double(f.phi_safety_ag));
    add(format_double(f.phi_safety_obs));
    add(format_double(f.phi_union));
    add(format_double(f.phi_connectivity));
    add(std::to_string(f.n_ag));
    add(std::to_string(f.n_obs));
    add(std::to_string(f.n_components));
    for (double v : {f.dist.min, f.dist.avg, f.dist.max, f.obs_dist_min, f.speed.min, f.speed.avg,
                     f.speed.max, f.accel.min, f.accel.avg, f.accel.max})
        add(format_double(v));
    return s;
}

std::string metrics_csv(const std::vector<MetricsFrame>& frames) {
    std::string out = metrics_csv_header() + "\n";
    for (const auto& f : frames) out += metrics_csv_row(f) + "\n";
    return out;
}

std::string states_csv(const std::vector<StateSample>& samples) {
    std::string out = "tick,t,agent,pn,pe,pd,u,v,w,phi,theta,psi,p,q,r\n";
    for (const auto& smp : samples) {
        const std::string prefix = std::to_string(smp.tick) + "," + format_double(smp.t) + ",";
        for (std::size_t i = 0; i < smp.states.size(); ++i) {
            const auto& s = smp.states[i];
            out += prefix + std::to_string(i);
            for (const Vec3* v : {&s.position, &s.velocity, &s.attitude, &s.rates})
                for (int k = 0; k < 3; ++k) out += "," + format_double((*v)[k]);
            out += "\n";
        }
    }
    return out;
}

json record_header(const RunRecord& rec) {
    json patches = json::array();
    for (const auto& p : rec.patches) patches.push_back(patch_to_json(p));
    json map = json::array();
    for (const auto& o : rec.map.obstacles)
        map.push_back({o.center_ne.x(), o.center_ne.y(), o.radius});
    json h = {{"schema_version", rec.schema_version},
              {"config", serialize_config(rec.config)},
              {"map", map},
              {"map_digest", map_digest(rec.map)},
              {"patches", patches},
              {"ticks_planned", rec.ticks_planned},
              {"ticks_completed", rec.ticks_completed},
              {"state_stride", rec.state_stride},
              {"metrics_stride", rec.config.sim.metrics_stride},
              {"wall_seconds", rec.wall_seconds},
              {"real_time_factor", rec.real_time_factor},
              {"files", {{"metrics", "metrics.csv"}, {"states", "states.csv"}, {"map", "map.txt"}}}};
    if (rec.abort) {
        h["abort"] = {{"reason", rec.abort->reason},
                      {"message", rec.abort->message},
                      {"tick", rec.abort->tick}};
    } else {
        h["abort"] = nullptr;
    }
    return h;
}

void write_record(const fs::path& dir, const RunRecord& rec) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RecordError("cannot create '" + dir.string() + "': " + ec.message());
    write_text(dir / "record.json", record_header(rec).dump(2) + "\n");
    write_text(dir / "metrics.csv", metrics_csv(rec.metrics));
    write_text(dir / "states.csv", states_csv(rec.states));
    write_text(dir / "map.txt", format_map(rec.map));
}

LoadedRecord read_record(const fs::path& dir) {
    LoadedRecord lr;
    try {
        lr.header = json::parse(read_text(dir / "record.json"));
    } catch (const json::parse_error& e) {
        throw RecordError("record.json: " + std::string(e.what()));
    }
    const int version = lr.header.value("schema_version", -1);
    if (version != kRecordSchemaVersion)
        throw RecordError("record schema version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kRecordSchemaVersion) + ")");
    read_csv(dir / "metrics.csv", lr.metric_columns, lr.metric_rows);
    read_csv(dir / "states.csv", lr.state_columns, lr.state_rows);
    return lr;
}

std::vector<fs::path> export_plot_data(const fs::path& record_dir, const fs::path& out_dir) {
    const LoadedRecord lr = read_record(record_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw RecordError("cannot create '" + out_dir.string() + "': " + ec.message());

    const auto project = [](const std::vector<std::string>& cols,
                            const std::vector<std::vector<std::string>>& rows,
                            const std::vector<std::string>& want) {
        std::vector<std::size_t> idx;
        for (const auto& w : want) {
            auto it = std::find(cols.begin(), cols.end(), w);
            if (it == cols.end()) throw RecordError("record lacks column '" + w + "'");
            idx.push_back(static_cast<std::size_t>(it - cols.begin()));
        }
        std::string out;
        for (std::size_t k = 0; k < want.size(); ++k) out += (k ? "," : "") + want[k];
        out += "\n";
        for (const auto& r : rows) {
            for (std::size_t k = 0; k < idx.size(); ++k) out += (k ? "," : "") + r[idx[k]];
            out += "\n";
        }
        return out;
    };

    struct Panel {
        const char* file;
        std::vector<std::string> columns;
        bool states;
    };
    const std::vector<Panel> panels = {
        {"distance.csv", {"t", "dist_min", "dist_avg", "dist_max", "obs_dist_min"}, false},
        {"speed.csv", {"t", "speed_min", "speed_avg", "speed_max"}, false},
        {"accel.csv", {"t", "accel_min", "accel_avg", "accel_max"}, false},
        {"order.csv", {"t", "phi_order"}, false},
        {"connectivity.csv", {"t", "phi_connectivity", "phi_union", "n_components"}, false},
        {"safety.csv", {"t", "phi_safety_ag", "n_ag", "phi_safety_obs", "n_obs"}, false},
        {"trajectories.csv", {"tick", "t", "agent", "pn", "pe", "pd"}, true},
    };
    std::vector<fs::path> written;
    for (const auto& p : panels) {
        const auto text = p.states ? project(lr.state_columns, lr.state_rows, p.columns)
                                   : project(lr.metric_columns, lr.metric_rows, p.columns);
        write_text(out_dir / p.file, text);
        written.push_back(out_dir / p.file);
    }
    return written;
}

}  // namespace swarmsim
