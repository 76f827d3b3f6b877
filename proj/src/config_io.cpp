#include "swarmsim/config_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace swarmsim {

namespace pt = boost::property_tree;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    if (first < last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + s + "'");
}

Vec3 to_vec3(const std::string& key, const std::string& s) {
    std::istringstream is(s);
    std::string a, b, c, extra;
    if (!(is >> a >> b >> c) || (is >> extra))
        throw ConfigError("key '" + key + "': expected three numbers, got '" + s + "'");
    return {to_double(key, a), to_double(key, b), to_double(key, c)};
}

std::string vec3_text(const Vec3& v) {
    return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

// One table drives both parsing and serialization so the two cannot drift.
struct Field {
    std::string key;  // "section.name"
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class Member>
Field dbl(std::string key, Member member) {
    return {key,
            [key, member](ScenarioConfig& c, const std::string& s) {
                std::invoke(member, c) = to_double(key, s);
            },
            [member](const ScenarioConfig& c) {
                return format_double(std::invoke(member, const_cast<ScenarioConfig&>(c)));
            }};
}

template <class Member>
Field integer(std::string key, Member member) {
    return {key,
            [key, member](ScenarioConfig& c, const std::string& s) {
                using T = std::remove_reference_t<decltype(std::invoke(member, c))>;
                std::invoke(member, c) = static_cast<T>(to_int(key, s));
            },
            [member](const ScenarioConfig& c) {
                return std::to_string(std::invoke(member, const_cast<ScenarioConfig&>(c)));
            }};
}

std::vector<Field> make_fields() {
    using C = ScenarioConfig;
    std::vector<Field> f;
    // [simulation]
    f.push_back(dbl("simulation.dt", [](C& c) -> double& { return c.sim.dt; }));
    f.push_back(dbl("simulation.t_end", [](C& c) -> double& { return c.sim.t_end; }));
    f.push_back({"simulation.seed",
                 [](C& c, const std::string& s) {
                     std::uint64_t v = 0;
                     auto res = std::from_chars(s.data(), s.data() + s.size(), v);
                     if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                         throw ConfigError("key 'simulation.seed': expected an unsigned integer");
                     c.sim.seed = v;
                 },
                 [](const C& c) { return std::to_string(c.sim.seed); }});
    f.push_back({"simulation.dynamics",
                 [](C& c, const std::string& s) { c.sim.dynamics = parse_dynamics_mode(s); },
                 [](const C& c) { return std::string(to_string(c.sim.dynamics)); }});
    f.push_back(integer("simulation.metrics_stride",
                        [](C& c) -> int& { return c.sim.metrics_stride; }));
    f.push_back(integer("simulation.state_stride",
                        [](C& c) -> int& { return c.sim.state_stride; }));
    f.push_back(integer("simulation.threads", [](C& c) -> int& { return c.sim.threads; }));
    f.push_back({"simulation.out_dir",
                 [](C& c, const std::string& s) { c.sim.out_dir = s; },
                 [](const C& c) { return c.sim.out_dir; }});
    // [spawn]
    f.push_back({"spawn.center",
                 [](C& c, const std::string& s) { c.sim.spawn_center = to_vec3("spawn.center", s); },
                 [](const C& c) { return vec3_text(c.sim.spawn_center); }});
    f.push_back(dbl("spawn.edge", [](C& c) -> double& { return c.sim.spawn_edge; }));
    // [map]
    f.push_back(dbl("map.n_min", [](C& c) -> double& { return c.sim.map.bounds.n_min; }));
    f.push_back(dbl("map.n_max", [](C& c) -> double& { return c.sim.map.bounds.n_max; }));
    f.push_back(dbl("map.e_min", [](C& c) -> double& { return c.sim.map.bounds.e_min; }));
    f.push_back(dbl("map.e_max", [](C& c) -> double& { return c.sim.map.bounds.e_max; }));
    f.push_back(dbl("map.density", [](C& c) -> double& { return c.sim.map.density; }));
    f.push_back(dbl("map.r_min", [](C& c) -> double& { return c.sim.map.r_min; }));
    f.push_back(dbl("map.r_max", [](C& c) -> double& { return c.sim.map.r_max; }));
    f.push_back({"map.file", [](C& c, const std::string& s) { c.sim.map.file = s; },
                 [](const C& c) { return c.sim.map.file; }});
    // [swarm]
    f.push_back(integer("swarm.agents", [](C& c) -> int& { return c.swarm.agents; }));
    f.push_back({"swarm.algorithm",
                 [](C& c, const std::string& s) { c.swarm.algorithm = parse_algorithm(s); },
                 [](const C& c) { return std::string(to_string(c.swarm.algorithm)); }});
    f.push_back({"swarm.neighbor_mode",
                 [](C& c, const std::string& s) {
                     c.swarm.neighbors.mode = parse_neighbor_mode(s);
                 },
                 [](const C& c) { return std::string(to_string(c.swarm.neighbors.mode)); }});
    f.push_back(dbl("swarm.radius", [](C& c) -> double& { return c.swarm.neighbors.radius; }));
    f.push_back(integer("swarm.nn", [](C& c) -> int& { return c.swarm.neighbors.count; }));
    f.push_back(dbl("swarm.d_ref", [](C& c) -> double& { return c.swarm.d_ref; }));
    f.push_back(dbl("swarm.v_ref", [](C& c) -> double& { return c.swarm.v_ref; }));
    f.push_back({"swarm.u_mig",
                 [](C& c, const std::string& s) { c.swarm.u_mig = to_vec3("swarm.u_mig", s); },
                 [](const C& c) { return vec3_text(c.swarm.u_mig); }});
    f.push_back({"swarm.migration",
                 [](C& c, const std::string& s) { c.swarm.migration = to_bool("swarm.migration", s); },
                 [](const C& c) { return std::string(c.swarm.migration ? "true" : "false"); }});
    f.push_back(dbl("swarm.r_coll", [](C& c) -> double& { return c.swarm.r_coll; }));
    f.push_back(dbl("swarm.v_max", [](C& c) -> double& { return c.swarm.v_max; }));
    f.push_back(dbl("swarm.a_max", [](C& c) -> double& { return c.swarm.a_max; }));
    // [olfati_saber]
#define SWARMSIM_OS(name) \
    f.push_back(dbl("olfati_saber." #name, [](C& c) -> double& { return c.swarm.olfati.name; }))
    SWARMSIM_OS(c1_alpha);
    SWARMSIM_OS(c2_alpha);
    SWARMSIM_OS(c1_beta);
    SWARMSIM_OS(c2_beta);
    SWARMSIM_OS(c_mig);
    SWARMSIM_OS(epsilon);
    SWARMSIM_OS(h_alpha);
    SWARMSIM_OS(h_beta);
    SWARMSIM_OS(kappa);
    SWARMSIM_OS(a);
    SWARMSIM_OS(b);
    SWARMSIM_OS(d_obs);
    SWARMSIM_OS(r_obs);
#undef SWARMSIM_OS
    // [vasarhelyi]
#define SWARMSIM_VA(name) \
    f.push_back(dbl("vasarhelyi." #name, [](C& c) -> double& { return c.swarm.vasarhelyi.name; }))
    SWARMSIM_VA(r0_rep);
    SWARMSIM_VA(p_rep);
    SWARMSIM_VA(r0_frict);
    SWARMSIM_VA(c_frict);
    SWARMSIM_VA(v_frict);
    SWARMSIM_VA(p_frict);
    SWARMSIM_VA(a_frict);
    SWARMSIM_VA(r0_shill);
    SWARMSIM_VA(v_shill);
    SWARMSIM_VA(p_shill);
    SWARMSIM_VA(a_shill);
    SWARMSIM_VA(shill_range);
    SWARMSIM_VA(c_mig);
    SWARMSIM_VA(tau);
#undef SWARMSIM_VA
    // [quadcopter]
#define SWARMSIM_QP(name) \
    f.push_back(dbl("quadcopter." #name, [](C& c) -> double& { return c.sim.quad.name; }))
    SWARMSIM_QP(mass);
    SWARMSIM_QP(jx);
    SWARMSIM_QP(jy);
    SWARMSIM_QP(jz);
    SWARMSIM_QP(gravity);
    SWARMSIM_QP(max_thrust);
    SWARMSIM_QP(max_torque_xy);
    SWARMSIM_QP(max_torque_z);
    SWARMSIM_QP(max_tilt);
    SWARMSIM_QP(k_vel);
    SWARMSIM_QP(k_att);
    SWARMSIM_QP(k_yaw);
    SWARMSIM_QP(k_rate);
    SWARMSIM_QP(sanity_bound);
#undef SWARMSIM_QP
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = make_fields();
    return table;
}

pt::ptree read_ini(const std::string& text, const std::string& origin) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return tree;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void apply_tree(const pt::ptree& tree, ScenarioConfig& cfg, const std::filesystem::path& base_dir) {
    static const std::map<std::string, const Field*> by_key = [] {
        std::map<std::string, const Field*> m;
        for (const auto& fld : fields()) m.emplace(fld.key, &fld);
        return m;
    }();

    // Presets load first so the file's own sections override them.
    if (auto presets = tree.get_optional<std::string>("swarm.presets")) {
        std::istringstream is(*presets);
        std::string p;
        while (is >> p) {
            std::filesystem::path path = p;
            if (path.is_relative()) path = base_dir / path;
            apply_tree(read_ini(read_file(path), path.string()), cfg, path.parent_path());
        }
    }

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' must live inside a [section]");
        for (const auto& [name, value] : body) {
            const std::string key = section + "." + name;
            if (key == "swarm.presets") continue;
            auto it = by_key.find(key);
            if (it == by_key.end()) throw ConfigError("unknown config key '" + key + "'");
            it->second->set(cfg, value.data());
        }
    }

    if (!cfg.sim.map.file.empty() && tree.get_optional<std::string>("map.file")) {
        std::filesystem::path mp = cfg.sim.map.file;
        if (mp.is_relative() && !base_dir.empty()) cfg.sim.map.file = (base_dir / mp).string();
    }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    ScenarioConfig cfg;
    apply_tree(read_ini(text, "config"), cfg, base_dir);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    std::string current;
    for (const auto& fld : fields()) {
        const auto dot = fld.key.find('.');
        const std::string section = fld.key.substr(0, dot);
        if (section != current) {
            if (!current.empty()) os << '\n';
            os << '[' << section << "]\n";
            current = section;
        }
        os << fld.key.substr(dot + 1) << " = " << fld.get(cfg) << '\n';
    }
    return os.str();
}

}  // namespace swarmsim
