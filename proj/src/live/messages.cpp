#include "swarmsim/live.hpp"

#include "swarmsim/record.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace swarmsim::live {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void expect_only(const json& j, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* key : keys) ok = ok || k == key;
        if (!ok) throw ProtocolError("unexpected field '" + k + "'");
        (void)v;
    }
}

}  // namespace

ControlMessage parse_control(const std::string& text, const SwarmParams& current) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("control message must be a JSON object");
    if (j.value("type", std::string()) != "control")
        throw ProtocolError("expected \"type\": \"control\"");
    if (!j.contains("action") || !j.at("action").is_string())
        throw ProtocolError("control message needs a string \"action\"");

    ControlMessage msg;
    msg.id = j.contains("id") ? j.at("id") : json(nullptr);
    const auto action = j.at("action").get<std::string>();
    try {
        if (action == "param_patch") {
            expect_only(j, {"type", "id", "action", "patch"});
            if (!j.contains("patch")) throw ProtocolError("param_patch needs a \"patch\" object");
            json pj = j.at("patch");
            if (pj.is_object()) pj.erase("tick");
            ParamPatch p = patch_from_json(pj, current);
            p.tick = 0;
            msg.action = p;
        } else if (action == "pause") {
            expect_only(j, {"type", "id", "action"});
            msg.action = Pause{};
        } else if (action == "resume") {
            expect_only(j, {"type", "id", "action"});
            msg.action = Resume{};
        } else if (action == "reset") {
            expect_only(j, {"type", "id", "action", "seed"});
            Reset r;
            if (j.contains("seed")) {
                if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
                    throw ProtocolError("seed must be a non-negative integer");
                if (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() < 0)
                    throw ProtocolError("seed must be a non-negative integer");
                r.seed = j.at("seed").get<std::uint64_t>();
            }
            msg.action = r;
        } else if (action == "set_rate") {
            expect_only(j, {"type", "id", "action", "ticks_per_second"});
            if (!j.contains("ticks_per_second") || !j.at("ticks_per_second").is_number())
                throw ProtocolError("set_rate needs a numeric \"ticks_per_second\"");
            const double r = j.at("ticks_per_second").get<double>();
            if (!(r > 0.0) || !std::isfinite(r))
                throw ProtocolError("ticks_per_second must be positive");
            msg.action = SetRate{r};
        } else {
            throw ProtocolError("unknown action '" + action + "'");
        }
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(e.what());
    }
    return msg;
}

std::string action_name(const ControlAction& a) {
    return std::visit(overloaded{[](const ParamPatch&) { return std::string("param_patch"); },
                                 [](const Pause&) { return std::string("pause"); },
                                 [](const Resume&) { return std::string("resume"); },
                                 [](const Reset&) { return std::string("reset"); },
                                 [](const SetRate&) { return std::string("set_rate"); }},
                      a);
}

json snapshot_message(const World& world, bool paused, double rate) {
    const auto& sp = world.params();
    const auto& cfg = world.config();
    json obstacles = json::array();
    for (const auto& o : world.map().obstacles)
        obstacles.push_back({{"n", o.center_ne.x()}, {"e", o.center_ne.y()}, {"r", o.radius}});

    json swarm = {{"agents", sp.agents},
                  {"algorithm", std::string(to_string(sp.algorithm))},
                  {"neighbor_mode", std::string(to_string(sp.neighbors.mode))},
                  {"radius", sp.neighbors.radius},
                  {"nn", sp.neighbors.count},
                  {"d_ref", sp.d_ref},
                  {"v_ref", sp.v_ref},
                  {"u_mig", vec(sp.u_mig)},
                  {"migration", sp.migration},
                  {"r_coll", sp.r_coll},
                  {"v_max", sp.v_max},
                  {"a_max", sp.a_max},
                  {"olfati_saber", gains_to_json(sp.olfati)},
                  {"vasarhelyi", gains_to_json(sp.vasarhelyi)}};

    json positions = json::array(), velocities = json::array();
    for (const auto& s : world.states()) {
        positions.push_back(vec(s.position));
        velocities.push_back(vec(inertial_velocity(s)));
    }

    return {{"type", "snapshot"},
            {"schema_version", kMessageSchemaVersion},
            {"tick", world.tick()},
            {"t", world.time()},
            {"dt", cfg.dt},
            {"t_end", cfg.t_end},
            {"seed", cfg.seed},
            {"dynamics", std::string(to_string(cfg.dynamics))},
            {"paused", paused},
            {"rate", rate},
            {"swarm", swarm},
            {"config", serialize_config({cfg, sp})},
            {"bounds",
             {{"n_min", cfg.map.bounds.n_min},
              {"n_max", cfg.map.bounds.n_max},
              {"e_min", cfg.map.bounds.e_min},
              {"e_max", cfg.map.bounds.e_max}}},
            {"obstacles", obstacles},
            {"map_digest", map_digest(world.map())},
            {"positions", positions},
            {"velocities", velocities}};
}

json frame_message(const World& world, const MetricsFrame& metrics) {
    json positions = json::array(), velocities = json::array();
    for (const auto& s : world.states()) {
        positions.push_back(vec(s.position));
        velocities.push_back(vec(inertial_velocity(s)));
    }
    return {{"type", "frame"},
            {"schema_version", kMessageSchemaVersion},
            {"tick", world.tick()},
            {"t", world.time()},
            {"positions", positions},
            {"velocities", velocities},
            {"metrics", metrics_to_json(metrics)},
            {"map_digest", map_digest(world.map())}};
}

json ack_message(const json& id, const std::string& action, std::int64_t tick) {
    return {{"type", "ack"},
            {"schema_version", kMessageSchemaVersion},
            {"id", id},
            {"action", action},
            {"tick", tick}};
}

json error_message(const json& id, const std::string& message) {
    return {{"type", "error"},
            {"schema_version", kMessageSchemaVersion},
            {"id", id},
            {"message", message}};
}

std::string mime_type(const fs::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".json" || ext == ".map") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".txt") return "text/plain; charset=utf-8";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

std::optional<fs::path> resolve_static(const fs::path& root, const std::string& target) {
    if (root.empty()) return std::nullopt;
    std::string path = target.substr(0, target.find_first_of("?#"));
    if (path.empty() || path.front() != '/') return std::nullopt;
    if (path.find('\0') != std::string::npos || path.find('\\') != std::string::npos)
        return std::nullopt;
    if (path.back() == '/') path += "index.html";

    const fs::path rel = fs::path(path.substr(1)).lexically_normal();
    if (rel.empty() || rel.is_absolute()) return std::nullopt;
    for (const auto& part : rel)
        if (part == "..") return std::nullopt;

    std::error_code ec;
    const fs::path base = fs::weakly_canonical(root, ec);
    if (ec) return std::nullopt;
    const fs::path full = fs::weakly_canonical(base / rel, ec);
    if (ec || !fs::is_regular_file(full, ec)) return std::nullopt;
    // Symlinks inside the root must not lead outside it.
    const auto [b, f] = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
    if (b != base.end()) return std::nullopt;
    (void)f;
    return full;
}

std::string fallback_page() {
    return R"(<!doctype html>
<html><head><meta charset="utf-8"><title>swarmsim live</title></head>
<body>
<h1>swarmsim live server</h1>
<p>No UI bundle is installed. Start the server with <code>--ui-dir</code> pointing at
the built web client, or connect any WebSocket client to <code>/ws</code>.</p>
<pre id="log"></pre>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`);
const log = document.getElementById('log');
ws.onmessage = (ev) => {
  const m = JSON.parse(ev.data);
  if (m.type === 'frame')
    log.textContent = `tick ${m.tick}  t=${m.t.toFixed(2)} s  order=${m.metrics.phi_order}`;
};
</script>
</body></html>
)";
}

}  // namespace swarmsim::live
