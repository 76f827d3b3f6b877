#include "swarmsim/live.hpp"
#include "swarmsim/record.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <unistd.h>

using namespace swarmsim;
using namespace swarmsim::live;
using nlohmann::json;
namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

ScenarioConfig small_scenario(double t_end = 10.0) {
    ScenarioConfig sc;
    sc.sim.t_end = t_end;
    sc.sim.map.density = 0.0;
    sc.swarm.agents = 8;
    return sc;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("swarmsim_live_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

class Client {
public:
    explicit Client(unsigned short port) {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/ws");
    }
    ~Client() {
        beast::error_code ec;
        ws_.close(websocket::close_code::normal, ec);
    }

    json read() {
        beast::flat_buffer buf;
        ws_.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    // Skips frames until a message of another type arrives.
    json read_reply() {
        for (;;) {
            auto j = read();
            if (j.at("type") != "frame") return j;
        }
    }

    json read_frame_at_least(std::int64_t tick) {
        for (;;) {
            auto j = read();
            if (j.at("type") == "frame" && j.at("tick").get<std::int64_t>() >= tick) return j;
        }
    }

    void send(const json& j) { ws_.write(net::buffer(j.dump())); }

private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_{ioc_};
};

http::response<http::string_body> http_get(unsigned short port, const std::string& target) {
    net::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::string_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(stream, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return res;
}

bool same_series(const std::vector<MetricsFrame>& a, const std::vector<MetricsFrame>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double xs[] = {a[k].t, a[k].phi_order, a[k].phi_connectivity, a[k].dist.avg, a[k].speed.avg};
        const double ys[] = {b[k].t, b[k].phi_order, b[k].phi_connectivity, b[k].dist.avg, b[k].speed.avg};
        if (a[k].tick != b[k].tick || std::memcmp(xs, ys, sizeof xs) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("control parsing accepts every action") {
    const SwarmParams sp;
    const auto p = parse_control(R"({"type":"control","id":7,"action":"param_patch","patch":{"v_ref":3,"tick":99}})", sp);
    CHECK(p.id == 7);
    const auto& patch = std::get<ParamPatch>(p.action);
    CHECK(patch.v_ref == 3.0);
    CHECK(patch.tick == 0);

    CHECK(std::holds_alternative<Pause>(parse_control(R"({"type":"control","action":"pause"})", sp).action));
    CHECK(std::holds_alternative<Resume>(parse_control(R"({"type":"control","action":"resume"})", sp).action));
    const auto r = parse_control(R"({"type":"control","action":"reset","seed":12})", sp);
    CHECK(std::get<Reset>(r.action).seed == 12u);
    CHECK_FALSE(std::get<Reset>(parse_control(R"({"type":"control","action":"reset"})", sp).action).seed);
    const auto rate = parse_control(R"({"type":"control","action":"set_rate","ticks_per_second":250})", sp);
    CHECK(std::get<SetRate>(rate.action).ticks_per_second == 250.0);
    CHECK(parse_control(R"({"type":"control","action":"pause"})", sp).id.is_null());
}

TEST_CASE("control parsing rejects malformed messages") {
    const SwarmParams sp;
    const char* bad[] = {
        "not json",
        "[1,2]",
        R"({"action":"pause"})",
        R"({"type":"control"})",
        R"({"type":"control","action":"fly"})",
        R"({"type":"control","action":"pause","extra":1})",
        R"({"type":"control","action":"param_patch"})",
        R"({"type":"control","action":"param_patch","patch":{"warp":1}})",
        R"({"type":"control","action":"reset","seed":-1})",
        R"({"type":"control","action":"reset","seed":"x"})",
        R"({"type":"control","action":"set_rate","ticks_per_second":0})",
        R"({"type":"control","action":"set_rate"})",
    };
    for (const char* text : bad) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse_control(text, sp), ProtocolError);
    }
}

TEST_CASE("static resolution stays inside the root") {
    const auto root = scratch("static");
    fs::create_directories(root / "assets");
    std::ofstream(root / "index.html") << "<html></html>";
    std::ofstream(root / "assets" / "app.js") << "1";
    std::ofstream(root.parent_path() / ("secret_" + std::to_string(::getpid()))) << "x";

    CHECK(resolve_static(root, "/") == fs::weakly_canonical(root / "index.html"));
    CHECK(resolve_static(root, "/assets/app.js?v=3") == fs::weakly_canonical(root / "assets" / "app.js"));
    CHECK_FALSE(resolve_static(root, "/../secret_" + std::to_string(::getpid())));
    CHECK_FALSE(resolve_static(root, "/assets/../../etc/passwd"));
    CHECK_FALSE(resolve_static(root, "/assets"));
    CHECK_FALSE(resolve_static(root, "/missing.js"));
    CHECK_FALSE(resolve_static(root, "relative"));
    CHECK_FALSE(resolve_static(root, "/a\\..\\b"));
    CHECK_FALSE(resolve_static({}, "/"));
    fs::create_directory_symlink("/etc", root / "escape");
    CHECK_FALSE(resolve_static(root, "/escape/hostname"));

    CHECK(mime_type("a.js").rfind("text/javascript", 0) == 0);
    CHECK(mime_type("a.css").rfind("text/css", 0) == 0);
    CHECK(mime_type("a.bin") == "application/octet-stream");
    fs::remove(root.parent_path() / ("secret_" + std::to_string(::getpid())));
    fs::remove_all(root);
}

TEST_CASE("snapshot and frame messages carry the schema") {
    const auto sc = small_scenario();
    World w = World::create(sc.sim, sc.swarm);
    const auto snap = snapshot_message(w, true, 100.0);
    CHECK(snap.at("type") == "snapshot");
    CHECK(snap.at("schema_version") == kMessageSchemaVersion);
    CHECK(snap.at("positions").size() == 8);
    CHECK(snap.at("paused") == true);
    CHECK(parse_config(snap.at("config").get<std::string>()).swarm == sc.swarm);
    const auto f = w.step();
    REQUIRE(f);
    const auto frame = frame_message(w, *f);
    CHECK(frame.at("tick") == 1);
    CHECK(frame.at("metrics").at("phi_order").is_number());
    CHECK(frame.at("velocities").size() == 8);
}

TEST_CASE("simulation applies controls between ticks") {
    Simulation sim(small_scenario(1.0), {.keep_history = true});
    std::vector<json> replies;
    const auto collect = [&](const json& j) { replies.push_back(j); };

    for (int k = 0; k < 10; ++k) sim.advance();
    sim.submit({1, Pause{}}, collect);
    sim.drain();
    CHECK(sim.paused());
    CHECK_FALSE(sim.advance());
    sim.submit({2, Resume{}}, collect);
    ParamPatch p;
    p.v_ref = 2.0;
    sim.submit({3, p}, collect);
    ParamPatch bad;
    bad.d_ref = 2.0 * sim.world().params().r_coll;
    sim.submit({4, bad}, collect);
    sim.submit({5, SetRate{50.0}}, collect);
    sim.drain();
    REQUIRE(replies.size() == 5);
    CHECK(replies[2].at("type") == "ack");
    CHECK(replies[2].at("tick") == 10);
    CHECK(replies[3].at("type") == "error");
    CHECK(replies[3].at("id") == 4);
    CHECK(sim.world().params().v_ref == 2.0);
    CHECK(sim.patches().size() == 1);
    CHECK(sim.rate() == 50.0);

    while (sim.advance()) {
    }
    CHECK(sim.finished());
    CHECK(sim.history().size() == 100);

    sim.submit({6, Reset{9}}, collect);
    sim.drain();
    CHECK(sim.epoch() == 1);
    CHECK(sim.world().tick() == 0);
    CHECK(sim.config().sim.seed == 9);
    CHECK(sim.patches().empty());
    CHECK(sim.history().empty());
}

TEST_CASE("live session over a socket: snapshot, patch, rejection, replay") {
    const auto dir = scratch("session");
    const auto sc = small_scenario(10.0);
    Server::Options opts;
    opts.port = 0;
    opts.sim.rate = 2000.0;
    opts.sim.frame_rate = 200.0;
    opts.sim.keep_history = true;
    opts.sim.patch_log = dir / "patches.json";
    Server server(sc, opts);
    server.start();

    Client c(server.port());
    const auto snap = c.read();
    REQUIRE(snap.at("type") == "snapshot");
    CHECK(snap.at("positions").size() == 8);

    c.send({{"type", "control"}, {"id", "slow"}, {"action", "param_patch"},
            {"patch", {{"v_ref", 2.0}, {"u_mig_speed", 2.0}}}});
    const auto ack = c.read_reply();
    REQUIRE(ack.at("type") == "ack");
    CHECK(ack.at("id") == "slow");
    const auto applied = ack.at("tick").get<std::int64_t>();

    c.send({{"type", "control"}, {"id", 2}, {"action", "param_patch"},
            {"patch", {{"d_ref", 2.0 * sc.swarm.r_coll}}}});
    const auto err = c.read_reply();
    CHECK(err.at("type") == "error");
    CHECK(err.at("id") == 2);

    c.send({{"type", "control"}, {"action", "teleport"}});
    CHECK(c.read_reply().at("type") == "error");

    const auto later = c.read_frame_at_least(applied + 500);
    CHECK(later.at("metrics").at("speed")[1].get<double>() == doctest::Approx(2.0).epsilon(0.1));

    // Let the session run out, then replay the logged patches offline.
    for (int k = 0; k < 400 && !server.inspect([](const Simulation& s) { return s.finished(); }); ++k)
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
    const auto live_history = server.inspect([](const Simulation& s) { return s.history(); });
    server.stop();
    REQUIRE(live_history.size() == 1000);

    const auto patches = read_patches(dir / "patches.json", sc.swarm);
    REQUIRE(patches.size() == 1);
    CHECK(patches[0].tick == applied);
    const auto replay = run(sc.sim, sc.swarm, patches, {.record_states = false});
    CHECK(same_series(live_history, replay.metrics));
    fs::remove_all(dir);
}

TEST_CASE("pause, rate change and reset over a socket") {
    Server::Options opts;
    opts.port = 0;
    opts.sim.rate = 500.0;
    opts.sim.start_paused = true;
    Server server(small_scenario(30.0), opts);
    server.start();
    Client c(server.port());
    const auto snap = c.read();
    CHECK(snap.at("paused") == true);
    CHECK(snap.at("tick") == 0);

    c.send({{"type", "control"}, {"id", 1}, {"action", "resume"}});
    CHECK(c.read_reply().at("action") == "resume");
    c.read_frame_at_least(20);
    c.send({{"type", "control"}, {"id", 2}, {"action", "set_rate"}, {"ticks_per_second", 1000}});
    CHECK(c.read_reply().at("action") == "set_rate");
    c.send({{"type", "control"}, {"id", 3}, {"action", "reset"}, {"seed", 5}});
    json reply = c.read_reply();
    json fresh;
    // The ack and the new snapshot may arrive in either order.
    if (reply.at("type") == "snapshot") {
        fresh = reply;
        reply = c.read_reply();
    } else {
        fresh = c.read_reply();
    }
    CHECK(reply.at("type") == "ack");
    REQUIRE(fresh.at("type") == "snapshot");
    CHECK(fresh.at("seed") == 5);
    CHECK(fresh.at("tick") == 0);
    const auto f = c.read_frame_at_least(1);
    CHECK(f.at("tick").get<std::int64_t>() < 2000);
    c.send({{"type", "control"}, {"id", 4}, {"action", "pause"}});
    CHECK(c.read_reply().at("action") == "pause");
    server.stop();
}

TEST_CASE("http serves the fallback page and static files") {
    const auto dir = scratch("http");
    Server::Options opts;
    opts.port = 0;
    opts.sim.start_paused = true;
    {
        Server server(small_scenario(), opts);
        server.start();
        const auto home = http_get(server.port(), "/");
        CHECK(home.result() == http::status::ok);
        CHECK(home.body().find("swarmsim live server") != std::string::npos);
        CHECK(http_get(server.port(), "/nothing.js").result() == http::status::not_found);
        server.stop();
    }
    std::ofstream(dir / "index.html") << "<p>bundle</p>";
    std::ofstream(dir / "app.js") << "console.log(1)";
    opts.ui_dir = dir;
    Server server(small_scenario(), opts);
    server.start();
    const auto home = http_get(server.port(), "/");
    CHECK(home.body() == "<p>bundle</p>");
    const auto js = http_get(server.port(), "/app.js");
    CHECK(js.body() == "console.log(1)");
    CHECK(std::string(js[http::field::content_type]).rfind("text/javascript", 0) == 0);
    CHECK(http_get(server.port(), "/../../etc/passwd").result() == http::status::not_found);
    server.stop();
    fs::remove_all(dir);
}

TEST_CASE("binding an occupied port fails") {
    Server::Options opts;
    opts.port = 0;
    opts.sim.start_paused = true;
    Server a(small_scenario(), opts);
    a.start();
    opts.port = a.port();
    Server b(small_scenario(), opts);
    CHECK_THROWS_AS(b.start(), std::system_error);
    a.stop();
}
