#pragma once

// Live steering server: one simulation thread, WebSocket clients that receive
// decimated frames and send control messages, and static file serving for
// the browser UI. Message schema is documented in README.md.

#include "swarmsim/engine.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace swarmsim::live {

inline constexpr int kMessageSchemaVersion = 1;

struct Pause {};
struct Resume {};
struct Reset {
    std::optional<std::uint64_t> seed;
};
struct SetRate {
    double ticks_per_second = 0.0;
};

using ControlAction = std::variant<ParamPatch, Pause, Resume, Reset, SetRate>;

struct ControlMessage {
    nlohmann::json id;  // echoed back in the reply, null when absent
    ControlAction action;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a client control message. Patch fields are completed from
/// `current`; the patch tick is left at 0 and assigned when applied.
ControlMessage parse_control(const std::string& text, const SwarmParams& current);

std::string action_name(const ControlAction& a);

nlohmann::json snapshot_message(const World& world, bool paused, double rate);
nlohmann::json frame_message(const World& world, const MetricsFrame& metrics);
nlohmann::json ack_message(const nlohmann::json& id, const std::string& action, std::int64_t tick);
nlohmann::json error_message(const nlohmann::json& id, const std::string& message);

/// Content type for a static asset, chosen by extension.
std::string mime_type(const std::filesystem::path& p);

/// Resolves a request target below `root`. Returns nothing for targets that
/// escape the root or do not name a regular file. "/" maps to index.html.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root,
                                                    const std::string& target);

/// Page served when no UI bundle is installed.
std::string fallback_page();

/// The simulation side of a live session, independent of any transport.
/// Controls are queued from any thread and applied by the simulation thread
/// at tick boundaries.
class Simulation {
public:
    using Reply = std::function<void(const nlohmann::json&)>;

    struct Options {
        double rate = 0.0;            // ticks per wall second; 0 means real time
        double frame_rate = 30.0;     // frames per wall second sent to clients
        bool start_paused = false;
        bool keep_history = false;    // retain every metrics frame (tests, replay checks)
        std::filesystem::path patch_log;  // rewritten after every applied patch when set
    };

    Simulation(ScenarioConfig cfg, Options opts);

    /// Thread-safe. `reply` runs on the simulation thread once the control
    /// has been applied or rejected.
    void submit(ControlMessage msg, Reply reply);

    /// Applies queued controls. Called by the simulation thread between ticks.
    void drain();

    /// Advances one tick unless paused or finished. Returns the metrics frame.
    std::optional<MetricsFrame> advance();

    bool paused() const { return paused_; }
    bool finished() const;
    double rate() const { return rate_; }
    const World& world() const { return *world_; }
    const ScenarioConfig& config() const { return cfg_; }
    const std::vector<ParamPatch>& patches() const { return patches_; }
    const std::vector<MetricsFrame>& history() const { return history_; }
    /// Incremented on every reset; frames from different epochs are unrelated.
    int epoch() const { return epoch_; }

    /// Wakes a thread blocked in wait_for_work.
    void notify();
    /// Blocks until woken by a control or `notify`, at most `timeout`.
    void wait_for_work(std::chrono::milliseconds timeout);

private:
    void apply(const ControlMessage& msg, const Reply& reply);
    void write_patch_log() const;

    ScenarioConfig cfg_;
    Options opts_;
    std::unique_ptr<World> world_;
    bool paused_ = false;
    double rate_ = 0.0;
    int epoch_ = 0;
    std::vector<ParamPatch> patches_;
    std::vector<MetricsFrame> history_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<ControlMessage, Reply>> inbox_;
    bool wake_ = false;
};

/// HTTP + WebSocket front end. Clients connect to ws://host:port/ws.
class Server {
public:
    struct Options {
        std::string host = "127.0.0.1";
        unsigned short port = 8080;   // 0 picks a free port
        std::filesystem::path ui_dir; // static assets; a fallback page when empty
        Simulation::Options sim;
    };

    Server(ScenarioConfig cfg, Options opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts the network and simulation threads. Throws
    /// std::system_error when the port cannot be bound.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    unsigned short port() const { return port_; }

    /// Queues a control for the simulation thread.
    void submit(ControlMessage msg, Simulation::Reply reply);

    /// Runs `fn` on the simulation thread with exclusive access, for tests
    /// and shutdown reporting.
    template <class F>
    auto inspect(F&& fn) {
        std::lock_guard<std::mutex> lock(sim_mu_);
        return fn(static_cast<const Simulation&>(*sim_));
    }

    struct Impl;  // network side, defined in server.cpp

private:
    void sim_loop();

    ScenarioConfig cfg_;
    Options opts_;
    std::unique_ptr<Simulation> sim_;
    std::mutex sim_mu_;
    std::unique_ptr<Impl> impl_;
    std::thread net_thread_;
    std::thread sim_thread_;
    std::atomic<bool> stopping_{false};
    unsigned short port_ = 0;
};

}  // namespace swarmsim::live
