#include "swarmsim/live.hpp"

#include "swarmsim/record.hpp"

#include <fstream>

namespace swarmsim::live {

Simulation::Simulation(ScenarioConfig cfg, Options opts)
    : cfg_(std::move(cfg)), opts_(std::move(opts)) {
    cfg_.sim.metrics_stride = 1;
    world_ = std::make_unique<World>(World::create(cfg_.sim, cfg_.swarm));
    paused_ = opts_.start_paused;
    rate_ = opts_.rate > 0.0 ? opts_.rate : 1.0 / cfg_.sim.dt;
    write_patch_log();
}

bool Simulation::finished() const { return world_->tick() >= planned_ticks(cfg_.sim); }

void Simulation::submit(ControlMessage msg, Reply reply) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        inbox_.emplace_back(std::move(msg), std::move(reply));
        wake_ = true;
    }
    cv_.notify_all();
}

void Simulation::notify() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        wake_ = true;
    }
    cv_.notify_all();
}

void Simulation::wait_for_work(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return wake_; });
    wake_ = false;
}

void Simulation::drain() {
    std::deque<std::pair<ControlMessage, Reply>> batch;
    {
        std::lock_guard<std::mutex> lock(mu_);
        batch.swap(inbox_);
    }
    for (const auto& [msg, reply] : batch) apply(msg, reply);
}

void Simulation::apply(const ControlMessage& msg, const Reply& reply) {
    const auto send = [&](const nlohmann::json& j) {
        if (reply) reply(j);
    };
    const std::string name = action_name(msg.action);

    if (const auto* patch = std::get_if<ParamPatch>(&msg.action)) {
        ParamPatch p = *patch;
        p.tick = world_->tick();
        const auto report = validate_patch(cfg_.sim, world_->params(), p);
        if (!report.ok()) {
            send(error_message(msg.id, "patch rejected: " + report.joined()));
            return;
        }
        world_->schedule(p);
        patches_.push_back(p);
        write_patch_log();
        send(ack_message(msg.id, name, p.tick));
    } else if (std::holds_alternative<Pause>(msg.action)) {
        paused_ = true;
        send(ack_message(msg.id, name, world_->tick()));
    } else if (std::holds_alternative<Resume>(msg.action)) {
        paused_ = false;
        send(ack_message(msg.id, name, world_->tick()));
    } else if (const auto* reset = std::get_if<Reset>(&msg.action)) {
        if (reset->seed) cfg_.sim.seed = *reset->seed;
        try {
            world_ = std::make_unique<World>(World::create(cfg_.sim, cfg_.swarm));
        } catch (const std::exception& e) {
            send(error_message(msg.id, std::string("reset failed: ") + e.what()));
            return;
        }
        patches_.clear();
        history_.clear();
        ++epoch_;
        write_patch_log();
        send(ack_message(msg.id, name, world_->tick()));
    } else if (const auto* rate = std::get_if<SetRate>(&msg.action)) {
        rate_ = rate->ticks_per_second;
        send(ack_message(msg.id, name, world_->tick()));
    }
}

std::optional<MetricsFrame> Simulation::advance() {
    if (paused_ || finished()) return std::nullopt;
    auto frame = world_->step();
    if (frame && opts_.keep_history) history_.push_back(*frame);
    return frame;
}

void Simulation::write_patch_log() const {
    if (opts_.patch_log.empty()) return;
    nlohmann::json doc = {{"seed", cfg_.sim.seed}, {"patches", nlohmann::json::array()}};
    for (const auto& p : patches_) doc["patches"].push_back(patch_to_json(p));
    const auto tmp = opts_.patch_log.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << doc.dump(2) << "\n";
        if (!out) return;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, opts_.patch_log, ec);
}

}  // namespace swarmsim::live
