#include "swarmsim/engine.hpp"

#include "swarmsim/dynamics.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace swarmsim {

SwarmParams apply_patch(SwarmParams sp, const ParamPatch& patch) {
    if (patch.v_ref) sp.v_ref = *patch.v_ref;
    if (patch.d_ref) sp.d_ref = *patch.d_ref;
    if (patch.u_mig) sp.u_mig = *patch.u_mig;
    if (patch.olfati) sp.olfati = *patch.olfati;
    if (patch.vasarhelyi) sp.vasarhelyi = *patch.vasarhelyi;
    return sp;
}

ValidationReport validate_patch(const SimConfig& cfg, const SwarmParams& current,
                                const ParamPatch& patch) {
    return validate_config(cfg, apply_patch(current, patch));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over a fixed per-stream offset
    std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<AgentState> spawn_swarm(const SimConfig& cfg, const SwarmParams& sp,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double half = 0.5 * cfg.spawn_edge;
    std::uniform_real_distribution<double> ux(cfg.spawn_center.x() - half, cfg.spawn_center.x() + half);
    std::uniform_real_distribution<double> uy(cfg.spawn_center.y() - half, cfg.spawn_center.y() + half);
    std::uniform_real_distribution<double> uz(cfg.spawn_center.z() - half, cfg.spawn_center.z() + half);

    const auto n = static_cast<std::size_t>(std::max(sp.agents, 0));
    const double min_sep = 2.0 * sp.r_coll;
    std::vector<AgentState> out;
    out.reserve(n);
    const std::size_t budget = 10000 * std::max<std::size_t>(n, 1);
    std::size_t attempts = 0;
    while (out.size() < n) {
        if (attempts++ >= budget)
            throw SpawnError("could not place " + std::to_string(n) +
                             " agents with separation > 2*r_coll in the spawn cube");
        const Vec3 p(ux(rng), uy(rng), uz(rng));
        const bool clear = std::all_of(out.begin(), out.end(), [&](const AgentState& a) {
            return (a.position - p).norm() > min_sep;
        });
        if (clear) out.push_back(hover_state(p));
    }
    return out;
}

ObstacleMap make_map(const SimConfig& cfg) {
    if (!cfg.map.file.empty()) return read_map(cfg.map.file);
    return generate_map(cfg.map.bounds, cfg.map.density, cfg.map.r_min, cfg.map.r_max,
                        derive_seed(cfg.seed, kMapStream));
}

int effective_state_stride(const SimConfig& cfg, int agents) {
    if (cfg.state_stride > 0) return cfg.state_stride;
    return agents <= 64 ? 1 : 10;
}

namespace {

template <class F>
void for_each_agent(tbb::task_arena* arena, std::size_t n, F&& f) {
    if (!arena) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    arena->execute([&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const auto& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) f(i);
        });
    });
}

tbb::task_arena* shared_arena(int threads) {
    if (threads <= 1) return nullptr;
    // One arena per thread count for the process lifetime.
    static thread_local std::vector<std::unique_ptr<tbb::task_arena>> arenas;
    for (auto& a : arenas)
        if (a->max_concurrency() == threads) return a.get();
    arenas.push_back(std::make_unique<tbb::task_arena>(threads));
    return arenas.back().get();
}

}  // namespace

World::World(SimConfig cfg, SwarmParams sp, ObstacleMap map, std::vector<AgentState> states)
    : cfg_(std::move(cfg)),
      sp_(std::move(sp)),
      map_(std::move(map)),
      states_(std::move(states)),
      accel_(states_.size(), Vec3::Zero()),
      commands_(states_.size(), Vec3::Zero()) {}

World World::create(const SimConfig& cfg, const SwarmParams& sp) {
    auto map = make_map(cfg);
    auto states = spawn_swarm(cfg, sp, derive_seed(cfg.seed, kSpawnStream));
    return World(cfg, sp, std::move(map), std::move(states));
}

void World::schedule(const ParamPatch& patch) {
    if (patch.tick < tick_)
        throw std::invalid_argument("patch scheduled for past tick " + std::to_string(patch.tick));
    pending_.push_back(patch);
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const ParamPatch& a, const ParamPatch& b) { return a.tick < b.tick; });
    apply_due_patches();
}

void World::apply_due_patches() {
    auto it = pending_.begin();
    while (it != pending_.end() && it->tick <= tick_) {
        sp_ = apply_patch(sp_, *it);
        applied_.push_back(*it);
        ++it;
    }
    pending_.erase(pending_.begin(), it);
}

const SensingGraph& World::graph_for_current() {
    if (!graph_) {
        std::vector<Vec3> pos;
        pos.reserve(states_.size());
        for (const auto& s : states_) pos.push_back(s.position);
        graph_ = build_graph(pos, sp_.neighbors);
    }
    return *graph_;
}

std::optional<MetricsFrame> World::step() {
    tbb::task_arena* arena = shared_arena(cfg_.threads);
    const Snapshot snap = make_snapshot(states_);
    const SensingGraph& graph = graph_for_current();

    const auto n = states_.size();
    for_each_agent(arena, n, [&](std::size_t i) {
        commands_[i] = flocking_command(static_cast<int>(i), snap, graph, map_, sp_);
    });

    std::vector<AgentState> next(n);
    const bool quad = cfg_.dynamics == DynamicsMode::quadcopter;
    for_each_agent(arena, n, [&](std::size_t i) {
        next[i] = quad ? step_quadcopter(states_[i], commands_[i], cfg_.quad, cfg_.dt)
                       : step_point_mass(states_[i], commands_[i], cfg_.dt, sp_.v_max);
    });
    for (std::size_t i = 0; i < n; ++i)
        accel_[i] = (inertial_velocity(next[i]) - snap.velocities[i]) / cfg_.dt;

    states_ = std::move(next);
    graph_.reset();
    ++tick_;

    std::optional<MetricsFrame> frame;
    if (cfg_.metrics_stride > 0 && tick_ % cfg_.metrics_stride == 0) {
        const Snapshot now = make_snapshot(states_);
        frame = compute_metrics(tick_, time(), now, accel_, graph_for_current(), map_, sp_.r_coll);
    }
    apply_due_patches();
    return frame;
}

MetricsFrame World::measure() const {
    const Snapshot now = make_snapshot(states_);
    const SensingGraph g = build_graph(now.positions, sp_.neighbors);
    return compute_metrics(tick_, time(), now, accel_, g, map_, sp_.r_coll);
}

std::int64_t planned_ticks(const SimConfig& cfg) {
    return static_cast<std::int64_t>(std::llround(cfg.t_end / cfg.dt));
}

RunRecord run(const SimConfig& cfg, const SwarmParams& sp, std::span<const ParamPatch> patches,
              const RunOptions& opts) {
    RunRecord rec;
    rec.config = {cfg, sp};
    rec.patches.assign(patches.begin(), patches.end());
    rec.ticks_planned = planned_ticks(cfg);
    rec.state_stride = effective_state_stride(cfg, sp.agents);

    World world = World::create(cfg, sp);
    rec.map = world.map();
    for (const auto& p : patches) world.schedule(p);

    if (opts.record_states) rec.states.push_back({0, 0.0, world.states()});

    const auto start = std::chrono::steady_clock::now();
    try {
        while (world.tick() < rec.ticks_planned) {
            if (auto frame = world.step()) rec.metrics.push_back(*frame);
            if (opts.record_states && world.tick() % rec.state_stride == 0)
                rec.states.push_back({world.tick(), world.time(), world.states()});
        }
    } catch (const NumericBlowup& e) {
        rec.abort = AbortInfo{"numeric_blowup", e.what(), world.tick()};
    }
    const auto stop = std::chrono::steady_clock::now();

    rec.ticks_completed = world.tick();
    rec.wall_seconds = std::chrono::duration<double>(stop - start).count();
    const double simulated = rec.abort ? std::max(world.time(), cfg.dt) : cfg.t_end;
    rec.real_time_factor = rec.wall_seconds / simulated;
    return rec;
}

double field_interval_order(const RunRecord& rec) {
    const auto& b = rec.config.sim.map.bounds;
    double sum = 0.0;
    long n = 0;
    std::size_t m = 0;
    for (const auto& s : rec.states) {
        if (s.states.empty()) continue;
        double c = 0.0;
        for (const auto& a : s.states) c += a.position.x();
        c /= static_cast<double>(s.states.size());
        while (m < rec.metrics.size() && rec.metrics[m].tick < s.tick) ++m;
        if (m < rec.metrics.size() && rec.metrics[m].tick == s.tick && c >= b.n_min &&
            c <= b.n_max && std::isfinite(rec.metrics[m].phi_order)) {
            sum += rec.metrics[m].phi_order;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : std::nan("");
}

double final_interval_order(const RunRecord& rec, double window) {
    const double from = rec.config.sim.t_end - window;
    double sum = 0.0;
    long n = 0;
    for (const auto& f : rec.metrics) {
        if (f.t > from && std::isfinite(f.phi_order)) {
            sum += f.phi_order;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : std::nan("");
}

}  // namespace swarmsim
