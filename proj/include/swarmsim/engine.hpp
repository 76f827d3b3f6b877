#pragma once

// Simulation loop: sensing graph -> virtual agents -> commands -> dynamics
// -> metrics -> parameter patches, with synchronous update semantics.

#include "swarmsim/config_io.hpp"
#include "swarmsim/core.hpp"
#include "swarmsim/environment.hpp"
#include "swarmsim/flocking.hpp"
#include "swarmsim/metrics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace swarmsim {

/// Mid-run change to the mutable subset of SwarmParams. `tick` is the first
/// tick whose commands use the new values.
struct ParamPatch {
    std::int64_t tick = 0;
    std::optional<double> v_ref;
    std::optional<double> d_ref;
    std::optional<Vec3> u_mig;
    std::optional<OlfatiSaberGains> olfati;
    std::optional<VasarhelyiGains> vasarhelyi;

    bool operator==(const ParamPatch&) const = default;
};

SwarmParams apply_patch(SwarmParams sp, const ParamPatch& patch);

/// Validates the parameters that would result from applying `patch`.
ValidationReport validate_patch(const SimConfig& cfg, const SwarmParams& current,
                                const ParamPatch& patch);

class SpawnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Independent seed for a named sub-stream (fixed offsets of the run seed).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline constexpr std::uint64_t kMapStream = 1;
inline constexpr std::uint64_t kSpawnStream = 2;

/// N agents uniform in the spawn cube, pairwise farther than 2 r_coll.
std::vector<AgentState> spawn_swarm(const SimConfig& cfg, const SwarmParams& sp,
                                    std::uint64_t seed);

/// Map from config: the hand-authored file when set, else generated.
ObstacleMap make_map(const SimConfig& cfg);

int effective_state_stride(const SimConfig& cfg, int agents);

class World {
public:
    World(SimConfig cfg, SwarmParams sp, ObstacleMap map, std::vector<AgentState> states);

    /// Generates the map and spawns the swarm from cfg.seed.
    static World create(const SimConfig& cfg, const SwarmParams& sp);

    /// Queues a patch; patches at the current tick apply immediately.
    void schedule(const ParamPatch& patch);

    /// Advances one tick. Returns the metrics frame when one was due.
    std::optional<MetricsFrame> step();

    std::int64_t tick() const { return tick_; }
    double time() const { return static_cast<double>(tick_) * cfg_.dt; }
    const SimConfig& config() const { return cfg_; }
    const SwarmParams& params() const { return sp_; }
    const ObstacleMap& map() const { return map_; }
    const std::vector<AgentState>& states() const { return states_; }
    const std::vector<Vec3>& accelerations() const { return accel_; }
    /// Commands computed during the last step (saturated desired accelerations).
    const std::vector<Vec3>& commands() const { return commands_; }
    const std::vector<ParamPatch>& applied_patches() const { return applied_; }

    /// Metrics for the current states (t = tick * dt).
    MetricsFrame measure() const;

private:
    void apply_due_patches();
    const SensingGraph& graph_for_current();

    SimConfig cfg_;
    SwarmParams sp_;
    ObstacleMap map_;
    std::vector<AgentState> states_;
    std::vector<Vec3> accel_;
    std::vector<Vec3> commands_;
    std::int64_t tick_ = 0;
    std::vector<ParamPatch> pending_;
    std::vector<ParamPatch> applied_;
    std::optional<SensingGraph> graph_;  // graph of the current states, when known
};

struct StateSample {
    std::int64_t tick = 0;
    double t = 0.0;
    std::vector<AgentState> states;
};

struct AbortInfo {
    std::string reason;  // machine-readable tag, e.g. "numeric_blowup"
    std::string message;
    std::int64_t tick = 0;
};

inline constexpr int kRecordSchemaVersion = 1;

struct RunRecord {
    int schema_version = kRecordSchemaVersion;
    ScenarioConfig config;
    ObstacleMap map;
    std::vector<ParamPatch> patches;
    std::int64_t ticks_planned = 0;
    std::int64_t ticks_completed = 0;
    int state_stride = 1;
    std::vector<MetricsFrame> metrics;
    std::vector<StateSample> states;
    double wall_seconds = 0.0;
    double real_time_factor = 0.0;
    std::optional<AbortInfo> abort;
};

struct RunOptions {
    bool record_states = true;
};

std::int64_t planned_ticks(const SimConfig& cfg);

/// Runs round(t_end / dt) ticks. Wall time covers the tick loop only.
/// A numeric blowup ends the run early with `abort` set.
RunRecord run(const SimConfig& cfg, const SwarmParams& sp, std::span<const ParamPatch> patches = {},
              const RunOptions& opts = {});

/// Mean order over sampled ticks whose swarm centroid lies inside the north
/// span of the obstacle field. NaN when no sample qualifies.
double field_interval_order(const RunRecord& rec);

/// Mean order over metrics frames with t > t_end - window.
double final_interval_order(const RunRecord& rec, double window);

}  // namespace swarmsim
