#pragma once

// Swarm performance metrics (order, safety, union, connectivity) and the
// distance/speed/acceleration tracking statistics.
//
// Metrics that need at least two agents are NaN for N < 2.

#include "swarmsim/core.hpp"
#include "swarmsim/environment.hpp"
#include "swarmsim/flocking.hpp"

#include <span>

namespace swarmsim {

struct Stats {
    double min = 0.0;
    double avg = 0.0;
    double max = 0.0;
};

struct MetricsFrame {
    std::int64_t tick = 0;
    double t = 0.0;
    double phi_order = 0.0;
    double phi_safety_ag = 1.0;
    double phi_safety_obs = 1.0;
    double phi_union = 1.0;
    double phi_connectivity = 0.0;
    long n_ag = 0;
    long n_obs = 0;
    int n_components = 1;
    Stats dist;
    double obs_dist_min = 0.0;  // smallest agent-center to obstacle-wall distance; NaN without obstacles
    Stats speed;
    Stats accel;
};

struct CountedMetric {
    double phi = 1.0;
    long count = 0;
};

struct UnionResult {
    double phi = 1.0;
    int components = 1;
};

/// Mean pairwise cosine of the velocities. Agents slower than 1e-9 m/s
/// contribute zero to every pair they belong to.
double order_metric(std::span<const Vec3> velocities);

/// Ordered-pair count of d_ij < 2 r_ag (each colliding pair counts twice).
CountedMetric safety_agents(std::span<const Vec3> positions, double r_ag);

/// Count of (agent, obstacle) pairs with d_im < r_ag + r_obs; phi clamped to [0, 1].
CountedMetric safety_obstacles(std::span<const Vec3> positions, const ObstacleMap& map,
                               double r_ag);

/// Connected components of the symmetrized sensing graph.
UnionResult union_metric(const SensingGraph& graph);

/// Second-smallest Laplacian eigenvalue of G'. Exactly 0 when G' is
/// disconnected, exactly N when complete; values below 1e-9 clamp to 0.
double algebraic_connectivity(const SensingGraph& graph);

/// lambda_2 / N.
double connectivity_metric(const SensingGraph& graph);

struct TrackingStats {
    Stats dist;
    double obs_dist_min = 0.0;
    Stats speed;
    Stats accel;
};

TrackingStats tracking_stats(std::span<const Vec3> positions, std::span<const Vec3> velocities,
                             std::span<const Vec3> accelerations, const ObstacleMap& map);

MetricsFrame compute_metrics(std::int64_t tick, double t, const Snapshot& snap,
                             std::span<const Vec3> accelerations, const SensingGraph& graph,
                             const ObstacleMap& map, double r_ag);

}  // namespace swarmsim
