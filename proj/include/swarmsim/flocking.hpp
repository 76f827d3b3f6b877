#pragma once

// Neighbor selection, virtual agents and the two steering laws.
//
// Both laws return a desired inertial acceleration saturated to a_max. They
// read only the snapshot passed in, so agents can be evaluated in any order.

#include "swarmsim/core.hpp"
#include "swarmsim/environment.hpp"

#include <span>
#include <vector>

namespace swarmsim {

/// Positions and inertial velocities of every agent at one instant.
struct Snapshot {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;

    std::size_t size() const { return positions.size(); }
};

Snapshot make_snapshot(std::span<const AgentState> states);

/// Directed sensing graph; `out[i]` lists the agents i senses, ascending id.
struct SensingGraph {
    std::vector<std::vector<int>> out;

    int size() const { return static_cast<int>(out.size()); }
    bool has_edge(int i, int j) const;
    std::size_t edge_count() const;
    bool operator==(const SensingGraph&) const = default;
};

std::vector<int> metric_neighbors(std::span<const Vec3> positions, int i, double r);

/// The nn closest agents; exact distance ties go to the lower id.
std::vector<int> topological_neighbors(std::span<const Vec3> positions, int i, int nn);

/// The nn closest agents among those within r.
std::vector<int> hybrid_neighbors(std::span<const Vec3> positions, int i, double r, int nn);

SensingGraph build_graph(std::span<const Vec3> positions, const NeighborRule& rule);

/// Undirected G' by edge-set union: i ~ j iff (i,j) or (j,i) is in E.
/// Adjacency lists are ascending.
std::vector<std::vector<int>> symmetrize(const SensingGraph& g);

enum class VirtualAgentKind { beta, shill };

struct VirtualAgent {
    Vec3 position;
    Vec3 velocity;
    Vec3 normal;            // outward surface normal at `position`
    double distance = 0.0;  // signed horizontal distance from the focal agent to the wall
    int obstacle = -1;
};

/// One virtual agent per obstacle whose wall is within `range` of the agent.
/// beta: velocity is the agent velocity projected on the wall tangent plane.
/// shill: velocity is v_shill along the outward normal.
std::vector<VirtualAgent> spawn_virtual_agents(const Vec3& position, const Vec3& velocity,
                                               const ObstacleMap& map, double range,
                                               VirtualAgentKind kind, double v_shill = 0.0);

/// Olfati-Saber scalar building blocks.
namespace olfati {
double sigma_norm(double dist, double eps);
Vec3 sigma_grad(const Vec3& z, double eps);
double bump(double z, double h);
double sigma1(double z);
double action(double z, double a, double b);
double phi_alpha(double z, double r_alpha, double d_alpha, const OlfatiSaberGains& g);
double phi_beta(double z, double d_beta, const OlfatiSaberGains& g);
}  // namespace olfati

/// Braking curve: largest velocity difference that can still be cancelled
/// over distance r with gain p and acceleration a.
double braking_curve(double r, double a, double p);

/// Acceleration agent j contributes to agent i (lattice gradient + consensus).
Vec3 olfati_saber_pair(const Vec3& pi, const Vec3& vi, const Vec3& pj, const Vec3& vj,
                       const SwarmParams& sp);

/// Velocity agent j contributes to agent i's desired velocity (repulsion + friction).
Vec3 vasarhelyi_pair(const Vec3& pi, const Vec3& vi, const Vec3& pj, const Vec3& vj,
                     const SwarmParams& sp);

Vec3 olfati_saber_command(int i, const Snapshot& snap, std::span<const int> neighbors,
                          std::span<const VirtualAgent> virtuals, const SwarmParams& sp);

/// Desired velocity of the Vasarhelyi rules, saturated to v_max.
Vec3 vasarhelyi_desired_velocity(int i, const Snapshot& snap, std::span<const int> neighbors,
                                 std::span<const VirtualAgent> virtuals, const SwarmParams& sp);

Vec3 vasarhelyi_command(int i, const Snapshot& snap, std::span<const int> neighbors,
                        std::span<const VirtualAgent> virtuals, const SwarmParams& sp);

/// Virtual agents plus command for agent i under the selected algorithm.
Vec3 flocking_command(int i, const Snapshot& snap, const SensingGraph& graph,
                      const ObstacleMap& map, const SwarmParams& sp);

}  // namespace swarmsim
