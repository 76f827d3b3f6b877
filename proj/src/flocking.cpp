#include "swarmsim/flocking.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace swarmsim {

Snapshot make_snapshot(std::span<const AgentState> states) {
    Snapshot s;
    s.positions.reserve(states.size());
    s.velocities.reserve(states.size());
    for (const auto& a : states) {
        s.positions.push_back(a.position);
        s.velocities.push_back(inertial_velocity(a));
    }
    return s;
}

bool SensingGraph::has_edge(int i, int j) const {
    const auto& l = out[static_cast<std::size_t>(i)];
    return std::binary_search(l.begin(), l.end(), j);
}

std::size_t SensingGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& l : out) n += l.size();
    return n;
}

std::vector<int> metric_neighbors(std::span<const Vec3> positions, int i, double r) {
    std::vector<int> out;
    const Vec3& pi = positions[static_cast<std::size_t>(i)];
    for (int j = 0; j < static_cast<int>(positions.size()); ++j) {
        if (j != i && (positions[static_cast<std::size_t>(j)] - pi).norm() <= r) out.push_back(j);
    }
    return out;
}

namespace {

std::vector<int> nearest_of(std::vector<std::pair<double, int>>& cand, int nn) {
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(nn, 0)), cand.size());
    if (k < cand.size()) std::nth_element(cand.begin(), cand.begin() + static_cast<long>(k), cand.end());
    std::vector<int> out;
    out.reserve(k);
    for (std::size_t m = 0; m < k; ++m) out.push_back(cand[m].second);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<int> topological_neighbors(std::span<const Vec3> positions, int i, int nn) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(positions.size());
    const Vec3& pi = positions[static_cast<std::size_t>(i)];
    for (int j = 0; j < static_cast<int>(positions.size()); ++j) {
        if (j != i) cand.emplace_back((positions[static_cast<std::size_t>(j)] - pi).squaredNorm(), j);
    }
    return nearest_of(cand, nn);
}

std::vector<int> hybrid_neighbors(std::span<const Vec3> positions, int i, double r, int nn) {
    std::vector<std::pair<double, int>> cand;
    const Vec3& pi = positions[static_cast<std::size_t>(i)];
    for (int j = 0; j < static_cast<int>(positions.size()); ++j) {
        if (j == i) continue;
        const Vec3 d = positions[static_cast<std::size_t>(j)] - pi;
        if (d.norm() <= r) cand.emplace_back(d.squaredNorm(), j);
    }
    return nearest_of(cand, nn);
}

SensingGraph build_graph(std::span<const Vec3> positions, const NeighborRule& rule) {
    const int n = static_cast<int>(positions.size());
    SensingGraph g;
    g.out.resize(positions.size());
    const int k = effective_neighbor_count(rule, n);
    for (int i = 0; i < n; ++i) {
        auto& l = g.out[static_cast<std::size_t>(i)];
        switch (rule.mode) {
            case NeighborMode::metric: l = metric_neighbors(positions, i, rule.radius); break;
            case NeighborMode::topological: l = topological_neighbors(positions, i, k); break;
            case NeighborMode::hybrid: l = hybrid_neighbors(positions, i, rule.radius, k); break;
        }
    }
    return g;
}

std::vector<std::vector<int>> symmetrize(const SensingGraph& g) {
    std::vector<std::vector<int>> adj(g.out.size());
    for (std::size_t i = 0; i < g.out.size(); ++i) {
        for (int j : g.out[i]) {
            adj[i].push_back(j);
            adj[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
        }
    }
    for (auto& l : adj) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    return adj;
}

std::vector<VirtualAgent> spawn_virtual_agents(const Vec3& position, const Vec3& velocity,
                                               const ObstacleMap& map, double range,
                                               VirtualAgentKind kind, double v_shill) {
    std::vector<VirtualAgent> out;
    for (std::size_t m = 0; m < map.obstacles.size(); ++m) {
        const SurfacePoint sp = nearest_surface_point(position, map.obstacles[m]);
        if (sp.distance > range) continue;
        VirtualAgent va;
        va.position = sp.point;
        va.normal = sp.normal;
        va.distance = sp.distance;
        va.obstacle = static_cast<int>(m);
        if (kind == VirtualAgentKind::beta) {
            va.velocity = velocity - sp.normal * sp.normal.dot(velocity);
        } else {
            va.velocity = v_shill * sp.normal;
        }
        out.push_back(va);
    }
    return out;
}

namespace olfati {

double sigma_norm(double dist, double eps) {
    return (std::sqrt(1.0 + eps * dist * dist) - 1.0) / eps;
}

Vec3 sigma_grad(const Vec3& z, double eps) {
    return z / std::sqrt(1.0 + eps * z.squaredNorm());
}

double bump(double z, double h) {
    if (z < 0.0) return 0.0;
    if (z < h) return 1.0;
    if (z <= 1.0) return 0.5 * (1.0 + std::cos(kPi * (z - h) / (1.0 - h)));
    return 0.0;
}

double sigma1(double z) { return z / std::sqrt(1.0 + z * z); }

double action(double z, double a, double b) {
    const double c = std::abs(a - b) / std::sqrt(4.0 * a * b);
    return 0.5 * ((a + b) * sigma1(z + c) + (a - b));
}

double phi_alpha(double z, double r_alpha, double d_alpha, const OlfatiSaberGains& g) {
    return bump(z / r_alpha, g.h_alpha) * action(z - d_alpha, g.a, g.b);
}

double phi_beta(double z, double d_beta, const OlfatiSaberGains& g) {
    return bump(z / d_beta, g.h_beta) * (sigma1(z - d_beta) - 1.0);
}

}  // namespace olfati

double braking_curve(double r, double a, double p) {
    if (r <= 0.0) return 0.0;
    if (r * p < a / p) return r * p;
    return std::sqrt(2.0 * a * r - a * a / (p * p));
}

Vec3 olfati_saber_pair(const Vec3& pi, const Vec3& vi, const Vec3& pj, const Vec3& vj,
                       const SwarmParams& sp) {
    const auto& g = sp.olfati;
    const double range = std::min(sp.neighbors.radius, g.kappa * sp.d_ref);
    const double r_alpha = olfati::sigma_norm(range, g.epsilon);
    const double d_alpha = olfati::sigma_norm(sp.d_ref, g.epsilon);
    const Vec3 qij = pj - pi;
    const double z = olfati::sigma_norm(qij.norm(), g.epsilon);
    const Vec3 nij = olfati::sigma_grad(qij, g.epsilon);
    const double aij = olfati::bump(z / r_alpha, g.h_alpha);
    return g.c1_alpha * olfati::phi_alpha(z, r_alpha, d_alpha, g) * nij +
           g.c2_alpha * aij * (vj - vi);
}

Vec3 vasarhelyi_pair(const Vec3& pi, const Vec3& vi, const Vec3& pj, const Vec3& vj,
                     const SwarmParams& sp) {
    const auto& g = sp.vasarhelyi;
    Vec3 out = Vec3::Zero();
    const Vec3 rij = pi - pj;
    const double d = rij.norm();
    if (d < g.r0_rep && d > 0.0) out += g.p_rep * (g.r0_rep - d) * rij / d;

    const Vec3 vji = vj - vi;
    const double vdiff = vji.norm();
    const double allowed = std::max(g.v_frict, braking_curve(d - g.r0_frict, g.a_frict, g.p_frict));
    if (vdiff > allowed) out += g.c_frict * (vdiff - allowed) * vji / vdiff;
    return out;
}

Vec3 olfati_saber_command(int i, const Snapshot& snap, std::span<const int> neighbors,
                          std::span<const VirtualAgent> virtuals, const SwarmParams& sp) {
    const auto& g = sp.olfati;
    const auto ii = static_cast<std::size_t>(i);
    const Vec3& pi = snap.positions[ii];
    const Vec3& vi = snap.velocities[ii];

    Vec3 u = Vec3::Zero();
    for (int j : neighbors) {
        const auto jj = static_cast<std::size_t>(j);
        u += olfati_saber_pair(pi, vi, snap.positions[jj], snap.velocities[jj], sp);
    }

    const double d_beta = olfati::sigma_norm(g.d_obs, g.epsilon);
    for (const auto& va : virtuals) {
        const Vec3 qik = va.position - pi;
        // Inside the wall the geometric offset flips; push along the outward normal instead.
        const Vec3 dir = va.distance > 0.0 ? olfati::sigma_grad(qik, g.epsilon) : Vec3(-va.normal);
        const double z = va.distance > 0.0 ? olfati::sigma_norm(qik.norm(), g.epsilon) : 0.0;
        const double bik = olfati::bump(z / d_beta, g.h_beta);
        u += g.c1_beta * olfati::phi_beta(z, d_beta, g) * dir + g.c2_beta * bik * (va.velocity - vi);
    }

    if (sp.migration) u += g.c_mig * (sp.u_mig - vi);
    return clamp_norm(u, sp.a_max);
}

Vec3 vasarhelyi_desired_velocity(int i, const Snapshot& snap, std::span<const int> neighbors,
                                 std::span<const VirtualAgent> virtuals, const SwarmParams& sp) {
    const auto& g = sp.vasarhelyi;
    const auto ii = static_cast<std::size_t>(i);
    const Vec3& pi = snap.positions[ii];
    const Vec3& vi = snap.velocities[ii];

    // Self-propulsion acts in the horizontal plane.
    Vec3 heading(vi.x(), vi.y(), 0.0);
    if (heading.norm() > 1e-9) {
        heading.normalize();
    } else if (sp.migration && sp.u_mig.head<2>().norm() > 0.0) {
        heading = Vec3(sp.u_mig.x(), sp.u_mig.y(), 0.0).normalized();
    } else {
        heading.setZero();
    }
    Vec3 v_des = sp.v_ref * heading;

    for (int j : neighbors) {
        const auto jj = static_cast<std::size_t>(j);
        v_des += vasarhelyi_pair(pi, vi, snap.positions[jj], snap.velocities[jj], sp);
    }

    if (sp.migration) v_des += g.c_mig * (sp.u_mig - vi);

    for (const auto& va : virtuals) {
        const Vec3 diff = va.velocity - vi;
        const double vd = diff.norm();
        const double allowed = braking_curve(va.distance - g.r0_shill, g.a_shill, g.p_shill);
        if (vd > allowed) v_des += (vd - allowed) * diff / vd;
    }
    return clamp_norm(v_des, sp.v_max);
}

Vec3 vasarhelyi_command(int i, const Snapshot& snap, std::span<const int> neighbors,
                        std::span<const VirtualAgent> virtuals, const SwarmParams& sp) {
    const auto& g = sp.vasarhelyi;
    const Vec3& vi = snap.velocities[static_cast<std::size_t>(i)];
    const Vec3 a = (vasarhelyi_desired_velocity(i, snap, neighbors, virtuals, sp) - vi) / g.tau;
    return clamp_norm(a, sp.a_max);
}

Vec3 flocking_command(int i, const Snapshot& snap, const SensingGraph& graph,
                      const ObstacleMap& map, const SwarmParams& sp) {
    const auto ii = static_cast<std::size_t>(i);
    const auto& nbrs = graph.out[ii];
    if (sp.algorithm == Algorithm::olfati_saber) {
        const auto virtuals = spawn_virtual_agents(snap.positions[ii], snap.velocities[ii], map,
                                                   sp.olfati.r_obs, VirtualAgentKind::beta);
        return olfati_saber_command(i, snap, nbrs, virtuals, sp);
    }
    const auto virtuals =
        spawn_virtual_agents(snap.positions[ii], snap.velocities[ii], map,
                             sp.vasarhelyi.shill_range, VirtualAgentKind::shill,
                             sp.vasarhelyi.v_shill);
    return vasarhelyi_command(i, snap, nbrs, virtuals, sp);
}

}  // namespace swarmsim
