#pragma once

// Brute-force reference implementations of the swarm metrics. They share no
// code with the library beyond the data types.

#include "swarmsim/environment.hpp"
#include "swarmsim/flocking.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace swarmsim::oracle {

inline double order(const std::vector<Vec3>& v) {
    const std::size_t n = v.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double a = v[i].norm(), b = v[j].norm();
            if (a < 1e-9 || b < 1e-9) continue;
            sum += v[i].dot(v[j]) / (a * b);
        }
    return sum / (static_cast<double>(n) * (n - 1));
}

inline long agent_collisions(const std::vector<Vec3>& p, double r_ag) {
    long c = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j)
            if (i != j && (p[i] - p[j]).norm() < 2.0 * r_ag) ++c;
    return c;
}

inline long obstacle_collisions(const std::vector<Vec3>& p, const ObstacleMap& map, double r_ag) {
    long c = 0;
    for (const auto& a : p)
        for (const auto& o : map.obstacles) {
            const double dn = a.x() - o.center_ne.x(), de = a.y() - o.center_ne.y();
            if (std::sqrt(dn * dn + de * de) < r_ag + o.radius) ++c;
        }
    return c;
}

inline std::vector<std::vector<bool>> undirected(const SensingGraph& g) {
    const auto n = g.out.size();
    std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (int j : g.out[i]) {
            a[i][j] = true;
            a[j][i] = true;
        }
    return a;
}

inline int components(const SensingGraph& g) {
    const auto a = undirected(g);
    const auto n = a.size();
    std::vector<int> label(n, -1);
    int count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::vector<std::size_t> stack{s};
        label[s] = count;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v)
                if (a[u][v] && label[v] < 0) {
                    label[v] = count;
                    stack.push_back(v);
                }
        }
        ++count;
    }
    return count;
}

// General (non-symmetric) eigensolver on the dense Laplacian; no shortcuts.
inline double lambda2(const SensingGraph& g) {
    const auto a = undirected(g);
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a[i][j]) {
                lap(i, j) -= 1.0;
                lap(i, i) += 1.0;
            }
    Eigen::EigenSolver<Eigen::MatrixXd> es(lap, false);
    std::vector<double> ev;
    for (int i = 0; i < n; ++i) ev.push_back(es.eigenvalues()(i).real());
    std::sort(ev.begin(), ev.end());
    return std::max(0.0, ev[1]);
}

// Independent restatement of the lattice law for one pair.
inline Vec3 lattice_pair(const Vec3& pi, const Vec3& vi, const Vec3& pj, const Vec3& vj,
                         const SwarmParams& sp) {
    const auto& g = sp.olfati;
    const auto sig = [&](double d) {
        return (std::sqrt(1.0 + g.epsilon * d * d) - 1.0) / g.epsilon;
    };
    const auto rho = [](double x, double h) {
        if (x < 0.0 || x > 1.0) return 0.0;
        if (x < h) return 1.0;
        return 0.5 * (1.0 + std::cos(kPi * (x - h) / (1.0 - h)));
    };
    const double c = std::abs(g.a - g.b) / std::sqrt(4.0 * g.a * g.b);
    const auto phi = [&](double z) {
        const double s = (z + c) / std::sqrt(1.0 + (z + c) * (z + c));
        return 0.5 * ((g.a + g.b) * s + (g.a - g.b));
    };
    const double r_alpha = sig(std::min(sp.neighbors.radius, g.kappa * sp.d_ref));
    const double d_alpha = sig(sp.d_ref);
    const Vec3 q = pj - pi;
    const double z = sig(q.norm());
    const Vec3 n = q / std::sqrt(1.0 + g.epsilon * q.squaredNorm());
    return g.c1_alpha * rho(z / r_alpha, g.h_alpha) * phi(z - d_alpha) * n +
           g.c2_alpha * rho(z / r_alpha, g.h_alpha) * (vj - vi);
}

struct Frame {
    double order, safety_ag, safety_obs, union_phi, connectivity;
};

inline Frame metrics(const std::vector<Vec3>& p, const std::vector<Vec3>& v, const SensingGraph& g,
                     const ObstacleMap& map, double r_ag) {
    const double n = static_cast<double>(p.size());
    Frame f;
    f.order = order(v);
    f.safety_ag = 1.0 - agent_collisions(p, r_ag) / (n * (n - 1));
    f.safety_obs = std::clamp(1.0 - obstacle_collisions(p, map, r_ag) / n, 0.0, 1.0);
    f.union_phi = 1.0 - (components(g) - 1) / (n - 1);
    f.connectivity = lambda2(g) / n;
    return f;
}

}  // namespace swarmsim::oracle
