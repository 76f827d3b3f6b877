#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include "swarmsim/core.hpp"
#include "swarmsim/flocking.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace swarmsim::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return Vec3(u(rng), u(rng), u(rng));
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double extent) {
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i) out.push_back(random_vec(rng, -extent, extent));
    return out;
}

inline Eigen::Matrix3d yaw_rotation(double psi) {
    Eigen::Matrix3d r;
    r << std::cos(psi), -std::sin(psi), 0.0, std::sin(psi), std::cos(psi), 0.0, 0.0, 0.0, 1.0;
    return r;
}

// Random undirected graph as a directed graph holding both edge directions.
inline SensingGraph random_graph(std::mt19937_64& rng, int n, double p) {
    std::bernoulli_distribution edge(p);
    SensingGraph g;
    g.out.assign(n, {});
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (edge(rng)) {
                g.out[i].push_back(j);
                g.out[j].push_back(i);
            }
    for (auto& l : g.out) std::sort(l.begin(), l.end());
    return g;
}

}  // namespace swarmsim::testing
