#include "swarmsim/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace swarmsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSpeedFloor = 1e-9;
constexpr double kLambdaFloor = 1e-9;

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<int> rank_;
};

int count_components(const SensingGraph& g) {
    DisjointSets ds(g.out.size());
    int components = g.size();
    for (std::size_t i = 0; i < g.out.size(); ++i)
        for (int j : g.out[i])
            if (ds.unite(i, static_cast<std::size_t>(j))) --components;
    return components;
}

Stats stats_of(std::span<const double> xs) {
    if (xs.empty()) return {kNaN, kNaN, kNaN};
    Stats s{xs[0], 0.0, xs[0]};
    double sum = 0.0;
    for (double x : xs) {
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        sum += x;
    }
    s.avg = sum / static_cast<double>(xs.size());
    return s;
}

}  // namespace

double order_metric(std::span<const Vec3> velocities) {
    const auto n = velocities.size();
    if (n < 2) return kNaN;
    // sum_{i != j} u_i . u_j = |sum u|^2 - sum |u_i|^2 over unit headings u_i.
    Vec3 total = Vec3::Zero();
    double self = 0.0;
    for (const auto& v : velocities) {
        const double s = v.norm();
        if (s < kSpeedFloor) continue;
        const Vec3 u = v / s;
        total += u;
        self += u.squaredNorm();
    }
    const double phi = (total.squaredNorm() - self) / (static_cast<double>(n) * (n - 1));
    return std::clamp(phi, -1.0, 1.0);
}

CountedMetric safety_agents(std::span<const Vec3> positions, double r_ag) {
    const auto n = positions.size();
    if (n < 2) return {kNaN, 0};
    long pairs = 0;
    const double thr = 2.0 * r_ag;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if ((positions[j] - positions[i]).norm() < thr) ++pairs;
    CountedMetric m;
    m.count = 2 * pairs;
    m.phi = 1.0 - static_cast<double>(m.count) / (static_cast<double>(n) * (n - 1));
    return m;
}

CountedMetric safety_obstacles(std::span<const Vec3> positions, const ObstacleMap& map,
                               double r_ag) {
    CountedMetric m;
    if (positions.empty()) return m;
    for (const auto& p : positions)
        for (const auto& o : map.obstacles)
            if ((p.head<2>() - o.center_ne).norm() < r_ag + o.radius) ++m.count;
    m.phi = std::clamp(1.0 - static_cast<double>(m.count) / positions.size(), 0.0, 1.0);
    return m;
}

UnionResult union_metric(const SensingGraph& graph) {
    const int n = graph.size();
    if (n < 2) return {kNaN, n};
    UnionResult r;
    r.components = count_components(graph);
    r.phi = 1.0 - static_cast<double>(r.components - 1) / (n - 1);
    return r;
}

double algebraic_connectivity(const SensingGraph& graph) {
    const int n = graph.size();
    if (n < 2) return kNaN;
    if (count_components(graph) > 1) return 0.0;

    const auto adj = symmetrize(graph);
    const bool complete = std::all_of(adj.begin(), adj.end(), [n](const auto& l) {
        return static_cast<int>(l.size()) == n - 1;
    });
    if (complete) return static_cast<double>(n);

    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& l = adj[static_cast<std::size_t>(i)];
        lap(i, i) = static_cast<double>(l.size());
        for (int j : l) lap(i, j) = -1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
    const double lambda2 = solver.eigenvalues()(1);
    return lambda2 < kLambdaFloor ? 0.0 : lambda2;
}

double connectivity_metric(const SensingGraph& graph) {
    const int n = graph.size();
    if (n < 2) return kNaN;
    return algebraic_connectivity(graph) / n;
}

TrackingStats tracking_stats(std::span<const Vec3> positions, std::span<const Vec3> velocities,
                             std::span<const Vec3> accelerations, const ObstacleMap& map) {
    TrackingStats ts;
    const auto n = positions.size();
    std::vector<double> buf;
    buf.reserve(n > 1 ? n * (n - 1) / 2 : 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) buf.push_back((positions[j] - positions[i]).norm());
    ts.dist = stats_of(buf);

    ts.obs_dist_min = kNaN;
    for (const auto& p : positions) {
        for (const auto& o : map.obstacles) {
            const double d = (p.head<2>() - o.center_ne).norm() - o.radius;
            if (std::isnan(ts.obs_dist_min) || d < ts.obs_dist_min) ts.obs_dist_min = d;
        }
    }

    buf.clear();
    for (const auto& v : velocities) buf.push_back(v.norm());
    ts.speed = stats_of(buf);
    buf.clear();
    for (const auto& a : accelerations) buf.push_back(a.norm());
    ts.accel = stats_of(buf);
    return ts;
}

MetricsFrame compute_metrics(std::int64_t tick, double t, const Snapshot& snap,
                             std::span<const Vec3> accelerations, const SensingGraph& graph,
                             const ObstacleMap& map, double r_ag) {
    MetricsFrame f;
    f.tick = tick;
    f.t = t;
    f.phi_order = order_metric(snap.velocities);
    const auto sa = safety_agents(snap.positions, r_ag);
    f.phi_safety_ag = sa.phi;
    f.n_ag = sa.count;
    const auto so = safety_obstacles(snap.positions, map, r_ag);
    f.phi_safety_obs = so.phi;
    f.n_obs = so.count;
    const auto un = union_metric(graph);
    f.phi_union = un.phi;
    f.n_components = un.components;
    f.phi_connectivity = connectivity_metric(graph);
    const auto ts = tracking_stats(snap.positions, snap.velocities, accelerations, map);
    f.dist = ts.dist;
    f.obs_dist_min = ts.obs_dist_min;
    f.speed = ts.speed;
    f.accel = ts.accel;
    return f;
}

}  // namespace swarmsim
