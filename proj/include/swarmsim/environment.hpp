#pragma once

// Vertical cylindrical obstacles, unbounded in altitude.

#include "swarmsim/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace swarmsim {

struct Obstacle {
    Eigen::Vector2d center_ne = Eigen::Vector2d::Zero();
    double radius = 1.0;

    bool operator==(const Obstacle&) const = default;
};

struct ObstacleMap {
    std::vector<Obstacle> obstacles;
    Bounds2 bounds;
    double density = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;

    bool empty() const { return obstacles.empty(); }
    std::size_t size() const { return obstacles.size(); }
    bool operator==(const ObstacleMap&) const = default;
};

class MapGenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Samples round(density * area) non-overlapping discs inside `bounds`.
/// Throws MapGenerationError when rejection sampling exhausts its budget.
ObstacleMap generate_map(const Bounds2& bounds, double density, double r_min, double r_max,
                         std::uint64_t seed);

struct SurfacePoint {
    Vec3 point;
    Vec3 normal;      // unit, horizontal, pointing out of the cylinder
    double distance;  // signed horizontal distance, negative inside
};

/// Closest point on the cylinder wall at the altitude of `p`. A probe on the
/// axis resolves to the +North wall point.
SurfacePoint nearest_surface_point(const Vec3& p, const Obstacle& obs);

/// Row-major N x M matrix of horizontal agent-to-axis distances.
struct DistanceMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t m) const { return values[i * cols + m]; }
};

DistanceMatrix agent_obstacle_distances(std::span<const Vec3> positions, const ObstacleMap& map);

/// Plain-text map format: one `center_n center_e radius` record per line,
/// `#` starts a comment.
ObstacleMap read_map(const std::filesystem::path& path);
ObstacleMap parse_map(const std::string& text);
std::string format_map(const ObstacleMap& map);
void write_map(const std::filesystem::path& path, const ObstacleMap& map);

/// Stable FNV-1a digest over the obstacle records, used to tag frames.
std::string map_digest(const ObstacleMap& map);

}  // namespace swarmsim
