#include "swarmsim/environment.hpp"

#include "swarmsim/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace swarmsim {

namespace {
constexpr int kAttemptsPerObstacle = 2000;
}

ObstacleMap generate_map(const Bounds2& bounds, double density, double r_min, double r_max,
                         std::uint64_t seed) {
    if (!(density >= 0.0)) throw MapGenerationError("obstacle density must be >= 0");
    if (!(r_min <= r_max)) throw MapGenerationError("obstacle radius range needs r_min <= r_max");

    ObstacleMap map;
    map.bounds = bounds;
    map.density = density;
    map.r_min = r_min;
    map.r_max = r_max;

    const auto count = static_cast<std::size_t>(std::llround(density * bounds.area()));
    if (count == 0) return map;
    if (!(r_min > 0.0)) throw MapGenerationError("obstacle radius must be > 0");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(bounds.n_min, bounds.n_max);
    std::uniform_real_distribution<double> ue(bounds.e_min, bounds.e_max);
    std::uniform_real_distribution<double> ur(r_min, r_max);

    map.obstacles.reserve(count);
    const std::size_t budget = count * kAttemptsPerObstacle;
    std::size_t attempts = 0;
    while (map.obstacles.size() < count) {
        if (attempts++ >= budget) {
            throw MapGenerationError("could not place " + std::to_string(count) +
                                     " non-overlapping obstacles after " +
                                     std::to_string(budget) +
                                     " attempts; density too high for the radius range");
        }
        Obstacle cand;
        cand.center_ne = {un(rng), ue(rng)};
        cand.radius = r_min == r_max ? r_min : ur(rng);
        bool clear = true;
        for (const auto& o : map.obstacles) {
            if ((o.center_ne - cand.center_ne).norm() <= o.radius + cand.radius) {
                clear = false;
                break;
            }
        }
        if (clear) map.obstacles.push_back(cand);
    }
    return map;
}

SurfacePoint nearest_surface_point(const Vec3& p, const Obstacle& obs) {
    const Eigen::Vector2d rel = p.head<2>() - obs.center_ne;
    const double d_axis = rel.norm();
    Eigen::Vector2d dir = d_axis > 0.0 ? Eigen::Vector2d(rel / d_axis) : Eigen::Vector2d(1.0, 0.0);
    SurfacePoint sp;
    sp.normal = Vec3(dir.x(), dir.y(), 0.0);
    sp.distance = d_axis - obs.radius;
    if (sp.distance == 0.0) {
        sp.point = p;
    } else {
        const Eigen::Vector2d wall = obs.center_ne + obs.radius * dir;
        sp.point = Vec3(wall.x(), wall.y(), p.z());
    }
    return sp;
}

DistanceMatrix agent_obstacle_distances(std::span<const Vec3> positions, const ObstacleMap& map) {
    DistanceMatrix d;
    d.rows = positions.size();
    d.cols = map.obstacles.size();
    d.values.resize(d.rows * d.cols);
    for (std::size_t i = 0; i < d.rows; ++i) {
        for (std::size_t m = 0; m < d.cols; ++m) {
            d.values[i * d.cols + m] =
                (positions[i].head<2>() - map.obstacles[m].center_ne).norm();
        }
    }
    return d;
}

ObstacleMap parse_map(const std::string& text) {
    ObstacleMap map;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double n, e, r;
        if (!(ls >> n)) continue;
        std::string extra;
        if (!(ls >> e >> r) || (ls >> extra))
            throw ConfigError("map line " + std::to_string(lineno) +
                              ": expected 'center_n center_e radius'");
        if (!(r > 0.0) || !std::isfinite(n) || !std::isfinite(e))
            throw ConfigError("map line " + std::to_string(lineno) + ": invalid obstacle");
        map.obstacles.push_back({{n, e}, r});
    }
    if (!map.obstacles.empty()) {
        auto& b = map.bounds;
        b = {map.obstacles[0].center_ne.x(), map.obstacles[0].center_ne.x(),
             map.obstacles[0].center_ne.y(), map.obstacles[0].center_ne.y()};
        map.r_min = map.r_max = map.obstacles[0].radius;
        for (const auto& o : map.obstacles) {
            b.n_min = std::min(b.n_min, o.center_ne.x());
            b.n_max = std::max(b.n_max, o.center_ne.x());
            b.e_min = std::min(b.e_min, o.center_ne.y());
            b.e_max = std::max(b.e_max, o.center_ne.y());
            map.r_min = std::min(map.r_min, o.radius);
            map.r_max = std::max(map.r_max, o.radius);
        }
        if (b.area() > 0.0) map.density = map.obstacles.size() / b.area();
    }
    return map;
}

ObstacleMap read_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read map file '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_map(os.str());
}

std::string format_map(const ObstacleMap& map) {
    std::ostringstream os;
    os << "# center_n center_e radius (meters)\n";
    for (const auto& o : map.obstacles) {
        os << format_double(o.center_ne.x()) << ' ' << format_double(o.center_ne.y()) << ' '
           << format_double(o.radius) << '\n';
    }
    return os.str();
}

void write_map(const std::filesystem::path& path, const ObstacleMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write map file '" + path.string() + "'");
    out << format_map(map);
}

std::string map_digest(const ObstacleMap& map) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : format_map(map)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace swarmsim
