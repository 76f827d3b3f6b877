#pragma once

// Shared domain types for the swarm simulator.
//
// World frame is North-East-Down (NED): x = north, y = east, z = down, so
// altitude is -z. Angles are radians everywhere inside the library.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swarmsim {

using Vec3 = Eigen::Vector3d;

constexpr double kPi = 3.14159265358979323846;

/// Rigid-body state of one drone.
///
/// `velocity` is expressed in the body frame (u, v, w). With zero attitude
/// the body frame coincides with the inertial frame, which is how the
/// point-mass mode stores its inertial velocity.
struct AgentState {
    Vec3 position = Vec3::Zero();   // pn, pe, pd
    Vec3 velocity = Vec3::Zero();   // u, v, w
    Vec3 attitude = Vec3::Zero();   // phi, theta, psi
    Vec3 rates = Vec3::Zero();      // p, q, r

    bool operator==(const AgentState&) const = default;
};

/// Body-to-inertial rotation for ZYX Euler angles (phi, theta, psi).
Eigen::Matrix3d body_to_inertial(const Vec3& attitude);

Vec3 inertial_velocity(const AgentState& s);

bool all_finite(const AgentState& s);

/// Scales `v` down so its norm does not exceed `limit`.
Vec3 clamp_norm(const Vec3& v, double limit);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

enum class Algorithm { olfati_saber, vasarhelyi };
enum class NeighborMode { metric, topological, hybrid };
enum class DynamicsMode { point_mass, quadcopter };

std::string_view to_string(Algorithm a);
std::string_view to_string(NeighborMode m);
std::string_view to_string(DynamicsMode m);
Algorithm parse_algorithm(std::string_view s);
NeighborMode parse_neighbor_mode(std::string_view s);
DynamicsMode parse_dynamics_mode(std::string_view s);

/// Neighbor selection rule.
///
/// metric: every agent within `radius`. topological: the `count` nearest.
/// hybrid: the `count` nearest among those within `radius`; the effective
/// count is min(count, N-1), so small swarms stay valid.
struct NeighborRule {
    NeighborMode mode = NeighborMode::hybrid;
    double radius = 150.0;
    int count = 10;

    bool operator==(const NeighborRule&) const = default;
};

/// Olfati-Saber flocking gains. Distances are in meters; the sigma-norm
/// conversion happens inside the control law.
struct OlfatiSaberGains {
    double c1_alpha = 0.4;    // lattice gradient
    double c2_alpha = 0.6;    // velocity consensus
    double c1_beta = 20.0;    // obstacle gradient
    double c2_beta = 3.0;     // obstacle damping
    double c_mig = 2.0;       // migration
    double epsilon = 0.1;     // sigma-norm parameter
    double h_alpha = 0.2;     // bump cutoff for agent interactions
    double h_beta = 0.9;      // bump cutoff for obstacle interactions
    double kappa = 1.2;       // lattice interaction range as a multiple of d_ref
    double a = 5.0;           // action function, a = b gives phi(0) = 0
    double b = 5.0;
    double d_obs = 2.0;       // desired clearance to obstacle surfaces (m)
    double r_obs = 2.4;       // obstacle sensing range (m)

    bool operator==(const OlfatiSaberGains&) const = default;
};

/// Vasarhelyi flocking gains (velocity-space rules).
struct VasarhelyiGains {
    double r0_rep = 15.0;     // repulsion range (m)
    double p_rep = 0.13;      // repulsion gain (1/s)
    double r0_frict = 50.0;   // friction stopping-point offset (m)
    double c_frict = 0.1;     // friction coefficient
    double v_frict = 0.2;     // velocity slack (m/s)
    double p_frict = 1.0;     // braking-curve gain (1/s)
    double a_frict = 2.0;     // braking-curve acceleration (m/s^2)
    double r0_shill = 3.0;    // shill stopping-point offset (m)
    double v_shill = 6.0;     // shill agent speed (m/s)
    double p_shill = 3.55;    // braking-curve gain (1/s)
    double a_shill = 3.0;     // braking-curve acceleration (m/s^2)
    double shill_range = 40.0;
    double c_mig = 0.5;       // migration
    double tau = 0.5;         // velocity-tracking time constant (s)

    bool operator==(const VasarhelyiGains&) const = default;
};

struct SwarmParams {
    int agents = 25;
    Algorithm algorithm = Algorithm::olfati_saber;
    NeighborRule neighbors;
    double d_ref = 15.0;
    double v_ref = 4.0;
    Vec3 u_mig = Vec3(4.0, 0.0, 0.0);
    bool migration = true;
    double r_coll = 0.5;
    double v_max = 8.0;
    double a_max = 10.0;
    OlfatiSaberGains olfati;
    VasarhelyiGains vasarhelyi;

    bool operator==(const SwarmParams&) const = default;
};

struct QuadParams {
    double mass = 0.5;
    double jx = 3.8e-3;
    double jy = 3.8e-3;
    double jz = 7.1e-3;
    double gravity = 9.81;
    double max_thrust = 2.0 * 0.5 * 9.81;  // N
    double max_torque_xy = 0.5;             // N m
    double max_torque_z = 0.1;              // N m
    double max_tilt = 0.6;                  // rad
    double k_vel = 2.0;                     // 1/s
    double k_att = 8.0;                     // 1/s
    double k_yaw = 2.0;                     // 1/s
    double k_rate = 30.0;                   // 1/s
    double sanity_bound = 1.0e6;

    bool operator==(const QuadParams&) const = default;
};

/// North/east rectangle in meters.
struct Bounds2 {
    double n_min = 0.0;
    double n_max = 0.0;
    double e_min = 0.0;
    double e_max = 0.0;

    double area() const { return (n_max - n_min) * (e_max - e_min); }
    bool contains(double n, double e) const {
        return n >= n_min && n <= n_max && e >= e_min && e <= e_max;
    }
    bool operator==(const Bounds2&) const = default;
};

struct MapConfig {
    Bounds2 bounds{60.0, 260.0, -80.0, 80.0};
    double density = 6.25e-4;
    double r_min = 3.0;
    double r_max = 6.0;
    std::string file;   // hand-authored map; overrides generation when set

    bool operator==(const MapConfig&) const = default;
};

struct SimConfig {
    double dt = 0.01;
    double t_end = 100.0;
    std::uint64_t seed = 1;
    DynamicsMode dynamics = DynamicsMode::point_mass;
    Vec3 spawn_center = Vec3(0.0, 0.0, -30.0);
    double spawn_edge = 30.0;
    MapConfig map;
    QuadParams quad;
    int metrics_stride = 1;   // 0 disables per-tick metrics
    int state_stride = 0;     // 0 selects 1 for N <= 64, 10 above
    int threads = 1;
    std::string out_dir;

    bool operator==(const SimConfig&) const = default;
};

struct ValidationReport {
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
    std::string joined() const;
    bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_config(const SimConfig& cfg, const SwarmParams& sp);

/// Effective neighbor count for topological and hybrid rules.
int effective_neighbor_count(const NeighborRule& rule, int agents);

/// Raised when caller-provided configuration cannot be used.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace swarmsim
