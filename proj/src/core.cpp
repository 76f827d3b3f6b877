#include "swarmsim/core.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>

namespace swarmsim {

Eigen::Matrix3d body_to_inertial(const Vec3& attitude) {
    const double sphi = std::sin(attitude.x()), cphi = std::cos(attitude.x());
    const double sth = std::sin(attitude.y()), cth = std::cos(attitude.y());
    const double spsi = std::sin(attitude.z()), cpsi = std::cos(attitude.z());
    Eigen::Matrix3d r;
    r << cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi,
         cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi,
         -sth,       sphi * cth,                      cphi * cth;
    return r;
}

Vec3 inertial_velocity(const AgentState& s) {
    if (s.attitude.isZero(0.0)) return s.velocity;
    return body_to_inertial(s.attitude) * s.velocity;
}

bool all_finite(const AgentState& s) {
    return s.position.allFinite() && s.velocity.allFinite() && s.attitude.allFinite() &&
           s.rates.allFinite();
}

Vec3 clamp_norm(const Vec3& v, double limit) {
    const double n = v.norm();
    if (n <= limit || n == 0.0) return v;
    return v * (limit / n);
}

double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

std::string_view to_string(Algorithm a) {
    return a == Algorithm::olfati_saber ? "olfati_saber" : "vasarhelyi";
}

std::string_view to_string(NeighborMode m) {
    switch (m) {
        case NeighborMode::metric: return "metric";
        case NeighborMode::topological: return "topological";
        case NeighborMode::hybrid: return "hybrid";
    }
    return "hybrid";
}

std::string_view to_string(DynamicsMode m) {
    return m == DynamicsMode::point_mass ? "point_mass" : "quadcopter";
}

Algorithm parse_algorithm(std::string_view s) {
    if (s == "olfati_saber") return Algorithm::olfati_saber;
    if (s == "vasarhelyi") return Algorithm::vasarhelyi;
    throw ConfigError("unknown algorithm '" + std::string(s) +
                      "' (expected olfati_saber or vasarhelyi)");
}

NeighborMode parse_neighbor_mode(std::string_view s) {
    if (s == "metric") return NeighborMode::metric;
    if (s == "topological") return NeighborMode::topological;
    if (s == "hybrid") return NeighborMode::hybrid;
    throw ConfigError("unknown neighbor mode '" + std::string(s) +
                      "' (expected metric, topological or hybrid)");
}

DynamicsMode parse_dynamics_mode(std::string_view s) {
    if (s == "point_mass") return DynamicsMode::point_mass;
    if (s == "quadcopter") return DynamicsMode::quadcopter;
    throw ConfigError("unknown dynamics mode '" + std::string(s) +
                      "' (expected point_mass or quadcopter)");
}

std::string ValidationReport::joined() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (i) os << "; ";
        os << errors[i];
    }
    return os.str();
}

int effective_neighbor_count(const NeighborRule& rule, int agents) {
    return std::max(0, std::min(rule.count, agents - 1));
}

namespace {

void check_gains(const OlfatiSaberGains& g, std::vector<std::string>& err) {
    for (double v : {g.c1_alpha, g.c2_alpha, g.c1_beta, g.c2_beta, g.c_mig, g.a, g.b, g.d_obs,
                     g.r_obs}) {
        if (!(v >= 0.0)) {
            err.emplace_back("olfati_saber gains must be non-negative");
            break;
        }
    }
    if (!(g.epsilon > 0.0)) err.emplace_back("olfati_saber epsilon must be positive");
    if (!(g.h_alpha > 0.0 && g.h_alpha < 1.0) || !(g.h_beta > 0.0 && g.h_beta < 1.0))
        err.emplace_back("olfati_saber bump cutoff h must lie in (0, 1)");
    if (g.a > g.b) err.emplace_back("olfati_saber action function needs a <= b");
    if (!(g.kappa >= 1.0)) err.emplace_back("olfati_saber kappa must be at least 1");
}

void check_gains(const VasarhelyiGains& g, std::vector<std::string>& err) {
    for (double v : {g.r0_rep, g.p_rep, g.r0_frict, g.c_frict, g.v_frict, g.p_frict, g.a_frict,
                     g.r0_shill, g.v_shill, g.p_shill, g.a_shill, g.shill_range, g.c_mig}) {
        if (!(v >= 0.0)) {
            err.emplace_back("vasarhelyi gains must be non-negative");
            break;
        }
    }
    if (!(g.tau > 0.0)) err.emplace_back("vasarhelyi tau must be positive");
}

}  // namespace

ValidationReport validate_config(const SimConfig& cfg, const SwarmParams& sp) {
    ValidationReport rep;
    auto& err = rep.errors;
    const int n = sp.agents;

    if (n < 1) err.emplace_back("agent count N must be >= 1");

    const auto& nb = sp.neighbors;
    switch (nb.mode) {
        case NeighborMode::metric:
            if (!(nb.radius > 0.0)) err.emplace_back("metric radius r must be > 0");
            break;
        case NeighborMode::topological:
            if (nb.count < 1) err.emplace_back("topological count must be >= 1");
            if (nb.count > n - 1) err.emplace_back("topological count must be <= N-1");
            break;
        case NeighborMode::hybrid:
            if (!(nb.radius > 0.0)) err.emplace_back("metric radius r must be > 0");
            if (nb.count < 1) err.emplace_back("topological count must be >= 1");
            break;
    }

    if (!(sp.r_coll > 0.0)) err.emplace_back("collision radius r_coll must be > 0");
    if (!(sp.d_ref > 2.0 * sp.r_coll)) err.emplace_back("d_ref must exceed 2*r_coll");
    if (!(sp.v_ref > 0.0)) err.emplace_back("v_ref must be > 0");
    if (!(sp.v_max >= sp.v_ref)) err.emplace_back("v_max must be >= v_ref");
    if (!(sp.a_max > 0.0)) err.emplace_back("a_max must be > 0");
    if (!sp.u_mig.allFinite()) {
        err.emplace_back("u_mig must be finite");
    } else if (sp.u_mig.norm() > sp.v_max) {
        err.emplace_back("|u_mig| must be <= v_max");
    }
    check_gains(sp.olfati, err);
    check_gains(sp.vasarhelyi, err);

    if (!(cfg.dt > 0.0 && cfg.dt <= 0.1)) err.emplace_back("dt must lie in (0, 0.1] s");
    if (!(cfg.t_end >= cfg.dt)) err.emplace_back("t_end must be >= dt");
    if (!cfg.spawn_center.allFinite()) err.emplace_back("spawn center must be finite");
    if (!(cfg.spawn_edge >= 0.0)) {
        err.emplace_back("spawn cube edge must be >= 0");
    } else if (n >= 2) {
        // Loose packing bound; spawn_swarm reports a hard failure if sampling still stalls.
        const double cell = 2.0 * sp.r_coll;
        if (n * cell * cell * cell > 0.25 * std::pow(cfg.spawn_edge, 3))
            err.emplace_back("spawn cube too small for N agents with separation > 2*r_coll");
    }

    const auto& m = cfg.map;
    if (m.file.empty()) {
        if (!(m.density >= 0.0)) err.emplace_back("map density must be >= 0");
        if (!(m.r_min <= m.r_max)) err.emplace_back("map radius range needs r_min <= r_max");
        if (m.density > 0.0) {
            if (!(m.r_min > 0.0)) err.emplace_back("map obstacle radius must be > 0");
            if (!(m.bounds.n_max > m.bounds.n_min && m.bounds.e_max > m.bounds.e_min))
                err.emplace_back("map bounds must have positive extent");
        }
    }

    const auto& q = cfg.quad;
    if (!(q.mass > 0.0 && q.jx > 0.0 && q.jy > 0.0 && q.jz > 0.0 && q.gravity > 0.0))
        err.emplace_back("quadcopter mass, inertia and gravity must be > 0");
    if (!(q.max_thrust > 0.0 && q.k_vel > 0.0))
        err.emplace_back("quadcopter max_thrust and k_vel must be > 0");

    if (cfg.metrics_stride < 0) err.emplace_back("metrics_stride must be >= 0");
    if (cfg.state_stride < 0) err.emplace_back("state_stride must be >= 0");
    if (cfg.threads < 1) err.emplace_back("threads must be >= 1");
    return rep;
}

}  // namespace swarmsim
