#include "swarmsim/dynamics.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace swarmsim;

namespace {

double state_distance(const AgentState& a, const AgentState& b) {
    Eigen::Matrix<double, 12, 1> d;
    d << a.position - b.position, a.velocity - b.velocity, a.attitude - b.attitude,
        a.rates - b.rates;
    return d.norm();
}

AgentState integrate_open_loop(AgentState s, const ActuatorCommand& u, const QuadParams& qp,
                               double dt, double duration) {
    const auto steps = std::llround(duration / dt);
    for (long long k = 0; k < steps; ++k) s = step_rigid_body(s, u, qp, dt);
    return s;
}

AgentState integrate_closed_loop(AgentState s, const Vec3& accel, const QuadParams& qp, double dt,
                                 double duration) {
    const auto steps = std::llround(duration / dt);
    for (long long k = 0; k < steps; ++k) s = step_quadcopter(s, accel, qp, dt);
    return s;
}

// Least-squares slope of log(error) against log(dt).
double observed_order(const std::vector<double>& dts, const std::vector<double>& errs) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        mx += std::log(dts[i]);
        my += std::log(errs[i]);
    }
    mx /= dts.size();
    my /= dts.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        sxy += (std::log(dts[i]) - mx) * (std::log(errs[i]) - my);
        sxx += (std::log(dts[i]) - mx) * (std::log(dts[i]) - mx);
    }
    return sxy / sxx;
}

}  // namespace

TEST_CASE("point mass: zero acceleration drifts") {
    AgentState s;
    s.velocity = Vec3(1, 0, 0);
    const auto n = step_point_mass(s, Vec3::Zero(), 0.01, 10.0);
    CHECK((n.position - Vec3(0.01, 0, 0)).norm() < 1e-15);
    CHECK(n.velocity == s.velocity);
}

TEST_CASE("point mass: one semi-implicit Euler step") {
    const auto n = step_point_mass(AgentState{}, Vec3(2, 0, 0), 0.5, 10.0);
    CHECK((n.velocity - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((n.position - Vec3(0.5, 0, 0)).norm() < 1e-15);
    CHECK(n.attitude == Vec3::Zero());
    CHECK(n.rates == Vec3::Zero());
}

TEST_CASE("point mass: speed clamp") {
    AgentState s;
    s.velocity = Vec3(9.9, 0, 0);
    const auto n = step_point_mass(s, Vec3(100, 0, 0), 0.1, 10.0);
    CHECK(n.velocity.norm() == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("point mass speed never exceeds v_max") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const double v_max = 0.1 + 20.0 * u(rng);
        AgentState s;
        s.position = testing::random_vec(rng, -100, 100);
        s.velocity = clamp_norm(testing::random_vec(rng, -30, 30), v_max);
        const Vec3 a = testing::random_vec(rng, -200, 200);
        const double dt = 0.001 + 0.099 * u(rng);
        CHECK(step_point_mass(s, a, dt, v_max).velocity.norm() <= v_max * (1.0 + 1e-12));
    }
}

TEST_CASE("hover is a fixed point of the closed loop") {
    const QuadParams qp;
    const AgentState h = hover_state(Vec3(3, -2, -30));
    AgentState s = h;
    for (int k = 0; k < 100; ++k) {
        const auto n = step_quadcopter(s, Vec3::Zero(), qp, 0.01);
        CHECK(state_distance(n, s) < 1e-9);
        s = n;
    }
    CHECK(state_distance(s, h) < 1e-9);
}

TEST_CASE("free fall gains g dt of down velocity per step") {
    const QuadParams qp;
    const auto n = step_rigid_body(hover_state(Vec3::Zero()), ActuatorCommand{}, qp, 0.01);
    CHECK(n.velocity.z() == doctest::Approx(qp.gravity * 0.01).epsilon(1e-12));
    CHECK(n.attitude == Vec3::Zero());
}

TEST_CASE("free fall kinetic energy gain equals potential energy loss") {
    const QuadParams qp;
    AgentState s = hover_state(Vec3::Zero());
    s.velocity = Vec3(1.0, -2.0, 0.5);
    for (int k = 0; k < 200; ++k) {
        const auto n = step_rigid_body(s, ActuatorCommand{}, qp, 0.01);
        const double dke = 0.5 * qp.mass * (n.velocity.squaredNorm() - s.velocity.squaredNorm());
        const double dpe = qp.mass * qp.gravity * (n.position.z() - s.position.z());
        CHECK(std::abs(dke - dpe) <= 1e-6 * std::abs(dpe));
        s = n;
    }
}

TEST_CASE("autopilot: hover output") {
    const QuadParams qp;
    const auto u = autopilot_velocity(hover_state(Vec3::Zero()), Vec3::Zero(), qp);
    CHECK(std::abs(u.thrust - qp.mass * qp.gravity) < 1e-9);
    CHECK(u.torque.norm() < 1e-12);
}

TEST_CASE("autopilot: northward request pitches nose down") {
    const QuadParams qp;
    const auto u = autopilot_velocity(hover_state(Vec3::Zero()), Vec3(2, 0, 0), qp);
    CHECK(u.torque.y() < 0.0);
    CHECK(std::abs(u.torque.x()) < 1e-12);

    AgentState s = hover_state(Vec3::Zero());
    for (int k = 0; k < 20; ++k) s = step_rigid_body(s, autopilot_velocity(s, Vec3(2, 0, 0), qp), qp, 0.01);
    CHECK(s.attitude.y() < 0.0);
}

TEST_CASE("autopilot: climb request raises thrust, descent lowers it") {
    const QuadParams qp;
    const auto up = autopilot_velocity(hover_state(Vec3::Zero()), Vec3(0, 0, -1), qp);
    const auto down = autopilot_velocity(hover_state(Vec3::Zero()), Vec3(0, 0, 1), qp);
    CHECK(up.thrust > qp.mass * qp.gravity);
    CHECK(down.thrust < qp.mass * qp.gravity);
}

TEST_CASE("autopilot outputs stay within actuator limits") {
    const QuadParams qp;
    std::mt19937_64 rng(8);
    for (int k = 0; k < 2000; ++k) {
        AgentState s;
        s.velocity = testing::random_vec(rng, -10, 10);
        s.attitude = testing::random_vec(rng, -0.5, 0.5);
        s.rates = testing::random_vec(rng, -3, 3);
        const auto u = autopilot_velocity(s, testing::random_vec(rng, -8, 8), qp);
        CHECK(u.thrust >= 0.0);
        CHECK(u.thrust <= qp.max_thrust + 1e-12);
        CHECK(std::abs(u.torque.x()) <= qp.max_torque_xy + 1e-12);
        CHECK(std::abs(u.torque.y()) <= qp.max_torque_xy + 1e-12);
        CHECK(std::abs(u.torque.z()) <= qp.max_torque_z + 1e-12);
    }
}

TEST_CASE("step response reaches the commanded velocity and agrees with a fine-step run") {
    const QuadParams qp;
    const AgentState h = hover_state(Vec3::Zero());
    const auto coarse = integrate_closed_loop(h, Vec3(1, 0, 0), qp, 0.01, 2.0);
    const auto fine = integrate_closed_loop(h, Vec3(1, 0, 0), qp, 1e-4, 2.0);
    const double vx = inertial_velocity(coarse).x();
    CHECK(vx == doctest::Approx(2.0).epsilon(0.2));
    CHECK(std::abs(vx - inertial_velocity(fine).x()) < 0.02);
    CHECK((coarse.position - fine.position).norm() < 0.02);
}

TEST_CASE("RK4 self-convergence order is at least 3.5") {
    const QuadParams qp;
    AgentState s0 = hover_state(Vec3(0, 0, -10));
    s0.velocity = Vec3(1.0, -0.5, 0.2);
    s0.attitude = Vec3(0.2, -0.1, 0.4);
    s0.rates = Vec3(0.8, -0.6, 0.3);
    const ActuatorCommand u{0.9 * qp.mass * qp.gravity, Vec3(0.002, -0.001, 0.0005)};

    const auto ref = integrate_open_loop(s0, u, qp, 1e-4, 1.0);
    const std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
    std::vector<double> errs;
    for (double dt : dts) errs.push_back(state_distance(integrate_open_loop(s0, u, qp, dt, 1.0), ref));
    CHECK(observed_order(dts, errs) >= 3.5);

    // The closed loop, away from saturation, converges at the same order.
    AgentState c0 = hover_state(Vec3::Zero());
    c0.velocity = Vec3(0.3, 0.2, 0.0);
    const auto cref = integrate_closed_loop(c0, Vec3(0.2, -0.1, 0.05), qp, 1e-4, 1.0);
    std::vector<double> cerrs;
    for (double dt : dts)
        cerrs.push_back(state_distance(integrate_closed_loop(c0, Vec3(0.2, -0.1, 0.05), qp, dt, 1.0), cref));
    CHECK(observed_order(dts, cerrs) >= 3.5);
}

TEST_CASE("closed loop keeps the state invariants") {
    const QuadParams qp;
    std::mt19937_64 rng(21);
    AgentState s = hover_state(Vec3::Zero());
    for (int k = 0; k < 3000; ++k) {
        s = step_quadcopter(s, testing::random_vec(rng, -10, 10), qp, 0.01);
        REQUIRE(all_finite(s));
        CHECK(std::abs(s.attitude.x()) <= kPi);
        CHECK(std::abs(s.attitude.y()) < kPi / 2.0);
        CHECK(s.attitude.z() > -kPi);
        CHECK(s.attitude.z() <= kPi);
    }
}

TEST_CASE("blowup is detected against the sanity bound") {
    QuadParams qp;
    qp.sanity_bound = 1.0;
    AgentState s = hover_state(Vec3(5, 0, 0));
    CHECK_THROWS_AS(step_quadcopter(s, Vec3::Zero(), qp, 0.01), NumericBlowup);
}
