#include "swarmsim/dynamics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace swarmsim {

AgentState step_point_mass(const AgentState& s, const Vec3& accel, double dt, double v_max) {
    AgentState out;
    out.velocity = clamp_norm(s.velocity + accel * dt, v_max);
    out.position = s.position + out.velocity * dt;
    return out;
}

AgentState hover_state(const Vec3& position) {
    AgentState s;
    s.position = position;
    return s;
}

ActuatorCommand autopilot_velocity(const AgentState& s, const Vec3& v_des, const QuadParams& qp) {
    const Vec3 v = inertial_velocity(s);
    const Vec3 a_des = qp.k_vel * (v_des - v);

    // Required specific thrust vector T*b3/m, with b3 the body down axis.
    Vec3 z = Vec3(0.0, 0.0, qp.gravity) - a_des;
    z.z() = std::max(z.z(), 0.2 * qp.gravity);
    const double horiz = z.head<2>().norm();
    const double horiz_max = z.z() * std::tan(qp.max_tilt);
    if (horiz > horiz_max) z.head<2>() *= horiz_max / horiz;
    const double zn = z.norm();

    ActuatorCommand out;
    out.thrust = std::clamp(qp.mass * zn, 0.0, qp.max_thrust);

    // Desired roll/pitch from b3 = (c_phi s_theta, -s_phi, c_phi c_theta) in the yaw frame.
    const double psi = s.attitude.z();
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double zx = cpsi * z.x() + spsi * z.y();
    const double zy = -spsi * z.x() + cpsi * z.y();
    const double phi_des = std::asin(std::clamp(-zy / zn, -1.0, 1.0));
    const double theta_des = std::atan2(zx, z.z());
    constexpr double psi_des = 0.0;

    const Vec3 rate_des(qp.k_att * (phi_des - s.attitude.x()),
                        qp.k_att * (theta_des - s.attitude.y()),
                        qp.k_yaw * wrap_angle(psi_des - psi));

    const Vec3 inertia(qp.jx, qp.jy, qp.jz);
    const Vec3& w = s.rates;
    const Vec3 jw = inertia.cwiseProduct(w);
    Vec3 tau = qp.k_rate * inertia.cwiseProduct(rate_des - w) + w.cross(jw);
    tau.x() = std::clamp(tau.x(), -qp.max_torque_xy, qp.max_torque_xy);
    tau.y() = std::clamp(tau.y(), -qp.max_torque_xy, qp.max_torque_xy);
    tau.z() = std::clamp(tau.z(), -qp.max_torque_z, qp.max_torque_z);
    out.torque = tau;
    return out;
}

AgentState rigid_body_derivative(const AgentState& s, const ActuatorCommand& u,
                                 const QuadParams& qp) {
    const double phi = s.attitude.x(), theta = s.attitude.y();
    const double sphi = std::sin(phi), cphi = std::cos(phi);
    const double sth = std::sin(theta), cth = std::cos(theta), tth = std::tan(theta);
    const Vec3& w = s.rates;
    const double p = w.x(), q = w.y(), r = w.z();

    AgentState d;
    d.position = body_to_inertial(s.attitude) * s.velocity;

    const Vec3 gravity_body = qp.mass * qp.gravity * Vec3(-sth, cth * sphi, cth * cphi);
    const Vec3 force = gravity_body + Vec3(0.0, 0.0, -u.thrust);
    d.velocity = s.velocity.cross(w) + force / qp.mass;

    d.attitude = Vec3(p + sphi * tth * q + cphi * tth * r,
                      cphi * q - sphi * r,
                      (sphi * q + cphi * r) / cth);

    const Vec3 inertia(qp.jx, qp.jy, qp.jz);
    d.rates = (u.torque - w.cross(inertia.cwiseProduct(w))).cwiseQuotient(inertia);
    return d;
}

namespace {

AgentState axpy(const AgentState& s, const AgentState& d, double h) {
    AgentState o;
    o.position = s.position + h * d.position;
    o.velocity = s.velocity + h * d.velocity;
    o.attitude = s.attitude + h * d.attitude;
    o.rates = s.rates + h * d.rates;
    return o;
}

template <class Deriv>
AgentState rk4(const AgentState& s, double dt, Deriv&& f) {
    const AgentState k1 = f(s);
    const AgentState k2 = f(axpy(s, k1, 0.5 * dt));
    const AgentState k3 = f(axpy(s, k2, 0.5 * dt));
    const AgentState k4 = f(axpy(s, k3, dt));
    AgentState o;
    const double h = dt / 6.0;
    o.position = s.position + h * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
    o.velocity = s.velocity + h * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    o.attitude = s.attitude + h * (k1.attitude + 2.0 * k2.attitude + 2.0 * k3.attitude + k4.attitude);
    o.rates = s.rates + h * (k1.rates + 2.0 * k2.rates + 2.0 * k3.rates + k4.rates);
    return o;
}

void normalize_and_check(AgentState& s, const QuadParams& qp) {
    s.attitude.x() = wrap_angle(s.attitude.x());
    s.attitude.z() = wrap_angle(s.attitude.z());
    constexpr double theta_limit = kPi / 2.0 - 1e-6;
    s.attitude.y() = std::clamp(s.attitude.y(), -theta_limit, theta_limit);

    const auto bad = [&](const Vec3& v) {
        return !v.allFinite() || v.cwiseAbs().maxCoeff() > qp.sanity_bound;
    };
    if (bad(s.position) || bad(s.velocity) || bad(s.attitude) || bad(s.rates))
        throw NumericBlowup("quadcopter state left the sanity bound (unstable gains or dt)");
}

}  // namespace

AgentState step_rigid_body(const AgentState& s, const ActuatorCommand& u, const QuadParams& qp,
                           double dt) {
    AgentState out = rk4(s, dt, [&](const AgentState& x) { return rigid_body_derivative(x, u, qp); });
    normalize_and_check(out, qp);
    return out;
}

AgentState step_quadcopter(const AgentState& s, const Vec3& accel, const QuadParams& qp,
                           double dt) {
    const Vec3 lead = accel / qp.k_vel;
    AgentState out = rk4(s, dt, [&](const AgentState& x) {
        const Vec3 v_des = inertial_velocity(x) + lead;
        return rigid_body_derivative(x, autopilot_velocity(x, v_des, qp), qp);
    });
    normalize_and_check(out, qp);
    return out;
}

}  // namespace swarmsim
